"""Small named algebras and models used by tests, demos and the CLI."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .sigcore import FiniteAlgebra, Identity, OpSymbol, RelSymbol, Signature, product_algebra
from .terms import App, Var, VarContext


def _group_identities(mul: str, inv: str, e: str, sort: str = "g") -> tuple[Identity, ...]:
    x, y, z = Var("x", sort), Var("y", sort), Var("z", sort)
    one = App(e, (), sort)

    def m(a, b):
        return App(mul, (a, b), sort)

    def i(a):
        return App(inv, (a,), sort)

    c1 = VarContext.of(("x", sort))
    c3 = VarContext.of(("x", sort), ("y", sort), ("z", sort))
    return (
        Identity(c3, m(m(x, y), z), m(x, m(y, z))),
        Identity(c1, m(one, x), x),
        Identity(c1, m(x, one), x),
        Identity(c1, m(x, i(x)), one),
        Identity(c1, m(i(x), x), one),
    )


def group_signature(with_identities: bool = True) -> Signature:
    ops = (OpSymbol("mul", ("g", "g"), "g"), OpSymbol("inv", ("g",), "g"), OpSymbol("e", (), "g"))
    ids = _group_identities("mul", "inv", "e") if with_identities else ()
    return Signature(("g",), ops, (), ids, name="Grp")


def ring_signature() -> Signature:
    """Additive group (add, neg, zero) plus a binary multiplication."""
    ops = (OpSymbol("add", ("r", "r"), "r"), OpSymbol("neg", ("r",), "r"),
           OpSymbol("zero", (), "r"), OpSymbol("mul", ("r", "r"), "r"))
    return Signature(("r",), ops, (), _group_identities("add", "neg", "zero", "r"), name="Ring")


def unary_omega_signature() -> Signature:
    ops = (OpSymbol("add", ("r", "r"), "r"), OpSymbol("neg", ("r",), "r"),
           OpSymbol("zero", (), "r"), OpSymbol("w", ("r",), "r"))
    return Signature(("r",), ops, (), _group_identities("add", "neg", "zero", "r"), name="OmegaU")


def group_from_mul(names: Sequence[str], mul: Callable[[int, int], int], name: str,
                   signature: Signature | None = None) -> FiniteAlgebra:
    """Group on ``names`` from an index-level multiplication; identity and inverses are found."""
    n = len(names)
    table = np.array([[mul(a, b) for b in range(n)] for a in range(n)], dtype=np.int64)
    ident = next(a for a in range(n) if all(table[a, b] == b for b in range(n)))
    inv = np.array([next(b for b in range(n) if table[a, b] == ident) for a in range(n)], dtype=np.int64)
    sig = signature or group_signature()
    return FiniteAlgebra(sig, {"g": list(names)}, {"mul": table, "inv": inv, "e": np.array(ident)}, name)


def cyclic_group(n: int) -> FiniteAlgebra:
    return group_from_mul([str(i) for i in range(n)], lambda a, b: (a + b) % n, f"Z{n}")


def trivial_group() -> FiniteAlgebra:
    return cyclic_group(1).renamed("Z1")


def direct_product(*factors: FiniteAlgebra, name: str | None = None) -> FiniteAlgebra:
    return product_algebra(list(factors), name=name)[0]


def permutation_group(generators: Sequence[Sequence[int]], name: str) -> FiniteAlgebra:
    """Closure of permutations (as image tuples); elements named by their image word."""
    degree = len(generators[0])
    ident = tuple(range(degree))
    seen = {ident}
    frontier = [ident]
    gens = [tuple(g) for g in generators]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = tuple(g[p[i]] for i in range(degree))
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
    perms = sorted(seen)
    pos = {p: i for i, p in enumerate(perms)}
    names = ["".join(str(i) for i in p) for p in perms]

    def mul(a: int, b: int) -> int:
        # apply perms[a] first, then perms[b]
        pa, pb = perms[a], perms[b]
        return pos[tuple(pb[pa[i]] for i in range(degree))]

    return group_from_mul(names, mul, name)


def symmetric_group(n: int) -> FiniteAlgebra:
    gens = [tuple([1, 0] + list(range(2, n)))] if n >= 2 else [(0,)]
    if n >= 3:
        gens.append(tuple(list(range(1, n)) + [0]))
    return permutation_group(gens, f"S{n}")


def alternating_group(n: int) -> FiniteAlgebra:
    gens = [tuple([1, 2, 0] + list(range(3, n)))]
    for k in range(3, n):
        p = list(range(n))
        p[0], p[1], p[k] = p[1], p[k], p[0]
        gens.append(tuple(p))
    return permutation_group(gens, f"A{n}")


def dihedral_group(n: int) -> FiniteAlgebra:
    """Symmetries of the n-gon (order 2n)."""
    rot = tuple((i + 1) % n for i in range(n))
    ref = tuple((-i) % n for i in range(n))
    return permutation_group([rot, ref], f"D{n}")


def quaternion_group() -> FiniteAlgebra:
    units = ["1", "i", "j", "k"]
    # unit products as (sign, unit)
    prod = {
        ("1", u): (1, u) for u in units
    }
    prod.update({(u, "1"): (1, u) for u in units})
    prod.update({("i", "i"): (-1, "1"), ("j", "j"): (-1, "1"), ("k", "k"): (-1, "1"),
                 ("i", "j"): (1, "k"), ("j", "k"): (1, "i"), ("k", "i"): (1, "j"),
                 ("j", "i"): (-1, "k"), ("k", "j"): (-1, "i"), ("i", "k"): (-1, "j")})
    elems = [(s, u) for s in (1, -1) for u in units]
    names = [("" if s == 1 else "-") + u for s, u in elems]
    pos = {e: i for i, e in enumerate(elems)}

    def mul(a: int, b: int) -> int:
        (sa, ua), (sb, ub) = elems[a], elems[b]
        s, u = prod[(ua, ub)]
        return pos[(sa * sb * s, u)]

    return group_from_mul(names, mul, "Q8")


def small_groups(max_order: int = 10) -> list[FiniteAlgebra]:
    """One representative of every isomorphism type of group of order <= 10."""
    Z = cyclic_group
    groups = [
        trivial_group(), Z(2), Z(3), Z(4), direct_product(Z(2), Z(2), name="Z2xZ2"), Z(5),
        Z(6), symmetric_group(3), Z(7), Z(8), direct_product(Z(4), Z(2), name="Z4xZ2"),
        direct_product(Z(2), Z(2), Z(2), name="Z2xZ2xZ2"), dihedral_group(4), quaternion_group(),
        Z(9), direct_product(Z(3), Z(3), name="Z3xZ3"), Z(10), dihedral_group(5),
    ]
    return [G for G in groups if G.size("g") <= max_order]


def zn_ring(n: int) -> FiniteAlgebra:
    sig = ring_signature()
    r = range(n)
    return FiniteAlgebra(sig, {"r": [str(i) for i in r]}, {
        "add": np.array([[(a + b) % n for b in r] for a in r]),
        "neg": np.array([(-a) % n for a in r]),
        "zero": np.array(0),
        "mul": np.array([[(a * b) % n for b in r] for a in r]),
    }, f"Z{n}ring")


def zero_ring(n: int) -> FiniteAlgebra:
    """Z_n with the zero multiplication."""
    R = zn_ring(n)
    tables = dict(R.tables)
    tables["mul"] = np.zeros((n, n), dtype=np.int64)
    return FiniteAlgebra(R.signature, R.carriers, tables, f"Z{n}zero")


def field4() -> FiniteAlgebra:
    """GF(4) as polynomials over GF(2) modulo t^2+t+1; elements 0,1,t,u (u = t+1)."""
    names = ["0", "1", "t", "u"]

    def mul(a: int, b: int) -> int:
        # encode as bit pairs (c0 + c1 t)
        a0, a1, b0, b1 = a & 1, a >> 1, b & 1, b >> 1
        c0 = (a0 * b0 + a1 * b1) % 2
        c1 = (a0 * b1 + a1 * b0 + a1 * b1) % 2
        return c0 | (c1 << 1)

    enc = [0, 1, 2, 3]  # bit codes of the names above
    R = FiniteAlgebra(ring_signature(), {"r": names}, {
        "add": np.array([[enc.index(enc[a] ^ enc[b]) for b in range(4)] for a in range(4)]),
        "neg": np.arange(4),
        "zero": np.array(0),
        "mul": np.array([[enc.index(mul(enc[a], enc[b])) for b in range(4)] for a in range(4)]),
    }, "F4")
    return R


def ring_product(*factors: FiniteAlgebra, name: str | None = None) -> FiniteAlgebra:
    return product_algebra(list(factors), name=name)[0]


def non_cd_omega_group() -> FiniteAlgebra:
    """Z4 with a unary w sending 3 to 1 and everything else to 0; not commutator distributive."""
    sig = unary_omega_signature()
    r = range(4)
    return FiniteAlgebra(sig, {"r": ["0", "1", "2", "3"]}, {
        "add": np.array([[(a + b) % 4 for b in r] for a in r]),
        "neg": np.array([(-a) % 4 for a in r]),
        "zero": np.array(0),
        "w": np.array([0, 0, 0, 1]),
    }, "Z4w")


def small_omega_groups() -> list[FiniteAlgebra]:
    """Ω-groups with at most 8 elements (rings and a non-additive unary example)."""
    out = [zn_ring(n) for n in range(1, 9)]
    out += [zero_ring(2), zero_ring(4), field4(), ring_product(zn_ring(2), zn_ring(2), name="Z2xZ2ring"),
            ring_product(zn_ring(2), zn_ring(4), name="Z2xZ4ring"), non_cd_omega_group()]
    return out


# ---------------------------------------------------------------------------
# Models


def with_relations(G: FiniteAlgebra, rels: Sequence[RelSymbol]) -> Signature:
    return G.signature.replace(rels=tuple(rels))


def unary_predicate_signature(G: FiniteAlgebra, name: str = "p") -> Signature:
    return with_relations(G, [RelSymbol(name, (G.sort,))])


def binary_relation_signature(G: FiniteAlgebra, name: str = "r") -> Signature:
    return with_relations(G, [RelSymbol(name, (G.sort, G.sort))])
