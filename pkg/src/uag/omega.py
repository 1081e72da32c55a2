"""Ω-groups: ideals, commutators, zero divisors and stability checks.

An Ω-group is a finite algebra with a designated group structure
(add, neg, zero; written additively, not necessarily commutative) whose
remaining positive-arity operations vanish on all-zero tuples.  Ideals
are stored as sorted tuples of element indices.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .budget import Budget, resolve
from .eqgeo import StabilityResult, is_stable
from .sigcore import (CongruencePartition, FiniteAlgebra, congruence_generated, join_congruences,
                      quotient_algebra, with_constants)
from .terms import VarContext

GROUP_NAMES = ("add", "neg", "zero")


class OmegaGroup:
    def __init__(self, algebra: FiniteAlgebra, add: str = "add", neg: str = "neg", zero: str = "zero",
                 constants: Iterable[int] | None = None):
        if not algebra.is_single_sorted():
            raise ValueError("Ω-groups are single-sorted")
        self.algebra = algebra
        self.names = (add, neg, zero)
        self.n = algebra.size(algebra.sort)
        self.add = algebra.tables[add]
        self.neg = algebra.tables[neg]
        self.zero = int(algebra.tables[zero][()])
        self.ops = [op for op in algebra.signature.ops if op.args and op.name not in (add, neg)]
        if constants is None:
            constants = {int(algebra.tables[op.name][()]) for op in algebra.signature.ops
                         if not op.args and op.name != zero}
        self.constants = tuple(sorted(set(constants) | {self.zero}))
        self._check()

    @classmethod
    def from_group(cls, G: FiniteAlgebra, constants: Iterable[int] | None = None) -> "OmegaGroup":
        return cls(G, "mul", "inv", "e", constants)

    @classmethod
    def of(cls, H: FiniteAlgebra, constants: Iterable[int] | None = None) -> "OmegaGroup":
        """Pick the group operations by name: add/neg/zero or mul/inv/e."""
        sig = H.signature
        if all(sig.has_op(n) for n in GROUP_NAMES):
            return cls(H, constants=constants)
        if all(sig.has_op(n) for n in ("mul", "inv", "e")):
            return cls.from_group(H, constants)
        raise ValueError(f"{H.name} has no designated group operations (add/neg/zero or mul/inv/e)")

    def _check(self) -> None:
        n, A, N, z = self.n, self.add, self.neg, self.zero
        r = np.arange(n)
        if not (np.array_equal(A[z], r) and np.array_equal(A[:, z], r)):
            raise ValueError("zero is not a two-sided identity")
        if not np.all(A[r, N] == z):
            raise ValueError("neg is not an inverse")
        if not np.array_equal(A[A[:, :, None], r[None, None, :]], A[r[:, None, None], A[None, :, :]]):
            raise ValueError("add is not associative")
        for op in self.ops:
            if self.algebra.tables[op.name][(z,) * len(op.args)] != z:
                raise ValueError(f"{op.name} does not vanish on zero arguments")

    @property
    def name(self) -> str:
        return self.algebra.name

    def elements(self) -> range:
        return range(self.n)

    def plus(self, a: int, b: int) -> int:
        return int(self.add[a, b])

    def minus(self, a: int) -> int:
        return int(self.neg[a])

    def commutator(self, a: int, b: int) -> int:
        """[a, b] = -a - b + a + b."""
        A, N = self.add, self.neg
        return int(A[A[A[N[a], N[b]], a], b])

    def conjugate(self, b: int, c: int) -> int:
        """b^c = -c + b + c."""
        return int(self.add[self.add[self.neg[c], b], c])

    def omega_commutator(self, a: Sequence[int], b: Sequence[int], op: str) -> int:
        """[a1..an; b1..bn; ω] = -ω(a) - ω(b) + ω(a + b)."""
        T = self.algebra.tables[op]
        A, N = self.add, self.neg
        wa, wb = T[tuple(a)], T[tuple(b)]
        wab = T[tuple(A[x, y] for x, y in zip(a, b))]
        return int(A[A[N[wa], N[wb]], wab])

    def describe(self, elems: Iterable[int]) -> list[str]:
        return [self.algebra.name_of(self.algebra.sort, e) for e in sorted(elems)]

    def index(self, name: str) -> int:
        return self.algebra.element(self.algebra.sort, name)


Ideal = tuple  # sorted tuple of element indices


def _omega_commutators(H: OmegaGroup, op, A_set: np.ndarray, B_set: np.ndarray) -> np.ndarray:
    """All [a; b; ω] with every a_i from A_set and every b_i from B_set."""
    k = len(op.args)
    if len(A_set) == 0 or len(B_set) == 0:
        return np.zeros(0, dtype=np.int64)
    T = H.algebra.tables[op.name]
    grids = np.meshgrid(*([A_set] * k + [B_set] * k), indexing="ij")
    a = [g.ravel() for g in grids[:k]]
    b = [g.ravel() for g in grids[k:]]
    wa, wb = T[tuple(a)], T[tuple(b)]
    wab = T[tuple(H.add[x, y] for x, y in zip(a, b))]
    return H.add[H.add[H.neg[wa], H.neg[wb]], wab]


def ideal_generated(H: OmegaGroup, seed: Iterable[int], relative: bool = False,
                    ambient: Iterable[int] | None = None) -> Ideal:
    """Least ideal containing ``seed``.

    With ``ambient`` given, the ideal is taken inside that Ω-subgroup
    (normality and commutator absorption only against its elements).  In
    relative mode the invariance conditions quantify over the designated
    constants instead of all elements.
    """
    amb = np.array(sorted(set(ambient)) if ambient is not None else range(H.n), dtype=np.int64)
    if relative:
        amb = np.array(H.constants, dtype=np.int64)
    member = np.zeros(H.n, dtype=bool)
    member[H.zero] = True
    for s in seed:
        member[s] = True
    A, N = H.add, H.neg
    while True:
        U = np.nonzero(member)[0]
        new = member.copy()
        new[A[np.ix_(U, U)].ravel()] = True
        new[N[U]] = True
        # normality: -h + u + h, and in relative mode the commutators [u, h]
        if relative:
            new[A[A[A[N[U][:, None], N[amb][None, :]], U[:, None]], amb[None, :]].ravel()] = True
        else:
            new[A[A[N[amb][None, :], U[:, None]], amb[None, :]].ravel()] = True
        for op in H.ops:
            k = len(op.args)
            grids = np.meshgrid(*([U] * k), indexing="ij")
            new[H.algebra.tables[op.name][tuple(g.ravel() for g in grids)]] = True
            new[_omega_commutators(H, op, U, amb)] = True
        if np.array_equal(new, member):
            return tuple(int(i) for i in U)
        member = new


def omega_subgroup(H: OmegaGroup, seed: Iterable[int]) -> tuple[int, ...]:
    """Ω-subgroup {seed}: closure under +, -, 0 and the positive-arity operations."""
    member = np.zeros(H.n, dtype=bool)
    member[H.zero] = True
    for s in seed:
        member[s] = True
    while True:
        U = np.nonzero(member)[0]
        new = member.copy()
        new[H.add[np.ix_(U, U)].ravel()] = True
        new[H.neg[U]] = True
        for op in H.ops:
            grids = np.meshgrid(*([U] * len(op.args)), indexing="ij")
            new[H.algebra.tables[op.name][tuple(g.ravel() for g in grids)]] = True
        if np.array_equal(new, member):
            return tuple(int(i) for i in U)
        member = new


def mutual_commutant(H: OmegaGroup, A: Iterable[int], B: Iterable[int]) -> Ideal:
    """[A, B]: the ideal of {A, B} generated by all [a, b] and ω-commutators across A, B."""
    A_arr = np.array(sorted(set(A)), dtype=np.int64)
    B_arr = np.array(sorted(set(B)), dtype=np.int64)
    gens: set[int] = set()
    if len(A_arr) and len(B_arr):
        Ad, N = H.add, H.neg
        c = Ad[Ad[Ad[N[A_arr][:, None], N[B_arr][None, :]], A_arr[:, None]], B_arr[None, :]]
        gens.update(int(x) for x in c.ravel())
        for op in H.ops:
            gens.update(int(x) for x in _omega_commutators(H, op, A_arr, B_arr))
    ambient = omega_subgroup(H, set(A_arr.tolist()) | set(B_arr.tolist()))
    return ideal_generated(H, gens, ambient=ambient)


def is_abelian(H: OmegaGroup, U: Iterable[int] | None = None) -> bool:
    U = tuple(range(H.n)) if U is None else tuple(U)
    return mutual_commutant(H, U, U) == (H.zero,)


@dataclass
class ZeroDivisorResult:
    zero_divisor: bool
    witness: int | None = None

    def __bool__(self) -> bool:
        return self.zero_divisor


def is_zero_divisor(H: OmegaGroup, a: int, relative: bool = False) -> ZeroDivisorResult:
    """Is a != 0 a zero divisor?  The witness is the least b != 0 with [(a), (b)] = 0."""
    if a == H.zero:
        raise ValueError("zero is never tested as a zero divisor")
    ia = ideal_generated(H, [a], relative)
    for b in range(H.n):
        if b == H.zero:
            continue
        if mutual_commutant(H, ia, ideal_generated(H, [b], relative)) == (H.zero,):
            return ZeroDivisorResult(True, b)
    return ZeroDivisorResult(False)


def zero_divisors(H: OmegaGroup, relative: bool = False) -> list[int]:
    return [a for a in range(H.n) if a != H.zero and is_zero_divisor(H, a, relative)]


def is_domain(H: OmegaGroup, relative: bool = False) -> bool:
    """No (relative) zero divisors."""
    principal = {a: ideal_generated(H, [a], relative) for a in range(H.n) if a != H.zero}
    for a, ia in principal.items():
        for b, ib in principal.items():
            if b < a:
                continue
            if mutual_commutant(H, ia, ib) == (H.zero,):
                return False
    return True


def list_ideals(H: OmegaGroup, method: str = "principal", budget: Budget | None = None) -> list[Ideal]:
    """All ideals, sorted by size then lexicographically.

    ``principal``: joins of principal ideals (every ideal is the join of
    the principal ideals of its elements).  ``congruences``: zero classes of
    all congruences, built as joins of principal congruences.  ``subsets``:
    direct test of every subset containing 0 (at most 6 elements).
    """
    budget = resolve(budget)
    if method == "principal":
        found = {ideal_generated(H, [a]) for a in range(H.n)}
        frontier = list(found)
        base = list(found)
        while frontier:
            nxt = []
            for U in frontier:
                for V in base:
                    J = ideal_generated(H, set(U) | set(V))
                    if J not in found:
                        budget.charge("subsets")
                        found.add(J)
                        nxt.append(J)
            frontier = nxt
    elif method == "congruences":
        alg = H.algebra
        s = alg.sort
        principal = {congruence_generated(alg, [(s, a, b)]) for a in range(H.n) for b in range(a + 1, H.n)}
        principal.add(CongruencePartition.equality(alg))
        congs = set(principal)
        frontier = list(congs)
        while frontier:
            nxt = []
            for C in frontier:
                for P in principal:
                    J = join_congruences(C, P)
                    if J not in congs:
                        budget.charge("subsets")
                        congs.add(J)
                        nxt.append(J)
            frontier = nxt
        found = {tuple(i for i in range(H.n) if C.same(s, i, H.zero)) for C in congs}
    elif method == "subsets":
        if H.n > 6:
            raise ValueError("subset search is limited to algebras with at most 6 elements")
        others = [i for i in range(H.n) if i != H.zero]
        found = set()
        for r in range(len(others) + 1):
            for combo in itertools.combinations(others, r):
                U = tuple(sorted((H.zero,) + combo))
                if is_ideal(H, U):
                    found.add(U)
    else:
        raise ValueError(f"unknown ideal enumeration method {method!r}")
    return sorted(found, key=lambda U: (len(U), U))


def is_ideal(H: OmegaGroup, U: Iterable[int], relative: bool = False) -> bool:
    U = tuple(sorted(set(U)))
    return H.zero in U and ideal_generated(H, U, relative) == U


def is_antiabelian(H: OmegaGroup, ideals: list[Ideal] | None = None) -> bool:
    ideals = ideals if ideals is not None else list_ideals(H)
    zero = (H.zero,)
    nontrivial = [U for U in ideals if U != zero]
    for U in nontrivial:
        if mutual_commutant(H, U, U) == zero:
            return False
    for U, V in itertools.combinations(nontrivial, 2):
        if not (set(U) & set(V)) - {H.zero}:
            return False
    return True


def group_no_zero_divisor_criterion(H: OmegaGroup) -> bool:
    """For all a, b != 0 there is c with [a, b^c] != 0 (pure groups)."""
    if H.ops:
        raise ValueError("criterion applies to pure groups")
    A, N = H.add, H.neg
    r = np.arange(H.n)
    # conj[b, c] = -c + b + c
    conj = A[A[N[None, :], r[:, None]], r[None, :]]
    for a in range(H.n):
        if a == H.zero:
            continue
        for b in range(H.n):
            if b == H.zero:
                continue
            bc = conj[b]
            comm = A[A[A[N[a], N[bc]], a], bc]
            if np.all(comm == H.zero):
                return False
    return True


def check_cd(H: OmegaGroup, budget: Budget | None = None) -> bool:
    """[x + y; z; ω] = [x; z; ω] + [y; z; ω] for every ω of positive arity."""
    budget = resolve(budget)
    A, N = H.add, H.neg
    for op in H.ops:
        k = len(op.args)
        budget.check("tuples", H.n ** (3 * k))
        T = H.algebra.tables[op.name]
        grids = [g.ravel() for g in np.indices((H.n,) * (3 * k))]
        x, y, z = grids[:k], grids[k:2 * k], grids[2 * k:]

        def comm(a, b):
            wa, wb = T[tuple(a)], T[tuple(b)]
            wab = T[tuple(A[p, q] for p, q in zip(a, b))]
            return A[A[N[wa], N[wb]], wab]

        xy = [A[p, q] for p, q in zip(x, y)]
        if not np.array_equal(comm(xy, z), A[comm(x, z), comm(y, z)]):
            return False
    return True


def _series(H: OmegaGroup, start: Ideal, step) -> list[Ideal]:
    chain = [start]
    while True:
        nxt = step(chain[-1])
        if nxt == chain[-1]:
            return chain
        chain.append(nxt)


def strict_series(H: OmegaGroup, a: int, relative: bool = False) -> list[Ideal]:
    """(a), [(a), (a)], [(a), [(a), (a)]], ... to its fixpoint."""
    ia = ideal_generated(H, [a], relative)
    return _series(H, ia, lambda U: mutual_commutant(H, ia, U))


def derived_series(H: OmegaGroup, a: int, relative: bool = False) -> list[Ideal]:
    """(a), [(a), (a)], [D1, D1], ... to its fixpoint."""
    ia = ideal_generated(H, [a], relative)
    return _series(H, ia, lambda U: mutual_commutant(H, U, U))


def is_strictly_nilpotent(H: OmegaGroup, a: int, relative: bool = False) -> bool:
    return strict_series(H, a, relative)[-1] == (H.zero,)


def is_weakly_nilpotent(H: OmegaGroup, a: int, relative: bool = False) -> bool:
    return derived_series(H, a, relative)[-1] == (H.zero,)


def quotient_by_ideal(H: OmegaGroup, U: Ideal) -> OmegaGroup:
    alg = H.algebra
    s = alg.sort
    T = congruence_generated(alg, [(s, u, H.zero) for u in U])
    Q, proj = quotient_algebra(alg, T)
    add, neg, zero = H.names
    return OmegaGroup(Q, add, neg, zero, constants=[proj.maps[s][c] for c in H.constants])


def prime_ideals(H: OmegaGroup, budget: Budget | None = None) -> list[Ideal]:
    """Proper ideals U with H/U a domain."""
    full = tuple(range(H.n))
    return [U for U in list_ideals(H, budget=budget) if U != full and is_domain(quotient_by_ideal(H, U))]


@dataclass
class StabilityCrossCheck:
    algebra: str
    variables: int
    domain: bool
    cd: bool
    stable: bool | None
    counterexample: object = None
    note: str = ""

    @property
    def domain_implies_stable_holds(self) -> bool | None:
        if self.stable is None:
            return None
        return (not self.domain) or self.stable

    @property
    def cd_equivalence_holds(self) -> bool | None:
        if self.stable is None:
            return None
        return (not self.cd) or (self.stable == self.domain)

    @property
    def consistent(self) -> bool | None:
        a, b = self.domain_implies_stable_holds, self.cd_equivalence_holds
        if a is None or b is None:
            return None
        return a and b


def stability_cross_check(H: OmegaGroup, variables: int = 2, budget: Budget | None = None) -> StabilityCrossCheck:
    """Compare stability of H with its own elements as constants against the zero-divisor tests."""
    from .budget import BudgetExceeded
    budget = resolve(budget)
    alg = H.algebra
    domain = is_domain(H)
    cd = check_cd(H, budget)
    Hc = with_constants(alg)
    ctx = VarContext(tuple((f"x{i + 1}", alg.sort) for i in range(variables)))
    try:
        res: StabilityResult = is_stable(Hc, ctx, budget)
    except BudgetExceeded as exc:
        return StabilityCrossCheck(alg.name, variables, domain, cd, None, note=str(exc))
    return StabilityCrossCheck(alg.name, variables, domain, cd, res.stable, res.counterexample)
