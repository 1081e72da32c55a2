"""First-order geometry over finite models (G, Φ, f).

Formulas are syntax trees evaluated to point sets of Hom(W(X), G).  For a
finite algebra the sets definable over a model are exactly the sets that
are invariant under the automorphisms of the model, so most questions
about definable sets reduce to orbit computations.  The syntactic side
(partition refinement under ∃, bounded formula search) is kept as an
independent route and cross-checked against the orbit side in tests.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence, Union

import numpy as np

from .budget import Budget, resolve
from .eqgeo import pullback_points, term_functions
from .sigcore import AutGroup, FiniteAlgebra, Homomorphism, RelSymbol, Signature, automorphism_group
from .space import PointSet, PointSpace, mask_from_bool, mask_indices, mask_to_bool
from .terms import Substitution, Term, Var, VarContext, apply_substitution, eval_term_columns, variables


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Eq:
    lhs: Term
    rhs: Term


@dataclass(frozen=True)
class Rel:
    name: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "Formula"


Formula = Union[Eq, Rel, Not, And, Or, Exists]
ATOMS = (Eq, Rel)


def Forall(var: str, body: Formula) -> Formula:
    return Not(Exists(var, Not(body)))


def conj(*fs: Formula) -> Formula:
    out = fs[0]
    for f in fs[1:]:
        out = And(out, f)
    return out


def disj(*fs: Formula) -> Formula:
    out = fs[0]
    for f in fs[1:]:
        out = Or(out, f)
    return out


def formula_size(u: Formula) -> int:
    """Atoms count 1, every connective or quantifier adds 1."""
    if isinstance(u, ATOMS):
        return 1
    if isinstance(u, (Not, Exists)):
        return 1 + formula_size(u.body)
    return 1 + formula_size(u.left) + formula_size(u.right)


def free_variables(u: Formula) -> set[str]:
    if isinstance(u, Eq):
        return variables(u.lhs) | variables(u.rhs)
    if isinstance(u, Rel):
        out: set[str] = set()
        for t in u.args:
            out |= variables(t)
        return out
    if isinstance(u, Not):
        return free_variables(u.body)
    if isinstance(u, Exists):
        return free_variables(u.body) - {u.var}
    return free_variables(u.left) | free_variables(u.right)


def has_quantifier(u: Formula) -> bool:
    if isinstance(u, ATOMS):
        return False
    if isinstance(u, Exists):
        return True
    if isinstance(u, Not):
        return has_quantifier(u.body)
    return has_quantifier(u.left) or has_quantifier(u.right)


def _is_forall(u: Formula) -> bool:
    return isinstance(u, Not) and isinstance(u.body, Exists) and isinstance(u.body.body, Not)


def format_formula(u: Formula, prec: int = 0) -> str:
    """Concrete syntax: ``=``, ``~``, ``/\\``, ``\\/``, ``exists x .``, ``all x .``."""
    if isinstance(u, Eq):
        return f"{u.lhs} = {u.rhs}"
    if isinstance(u, Rel):
        return f"{u.name}({', '.join(str(a) for a in u.args)})"
    if _is_forall(u) or isinstance(u, Exists):
        if _is_forall(u):
            text = f"all {u.body.var} . {format_formula(u.body.body.body, 0)}"
        else:
            text = f"exists {u.var} . {format_formula(u.body, 0)}"
        return f"({text})" if prec > 0 else text
    if isinstance(u, Not):
        inner = format_formula(u.body, 4)
        if isinstance(u.body, Eq):
            inner = f"({inner})"
        return "~" + inner
    if isinstance(u, And):
        text = f"{format_formula(u.left, 2)} /\\ {format_formula(u.right, 3)}"
        return f"({text})" if prec > 2 else text
    text = f"{format_formula(u.left, 1)} \\/ {format_formula(u.right, 2)}"
    return f"({text})" if prec > 1 else text


def check_formula(u: Formula, signature: Signature, context: VarContext) -> None:
    """Sorts of atoms respect the signature; free and bound variables lie in X."""
    def term_ok(t: Term) -> None:
        if isinstance(t, Var):
            if t.name not in context or context.sort_of(t.name) != t.sort:
                raise TypeError(f"variable {t.name}:{t.sort} not in context {context.name}")
            return
        op = signature.op(t.op)
        if len(op.args) != len(t.args) or op.result != t.sort:
            raise TypeError(f"bad application of {t.op}")
        for a, s in zip(t.args, op.args):
            if a.sort != s:
                raise TypeError(f"{t.op} expects sort {s}, got {a.sort}")
            term_ok(a)

    if isinstance(u, Eq):
        if u.lhs.sort != u.rhs.sort:
            raise TypeError(f"equality between sorts {u.lhs.sort} and {u.rhs.sort}")
        term_ok(u.lhs)
        term_ok(u.rhs)
    elif isinstance(u, Rel):
        r = signature.rel(u.name)
        if len(r.args) != len(u.args):
            raise TypeError(f"{u.name} expects {len(r.args)} arguments")
        for a, s in zip(u.args, r.args):
            if a.sort != s:
                raise TypeError(f"{u.name} expects sort {s}, got {a.sort}")
            term_ok(a)
    elif isinstance(u, Exists):
        if u.var not in context:
            raise TypeError(f"quantified variable {u.var} not in context {context.name}")
        check_formula(u.body, signature, context)
    elif isinstance(u, Not):
        check_formula(u.body, signature, context)
    else:
        check_formula(u.left, signature, context)
        check_formula(u.right, signature, context)


def substitute_formula(s: Substitution, u: Formula) -> Formula:
    """Apply ``s : W(X) -> W(Y)`` to a quantifier-free formula over X."""
    if isinstance(u, Eq):
        return Eq(apply_substitution(s, u.lhs), apply_substitution(s, u.rhs))
    if isinstance(u, Rel):
        return Rel(u.name, tuple(apply_substitution(s, t) for t in u.args))
    if isinstance(u, Not):
        return Not(substitute_formula(s, u.body))
    if isinstance(u, Exists):
        raise ValueError("substitution into quantified formulas is not supported")
    return type(u)(substitute_formula(s, u.left), substitute_formula(s, u.right))


# ---------------------------------------------------------------------------
# Models


@dataclass(eq=False)
class Model:
    """An algebra G with a realization f of the relation symbols."""

    algebra: FiniteAlgebra
    signature: Signature
    relations: Mapping[str, frozenset]
    name: str = "M"

    def __post_init__(self):
        if not self.signature.same_algebraic_part(self.algebra.signature):
            raise ValueError(f"model {self.name}: signature does not match its algebra")
        rels = {}
        for r in self.signature.rels:
            tuples = frozenset(tuple(int(v) for v in t) for t in self.relations.get(r.name, ()))
            for t in tuples:
                if len(t) != len(r.args):
                    raise ValueError(f"model {self.name}: tuple {t} has wrong arity for {r.name}")
                for v, s in zip(t, r.args):
                    if not 0 <= v < self.algebra.size(s):
                        raise ValueError(f"model {self.name}: tuple {t} out of range for {r.name}")
            rels[r.name] = tuples
        extra = set(self.relations) - set(rels)
        if extra:
            raise ValueError(f"model {self.name}: unknown relations {sorted(extra)}")
        self.relations = rels

    @classmethod
    def of(cls, G: FiniteAlgebra, name: str = "M", rels: Sequence[RelSymbol] | None = None,
           **tables: Iterable[Sequence[str]]) -> "Model":
        """Build from element names; relation symbols default to G's sort."""
        if rels is None:
            rels = []
            for r, tuples in tables.items():
                tuples = [tuple(t) if not isinstance(t, str) else (t,) for t in tuples]
                tables[r] = tuples
                arity = len(tuples[0]) if tuples else 1
                rels.append(RelSymbol(r, (G.sort,) * arity))
        sig = G.signature.replace(rels=tuple(rels))
        idx = {}
        for r in sig.rels:
            idx[r.name] = frozenset(
                tuple(G.element(s, str(v)) for v, s in zip((t,) if isinstance(t, str) else t, r.args))
                for t in tables.get(r.name, ()))
        return cls(G, sig, idx, name)

    def relation_table(self, name: str) -> np.ndarray:
        """Boolean lookup array over argument tuples."""
        r = self.signature.rel(name)
        arr = np.zeros(tuple(self.algebra.size(s) for s in r.args), dtype=bool)
        for t in self.relations[name]:
            arr[t] = True
        return arr

    def describe(self) -> dict[str, list[list[str]]]:
        G = self.algebra
        return {r.name: sorted([G.name_of(s, v) for v, s in zip(t, r.args)] for t in self.relations[r.name])
                for r in self.signature.rels}

    def __repr__(self) -> str:
        return f"Model({self.name} over {self.algebra.name}: {self.describe()})"


# ---------------------------------------------------------------------------
# Valuation


def exists_mask(flags: np.ndarray, space: PointSpace, var: str) -> np.ndarray:
    """∃var as a set operator on a boolean vector over the space."""
    i = space.context.index(var)
    cube = flags.reshape(space.radix)
    return np.broadcast_to(cube.any(axis=i, keepdims=True), space.radix).reshape(-1).copy()


def _eval(u: Formula, model: Model, space: PointSpace, cache: dict, tcache: dict) -> np.ndarray:
    got = cache.get(u)
    if got is not None:
        return got
    G = model.algebra
    if isinstance(u, Eq):
        out = eval_term_columns(u.lhs, space.columns, G, space.n, tcache) == \
            eval_term_columns(u.rhs, space.columns, G, space.n, tcache)
    elif isinstance(u, Rel):
        table = model.relation_table(u.name)
        if not u.args:
            out = np.full(space.n, bool(table[()]))
        else:
            out = table[tuple(eval_term_columns(t, space.columns, G, space.n, tcache) for t in u.args)]
    elif isinstance(u, Not):
        out = ~_eval(u.body, model, space, cache, tcache)
    elif isinstance(u, And):
        out = _eval(u.left, model, space, cache, tcache) & _eval(u.right, model, space, cache, tcache)
    elif isinstance(u, Or):
        out = _eval(u.left, model, space, cache, tcache) | _eval(u.right, model, space, cache, tcache)
    else:
        out = exists_mask(_eval(u.body, model, space, cache, tcache), space, u.var)
    cache[u] = out
    return out


def model_space(model: Model, context: VarContext, budget: Budget | None = None) -> PointSpace:
    return PointSpace(context, model.algebra, budget)


def eval_formula(u: Formula, model: Model, context: VarContext | PointSpace,
                 budget: Budget | None = None) -> PointSet:
    """Val_f(u) as a point set over the context."""
    space = context if isinstance(context, PointSpace) else model_space(model, context, budget)
    check_formula(u, model.signature, space.context)
    return PointSet.from_bool(space, _eval(u, model, space, {}, {}), provenance=u)


def solutions_f(T: Sequence[Formula], model: Model, context: VarContext | PointSpace,
                budget: Budget | None = None) -> PointSet:
    """T^f: points satisfying every formula of T."""
    space = context if isinstance(context, PointSpace) else model_space(model, context, budget)
    ok = np.ones(space.n, dtype=bool)
    cache: dict = {}
    tcache: dict = {}
    for u in T:
        check_formula(u, model.signature, space.context)
        ok &= _eval(u, model, space, cache, tcache)
    return PointSet.from_bool(space, ok, closed=True, provenance=tuple(T))


def logical_kernel_member(u: Formula, mu: int, model: Model, context: VarContext | PointSpace) -> bool:
    """Is u in the logical kernel of the point mu, i.e. mu in Val_f(u)?"""
    return mu in eval_formula(u, model, context)


def exists_set(A: PointSet, var: str) -> PointSet:
    return PointSet.from_bool(A.space, exists_mask(A.to_bool(), A.space, var))


def s_star(s: Substitution, A: PointSet, target: PointSpace) -> PointSet:
    """Preimage of A under nu -> nu∘s, for s : W(X) -> W(Y) and A over X."""
    image = pullback_points(s, target, A.space)
    return PointSet.from_bool(target, A.to_bool()[image])


# ---------------------------------------------------------------------------
# Logic levels


class LogicLevel(enum.IntEnum):
    L0 = 0
    L1 = 1
    L2 = 2
    L3 = 3
    L4 = 4
    L5 = 5
    L6 = 6

    @classmethod
    def parse(cls, text: str) -> "LogicLevel":
        try:
            return cls[text.upper()]
        except KeyError:
            raise ValueError(f"unknown logic level {text!r}; expected L0..L6") from None


# levels whose formulas are closed under disjunction
OR_CLOSED = frozenset({LogicLevel.L1, LogicLevel.L2, LogicLevel.L3, LogicLevel.L5, LogicLevel.L6})
POSITIVE = frozenset({LogicLevel.L0, LogicLevel.L1, LogicLevel.L3, LogicLevel.L5})


def _or_tree(u: Formula, leaf) -> bool:
    if isinstance(u, Or):
        return _or_tree(u.left, leaf) and _or_tree(u.right, leaf)
    return leaf(u)


def _uses_only(u: Formula, kinds: tuple) -> bool:
    if isinstance(u, ATOMS):
        return True
    if not isinstance(u, kinds):
        return False
    if isinstance(u, (Not, Exists)):
        return _uses_only(u.body, kinds)
    return _uses_only(u.left, kinds) and _uses_only(u.right, kinds)


def in_level(u: Formula, level: LogicLevel) -> bool:
    level = LogicLevel(level)
    if level == LogicLevel.L0:
        return isinstance(u, Eq)
    if level == LogicLevel.L1:
        return _or_tree(u, lambda a: isinstance(a, Eq))
    if level == LogicLevel.L2:
        return _or_tree(u, lambda a: isinstance(a, Eq) or (isinstance(a, Not) and isinstance(a.body, Eq)))
    if level == LogicLevel.L3:
        return _uses_only(u, (And, Or, Exists))
    if level == LogicLevel.L4:
        return _uses_only(u, (And, Or, Not))
    if level == LogicLevel.L5:
        return _uses_only(u, (And, Or))
    return True


def level_members(formulas: Iterable[Formula], level: LogicLevel) -> list[Formula]:
    return [u for u in formulas if in_level(u, level)]


# ---------------------------------------------------------------------------
# Atom masks and level geometry


def _atom_masks(model: Model, space: PointSpace, relations: bool, budget: Budget) -> dict[int, Formula]:
    """Distinct Val_f of atoms over X, via term functions of the context."""
    G = model.algebra
    clone = term_functions(space.context, G, budget)
    out: dict[int, Formula] = {}
    for s in G.signature.sorts:
        F = clone.rows[s]
        m = F.shape[0]
        budget.charge("formulas", m * m)
        for i in range(m):
            eq = F[i][None, :] == F[i:]
            for off, flags in enumerate(eq):
                mask = mask_from_bool(flags)
                if mask not in out:
                    out[mask] = Eq(clone.term(s, i), clone.term(s, i + off))
    if relations:
        for r in model.signature.rels:
            table = model.relation_table(r.name)
            pools = [range(clone.size(s)) for s in r.args]
            combos = 1
            for p in pools:
                combos *= len(p)
            budget.charge("formulas", combos)
            for idx in itertools.product(*pools):
                flags = table[tuple(clone.rows[s][i] for s, i in zip(r.args, idx))] if idx else \
                    np.full(space.n, bool(table[()]))
                mask = mask_from_bool(flags)
                if mask not in out:
                    out[mask] = Rel(r.name, tuple(clone.term(s, i) for s, i in zip(r.args, idx)))
    return out


def _close(family: set[int], ops, budget: Budget) -> set[int]:
    """Close a family of masks under the given binary/unary mask operations."""
    frontier = list(family)
    items = list(family)
    while frontier:
        nxt = []
        for a in frontier:
            for op in ops:
                cands = op(a, items)
                for c in cands:
                    if c not in family:
                        budget.charge("subsets")
                        family.add(c)
                        nxt.append(c)
        items.extend(nxt)
        frontier = nxt
    return family


@dataclass
class LevelGeometry:
    level: LogicLevel
    space: PointSpace
    algebraic: list[PointSet]
    closed: list[PointSet]

    @property
    def or_closed(self) -> bool:
        return self.level in OR_CLOSED


def zariski_at_level(context: VarContext, model: Model, level: LogicLevel,
                     budget: Budget | None = None) -> LevelGeometry:
    """ℓ-algebraic sets T^f (T inside the level) and the topology they generate.

    Only the positive levels L0, L1, L3 and L5 are supported.  The empty set
    and the whole space are always closed.
    """
    level = LogicLevel(level)
    if level not in POSITIVE:
        raise ValueError(f"level {level.name} is not positive; use L0, L1, L3 or L5")
    budget = resolve(budget)
    space = model_space(model, context, budget)
    full = (1 << space.n) - 1
    atoms = set(_atom_masks(model, space, relations=level != LogicLevel.L0 and level != LogicLevel.L1,
                            budget=budget))

    def meet(a, items):
        return [a & b for b in items]

    def join(a, items):
        return [a | b for b in items]

    def ex(a, items):
        flags = mask_to_bool(a, space.n)
        return [mask_from_bool(exists_mask(flags, space, x)) for x in space.context.names]

    if level == LogicLevel.L0:
        definable = atoms
    elif level == LogicLevel.L1:
        definable = _close(set(atoms), [join], budget)
    elif level == LogicLevel.L5:
        definable = _close(set(atoms), [join, meet], budget)
    else:
        definable = _close(set(atoms), [join, meet, ex], budget)
    algebraic = _close(set(definable) | {full}, [meet], budget)
    closed = _close(set(algebraic) | {0}, [join], budget)
    key = lambda m: tuple(mask_indices(m))
    return LevelGeometry(level, space,
                         [PointSet(space, m, closed=True) for m in sorted(algebraic, key=key)],
                         [PointSet(space, m, closed=True) for m in sorted(closed, key=key)])


# ---------------------------------------------------------------------------
# Automorphisms and invariant sets


def preserves_relations(delta: Homomorphism, model: Model) -> bool:
    for r in model.signature.rels:
        tuples = model.relations[r.name]
        image = {tuple(delta.maps[s][v] for v, s in zip(t, r.args)) for t in tuples}
        if image != tuples:
            return False
    return True


def aut_of_model(model: Model, budget: Budget | None = None) -> AutGroup:
    """Aut(f): automorphisms of G carrying every relation onto itself."""
    full = automorphism_group(model.algebra, budget)
    return AutGroup(model.algebra, tuple(d for d in full if preserves_relations(d, model)))


def point_action(delta: Homomorphism, space: PointSpace) -> np.ndarray:
    """perm[mu] = index of delta∘mu."""
    idx = np.zeros(space.n, dtype=np.int64)
    for (x, s), r in zip(space.context.variables, space.radix):
        idx = idx * r + np.asarray(delta.maps[s], dtype=np.int64)[space.columns[x]]
    return idx


def act(delta: Homomorphism, A: PointSet) -> PointSet:
    """delta A = {delta∘mu : mu in A}."""
    flags = np.zeros(A.space.n, dtype=bool)
    flags[point_action(delta, A.space)[A.to_bool()]] = True
    return PointSet.from_bool(A.space, flags)


def _orbit_labels(perms: Sequence[np.ndarray], n: int) -> np.ndarray:
    """Orbit partition of range(n) under the group generated by ``perms``."""
    labels = np.arange(n, dtype=np.int64)
    while True:
        old = labels
        for p in perms:
            labels = np.minimum(labels, labels[p])
        if np.array_equal(old, labels):
            return _canonical(labels)


def _canonical(labels: np.ndarray) -> np.ndarray:
    """Relabel blocks by first occurrence."""
    _, first, inv = np.unique(labels, return_index=True, return_inverse=True)
    order = np.argsort(np.argsort(first))
    return order[inv.ravel()].astype(np.int64)


@dataclass
class SetAlgebra:
    """A finite Boolean algebra of subsets of a point space, given by its atoms."""

    space: PointSpace
    labels: np.ndarray

    def __post_init__(self):
        self.labels = _canonical(np.asarray(self.labels, dtype=np.int64))

    @property
    def n_blocks(self) -> int:
        return int(self.labels.max()) + 1 if self.space.n else 0

    def __len__(self) -> int:
        return 1 << self.n_blocks

    def blocks(self) -> list[PointSet]:
        return [PointSet.from_bool(self.space, self.labels == b) for b in range(self.n_blocks)]

    def contains(self, A: PointSet) -> bool:
        flags = A.to_bool()
        inside = np.zeros(self.n_blocks, dtype=bool)
        inside[self.labels[flags]] = True
        return bool(np.array_equal(inside[self.labels], flags))

    __contains__ = contains

    def members(self, budget: Budget | None = None) -> list[PointSet]:
        budget = resolve(budget)
        budget.check("subsets", len(self))
        blocks = [b.mask for b in self.blocks()]
        out = []
        for bits in range(len(self)):
            m = 0
            for i in mask_indices(bits):
                m |= blocks[i]
            out.append(PointSet(self.space, m))
        return sorted(out, key=PointSet.key)

    def same_as(self, other: "SetAlgebra") -> bool:
        return bool(np.array_equal(self.labels, other.labels))


def orbit_algebra(group: Iterable[Homomorphism], space: PointSpace) -> SetAlgebra:
    """H′ at one context: the sets invariant under every element of ``group``."""
    perms = [point_action(d, space) for d in group]
    return SetAlgebra(space, _orbit_labels(perms, space.n))


def galois_fixed_algebra(Hsub: Iterable[Homomorphism], context: VarContext, G: FiniteAlgebra,
                         budget: Budget | None = None) -> SetAlgebra:
    return orbit_algebra(Hsub, PointSpace(context, G, budget))


def galois_group(R: SetAlgebra | Iterable[PointSet] | Sequence[SetAlgebra], G: FiniteAlgebra,
                 candidates: Iterable[Homomorphism] | None = None,
                 budget: Budget | None = None) -> list[Homomorphism]:
    """R′: automorphisms of G fixing every member of R setwise."""
    if isinstance(R, SetAlgebra):
        R = [R]
    R = list(R)
    cands = list(candidates) if candidates is not None else list(automorphism_group(G, budget))
    out = []
    for d in cands:
        ok = True
        for item in R:
            if isinstance(item, SetAlgebra):
                perm = point_action(d, item.space)
                # every block is fixed exactly when labels are constant along the action
                if not np.array_equal(item.labels[perm], item.labels):
                    ok = False
            else:
                if act(d, item).mask != item.mask:
                    ok = False
            if not ok:
                break
        if ok:
            out.append(d)
    return out


def closure_elementary(A: PointSet, model: Model, group: AutGroup | None = None) -> PointSet:
    """Least Aut(f)-invariant superset of A (the elementary closure A^{ff})."""
    group = group or aut_of_model(model)
    flags = A.to_bool()
    out = flags.copy()
    for d in group:
        out[point_action(d, A.space)[flags]] = True
    return PointSet.from_bool(A.space, out, closed=True)


def is_elementary(A: PointSet, model: Model, group: AutGroup | None = None) -> bool:
    return closure_elementary(A, model, group).mask == A.mask


# ---------------------------------------------------------------------------
# Definable sets by partition refinement


def _fiber_signature(labels: np.ndarray, radix: tuple[int, ...], axis: int) -> np.ndarray:
    """For every point, a key for the set of labels met along its fiber in ``axis``."""
    cube = np.moveaxis(labels.reshape(radix), axis, -1)
    r = cube.shape[-1]
    flat = np.sort(cube.reshape(-1, r), axis=1)
    dup = np.zeros_like(flat, dtype=bool)
    dup[:, 1:] = flat[:, 1:] == flat[:, :-1]
    flat = np.where(dup, -1, flat)
    flat = np.sort(flat, axis=1)
    _, key = np.unique(flat, axis=0, return_inverse=True)
    key = key.ravel()
    shape = cube.shape[:-1]
    keys = np.broadcast_to(key.reshape(shape + (1,)), shape + (r,))
    return np.moveaxis(keys, -1, axis).reshape(-1)


def _refine(columns: list[np.ndarray]) -> np.ndarray:
    stacked = np.stack(columns, axis=1)
    _, inv = np.unique(stacked, axis=0, return_inverse=True)
    return inv.ravel().astype(np.int64)


def _flat_atoms(model: Model, space: PointSpace) -> list[np.ndarray]:
    """x = y, op(x..) = y, c = y and rel(x..) over single variables."""
    G = model.algebra
    cols = space.columns
    ctx = space.context
    by_sort: dict[str, list[str]] = {}
    for x, s in ctx.variables:
        by_sort.setdefault(s, []).append(x)
    out = []
    for x, s in ctx.variables:
        for y in by_sort[s]:
            if x < y:
                out.append(cols[x] == cols[y])
    for op in G.signature.ops:
        for args in itertools.product(*[by_sort.get(s, []) for s in op.args]):
            val = G.tables[op.name][tuple(cols[a] for a in args)] if args else \
                np.full(space.n, G.tables[op.name][()])
            for y in by_sort.get(op.result, []):
                out.append(val == cols[y])
    for r in model.signature.rels:
        table = model.relation_table(r.name)
        for args in itertools.product(*[by_sort.get(s, []) for s in r.args]):
            out.append(table[tuple(cols[a] for a in args)] if args else np.full(space.n, bool(table[()])))
    return out


def definable_sets(model: Model, context: VarContext, extra: int | None = None,
                   term_atoms: bool = True, budget: Budget | None = None) -> SetAlgebra:
    """R_f at X: the Boolean algebra of Val_f(u) for formulas u over X.

    Formulas may use ``extra`` auxiliary variables per sort, projected away
    afterwards (default |G_s|, which is enough to write down the diagram of G
    and so gives every definable set).  Computed by refining the partition
    generated by flat atoms (and term atoms over X) under ∃ until stable.
    """
    budget = resolve(budget)
    G = model.algebra
    sorts = G.signature.sorts
    aux = []
    for s in sorts:
        k = G.size(s) if extra is None else extra
        aux += [(f"_{s}{i}", s) for i in range(k)]
    big = VarContext(tuple(context.variables) + tuple(aux), context.name + "+")
    space = PointSpace(big, G, budget)
    atoms = _flat_atoms(model, space)
    if term_atoms:
        small = PointSpace(context, G, budget)
        proj = _projection_index(space, small)
        for mask in _atom_masks(model, small, relations=True, budget=budget):
            atoms.append(mask_to_bool(mask, small.n)[proj])
    labels = _refine(atoms) if atoms else np.zeros(space.n, dtype=np.int64)
    while True:
        cols = [labels] + [_fiber_signature(labels, space.radix, i) for i in range(len(big))]
        new = _refine(cols)
        if new.max() == labels.max():
            break
        labels = new
    if not aux:
        return SetAlgebra(space, labels)
    small = PointSpace(context, G, budget)
    proj = _projection_index(space, small)
    # refine X-space by the projections of every block
    nb = int(labels.max()) + 1
    hit = np.zeros((nb, small.n), dtype=bool)
    hit[labels, proj] = True
    _, inv = np.unique(hit.T, axis=0, return_inverse=True)
    return SetAlgebra(small, inv.ravel())


def _projection_index(big: PointSpace, small: PointSpace) -> np.ndarray:
    idx = np.zeros(big.n, dtype=np.int64)
    for x, r in zip(small.context.names, small.radix):
        idx = idx * r + big.columns[x]
    return idx


# ---------------------------------------------------------------------------
# Galois correspondence for Aut(G)


def subgroups(group: AutGroup, budget: Budget | None = None) -> list[tuple[Homomorphism, ...]]:
    """All subgroups, as joins of cyclic subgroups; sorted by (order, keys)."""
    budget = resolve(budget)
    elems = list(group)
    key_of = {g.key(): i for i, g in enumerate(elems)}
    mult = np.array([[key_of[group.compose(a, b).key()] for b in elems] for a in elems], dtype=np.int64)

    def generate(seed: frozenset[int]) -> frozenset[int]:
        cur = set(seed) | {key_of[group.identity.key()]}
        frontier = list(cur)
        while frontier:
            nxt = []
            for a in frontier:
                for b in list(cur):
                    for c in (mult[a, b], mult[b, a]):
                        c = int(c)
                        if c not in cur:
                            cur.add(c)
                            nxt.append(c)
            frontier = nxt
        return frozenset(cur)

    cyclic = {generate(frozenset({i})) for i in range(len(elems))}
    found = set(cyclic)
    frontier = list(found)
    while frontier:
        nxt = []
        for h in frontier:
            for c in cyclic:
                if not c <= h:
                    j = generate(h | c)
                    if j not in found:
                        budget.charge("subsets")
                        found.add(j)
                        nxt.append(j)
        frontier = nxt
    ordered = sorted(found, key=lambda h: (len(h), sorted(elems[i].key() for i in h)))
    return [tuple(sorted((elems[i] for i in h), key=Homomorphism.key)) for h in ordered]


def _contexts(G: FiniteAlgebra, bound: int) -> list[VarContext]:
    s = G.sort
    return [VarContext(tuple((f"x{i + 1}", s) for i in range(k)), f"X{k}") for k in range(1, bound + 1)]


@dataclass
class GaloisReport:
    algebra: str
    xbound: int
    subgroups: int
    closed_subgroups: int
    group_failures: list[tuple[int, int]] = field(default_factory=list)   # (|H|, |H''|)
    algebras_checked: int = 0
    algebra_failures: list[str] = field(default_factory=list)
    injective: bool = True

    @property
    def ok(self) -> bool:
        return not self.group_failures and not self.algebra_failures and self.injective


def verify_galois_closure(G: FiniteAlgebra, xbound: int = 2, models: Sequence[Model] | None = None,
                          budget: Budget | None = None) -> GaloisReport:
    """Check H''=H for every subgroup of Aut(G) and R''=R for sampled R_f.

    H' is read at the contexts x1..xk for k <= xbound.  R_f ranges over the
    given models (default: every unary predicate on G) and R' is computed at
    a context of |G| variables, where it is exact.
    """
    budget = resolve(budget)
    aut = automorphism_group(G, budget)
    subs = subgroups(aut, budget)
    ctxs = _contexts(G, xbound)
    spaces = [PointSpace(c, G, budget) for c in ctxs]
    report = GaloisReport(G.name, xbound, len(subs), 0)
    seen = {}
    for H in subs:
        fixed = [orbit_algebra(H, sp) for sp in spaces]
        back = galois_group(fixed, G, aut, budget)
        if len(back) == len(H):
            report.closed_subgroups += 1
        else:
            report.group_failures.append((len(H), len(back)))
        sig = tuple(f.labels.tobytes() for f in fixed)
        if sig in seen:
            report.injective = False
        seen[sig] = H
    if models is None:
        models = [Model.of(G, f"p{bits}", p=[G.name_of(G.sort, i) for i in mask_indices(bits)])
                  for bits in range(1 << G.size(G.sort))]
    wide = VarContext(tuple((f"x{i + 1}", G.sort) for i in range(G.size(G.sort))), "XG")
    for m in models:
        report.algebras_checked += 1
        Rg = definable_sets(m, wide, extra=0, budget=budget)
        prime = galois_group(Rg, G, aut, budget)
        for c, sp in zip(ctxs, spaces):
            R = definable_sets(m, c, budget=budget)
            if not orbit_algebra(prime, sp).same_as(R):
                report.algebra_failures.append(f"{m.name} at {c.name}")
    return report


# ---------------------------------------------------------------------------
# Bounded formula search


def _enumerate(models: Sequence[Model], spaces: Sequence[PointSpace], max_size: int,
               level: LogicLevel, budget: Budget) -> Iterator[tuple[Formula, tuple[int, ...]]]:
    """Formulas by increasing size, one per distinct tuple of valuations."""
    level = LogicLevel(level)
    seen: dict[tuple[int, ...], Formula] = {}
    by_size: dict[int, list[tuple[Formula, tuple]]] = {}
    fulls = tuple((1 << sp.n) - 1 for sp in spaces)
    names = spaces[0].context.names
    allow_not = level in (LogicLevel.L2, LogicLevel.L4, LogicLevel.L6)
    allow_and = level in (LogicLevel.L3, LogicLevel.L4, LogicLevel.L5, LogicLevel.L6)
    allow_or = level != LogicLevel.L0
    allow_ex = level in (LogicLevel.L3, LogicLevel.L6)
    with_rels = level not in (LogicLevel.L0, LogicLevel.L1, LogicLevel.L2)

    def atoms() -> list[tuple[Formula, tuple]]:
        ctx = spaces[0].context
        sig = models[0].signature
        from .terms import enumerate_terms
        terms = {s: enumerate_terms(sig, ctx, s, 1, budget) for s in sig.sorts}
        out = []
        for s in sig.sorts:
            ts = terms[s]
            for i, a in enumerate(ts):
                for b in ts[i:]:
                    out.append(Eq(a, b))
        if with_rels:
            for r in sig.rels:
                for args in itertools.product(*[terms[s] for s in r.args]):
                    out.append(Rel(r.name, tuple(args)))
        return [(u, tuple(mask_from_bool(_eval(u, m, sp, {}, {})) for m, sp in zip(models, spaces)))
                for u in out]

    def offer(u: Formula, key: tuple, size: int):
        budget.charge("formulas")
        if key in seen:
            return False
        seen[key] = u
        by_size.setdefault(size, []).append((u, key))
        return True

    for u, key in atoms():
        if offer(u, key, 1):
            yield u, key
    for size in range(2, max_size + 1):
        if allow_not:
            for u, key in list(by_size.get(size - 1, [])):
                if level == LogicLevel.L2 and not isinstance(u, Eq):
                    continue
                nk = tuple(f & ~k for f, k in zip(fulls, key))
                if offer(Not(u), nk, size):
                    yield Not(u), nk
        if allow_ex:
            for u, key in list(by_size.get(size - 1, [])):
                for x in names:
                    nk = tuple(mask_from_bool(exists_mask(mask_to_bool(k, sp.n), sp, x))
                               for k, sp in zip(key, spaces))
                    if offer(Exists(x, u), nk, size):
                        yield Exists(x, u), nk
        for ls in range(1, size - 1):
            rs = size - 1 - ls
            for u, ku in list(by_size.get(ls, [])):
                for v, kv in list(by_size.get(rs, [])):
                    if level == LogicLevel.L1 and not (in_level(u, level) and in_level(v, level)):
                        continue
                    if level == LogicLevel.L2 and not (in_level(u, level) and in_level(v, level)):
                        continue
                    if allow_and:
                        nk = tuple(a & b for a, b in zip(ku, kv))
                        if offer(And(u, v), nk, size):
                            yield And(u, v), nk
                    if allow_or:
                        nk = tuple(a | b for a, b in zip(ku, kv))
                        if offer(Or(u, v), nk, size):
                            yield Or(u, v), nk


def defining_formula(A: PointSet, model: Model, max_size: int = 7, level: LogicLevel = LogicLevel.L6,
                     budget: Budget | None = None) -> Formula | None:
    """Smallest-first search for u with Val_f(u) = A.

    Returns None when nothing is found within ``max_size``; raises
    BudgetExceeded when the candidate budget runs out first.
    """
    budget = resolve(budget)
    for u, key in _enumerate([model], [A.space], max_size, level, budget):
        if key[0] == A.mask:
            return u
    return None


# ---------------------------------------------------------------------------
# Model isomorphism and geometric equivalence


def _relation_compatible(delta: Homomorphism, m1: Model, m2: Model) -> bool:
    for r in m1.signature.rels:
        image = {tuple(delta.maps[s][v] for v, s in zip(t, r.args)) for t in m1.relations[r.name]}
        if image != m2.relations[r.name]:
            return False
    return True


def iter_model_isomorphisms(m1: Model, m2: Model, budget: Budget | None = None) -> Iterator[Homomorphism]:
    from .sigcore import iter_isomorphisms
    if m1.signature.rels != m2.signature.rels:
        raise ValueError(f"models {m1.name} and {m2.name} have different relation symbols")
    for r in m1.signature.rels:
        if len(m1.relations[r.name]) != len(m2.relations[r.name]):
            return
    for d in iter_isomorphisms(m1.algebra, m2.algebra, budget):
        if _relation_compatible(d, m1, m2):
            yield d


def model_isomorphism(m1: Model, m2: Model, budget: Budget | None = None) -> Homomorphism | None:
    """First isomorphism of models in lexicographic order, or None."""
    for d in iter_model_isomorphisms(m1, m2, budget):
        return d
    return None


@dataclass
class ModelGeqResult:
    verdict: bool | None                        # None means unknown within the bounds
    reason: str
    isomorphism: Homomorphism | None = None
    context: VarContext | None = None
    hypothesis: Formula | None = None           # T = {hypothesis}
    consequence: Formula | None = None          # in T^{ff} for one model only
    holds_in: int | None = None                 # 1 or 2

    def __bool__(self) -> bool:
        return bool(self.verdict)


def geom_equivalent_models(m1: Model, m2: Model, max_vars: int = 1, max_size: int = 3,
                           budget: Budget | None = None) -> ModelGeqResult:
    """Tri-state test of T^{f1 f1} = T^{f2 f2} for all T.

    True when the models are isomorphic.  False with a witness u, v where
    v follows from {u} in one model and not in the other.  Unknown otherwise.
    """
    budget = resolve(budget)
    iso = model_isomorphism(m1, m2, budget)
    if iso is not None:
        return ModelGeqResult(True, "models are isomorphic", isomorphism=iso)
    G1 = m1.algebra
    for k in range(1, max_vars + 1):
        ctx = VarContext(tuple((f"x{i + 1}", G1.sort) for i in range(k)), f"X{k}")
        spaces = [PointSpace(ctx, m.algebra, budget) for m in (m1, m2)]
        found = list(_enumerate([m1, m2], spaces, max_size, LogicLevel.L6, budget))
        for u, ku in found:
            for v, kv in found:
                in1 = ku[0] & ~kv[0] == 0
                in2 = ku[1] & ~kv[1] == 0
                if in1 != in2:
                    return ModelGeqResult(False, "closures of {hypothesis} differ", context=ctx,
                                          hypothesis=u, consequence=v, holds_in=1 if in1 else 2)
    return ModelGeqResult(None, "no separating formulas within the bounds")
