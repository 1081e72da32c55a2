"""Equational geometry over a finite algebra H.

Closed point sets are the fixed points of A -> A'' where A' is the set of
equations holding on A.  Since A' is infinite we never store it; a point
nu lies in A'' exactly when x-row -> nu(x) extends to a homomorphism from
the subalgebra of H^A generated by the variable rows (the coordinate
algebra of A) into H.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .budget import Budget, resolve
from .rows import RowAlgebra, generate_rows
from .sigcore import FiniteAlgebra, _same_signature, iter_homs
from .space import PointSet, PointSpace, all_points, mask_from_bool
from .terms import Equation, Substitution, VarContext, eval_term_columns


@dataclass(frozen=True)
class EquationSystem:
    context: VarContext
    equations: tuple[Equation, ...] = ()
    name: str = "T"

    def __post_init__(self):
        from .terms import variables
        names = set(self.context.names)
        for eq in self.equations:
            stray = (variables(eq.lhs) | variables(eq.rhs)) - names
            if stray:
                raise ValueError(f"equation {eq} uses variables outside {self.context.name}: {sorted(stray)}")

    def __len__(self) -> int:
        return len(self.equations)

    def __iter__(self):
        return iter(self.equations)


def equation_mask(space: PointSpace, eq: Equation, cache: dict | None = None) -> np.ndarray:
    H = space.algebra
    lhs = eval_term_columns(eq.lhs, space.columns, H, space.n, cache)
    rhs = eval_term_columns(eq.rhs, space.columns, H, space.n, cache)
    return lhs == rhs


def solutions(T: EquationSystem, H: FiniteAlgebra, space: PointSpace | None = None,
              budget: Budget | None = None) -> PointSet:
    """T' : the points satisfying every equation of T."""
    space = space or all_points(T.context, H, budget)
    ok = np.ones(space.n, dtype=bool)
    cache: dict = {}
    for eq in T.equations:
        ok &= equation_mask(space, eq, cache)
    return PointSet.from_bool(space, ok, closed=True, provenance=T)


def row_algebra(A: PointSet, budget: Budget | None = None) -> RowAlgebra:
    """Subalgebra of H^A generated by the coordinate rows (x^mu)_{mu in A}."""
    space = A.space
    idx = np.array(A.indices(), dtype=np.int64)
    cols = {x: space.columns[x][idx] for x in space.context.names}
    return generate_rows(space.algebra, space.context, cols, len(idx), budget)


def point_in_closure(nu: int, A: PointSet) -> bool:
    """Does ``nu`` lie in A''?  Pair-set closure with a functionality check.

    Start from the pairs (row_x, nu(x)); close under the componentwise
    operations; nu is in the closure unless some row acquires two values.
    """
    space = A.space
    H = space.algebra
    idx = np.array(A.indices(), dtype=np.int64)
    L = len(idx)
    sorts = H.signature.sorts
    rows: dict[str, list[np.ndarray]] = {s: [] for s in sorts}
    value: dict[str, dict[bytes, int]] = {s: {} for s in sorts}

    def add(s: str, row: np.ndarray, v: int) -> bool | None:
        key = row.tobytes()
        got = value[s].get(key)
        if got is None:
            value[s][key] = v
            rows[s].append(row)
            return True
        return None if got == v else False

    for x, s in space.context.variables:
        if add(s, np.ascontiguousarray(space.columns[x][idx]), int(space.columns[x][nu])) is False:
            return False
    for op in H.signature.ops:
        if not op.args:
            c = int(H.tables[op.name][()])
            if add(op.result, np.full(L, c, dtype=np.int64), c) is False:
                return False
    done = {s: 0 for s in sorts}
    while True:
        size = {s: len(rows[s]) for s in sorts}
        if size == done:
            return True
        for op in H.signature.ops:
            if not op.args:
                continue
            table = H.tables[op.name]
            pools = [range(size[s]) for s in op.args]
            for args in itertools.product(*pools):
                if all(a < done[s] for a, s in zip(args, op.args)):
                    continue
                arg_rows = [rows[s][a] for a, s in zip(args, op.args)]
                row = np.ascontiguousarray(table[tuple(arg_rows)]) if L else np.zeros(0, dtype=np.int64)
                v = int(table[tuple(value[s][r.tobytes()] for r, s in zip(arg_rows, op.args))])
                if add(op.result, row, v) is False:
                    return False
        done = size


def closure(A: PointSet, budget: Budget | None = None) -> PointSet:
    """A'' for every point at once via the coordinate algebra."""
    space = A.space
    ra = row_algebra(A, budget)
    ok = ra.extends_to_hom(space.columns, space.n)
    return PointSet.from_bool(space, ok, closed=True)


def is_closed(A: PointSet, budget: Budget | None = None) -> bool:
    return closure(A, budget).mask == A.mask


def eq_in_closure(T: EquationSystem, e: Equation, H: FiniteAlgebra, budget: Budget | None = None) -> bool:
    """Is e in T''? i.e. does e hold at every solution of T."""
    sol = solutions(T, H, budget=budget)
    holds = PointSet.from_bool(sol.space, equation_mask(sol.space, e))
    return sol.issubset(holds)


@dataclass
class CoordinateAlgebra:
    algebra: FiniteAlgebra
    generators: dict[str, int]      # variable -> element index of its row
    rows: RowAlgebra
    source: PointSet

    def generator_names(self) -> dict[str, str]:
        return {x: self.algebra.name_of(s, self.generators[x]) for x, s in self.source.space.context.variables}


def coordinate_algebra(A: PointSet, budget: Budget | None = None) -> CoordinateAlgebra:
    if len(A) == 0:
        raise ValueError("coordinate algebra of the empty set is degenerate")
    ra = row_algebra(A, budget)
    return CoordinateAlgebra(ra.to_algebra(f"K[{len(A)} points]"), dict(ra.var_index), ra, A)


# ---------------------------------------------------------------------------
# Lattices of closed sets


@dataclass
class ClosedSetLattice:
    space: PointSpace
    sets: list[PointSet]

    def __post_init__(self):
        self.sets = sorted(self.sets, key=PointSet.key)
        self._masks = {s.mask for s in self.sets}

    def __len__(self) -> int:
        return len(self.sets)

    def __contains__(self, A: PointSet) -> bool:
        return A.mask in self._masks

    def meet(self, a: PointSet, b: PointSet) -> PointSet:
        return PointSet(self.space, a.mask & b.mask, closed=True)

    def join(self, a: PointSet, b: PointSet) -> PointSet:
        """Least closed set containing a and b: (a ∪ b)''."""
        u = a.mask | b.mask
        best = None
        for c in self.sets:
            if u & ~c.mask == 0 and (best is None or best & ~c.mask != 0):
                best = c.mask if best is None else best & c.mask
        return PointSet(self.space, best, closed=True)

    def is_distributive(self) -> bool:
        for a, b, c in itertools.product(self.sets, repeat=3):
            if self.meet(a, self.join(b, c)).mask != self.join(self.meet(a, b), self.meet(a, c)).mask:
                return False
        return True


def list_closed_sets(context: VarContext, H: FiniteAlgebra, budget: Budget | None = None) -> ClosedSetLattice:
    """All H-closed sets of the space, found by closing C ∪ {p} from the least one."""
    budget = resolve(budget)
    space = all_points(context, H, budget)
    bottom = closure(space.empty(), budget)
    found = {bottom.mask: bottom}
    queue = [bottom]
    cache: dict[int, PointSet] = {}
    while queue:
        C = queue.pop()
        for p in range(space.n):
            if C.mask >> p & 1:
                continue
            seed = C.mask | (1 << p)
            D = cache.get(seed)
            if D is None:
                budget.charge("subsets")
                D = closure(PointSet(space, seed), budget)
                cache[seed] = D
            if D.mask not in found:
                found[D.mask] = D
                queue.append(D)
    return ClosedSetLattice(space, list(found.values()))


@dataclass
class StabilityResult:
    stable: bool
    counterexample: tuple[PointSet, PointSet] | None = None

    @property
    def union(self) -> PointSet | None:
        if self.counterexample is None:
            return None
        a, b = self.counterexample
        return a | b

    def __bool__(self) -> bool:
        return self.stable


def is_stable(H: FiniteAlgebra, context: VarContext, budget: Budget | None = None,
              lattice: ClosedSetLattice | None = None) -> StabilityResult:
    """Are unions of closed sets closed?  Returns the least failing pair."""
    lat = lattice or list_closed_sets(context, H, budget)
    sets = lat.sets
    for i, a in enumerate(sets):
        for b in sets[i + 1:]:
            if (a.mask | b.mask) not in lat._masks:
                return StabilityResult(False, (a, b))
    return StabilityResult(True)


def zariski_closed_sets(context: VarContext, H: FiniteAlgebra, budget: Budget | None = None,
                        lattice: ClosedSetLattice | None = None) -> list[PointSet]:
    """Closed sets of the topology with algebraic sets as basic closed sets.

    Finite unions of algebraic sets are already closed under intersection
    (algebraic sets are), so the family is the union-closure plus the empty set.
    """
    budget = resolve(budget)
    lat = lattice or list_closed_sets(context, H, budget)
    space = lat.space
    family = {0} | {s.mask for s in lat.sets}
    frontier = list(family)
    base = [s.mask for s in lat.sets]
    while frontier:
        nxt = []
        for m in frontier:
            for b in base:
                u = m | b
                if u not in family:
                    budget.charge("subsets")
                    family.add(u)
                    nxt.append(u)
        frontier = nxt
    return sorted((PointSet(space, m) for m in family), key=PointSet.key)


# ---------------------------------------------------------------------------
# Geometric equivalence, minimization, admissible substitutions


@dataclass
class SeparationFailure:
    """Elements a != b of ``source`` identified by every hom into ``target``."""

    source: FiniteAlgebra
    target: FiniteAlgebra
    sort: str
    a: int
    b: int


def separation_failure(H1: FiniteAlgebra, H2: FiniteAlgebra, budget: Budget | None = None) -> SeparationFailure | None:
    """First pair of H1 not separated by Hom(H1, H2), or None."""
    _same_signature(H1, H2)
    sorts = H1.signature.sorts
    together = {s: np.ones((H1.size(s), H1.size(s)), dtype=bool) for s in sorts}
    for h in iter_homs(H1, H2, budget=budget):
        for s in sorts:
            m = np.asarray(h.maps[s])
            together[s] &= m[:, None] == m[None, :]
    for s in sorts:
        for a in range(H1.size(s)):
            for b in range(a + 1, H1.size(s)):
                if together[s][a, b]:
                    return SeparationFailure(H1, H2, s, a, b)
    return None


def geom_equivalent_finite(H1: FiniteAlgebra, H2: FiniteAlgebra, budget: Budget | None = None) -> bool:
    """H1 and H2 each embed in a power of the other (same quasi-identities)."""
    return separation_failure(H1, H2, budget) is None and separation_failure(H2, H1, budget) is None


def minimize_system(T: EquationSystem, H: FiniteAlgebra, budget: Budget | None = None) -> EquationSystem:
    """Greedy left-to-right removal of equations not needed for T'."""
    space = all_points(T.context, H, budget)
    cache: dict = {}
    masks = [mask_from_bool(equation_mask(space, e, cache)) for e in T.equations]
    full = (1 << space.n) - 1
    target = full
    for m in masks:
        target &= m
    keep = list(range(len(masks)))
    for i in range(len(masks)):
        trial = [j for j in keep if j != i]
        m = full
        for j in trial:
            m &= masks[j]
        if m == target:
            keep = trial
    return EquationSystem(T.context, tuple(T.equations[j] for j in keep), T.name)


@dataclass
class AdmissibleResult:
    admissible: bool
    induced: dict[int, int] | None = None      # point of A -> point of B
    failure: int | None = None                 # first point of A mapped outside B

    def __bool__(self) -> bool:
        return self.admissible


def pullback_points(s: Substitution, A_space: PointSpace, B_space: PointSpace) -> np.ndarray:
    """For every point nu of the source space (context X), the index of nu∘s in B's space."""
    H = A_space.algebra
    cache: dict = {}
    idx = np.zeros(A_space.n, dtype=np.int64)
    for (y, sort), r in zip(B_space.context.variables, B_space.radix):
        col = eval_term_columns(s[y], A_space.columns, H, A_space.n, cache)
        idx = idx * r + col
    return idx


def admissible(s: Substitution, A: PointSet, B: PointSet, dual_check: bool = False,
               budget: Budget | None = None) -> AdmissibleResult:
    """Is nu∘s in B for every nu in A?  ``s`` maps W(Y) -> W(X); A over X, B over Y."""
    if s.target != A.space.context or s.source != B.space.context:
        raise ValueError("substitution contexts do not match the point spaces")
    image = pullback_points(s, A.space, B.space)
    induced = {}
    failure = None
    for nu in A.indices():
        mu = int(image[nu])
        if not (B.mask >> mu & 1):
            failure = nu
            break
        induced[nu] = mu
    result = AdmissibleResult(failure is None, induced if failure is None else None, failure)
    if dual_check:
        dual = admissible_dual(s, A, B, budget)
        if dual != result.admissible:
            raise AssertionError("admissibility and its dual form disagree")
    return result


def admissible_dual(s: Substitution, A: PointSet, B: PointSet, budget: Budget | None = None) -> bool:
    """Dual form: s carries every equation holding on B to one holding on A''.

    Equations over Y are represented by pairs of term functions on Y's
    full space; two terms with the same function behave identically, so
    the finite family of functions covers B' exactly.
    """
    H = A.space.algebra
    clone = term_functions(B.space.context, H, budget)
    Bidx = np.array(B.indices(), dtype=np.int64)
    Acl = closure(A, budget)
    Aidx = np.array(Acl.indices(), dtype=np.int64)
    image = pullback_points(s, A.space, B.space)[Aidx]
    for sort in H.signature.sorts:
        F = clone.rows[sort]
        if F.shape[0] == 0:
            continue
        on_B = F[:, Bidx]
        on_A = F[:, image]       # s(t)(nu) = t(nu∘s)
        _, grp = np.unique(on_B, axis=0, return_inverse=True)
        grp = grp.ravel()
        first = np.zeros(grp.max() + 1, dtype=np.int64)
        first[grp[::-1]] = np.arange(len(grp))[::-1]
        if not np.array_equal(on_A, on_A[first[grp]]):
            return False
    return True


def term_functions(context: VarContext, H: FiniteAlgebra, budget: Budget | None = None) -> RowAlgebra:
    """All term functions over the context, as rows over the full point space."""
    space = all_points(context, H, budget)
    return generate_rows(H, context, space.columns, space.n, budget)


def preimage_under(delta_maps: Mapping[str, Sequence[int]], A: PointSet) -> PointSet:
    """{nu : delta∘nu in A} for an endomorphism given by per-sort maps."""
    space = A.space
    idx = np.zeros(space.n, dtype=np.int64)
    for (x, s), r in zip(space.context.variables, space.radix):
        idx = idx * r + np.asarray(delta_maps[s], dtype=np.int64)[space.columns[x]]
    flags = A.to_bool()[idx]
    return PointSet.from_bool(space, flags)
