"""Signatures, finite algebras and the basic toolkit on them.

Elements are opaque strings to the outside world; internally every carrier
is indexed ``0..n-1`` in declaration order and operation tables are numpy
arrays of result indices (``-1`` marks a missing entry, which only
:func:`validate_algebra` tolerates).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .budget import Budget, resolve
from .terms import Term, VarContext, eval_term_columns

CARRIER_SOFT_CAP = 64


@dataclass(frozen=True)
class OpSymbol:
    name: str
    args: tuple[str, ...]
    result: str

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.args)})->{self.result}"


@dataclass(frozen=True)
class RelSymbol:
    name: str
    args: tuple[str, ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    def __str__(self) -> str:
        return f"{self.name}({', '.join(self.args)})"


@dataclass(frozen=True)
class Identity:
    context: VarContext
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        binders = ", ".join(f"{n}:{s}" for n, s in self.context.variables)
        head = f"forall {binders} . " if binders else ""
        return f"{head}{self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class Signature:
    sorts: tuple[str, ...]
    ops: tuple[OpSymbol, ...] = ()
    rels: tuple[RelSymbol, ...] = ()
    identities: tuple[Identity, ...] = ()
    name: str = ""

    def __post_init__(self):
        if len(set(self.sorts)) != len(self.sorts):
            raise ValueError(f"signature {self.name}: duplicate sort names")
        names = [o.name for o in self.ops] + [r.name for r in self.rels]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            raise ValueError(f"signature {self.name}: duplicate symbol names {dup}")
        known = set(self.sorts)
        for sym in (*self.ops, *self.rels):
            used = set(sym.args) | ({sym.result} if isinstance(sym, OpSymbol) else set())
            missing = used - known
            if missing:
                raise ValueError(f"signature {self.name}: {sym.name} uses undeclared sorts {sorted(missing)}")

    def op(self, name: str) -> OpSymbol:
        for o in self.ops:
            if o.name == name:
                return o
        raise KeyError(f"no operation {name!r} in signature {self.name}")

    def rel(self, name: str) -> RelSymbol:
        for r in self.rels:
            if r.name == name:
                return r
        raise KeyError(f"no relation {name!r} in signature {self.name}")

    def has_op(self, name: str) -> bool:
        return any(o.name == name for o in self.ops)

    def has_rel(self, name: str) -> bool:
        return any(r.name == name for r in self.rels)

    def constants(self) -> tuple[OpSymbol, ...]:
        return tuple(o for o in self.ops if not o.args)

    def same_algebraic_part(self, other: "Signature") -> bool:
        return self.sorts == other.sorts and self.ops == other.ops

    def replace(self, **changes) -> "Signature":
        data = dict(sorts=self.sorts, ops=self.ops, rels=self.rels,
                    identities=self.identities, name=self.name)
        data.update(changes)
        return Signature(**data)


class FiniteAlgebra:
    """Finite carriers per sort plus total operation tables."""

    def __init__(self, signature: Signature, carriers: Mapping[str, Sequence[str]],
                 tables: Mapping[str, np.ndarray], name: str = ""):
        self.signature = signature
        self.name = name
        self.carriers: dict[str, tuple[str, ...]] = {
            s: tuple(str(e) for e in carriers.get(s, ())) for s in signature.sorts
        }
        self._index = {s: {e: i for i, e in enumerate(c)} for s, c in self.carriers.items()}
        self.tables: dict[str, np.ndarray] = {}
        for op in signature.ops:
            shape = tuple(len(self.carriers[s]) for s in op.args)
            arr = np.asarray(tables.get(op.name, np.full(shape, -1)), dtype=np.int64)
            if arr.shape != shape:
                raise ValueError(f"table for {op.name} has shape {arr.shape}, expected {shape}")
            arr = arr.copy()
            arr.setflags(write=False)
            self.tables[op.name] = arr

    @classmethod
    def from_tables(cls, signature: Signature, carriers: Mapping[str, Sequence[str]],
                    rows: Mapping[str, object], name: str = "") -> "FiniteAlgebra":
        """Build from name-level rows: ``{op: {(a, b): c, ...}}``; constants map to a name."""
        carriers = {s: tuple(str(e) for e in carriers.get(s, ())) for s in signature.sorts}
        index = {s: {e: i for i, e in enumerate(c)} for s, c in carriers.items()}
        tables = {}
        for op in signature.ops:
            shape = tuple(len(carriers[s]) for s in op.args)
            arr = np.full(shape, -1, dtype=np.int64)
            spec = rows.get(op.name)
            if spec is None:
                tables[op.name] = arr
                continue
            if not op.args:
                if isinstance(spec, Mapping):
                    spec = spec.get((), None)
                if spec is not None:
                    arr[()] = index[op.result][str(spec)]
                tables[op.name] = arr
                continue
            for key, val in spec.items():
                key = key if isinstance(key, tuple) else (key,)
                pos = tuple(index[s][str(k)] for s, k in zip(op.args, key))
                arr[pos] = index[op.result][str(val)]
            tables[op.name] = arr
        return cls(signature, carriers, tables, name)

    @classmethod
    def from_functions(cls, signature: Signature, carriers: Mapping[str, Sequence[str]],
                       funcs: Mapping[str, object], name: str = "") -> "FiniteAlgebra":
        """Build from index-level callables ``funcs[op](*indices) -> index``."""
        sizes = {s: len(carriers.get(s, ())) for s in signature.sorts}
        tables = {}
        for op in signature.ops:
            shape = tuple(sizes[s] for s in op.args)
            arr = np.full(shape, -1, dtype=np.int64)
            fn = funcs[op.name]
            if not op.args:
                arr[()] = fn() if callable(fn) else fn
            else:
                for args in itertools.product(*(range(n) for n in shape)):
                    arr[args] = fn(*args)
            tables[op.name] = arr
        return cls(signature, carriers, tables, name)

    def size(self, sort: str) -> int:
        return len(self.carriers[sort])

    @property
    def sizes(self) -> dict[str, int]:
        return {s: len(c) for s, c in self.carriers.items()}

    def total_size(self) -> int:
        return sum(self.sizes.values())

    def element(self, sort: str, name: str) -> int:
        try:
            return self._index[sort][str(name)]
        except KeyError:
            raise KeyError(f"{name!r} is not an element of sort {sort} in {self.name}") from None

    def name_of(self, sort: str, idx: int) -> str:
        return self.carriers[sort][idx]

    def apply(self, op: str, *args: int) -> int:
        return int(self.tables[op][tuple(args)])

    def constant(self, op: str) -> int:
        return int(self.tables[op][()])

    def is_single_sorted(self) -> bool:
        return len(self.signature.sorts) == 1

    @property
    def sort(self) -> str:
        """The only sort of a single-sorted algebra."""
        if len(self.signature.sorts) != 1:
            raise ValueError(f"{self.name} is multisorted")
        return self.signature.sorts[0]

    def elements(self, sort: str | None = None) -> range:
        return range(self.size(sort or self.sort))

    def renamed(self, name: str) -> "FiniteAlgebra":
        return FiniteAlgebra(self.signature, self.carriers, self.tables, name)

    def __repr__(self) -> str:
        sizes = ", ".join(f"{s}:{n}" for s, n in self.sizes.items())
        return f"FiniteAlgebra({self.name or '?'}; {sizes})"


# ---------------------------------------------------------------------------
# Homomorphisms, congruences, automorphism groups


@dataclass(frozen=True, eq=False)
class Homomorphism:
    source: FiniteAlgebra
    target: FiniteAlgebra
    maps: Mapping[str, tuple[int, ...]]

    def __call__(self, sort: str, idx: int) -> int:
        return self.maps[sort][idx]

    def key(self) -> tuple:
        return tuple(self.maps[s] for s in self.source.signature.sorts)

    def __eq__(self, other) -> bool:
        return isinstance(other, Homomorphism) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def is_injective(self) -> bool:
        return all(len(set(m)) == len(m) for m in self.maps.values())

    def is_surjective(self) -> bool:
        return all(set(self.maps[s]) == set(range(self.target.size(s)))
                   for s in self.source.signature.sorts)

    def is_bijective(self) -> bool:
        return self.is_injective() and self.is_surjective()

    def preserves_operations(self) -> bool:
        for op in self.source.signature.ops:
            src, dst = self.source.tables[op.name], self.target.tables[op.name]
            res_map = np.asarray(self.maps[op.result], dtype=np.int64)
            if not op.args:
                if res_map[src[()]] != dst[()]:
                    return False
                continue
            if src.size == 0:
                continue
            grids = np.indices(src.shape)
            mapped = tuple(np.asarray(self.maps[s], dtype=np.int64)[g] for s, g in zip(op.args, grids))
            if not np.array_equal(res_map[src], dst[mapped]):
                return False
        return True

    def then(self, other: "Homomorphism") -> "Homomorphism":
        """``other ∘ self``."""
        return Homomorphism(self.source, other.target,
                            {s: tuple(other.maps[s][i] for i in m) for s, m in self.maps.items()})

    def inverse(self) -> "Homomorphism":
        inv = {}
        for s, m in self.maps.items():
            out = [0] * len(m)
            for i, j in enumerate(m):
                out[j] = i
            inv[s] = tuple(out)
        return Homomorphism(self.target, self.source, inv)

    def kernel(self) -> "CongruencePartition":
        return CongruencePartition(self.source, {s: _canonical_labels(m) for s, m in self.maps.items()})

    def image(self) -> dict[str, set[int]]:
        return {s: set(m) for s, m in self.maps.items()}

    def describe(self) -> dict[str, dict[str, str]]:
        return {s: {self.source.name_of(s, i): self.target.name_of(s, j) for i, j in enumerate(m)}
                for s, m in self.maps.items()}

    def __repr__(self) -> str:
        return f"Homomorphism({self.describe()})"


def identity_hom(H: FiniteAlgebra) -> Homomorphism:
    return Homomorphism(H, H, {s: tuple(range(n)) for s, n in H.sizes.items()})


def _canonical_labels(values: Sequence) -> tuple[int, ...]:
    first: dict = {}
    out = []
    for i, v in enumerate(values):
        out.append(first.setdefault(v, i))
    return tuple(out)


class CongruencePartition:
    """A per-sort partition; ``labels[s][i]`` is the least element of i's block."""

    def __init__(self, algebra: FiniteAlgebra, labels: Mapping[str, Sequence]):
        self.algebra = algebra
        self.labels = {s: _canonical_labels(labels[s]) for s in algebra.signature.sorts}

    @classmethod
    def equality(cls, H: FiniteAlgebra) -> "CongruencePartition":
        return cls(H, {s: range(n) for s, n in H.sizes.items()})

    @classmethod
    def full(cls, H: FiniteAlgebra) -> "CongruencePartition":
        return cls(H, {s: [0] * n for s, n in H.sizes.items()})

    @classmethod
    def from_blocks(cls, H: FiniteAlgebra, blocks: Mapping[str, Iterable[Iterable[int]]]):
        labels = {}
        for s, n in H.sizes.items():
            lab = list(range(n))
            for b in blocks.get(s, ()):
                b = sorted(b)
                for x in b:
                    lab[x] = b[0]
            labels[s] = lab
        return cls(H, labels)

    def same(self, sort: str, a: int, b: int) -> bool:
        return self.labels[sort][a] == self.labels[sort][b]

    def blocks(self, sort: str) -> list[tuple[int, ...]]:
        out: dict[int, list[int]] = {}
        for i, l in enumerate(self.labels[sort]):
            out.setdefault(l, []).append(i)
        return [tuple(v) for _, v in sorted(out.items())]

    def is_congruence(self) -> bool:
        H = self.algebra
        for op in H.signature.ops:
            if not op.args:
                continue
            table = H.tables[op.name]
            lab_res = np.asarray(self.labels[op.result])
            res = lab_res[table]
            for pos, s in enumerate(op.args):
                lab = np.asarray(self.labels[s])
                # moving one argument inside its block must not change the result block
                rep = lab[np.arange(len(lab))]
                idx = [slice(None)] * len(op.args)
                idx[pos] = rep
                moved = lab_res[table[tuple(idx)]]
                if not np.array_equal(moved, res):
                    return False
        return True

    def key(self) -> tuple:
        return tuple(self.labels[s] for s in self.algebra.signature.sorts)

    def __eq__(self, other) -> bool:
        return isinstance(other, CongruencePartition) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def __le__(self, other: "CongruencePartition") -> bool:
        """Refinement order (self ⊆ other as relations)."""
        for s in self.algebra.signature.sorts:
            for i, l in enumerate(self.labels[s]):
                if other.labels[s][i] != other.labels[s][l]:
                    return False
        return True

    def describe(self) -> dict[str, list[list[str]]]:
        return {s: [[self.algebra.name_of(s, i) for i in b] for b in self.blocks(s)]
                for s in self.algebra.signature.sorts}

    def __repr__(self) -> str:
        return f"CongruencePartition({self.describe()})"


@dataclass
class AutGroup:
    algebra: FiniteAlgebra
    elements: tuple[Homomorphism, ...]

    def __post_init__(self):
        self._lookup = {g.key(): g for g in self.elements}

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Homomorphism]:
        return iter(self.elements)

    def __contains__(self, g: Homomorphism) -> bool:
        return g.key() in self._lookup

    @property
    def identity(self) -> Homomorphism:
        return identity_hom(self.algebra)

    def compose(self, g: Homomorphism, h: Homomorphism) -> Homomorphism:
        """``g ∘ h`` as a group element."""
        return self._lookup[h.then(g).key()]

    def inverse(self, g: Homomorphism) -> Homomorphism:
        return self._lookup[g.inverse().key()]

    def is_group(self) -> bool:
        if self.identity.key() not in self._lookup:
            return False
        for g in self.elements:
            if g.inverse().key() not in self._lookup:
                return False
            for h in self.elements:
                if h.then(g).key() not in self._lookup:
                    return False
        return True


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


def validate_algebra(H: FiniteAlgebra) -> list[Violation]:
    report: list[Violation] = []
    for s, c in H.carriers.items():
        if len(set(c)) != len(c):
            report.append(Violation("carrier", f"sort {s} has duplicate element names"))
    for op in H.signature.ops:
        table = H.tables[op.name]
        bad = np.argwhere(table < 0) if table.ndim else ([()] if table[()] < 0 else [])
        for pos in bad:
            args = ", ".join(H.name_of(s, int(i)) for s, i in zip(op.args, pos))
            report.append(Violation("totality", f"table not total: {op.name}({args}) is undefined"))
        n_res = H.size(op.result)
        over = np.argwhere(table >= n_res) if table.ndim else ([()] if table[()] >= n_res else [])
        for pos in over:
            args = ", ".join(H.name_of(s, int(i)) for s, i in zip(op.args, pos))
            report.append(Violation("range", f"{op.name}({args}) lands outside carrier {op.result}"))
    if report:
        return report
    for ident in H.signature.identities:
        failure = _identity_failure(H, ident)
        if failure is not None:
            where = ", ".join(f"{n}={v}" for n, v in failure.items())
            report.append(Violation("identity", f"identity {ident} fails at {{{where}}}"))
    return report


def _identity_failure(H: FiniteAlgebra, ident: Identity) -> dict[str, str] | None:
    ctx = ident.context
    sizes = [H.size(s) for _, s in ctx.variables]
    n = int(np.prod(sizes, dtype=np.int64)) if sizes else 1
    if n == 0:
        return None
    grids = np.indices(sizes).reshape(len(sizes), -1) if sizes else np.zeros((0, 1), dtype=np.int64)
    columns = {name: grids[i] for i, name in enumerate(ctx.names)}
    lhs = eval_term_columns(ident.lhs, columns, H, n)
    rhs = eval_term_columns(ident.rhs, columns, H, n)
    bad = np.nonzero(lhs != rhs)[0]
    if bad.size == 0:
        return None
    k = int(bad[0])
    return {name: H.name_of(s, int(columns[name][k])) for name, s in ctx.variables}


# ---------------------------------------------------------------------------
# Subalgebras and generation


def closure_of(H: FiniteAlgebra, seed: Mapping[str, Iterable[int]]) -> dict[str, set[int]]:
    """Least op-closed per-sort superset of ``seed`` (constants always included)."""
    cur = {s: set(seed.get(s, ())) for s in H.signature.sorts}
    changed = True
    while changed:
        changed = False
        for op in H.signature.ops:
            table = H.tables[op.name]
            pools = [sorted(cur[s]) for s in op.args]
            for args in itertools.product(*pools):
                r = int(table[args])
                if r not in cur[op.result]:
                    cur[op.result].add(r)
                    changed = True
    return cur


def _derivation_stages(H: FiniteAlgebra, generators: Sequence[tuple[str, int]]):
    """Straight-line program for H from the given generators.

    Returns a list of stages; stage k lists derivations ``(sort, elem, op,
    args)`` of the elements that become reachable once generator k is
    added (stage 0 is the constants-closure).  Each stage also carries the
    table entries whose arguments first become available in it.
    """
    known = {s: set() for s in H.signature.sorts}
    order: list[tuple[str, int]] = []
    stages = []
    for k in range(len(generators) + 1):
        derivs = []
        if k > 0:
            s, g = generators[k - 1]
            if g in known[s]:
                raise ValueError("generator already reachable")
            known[s].add(g)
            order.append((s, g))
        changed = True
        while changed:
            changed = False
            for op in H.signature.ops:
                table = H.tables[op.name]
                pools = [sorted(known[s]) for s in op.args]
                for args in itertools.product(*pools):
                    r = int(table[args])
                    if r not in known[op.result]:
                        known[op.result].add(r)
                        derivs.append((op.result, r, op.name, args))
                        changed = True
        stages.append({"derivs": derivs, "known": {s: frozenset(v) for s, v in known.items()}})
    # table entries to check, grouped by the first stage where all arguments are known
    for k, st in enumerate(stages):
        prev = stages[k - 1]["known"] if k else {s: frozenset() for s in H.signature.sorts}
        checks = {}
        for op in H.signature.ops:
            now_pools = [sorted(st["known"][s]) for s in op.args]
            entries = [args for args in itertools.product(*now_pools)
                       if not op.args and k == 0
                       or op.args and any(a not in prev[s] for a, s in zip(args, op.args))]
            if entries:
                arr = np.array(entries, dtype=np.int64).reshape(len(entries), len(op.args))
                checks[op.name] = arr
        st["checks"] = checks
    return stages


def generating_sequence(H: FiniteAlgebra) -> list[tuple[str, int]]:
    """A greedy irredundant generating sequence in declaration order."""
    gens: list[tuple[str, int]] = []
    cur = closure_of(H, {})
    for s in H.signature.sorts:
        for e in range(H.size(s)):
            if e not in cur[s]:
                gens.append((s, e))
                seed = {t: set(v) for t, v in cur.items()}
                seed[s].add(e)
                cur = closure_of(H, seed)
    return gens


def _same_signature(H1: FiniteAlgebra, H2: FiniteAlgebra) -> None:
    if not H1.signature.same_algebraic_part(H2.signature):
        raise ValueError(f"signature mismatch between {H1.name} and {H2.name}")


def iter_homs(H1: FiniteAlgebra, H2: FiniteAlgebra, injective: bool = False,
              budget: Budget | None = None,
              fixed: Mapping[tuple[str, int], int] | None = None) -> Iterator[Homomorphism]:
    """Backtracking over images of a generating sequence of H1.

    Yields homomorphisms in lexicographic order of generator images; every
    table entry of H1 is checked as soon as its arguments are mapped.
    ``fixed`` pins images of chosen generators.
    """
    _same_signature(H1, H2)
    budget = resolve(budget)
    sorts = H1.signature.sorts
    if injective and any(H1.size(s) > H2.size(s) for s in sorts):
        return
    gens = generating_sequence(H1)
    stages = _derivation_stages(H1, gens)
    maps = {s: np.full(H1.size(s), -1, dtype=np.int64) for s in sorts}
    used = {s: np.zeros(H2.size(s), dtype=bool) for s in sorts}
    fixed = dict(fixed or {})

    def run_stage(k: int) -> list[tuple[str, int]] | None:
        assigned = []
        ok = True
        for s, e, op, args in stages[k]["derivs"]:
            img = int(H2.tables[op][tuple(int(maps[t][a]) for t, a in zip(H1.signature.op(op).args, args))])
            if img < 0:
                ok = False
                break
            if injective and used[s][img]:
                ok = False
                break
            maps[s][e] = img
            assigned.append((s, e))
            if injective:
                used[s][img] = True
        if ok:
            for op_name, entries in stages[k]["checks"].items():
                op = H1.signature.op(op_name)
                if not op.args:
                    if maps[op.result][H1.tables[op_name][()]] != H2.tables[op_name][()]:
                        ok = False
                        break
                    continue
                src = H1.tables[op_name][tuple(entries.T)]
                lhs = maps[op.result][src]
                mapped = tuple(maps[s][entries[:, i]] for i, s in enumerate(op.args))
                if not np.array_equal(lhs, H2.tables[op_name][mapped]):
                    ok = False
                    break
        if not ok:
            undo(assigned)
            return None
        return assigned

    def undo(assigned):
        for s, e in assigned:
            if injective:
                used[s][maps[s][e]] = False
            maps[s][e] = -1

    def rec(k: int) -> Iterator[Homomorphism]:
        if k == len(gens):
            yield Homomorphism(H1, H2, {s: tuple(int(x) for x in maps[s]) for s in sorts})
            return
        s, g = gens[k]
        choices = [fixed[(s, g)]] if (s, g) in fixed else range(H2.size(s))
        for img in choices:
            if injective and used[s][img]:
                continue
            budget.charge("homs")
            maps[s][g] = img
            if injective:
                used[s][img] = True
            assigned = run_stage(k + 1)
            if assigned is not None:
                yield from rec(k + 1)
                undo(assigned)
            if injective:
                used[s][img] = False
            maps[s][g] = -1

    base = run_stage(0)
    if base is None:
        return
    yield from rec(0)
    undo(base)


def enumerate_homs(H1: FiniteAlgebra, H2: FiniteAlgebra, budget: Budget | None = None) -> list[Homomorphism]:
    """All homomorphisms H1 -> H2, sorted lexicographically on carrier maps."""
    return sorted(iter_homs(H1, H2, budget=budget), key=Homomorphism.key)


def automorphism_group(H: FiniteAlgebra, budget: Budget | None = None) -> AutGroup:
    auts = [h for h in iter_homs(H, H, injective=True, budget=budget) if h.is_surjective()]
    return AutGroup(H, tuple(sorted(auts, key=Homomorphism.key)))


def find_isomorphism(H1: FiniteAlgebra, H2: FiniteAlgebra, budget: Budget | None = None) -> Homomorphism | None:
    _same_signature(H1, H2)
    if H1.sizes != H2.sizes:
        return None
    for h in iter_homs(H1, H2, injective=True, budget=budget):
        return h
    return None


def iter_isomorphisms(H1: FiniteAlgebra, H2: FiniteAlgebra, budget: Budget | None = None) -> Iterator[Homomorphism]:
    _same_signature(H1, H2)
    if H1.sizes != H2.sizes:
        return iter(())
    return iter_homs(H1, H2, injective=True, budget=budget)


def subalgebra_generated(H: FiniteAlgebra, seed: Mapping[str, Iterable[int]]) -> tuple[FiniteAlgebra, Homomorphism]:
    """The subalgebra generated by ``seed`` (indices) and its inclusion into H."""
    for s, els in seed.items():
        for e in els:
            if not 0 <= e < H.size(s):
                raise ValueError(f"seed element {e} not in carrier {s}")
    cur = closure_of(H, seed)
    keep = {s: sorted(cur[s]) for s in H.signature.sorts}
    pos = {s: {e: i for i, e in enumerate(keep[s])} for s in keep}
    tables = {}
    for op in H.signature.ops:
        src = H.tables[op.name]
        if not op.args:
            tables[op.name] = np.array(pos[op.result][int(src[()])])
            continue
        sub = src[np.ix_(*[np.array(keep[s], dtype=np.int64) for s in op.args])] if all(keep[s] for s in op.args) \
            else np.zeros(tuple(len(keep[s]) for s in op.args), dtype=np.int64)
        remap = np.zeros(H.size(op.result), dtype=np.int64)
        for e, i in pos[op.result].items():
            remap[e] = i
        tables[op.name] = remap[sub] if sub.size else sub
    carriers = {s: [H.name_of(s, e) for e in keep[s]] for s in keep}
    S = FiniteAlgebra(H.signature, carriers, tables, name=f"sub({H.name})")
    return S, Homomorphism(S, H, {s: tuple(keep[s]) for s in keep})


def image_subalgebra(mu: Homomorphism) -> tuple[FiniteAlgebra, Homomorphism]:
    return subalgebra_generated(mu.target, mu.image())


# ---------------------------------------------------------------------------
# Congruences, quotients, products


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def congruence_generated(H: FiniteAlgebra, pairs: Iterable[tuple[str, int, int]]) -> CongruencePartition:
    """Least congruence containing the given ``(sort, a, b)`` pairs."""
    uf = {s: _UnionFind(H.size(s)) for s in H.signature.sorts}
    for s, a, b in pairs:
        uf[s].union(a, b)
    changed = True
    while changed:
        changed = False
        for op in H.signature.ops:
            if not op.args:
                continue
            table = H.tables[op.name]
            for pos, s in enumerate(op.args):
                others = [range(H.size(t)) for j, t in enumerate(op.args) if j != pos]
                classes: dict[int, list[int]] = {}
                for e in range(H.size(s)):
                    classes.setdefault(uf[s].find(e), []).append(e)
                multi = [c for c in classes.values() if len(c) > 1]
                if not multi:
                    continue
                for rest in itertools.product(*others):
                    for cls in multi:
                        first = None
                        for e in cls:
                            args = list(rest)
                            args.insert(pos, e)
                            r = int(table[tuple(args)])
                            if first is None:
                                first = r
                            elif uf[op.result].union(first, r):
                                changed = True
    return CongruencePartition(H, {s: [uf[s].find(i) for i in range(H.size(s))] for s in H.signature.sorts})


def join_congruences(a: CongruencePartition, b: CongruencePartition) -> CongruencePartition:
    H = a.algebra
    pairs = [(s, i, l) for c in (a, b) for s in H.signature.sorts for i, l in enumerate(c.labels[s]) if i != l]
    return congruence_generated(H, pairs)


def quotient_algebra(H: FiniteAlgebra, T: CongruencePartition) -> tuple[FiniteAlgebra, Homomorphism]:
    if T.algebra is not H:
        raise ValueError("partition belongs to a different algebra")
    if not T.is_congruence():
        raise ValueError("partition is not a congruence")
    blocks = {s: T.blocks(s) for s in H.signature.sorts}
    block_of = {}
    for s, bl in blocks.items():
        arr = np.zeros(H.size(s), dtype=np.int64)
        for i, b in enumerate(bl):
            arr[list(b)] = i
        block_of[s] = arr
    tables = {}
    for op in H.signature.ops:
        src = H.tables[op.name]
        if not op.args:
            tables[op.name] = np.array(block_of[op.result][src[()]])
            continue
        reps = [np.array([b[0] for b in blocks[s]], dtype=np.int64) for s in op.args]
        tables[op.name] = block_of[op.result][src[np.ix_(*reps)]]
    carriers = {s: ["{" + ",".join(H.name_of(s, e) for e in b) + "}" for b in bl] for s, bl in blocks.items()}
    Q = FiniteAlgebra(H.signature, carriers, tables, name=f"{H.name}/~")
    proj = Homomorphism(H, Q, {s: tuple(int(x) for x in block_of[s]) for s in H.signature.sorts})
    return Q, proj


def product_algebra(factors: Sequence[FiniteAlgebra], signature: Signature | None = None,
                    name: str | None = None) -> tuple[FiniteAlgebra, list[Homomorphism]]:
    """Direct product with its projections; element names are ``(a,b,...)``."""
    if not factors:
        if signature is None or not signature.constants():
            raise ValueError("empty product needs a signature with nullary operations")
        carriers = {s: ["()"] for s in signature.sorts}
        tables = {op.name: np.zeros(tuple(1 for _ in op.args), dtype=np.int64) for op in signature.ops}
        return FiniteAlgebra(signature, carriers, tables, name or "1"), []
    sig = factors[0].signature
    for F in factors[1:]:
        _same_signature(factors[0], F)
    k = len(factors)
    fsizes = {s: tuple(F.size(s) for F in factors) for s in sig.sorts}
    digits = {}
    carriers = {}
    for s in sig.sorts:
        n = int(np.prod(fsizes[s], dtype=np.int64))
        digits[s] = np.stack(np.unravel_index(np.arange(n), fsizes[s]), axis=1) if n else np.zeros((0, k), dtype=np.int64)
        carriers[s] = ["(" + ",".join(F.name_of(s, int(d)) for F, d in zip(factors, row)) + ")" for row in digits[s]]
    tables = {}
    for op in sig.ops:
        shape = tuple(len(carriers[s]) for s in op.args)
        grids = np.indices(shape) if op.args else []
        comps = []
        for i, F in enumerate(factors):
            ft = F.tables[op.name]
            if op.args:
                comps.append(ft[tuple(digits[s][g, i] for s, g in zip(op.args, grids))])
            else:
                comps.append(ft[()])
        if 0 in fsizes[op.result]:
            tables[op.name] = np.zeros(shape, dtype=np.int64)
        else:
            tables[op.name] = np.ravel_multi_index(tuple(comps), fsizes[op.result])
    P = FiniteAlgebra(sig, carriers, tables, name or "x".join(F.name for F in factors))
    projections = [Homomorphism(P, F, {s: tuple(int(x) for x in digits[s][:, i]) for s in sig.sorts})
                   for i, F in enumerate(factors)]
    return P, projections


def with_constants(H: FiniteAlgebra, prefix: str = "c_") -> FiniteAlgebra:
    """H viewed in the variety with its own elements as constants (one nullary op each)."""
    new_ops = list(H.signature.ops)
    tables = dict(H.tables)
    for s in H.signature.sorts:
        for i, e in enumerate(H.carriers[s]):
            name = f"{prefix}{e}" if len(H.signature.sorts) == 1 else f"{prefix}{s}_{e}"
            new_ops.append(OpSymbol(name, (), s))
            tables[name] = np.array(i)
    sig = H.signature.replace(ops=tuple(new_ops), identities=(), name=f"{H.signature.name}^H")
    return FiniteAlgebra(sig, H.carriers, tables, name=f"{H.name}^c")


def all_set_maps(H1: FiniteAlgebra, H2: FiniteAlgebra) -> Iterator[dict[str, tuple[int, ...]]]:
    """Every sort-respecting map of carriers (brute-force oracle support)."""
    sorts = H1.signature.sorts
    per_sort = [list(itertools.product(range(H2.size(s)), repeat=H1.size(s))) for s in sorts]
    for combo in itertools.product(*per_sort):
        yield dict(zip(sorts, combo))
