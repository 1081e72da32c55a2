"""Multisorted terms over finite variable contexts.

Terms are plain immutable trees.  Nothing is ever rewritten modulo
identities: two terms "coincide" only when they are structurally equal,
and every semantic question is answered by evaluating in a finite algebra.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Union

import numpy as np

from .budget import Budget, resolve


@dataclass(frozen=True)
class Var:
    name: str
    sort: str

    depth = 0

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class App:
    op: str
    args: tuple["Term", ...]
    sort: str

    def __post_init__(self):
        # constants have depth 1, every other node 1 + deepest child
        object.__setattr__(
            self, "depth", 1 + max((a.depth for a in self.args), default=0)
        )

    def __str__(self) -> str:
        if not self.args:
            return self.op
        return f"{self.op}({', '.join(str(a) for a in self.args)})"


Term = Union[Var, App]


def variables(t: Term) -> set[str]:
    if isinstance(t, Var):
        return {t.name}
    out: set[str] = set()
    for a in t.args:
        out |= variables(a)
    return out


def size(t: Term) -> int:
    if isinstance(t, Var):
        return 1
    return 1 + sum(size(a) for a in t.args)


@dataclass(frozen=True)
class Equation:
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.lhs.sort != self.rhs.sort:
            raise TypeError(
                f"equation sides have different sorts: {self.lhs.sort} vs {self.rhs.sort}"
            )

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class VarContext:
    """A finite, ordered set of sorted variables (the basis of W(X))."""

    variables: tuple[tuple[str, str], ...]
    name: str = "X"

    def __post_init__(self):
        names = [n for n, _ in self.variables]
        if len(set(names)) != len(names):
            raise ValueError(f"context {self.name}: duplicate variable names")

    @classmethod
    def of(cls, *pairs: tuple[str, str], name: str = "X") -> "VarContext":
        return cls(tuple(pairs), name)

    def __len__(self) -> int:
        return len(self.variables)

    def __iter__(self) -> Iterator[Var]:
        return (Var(n, s) for n, s in self.variables)

    def __contains__(self, name: object) -> bool:
        return any(n == name for n, _ in self.variables)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.variables)

    def var(self, name: str) -> Var:
        for n, s in self.variables:
            if n == name:
                return Var(n, s)
        raise KeyError(f"variable {name!r} not in context {self.name}")

    def index(self, name: str) -> int:
        return self.names.index(name)

    def sort_of(self, name: str) -> str:
        return self.var(name).sort

    def check_sorts(self, sorts: Iterable[str]) -> None:
        declared = set(sorts)
        for n, s in self.variables:
            if s not in declared:
                raise ValueError(f"context {self.name}: variable {n} has unknown sort {s}")


def eval_term(t: Term, point: Mapping[str, int], algebra) -> int:
    """Value of ``t`` in ``algebra`` under the assignment ``point``."""
    if isinstance(t, Var):
        return point[t.name]
    args = tuple(eval_term(a, point, algebra) for a in t.args)
    return algebra.apply(t.op, *args)


def eval_term_columns(t: Term, columns: Mapping[str, np.ndarray], algebra, n: int,
                      cache: dict | None = None) -> np.ndarray:
    """Vectorised evaluation: ``columns[x]`` holds x's value at every point."""
    if cache is not None and t in cache:
        return cache[t]
    if isinstance(t, Var):
        out = columns[t.name]
    elif not t.args:
        out = np.full(n, algebra.tables[t.op][()], dtype=np.int64)
    else:
        vals = tuple(eval_term_columns(a, columns, algebra, n, cache) for a in t.args)
        out = algebra.tables[t.op][vals]
    if cache is not None:
        cache[t] = out
    return out


@dataclass(frozen=True)
class Substitution:
    """A morphism s: W(source) -> W(target) given by images of source variables."""

    source: VarContext
    target: VarContext
    images: tuple[tuple[str, Term], ...]

    def __post_init__(self):
        got = dict(self.images)
        for v in self.source:
            if v.name not in got:
                raise ValueError(f"substitution leaves {v.name} unassigned")
            img = got[v.name]
            if img.sort != v.sort:
                raise TypeError(f"substitution maps {v.name}:{v.sort} to a term of sort {img.sort}")
            stray = variables(img) - set(self.target.names)
            if stray:
                raise ValueError(f"image of {v.name} uses variables outside target: {sorted(stray)}")

    @classmethod
    def build(cls, source: VarContext, target: VarContext, images: Mapping[str, Term]):
        return cls(source, target, tuple((v.name, images[v.name]) for v in source))

    @classmethod
    def identity(cls, ctx: VarContext) -> "Substitution":
        return cls(ctx, ctx, tuple((v.name, v) for v in ctx))

    def __getitem__(self, name: str) -> Term:
        return dict(self.images)[name]

    def then(self, other: "Substitution") -> "Substitution":
        """The composite ``other ∘ self`` : W(self.source) -> W(other.target)."""
        if other.source != self.target:
            raise ValueError("substitutions do not compose: context mismatch")
        return Substitution(
            self.source,
            other.target,
            tuple((n, apply_substitution(other, t)) for n, t in self.images),
        )

    def pullback(self, point: Mapping[str, int], algebra) -> dict[str, int]:
        """The point nu∘s on the source context, for a point nu on the target."""
        return {n: eval_term(t, point, algebra) for n, t in self.images}


def apply_substitution(s: Substitution, t: Term) -> Term:
    if isinstance(t, Var):
        return dict(s.images)[t.name]
    return App(t.op, tuple(apply_substitution(s, a) for a in t.args), t.sort)


def enumerate_terms(signature, ctx: VarContext, sort: str, depth: int,
                    budget: Budget | None = None) -> list[Term]:
    """All terms of ``sort`` over ``ctx`` with node depth at most ``depth``.

    Variables have depth 0 and constants depth 1.  The order is by depth,
    then by op declaration order, then lexicographically on the children's
    own positions.
    """
    if depth < 0:
        raise ValueError("depth bound must be non-negative")
    budget = resolve(budget)
    by_sort: dict[str, list[Term]] = {s: [] for s in signature.sorts}
    for v in ctx:
        by_sort[v.sort].append(v)
    budget.charge("terms", sum(len(v) for v in by_sort.values()))
    for d in range(1, depth + 1):
        fresh: dict[str, list[Term]] = {s: [] for s in signature.sorts}
        for op in signature.ops:
            if not op.args:
                if d == 1:
                    fresh[op.result].append(App(op.name, (), op.result))
                continue
            pools = [by_sort[s] for s in op.args]
            for args in itertools.product(*pools):
                if max(a.depth for a in args) == d - 1:
                    fresh[op.result].append(App(op.name, tuple(args), op.result))
            budget.charge("terms", len(fresh[op.result]))
        for s in signature.sorts:
            by_sort[s] = by_sort[s] + fresh[s]
    return list(by_sort[sort])


def format_term(t: Term) -> str:
    return str(t)


def term_app(signature, op: str, *args: Term) -> App:
    """Build a type-checked application node."""
    sym = signature.op(op)
    if len(args) != len(sym.args):
        raise TypeError(f"{op} expects {len(sym.args)} arguments, got {len(args)}")
    for i, (a, s) in enumerate(zip(args, sym.args)):
        if a.sort != s:
            raise TypeError(f"{op} argument {i + 1} must have sort {s}, got {a.sort}")
    return App(op, tuple(args), sym.result)

