"""Point spaces Hom(W(X), H) and point sets as bitmasks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .budget import Budget, resolve
from .sigcore import FiniteAlgebra
from .terms import VarContext


class PointSpace:
    """All sort-respecting assignments X -> H in lexicographic order.

    The first variable of the context is the most significant digit, so
    point indices follow the declaration order of variables and elements.
    """

    def __init__(self, context: VarContext, algebra: FiniteAlgebra, budget: Budget | None = None):
        context.check_sorts(algebra.signature.sorts)
        self.context = context
        self.algebra = algebra
        self.radix = tuple(algebra.size(s) for _, s in context.variables)
        n = 1
        for r in self.radix:
            n *= r
        resolve(budget).check("points", n)
        self.n = n
        if self.radix:
            grid = np.indices(self.radix).reshape(len(self.radix), -1)
        else:
            grid = np.zeros((0, n), dtype=np.int64)
        self.columns: dict[str, np.ndarray] = {}
        for i, name in enumerate(context.names):
            col = np.ascontiguousarray(grid[i], dtype=np.int64)
            col.setflags(write=False)
            self.columns[name] = col

    def __len__(self) -> int:
        return self.n

    def point(self, idx: int) -> tuple[int, ...]:
        return tuple(int(self.columns[x][idx]) for x in self.context.names)

    def assignment(self, idx: int) -> dict[str, int]:
        return {x: int(self.columns[x][idx]) for x in self.context.names}

    def index(self, point: Sequence[int] | Mapping[str, int]) -> int:
        if isinstance(point, Mapping):
            point = [point[x] for x in self.context.names]
        idx = 0
        for r, v in zip(self.radix, point):
            if not 0 <= v < r:
                raise ValueError(f"point coordinate {v} out of range")
            idx = idx * r + int(v)
        return idx

    def index_of_names(self, named: Mapping[str, str]) -> int:
        ctx = self.context
        missing = set(ctx.names) - set(named)
        if missing:
            raise ValueError(f"point leaves {sorted(missing)} unassigned")
        extra = set(named) - set(ctx.names)
        if extra:
            raise ValueError(f"point assigns unknown variables {sorted(extra)}")
        return self.index([self.algebra.element(s, named[x]) for x, s in ctx.variables])

    def format_point(self, idx: int) -> str:
        H = self.algebra
        parts = [f"{x}={H.name_of(s, int(self.columns[x][idx]))}" for x, s in self.context.variables]
        return "{" + ", ".join(parts) + "}"

    def full(self) -> "PointSet":
        return PointSet(self, (1 << self.n) - 1)

    def empty(self) -> "PointSet":
        return PointSet(self, 0)

    def same_as(self, other: "PointSpace") -> bool:
        return self is other or (self.context == other.context and self.algebra is other.algebra)

    def __repr__(self) -> str:
        return f"PointSpace({self.context.name} in {self.algebra.name}; {self.n} points)"


def all_points(context: VarContext, algebra: FiniteAlgebra, budget: Budget | None = None) -> PointSpace:
    return PointSpace(context, algebra, budget)


@dataclass(frozen=True)
class PointSet:
    """A subset of a point space, stored as a bitmask over point indices."""

    space: PointSpace = field(compare=False, hash=False)
    mask: int
    closed: bool = field(default=False, compare=False, hash=False)
    provenance: object = field(default=None, compare=False, hash=False)

    @classmethod
    def from_indices(cls, space: PointSpace, indices: Iterable[int], **kw) -> "PointSet":
        m = 0
        for i in indices:
            if not 0 <= i < space.n:
                raise ValueError(f"point index {i} outside space of size {space.n}")
            m |= 1 << int(i)
        return cls(space, m, **kw)

    @classmethod
    def from_bool(cls, space: PointSpace, flags: np.ndarray, **kw) -> "PointSet":
        return cls(space, mask_from_bool(flags), **kw)

    def indices(self) -> list[int]:
        return mask_indices(self.mask)

    def to_bool(self) -> np.ndarray:
        return mask_to_bool(self.mask, self.space.n)

    def __contains__(self, idx: int) -> bool:
        return bool(self.mask >> idx & 1)

    def __len__(self) -> int:
        return bin(self.mask).count("1")

    def __iter__(self) -> Iterator[int]:
        return iter(self.indices())

    def __or__(self, other: "PointSet") -> "PointSet":
        return PointSet(self.space, self.mask | other.mask)

    def __and__(self, other: "PointSet") -> "PointSet":
        return PointSet(self.space, self.mask & other.mask)

    def __sub__(self, other: "PointSet") -> "PointSet":
        return PointSet(self.space, self.mask & ~other.mask)

    def complement(self) -> "PointSet":
        return PointSet(self.space, ((1 << self.space.n) - 1) & ~self.mask)

    def issubset(self, other: "PointSet") -> bool:
        return self.mask & ~other.mask == 0

    def key(self) -> tuple[int, ...]:
        return tuple(self.indices())

    def format(self) -> str:
        return "{" + ", ".join(self.space.format_point(i) for i in self.indices()) + "}"

    def __repr__(self) -> str:
        return f"PointSet({self.indices()})"


def mask_indices(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        low = mask & -mask
        i = low.bit_length() - 1
        out.append(i)
        mask ^= low
    return out


def mask_to_bool(mask: int, n: int) -> np.ndarray:
    raw = np.frombuffer(mask.to_bytes((n + 7) // 8 or 1, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def mask_from_bool(flags: np.ndarray) -> int:
    flags = np.asarray(flags, dtype=bool)
    if flags.size == 0:
        return 0
    return int.from_bytes(np.packbits(flags, bitorder="little").tobytes(), "little")


def sort_key(ps: PointSet) -> tuple[int, ...]:
    return ps.key()
