"""Subalgebras of powers H^L generated by given rows.

Used in two roles: with L = the points of a set A it is the coordinate
algebra of A (variable rows are the coordinate functions); with L = the
whole point space it is the algebra of term functions, whose elements
carry witness terms.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .budget import Budget, BudgetExceeded, resolve
from .sigcore import FiniteAlgebra
from .terms import App, Term, Var, VarContext


@dataclass
class RowAlgebra:
    algebra: FiniteAlgebra
    context: VarContext
    length: int
    rows: dict[str, np.ndarray]                 # sort -> (m_s, length)
    derivations: dict[str, list[tuple]]         # ("var", name) or (op, arg indices)
    tables: dict[str, np.ndarray]               # op table of the row algebra
    var_index: dict[str, int]
    order: list[tuple[str, int]]                # creation order across sorts
    _terms: dict = field(default_factory=dict, repr=False)

    def size(self, sort: str) -> int:
        return self.rows[sort].shape[0]

    def total(self) -> int:
        return sum(self.size(s) for s in self.rows)

    def term(self, sort: str, idx: int) -> Term:
        """A witness term whose function is the given row."""
        key = (sort, idx)
        if key in self._terms:
            return self._terms[key]
        d = self.derivations[sort][idx]
        if d[0] == "var":
            t: Term = Var(d[1], sort)
        else:
            op = self.algebra.signature.op(d[0])
            t = App(op.name, tuple(self.term(s, a) for s, a in zip(op.args, d[1])), sort)
        self._terms[key] = t
        return t

    def to_algebra(self, name: str = "R") -> FiniteAlgebra:
        H = self.algebra
        carriers = {s: ["(" + ",".join(H.name_of(s, int(v)) for v in r) + ")" for r in self.rows[s]]
                    for s in H.signature.sorts}
        return FiniteAlgebra(H.signature, carriers, self.tables, name)

    def values_at(self, columns: Mapping[str, np.ndarray], n: int) -> tuple[dict[str, np.ndarray], np.ndarray]:
        """Propagate per-point variable values along the derivations.

        Returns the would-be image of every row element at every one of
        ``n`` points together with a flag telling whether variables sharing
        a row received equal values.
        """
        H = self.algebra
        ok = np.ones(n, dtype=bool)
        val = {s: np.full((self.size(s), n), -1, dtype=np.int64) for s in self.rows}
        seen_var = {}
        for x, s in self.context.variables:
            e = self.var_index[x]
            if (s, e) in seen_var:
                ok &= val[s][e] == columns[x]
            else:
                seen_var[(s, e)] = x
                val[s][e] = columns[x]
        # derivations appear in creation order, so arguments are always ready
        for s, e in self.order:
            d = self.derivations[s][e]
            if d[0] == "var":
                continue
            op = H.signature.op(d[0])
            if not op.args:
                val[s][e] = H.tables[op.name][()]
            else:
                val[s][e] = H.tables[op.name][tuple(val[t][a] for t, a in zip(op.args, d[1]))]
        return val, ok

    def extends_to_hom(self, columns: Mapping[str, np.ndarray], n: int, chunk: int = 256) -> np.ndarray:
        """For each of ``n`` points: does x-row -> point(x) extend to a hom into H?"""
        H = self.algebra
        val, ok = self.values_at(columns, n)
        for op in H.signature.ops:
            tR = self.tables[op.name]
            if not op.args:
                ok &= val[op.result][int(tR[()])] == H.tables[op.name][()]
                continue
            if tR.size == 0:
                continue
            for lo in range(0, n, chunk):
                hi = min(n, lo + chunk)
                sl = slice(lo, hi)
                lhs = val[op.result][:, sl][tR]
                k = len(op.args)
                args = []
                for pos, s in enumerate(op.args):
                    shape = [1] * k + [hi - lo]
                    shape[pos] = self.size(s)
                    args.append(val[s][:, sl].reshape(shape))
                rhs = H.tables[op.name][tuple(args)]
                bad = (lhs != rhs).reshape(-1, hi - lo).any(axis=0)
                ok[sl] &= ~bad
        return ok


def generate_rows(H: FiniteAlgebra, context: VarContext, columns: Mapping[str, np.ndarray],
                  length: int, budget: Budget | None = None) -> RowAlgebra:
    """Subalgebra of H^length generated by the variable columns (plus constants)."""
    budget = resolve(budget)
    cap = budget.caps.get("rows")
    sorts = H.signature.sorts
    store: dict[str, list[np.ndarray]] = {s: [] for s in sorts}
    lookup: dict[str, dict[bytes, int]] = {s: {} for s in sorts}
    derivs: dict[str, list[tuple]] = {s: [] for s in sorts}
    order: list[tuple[str, int]] = []

    def add(s: str, row: np.ndarray, d: tuple) -> int:
        key = row.tobytes()
        got = lookup[s].get(key)
        if got is not None:
            return got
        idx = len(store[s])
        lookup[s][key] = idx
        store[s].append(row)
        derivs[s].append(d)
        order.append((s, idx))
        total = sum(len(v) for v in store.values())
        if cap is not None and total > cap:
            raise BudgetExceeded("rows", total, cap)
        return idx

    var_index = {}
    for x, s in context.variables:
        var_index[x] = add(s, np.ascontiguousarray(columns[x], dtype=np.int64), ("var", x))
    for op in H.signature.ops:
        if not op.args:
            add(op.result, np.full(length, H.tables[op.name][()], dtype=np.int64), (op.name, ()))
    done = {s: 0 for s in sorts}
    while True:
        size = {s: len(store[s]) for s in sorts}
        if all(size[s] == done[s] for s in sorts):
            break
        arrays = {s: np.array(store[s], dtype=np.int64).reshape(size[s], length) for s in sorts}
        for op in H.signature.ops:
            if not op.args:
                continue
            k = len(op.args)
            for p in range(k):
                ranges = []
                for j, s in enumerate(op.args):
                    if j < p:
                        ranges.append(np.arange(0, done[s]))
                    elif j == p:
                        ranges.append(np.arange(done[s], size[s]))
                    else:
                        ranges.append(np.arange(0, size[s]))
                if any(len(r) == 0 for r in ranges):
                    continue
                grids = [g.ravel() for g in np.meshgrid(*ranges, indexing="ij")]
                res = H.tables[op.name][tuple(arrays[s][g] for s, g in zip(op.args, grids))]
                if length == 0:
                    res = res.reshape(len(grids[0]), 0)
                uniq, first = np.unique(res, axis=0, return_index=True)
                for i in np.sort(first):
                    add(op.result, np.ascontiguousarray(res[i]), (op.name, tuple(int(g[i]) for g in grids)))
        done = size
    rows = {s: np.array(store[s], dtype=np.int64).reshape(len(store[s]), length) for s in sorts}
    tables = {}
    for op in H.signature.ops:
        if not op.args:
            tables[op.name] = np.array(lookup[op.result][np.full(length, H.tables[op.name][()], dtype=np.int64).tobytes()])
            continue
        shape = tuple(rows[s].shape[0] for s in op.args)
        if 0 in shape:
            tables[op.name] = np.zeros(shape, dtype=np.int64)
            continue
        grids = [g.ravel() for g in np.indices(shape)]
        res = H.tables[op.name][tuple(rows[s][g] for s, g in zip(op.args, grids))].reshape(len(grids[0]), length)
        lk = lookup[op.result]
        tables[op.name] = np.array([lk[np.ascontiguousarray(r).tobytes()] for r in res], dtype=np.int64).reshape(shape)
    ra = RowAlgebra(H, context, length, rows, derivs, tables, var_index, order)
    budget.check("rows", sum(r.shape[0] for r in rows.values()))
    return ra
