"""Parsed workspaces: named declarations of every kind."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..eqgeo import EquationSystem
from ..folgeo import Formula, Model, format_formula
from ..kbase import Multimodel
from ..sigcore import FiniteAlgebra, Signature
from ..space import PointSet, PointSpace
from ..terms import VarContext

KINDS = ("signature", "algebra", "model", "multimodel", "context", "system", "formula", "pointset")


@dataclass
class SystemDecl:
    system: EquationSystem
    signature: str


@dataclass
class FormulaDecl:
    formula: Formula
    context: str
    signature: str


@dataclass
class PointSetDecl:
    context: str
    algebra: str
    points: tuple[int, ...]          # sorted point indices

    def pointset(self, ws: "Workspace") -> PointSet:
        space = PointSpace(ws.contexts[self.context], ws.algebras[self.algebra])
        return PointSet.from_indices(space, self.points)


@dataclass
class Workspace:
    signatures: dict[str, Signature] = field(default_factory=dict)
    algebras: dict[str, FiniteAlgebra] = field(default_factory=dict)
    models: dict[str, Model] = field(default_factory=dict)
    multimodels: dict[str, Multimodel] = field(default_factory=dict)
    contexts: dict[str, VarContext] = field(default_factory=dict)
    systems: dict[str, SystemDecl] = field(default_factory=dict)
    formulas: dict[str, FormulaDecl] = field(default_factory=dict)
    pointsets: dict[str, PointSetDecl] = field(default_factory=dict)
    order: list[tuple[str, str]] = field(default_factory=list)

    def table(self, kind: str) -> dict:
        return {
            "signature": self.signatures, "algebra": self.algebras, "model": self.models,
            "multimodel": self.multimodels, "context": self.contexts, "system": self.systems,
            "formula": self.formulas, "pointset": self.pointsets,
        }[kind]

    def counts(self) -> dict[str, int]:
        return {k: len(self.table(k)) for k in KINDS}

    def structure(self) -> list:
        """A plain-data rendering used to compare workspaces structurally."""
        out = []
        for kind, name in self.order:
            item = self.table(kind)[name]
            if kind == "signature":
                data = [list(item.sorts), [str(o) for o in item.ops], [str(r) for r in item.rels],
                        [str(i) for i in item.identities]]
            elif kind == "algebra":
                data = [item.signature.name, {s: list(c) for s, c in item.carriers.items()},
                        {k: v.tolist() for k, v in item.tables.items()}]
            elif kind == "model":
                data = [item.algebra.name, item.describe()]
            elif kind == "multimodel":
                data = [item.algebra.name, list(item.names), [m.describe() for m in item.instances]]
            elif kind == "context":
                data = [list(item.variables)]
            elif kind == "system":
                data = [item.system.context.name, item.signature, [str(e) for e in item.system.equations]]
            elif kind == "formula":
                data = [item.context, item.signature, repr(item.formula), format_formula(item.formula)]
            else:
                data = [item.context, item.algebra, list(item.points)]
            out.append([kind, name, data])
        return out
