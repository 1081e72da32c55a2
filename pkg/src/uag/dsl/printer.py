"""Print a workspace back to concrete syntax."""

from __future__ import annotations

import itertools

from ..folgeo import Model, format_formula
from ..sigcore import FiniteAlgebra
from ..space import PointSpace
from .lexer import quote
from .workspace import Workspace


def _relations(m: Model) -> str:
    G = m.algebra
    parts = []
    for r in m.signature.rels:
        tuples = sorted(m.relations[r.name])
        body = ", ".join("(" + ", ".join(quote(G.name_of(s, v)) for v, s in zip(t, r.args)) + ")" for t in tuples)
        parts.append(f"{r.name} = {{{body}}};")
    return "{ " + " ".join(parts) + " }" if parts else "{ }"


def _algebra(name: str, H: FiniteAlgebra) -> str:
    sig = H.signature
    lines = [f"algebra {name} : {sig.name} {{"]
    for s in sig.sorts:
        lines.append(f"  carrier {s} = {{{', '.join(quote(e) for e in H.carriers[s])}}};")
    for op in sig.ops:
        table = H.tables[op.name]
        if not op.args:
            lines.append(f"  op {op.name} = {quote(H.name_of(op.result, int(table[()])))};")
            continue
        rows: dict[int, list[str]] = {}
        for pos in itertools.product(*(range(H.size(s)) for s in op.args)):
            args = ", ".join(quote(H.name_of(s, i)) for s, i in zip(op.args, pos))
            rows.setdefault(pos[0], []).append(f"({args})->{quote(H.name_of(op.result, int(table[pos])))};")
        if len(op.args) == 1:
            lines.append(f"  op {op.name} = {{ {' '.join(r[0] for r in rows.values())} }};")
        else:
            lines.append(f"  op {op.name} = {{")
            lines += ["    " + " ".join(r) for r in rows.values()]
            lines.append("  };")
    lines.append("}")
    return "\n".join(lines)


def print_workspace(ws: Workspace) -> str:
    out = []
    for kind, name in ws.order:
        item = ws.table(kind)[name]
        if kind == "signature":
            lines = [f"signature {name} {{", f"  sorts: {', '.join(item.sorts)};"]
            if item.ops:
                lines.append("  ops: " + ", ".join(f"{o.name}({', '.join(o.args)})->{o.result}" for o in item.ops) + ";")
            if item.rels:
                lines.append("  rels: " + ", ".join(f"{r.name}({', '.join(r.args)})" for r in item.rels) + ";")
            if item.identities:
                lines.append("  identities:")
                for i in item.identities:
                    binders = ", ".join(f"{v}:{s}" for v, s in i.context.variables)
                    lines.append(f"    forall {binders} . {i.lhs} = {i.rhs};")
            lines.append("}")
            out.append("\n".join(lines))
        elif kind == "algebra":
            out.append(_algebra(name, item))
        elif kind == "model":
            out.append(f"model {name} = {item.algebra.name} with {_relations(item)};")
        elif kind == "multimodel":
            inst = " ".join(f"{n}: {_relations(m)};" for n, m in zip(item.names, item.instances))
            out.append(f"multimodel {name} = {item.algebra.name} with instances {{ {inst} }};")
        elif kind == "context":
            body = " ".join(f"{v}: {s};" for v, s in item.variables)
            out.append(f"context {name} {{ {body} }}")
        elif kind == "system":
            eqs = " ".join(f"{e};" for e in item.system.equations)
            out.append(f"system {name} over {item.system.context.name} in {item.signature} {{ {eqs} }}")
        elif kind == "formula":
            out.append(f"formula {name} over {item.context} in {item.signature} = {format_formula(item.formula)};")
        else:
            space = PointSpace(ws.contexts[item.context], ws.algebras[item.algebra])
            pts = ", ".join(_point(space, i) for i in item.points)
            out.append(f"pointset {name} over {item.context} in {item.algebra} = {{ {pts} }};")
    return "\n\n".join(out) + "\n"


def _point(space: PointSpace, idx: int) -> str:
    H = space.algebra
    parts = [f"{x}={quote(H.name_of(s, int(space.columns[x][idx])))}" for x, s in space.context.variables]
    return "{" + ", ".join(parts) + "}"
