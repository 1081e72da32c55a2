"""Recursive-descent parser for workspace sources.

Every failure is reported as a positioned :class:`Diagnostic`.  Parsing stops
at the first error of a source; declarations are resolved in order, so a
name must be declared before it is used.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from ..eqgeo import EquationSystem
from ..folgeo import And, Eq, Exists, Formula, Model, Not, Or, Rel
from ..kbase import Multimodel
from ..sigcore import FiniteAlgebra, Identity, OpSymbol, RelSymbol, Signature, validate_algebra
from ..space import PointSpace
from ..terms import App, Equation, Term, Var, VarContext
from .diagnostics import Diagnostic, DslError
from .lexer import Token, tokenize
from .workspace import FormulaDecl, PointSetDecl, SystemDecl, Workspace

ELEMENT_KINDS = ("ident", "number", "string")


class Parser:
    def __init__(self, text: str, file: str, ws: Workspace):
        self.file = file
        self.toks = tokenize(text, file)
        self.i = 0
        self.ws = ws

    # -- token helpers -------------------------------------------------
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        if t.kind != "eof":
            self.i += 1
        return t

    def at(self, text: str) -> bool:
        t = self.tok
        return t.kind in ("sym", "kw") and t.text == text

    def error(self, tok: Token, msg: str, kind: str = "syntax", hint: str | None = None):
        raise DslError([Diagnostic("error", self.file, tok.line, tok.col, msg, kind, hint)])

    def describe(self, tok: Token) -> str:
        return "end of input" if tok.kind == "eof" else repr(tok.text)

    def expect(self, text: str, hint: str | None = None) -> Token:
        if not self.at(text):
            self.error(self.tok, f"expected {text!r}, found {self.describe(self.tok)}", hint=hint)
        return self.advance()

    def name(self, what: str = "name") -> Token:
        t = self.tok
        if t.kind != "ident":
            if t.kind == "kw":
                self.error(t, f"{t.text!r} is a reserved keyword, expected {what}",
                           hint="quote element names with \"...\" or pick another identifier")
            self.error(t, f"expected {what}, found {self.describe(t)}")
        return self.advance()

    def element(self) -> Token:
        t = self.tok
        if t.kind not in ELEMENT_KINDS:
            self.error(t, f"expected an element name, found {self.describe(t)}")
        return self.advance()

    def optional(self, text: str) -> bool:
        if self.at(text):
            self.advance()
            return True
        return False

    def comma_list(self, item, close: str) -> list:
        """Items separated by ',' up to (not including) ``close``."""
        out = []
        if self.at(close):
            return out
        out.append(item())
        while self.optional(","):
            out.append(item())
        return out

    # -- lookups ---------------------------------------------------------
    def lookup(self, kind: str, tok: Token):
        table = self.ws.table(kind)
        if tok.text not in table:
            known = ", ".join(sorted(table)) or "none declared"
            self.error(tok, f"unknown {kind} {tok.text!r}", "resolution", f"known {kind}s: {known}")
        return table[tok.text]

    def declare(self, kind: str, tok: Token, value) -> None:
        table = self.ws.table(kind)
        if tok.text in table:
            self.error(tok, f"duplicate {kind} name {tok.text!r}", "resolution")
        table[tok.text] = value
        self.ws.order.append((kind, tok.text))

    # -- top level -------------------------------------------------------
    def parse(self) -> None:
        handlers = {
            "signature": self.signature, "algebra": self.algebra, "model": self.model,
            "multimodel": self.multimodel, "context": self.context, "system": self.system,
            "formula": self.formula_decl, "pointset": self.pointset,
        }
        while self.tok.kind != "eof":
            t = self.tok
            if t.kind == "kw" and t.text in handlers:
                self.advance()
                handlers[t.text]()
                self.optional(";")
            else:
                self.error(t, f"expected a declaration, found {self.describe(t)}",
                           hint="declarations start with " + ", ".join(sorted(handlers)))

    # -- signatures ------------------------------------------------------
    def signature(self) -> None:
        name = self.name("signature name")
        self.expect("{")
        sorts: list[str] = []
        ops: list[OpSymbol] = []
        rels: list[RelSymbol] = []
        ids: list[Identity] = []
        seen: set[str] = set()
        symbols: dict[str, Token] = {}
        while not self.at("}"):
            t = self.tok
            if t.kind != "kw" or t.text not in ("sorts", "ops", "rels", "identities"):
                self.error(t, f"expected a signature section, found {self.describe(t)}",
                           hint="sections are sorts:, ops:, rels:, identities:")
            if t.text in seen:
                self.error(t, f"section {t.text!r} given twice")
            seen.add(t.text)
            self.advance()
            self.expect(":")
            if t.text == "sorts":
                for s in self.comma_list(lambda: self.name("sort name"), ";"):
                    if s.text in sorts:
                        self.error(s, f"duplicate sort {s.text!r}", "resolution")
                    sorts.append(s.text)
                self.expect(";")
            elif t.text == "ops":
                for sym, tok in self.comma_list(lambda: self.symbol(sorts, True), ";"):
                    self._unique_symbol(tok, symbols)
                    ops.append(sym)
                self.expect(";")
            elif t.text == "rels":
                for sym, tok in self.comma_list(lambda: self.symbol(sorts, False), ";"):
                    self._unique_symbol(tok, symbols)
                    rels.append(sym)
                self.expect(";")
            else:
                partial = Signature(tuple(sorts), tuple(ops), tuple(rels), (), name.text)
                while self.at("forall"):
                    ids.append(self.identity(partial))
                    self.expect(";")
        self.expect("}")
        self.declare("signature", name, Signature(tuple(sorts), tuple(ops), tuple(rels), tuple(ids), name.text))

    def _unique_symbol(self, tok: Token, symbols: dict[str, Token]) -> None:
        if tok.text in symbols:
            self.error(tok, f"duplicate symbol {tok.text!r}", "resolution")
        symbols[tok.text] = tok

    def sort_ref(self, sorts: Iterable[str]) -> str:
        t = self.name("sort name")
        sorts = list(sorts)
        if t.text not in sorts:
            self.error(t, f"unknown sort {t.text!r}", "resolution", f"declared sorts: {', '.join(sorts) or 'none'}")
        return t.text

    def symbol(self, sorts: list[str], is_op: bool):
        name = self.name("operation name" if is_op else "relation name")
        self.expect("(")
        args = self.comma_list(lambda: self.sort_ref(sorts), ")")
        self.expect(")")
        if is_op:
            self.expect("->", hint="operations are declared as f(s1, s2) -> s")
            return OpSymbol(name.text, tuple(args), self.sort_ref(sorts)), name
        return RelSymbol(name.text, tuple(args)), name

    def binders(self, sorts: list[str]) -> VarContext:
        pairs = []
        names: set[str] = set()

        def one():
            v = self.name("variable name")
            self.expect(":")
            s = self.sort_ref(sorts)
            if v.text in names:
                self.error(v, f"variable {v.text!r} bound twice", "resolution")
            names.add(v.text)
            pairs.append((v.text, s))

        if not self.at("."):
            one()
            while self.optional(","):
                one()
        return VarContext(tuple(pairs), "forall")

    def identity(self, sig: Signature) -> Identity:
        self.expect("forall")
        ctx = self.binders(list(sig.sorts))
        self.expect(".")
        start = self.tok
        lhs = self.term(sig, ctx)
        self.expect("=")
        rhs = self.term(sig, ctx)
        if lhs.sort != rhs.sort:
            self.error(start, f"identity sides have sorts {lhs.sort} and {rhs.sort}", "typing")
        return Identity(ctx, lhs, rhs)

    # -- terms -------------------------------------------------------------
    def term(self, sig: Signature, ctx: VarContext) -> Term:
        t = self.name("term")
        if not self.at("(") and t.text in ctx:
            return Var(t.text, ctx.sort_of(t.text))
        if not sig.has_op(t.text):
            if sig.has_rel(t.text):
                self.error(t, f"relation {t.text!r} used as a term", "typing")
            self.error(t, f"unknown variable or operation {t.text!r}", "resolution",
                       f"variables: {', '.join(ctx.names) or 'none'}")
        op = sig.op(t.text)
        args: list[Term] = []
        if self.optional("("):
            arg_toks = []

            def one():
                arg_toks.append(self.tok)
                return self.term(sig, ctx)

            args = self.comma_list(one, ")")
            self.expect(")")
        else:
            arg_toks = []
        if len(args) != len(op.args):
            self.error(t, f"{op.name} expects {len(op.args)} arguments, got {len(args)}", "typing")
        for a, s, at in zip(args, op.args, arg_toks):
            if a.sort != s:
                self.error(at, f"argument of {op.name} must have sort {s}, got {a.sort}", "typing")
        return App(op.name, tuple(args), op.result)

    # -- algebras --------------------------------------------------------
    def algebra(self) -> None:
        name = self.name("algebra name")
        self.expect(":")
        sig: Signature = self.lookup("signature", self.name("signature name"))
        self.expect("{")
        carriers: dict[str, list[str]] = {}
        rows: dict[str, np.ndarray] = {}
        op_toks: dict[str, Token] = {}
        while not self.at("}"):
            t = self.tok
            if self.optional("carrier"):
                st = self.tok
                s = self.sort_ref(sig.sorts)
                if s in carriers:
                    self.error(st, f"carrier of sort {s!r} given twice", "typing")
                self.expect("=")
                self.expect("{")
                elems = []
                for e in self.comma_list(self.element, "}"):
                    if e.text in elems:
                        self.error(e, f"duplicate element {e.text!r} in carrier {s}", "typing")
                    elems.append(e.text)
                self.expect("}")
                carriers[s] = elems
            elif self.optional("op"):
                ot = self.name("operation name")
                if not sig.has_op(ot.text):
                    self.error(ot, f"unknown operation {ot.text!r} in signature {sig.name}", "resolution")
                if ot.text in rows:
                    self.error(ot, f"table for {ot.text!r} given twice", "typing")
                op = sig.op(ot.text)
                for s in (*op.args, op.result):
                    if s not in carriers:
                        self.error(ot, f"carrier of sort {s!r} must be declared before op {op.name}", "resolution")
                op_toks[op.name] = ot
                self.expect("=")
                rows[op.name] = self.op_table(op, carriers)
            else:
                self.error(t, f"expected 'carrier' or 'op', found {self.describe(t)}")
            self.expect(";")
        end = self.expect("}")
        for s in sig.sorts:
            if s not in carriers:
                self.error(name, f"algebra {name.text} has no carrier for sort {s!r}", "totality")
        for op in sig.ops:
            if op.name not in rows:
                self.error(end, f"algebra {name.text} has no table for {op.name!r}", "totality")
        H = FiniteAlgebra(sig, carriers, rows, name.text)
        for v in validate_algebra(H):
            tok = op_toks.get(v.message.split("(")[0].split()[-1], name) if v.kind == "totality" else name
            self.error(tok, v.message, v.kind if v.kind in ("totality", "identity") else "typing")
        self.declare("algebra", name, H)

    def elem_index(self, tok: Token, sort: str, carriers: dict[str, list[str]]) -> int:
        if tok.text not in carriers[sort]:
            self.error(tok, f"{tok.text!r} is not an element of sort {sort}", "resolution",
                       f"carrier {sort} = {{{', '.join(carriers[sort])}}}")
        return carriers[sort].index(tok.text)

    def op_table(self, op: OpSymbol, carriers: dict[str, list[str]]) -> np.ndarray:
        shape = tuple(len(carriers[s]) for s in op.args)
        table = np.full(shape, -1, dtype=np.int64)
        if not op.args:
            if self.at("{"):
                self.advance()
                self.expect("(")
                self.expect(")")
                self.expect("->")
                table[()] = self.elem_index(self.element(), op.result, carriers)
                self.optional(";")
                self.expect("}")
            else:
                table[()] = self.elem_index(self.element(), op.result, carriers)
            return table
        self.expect("{")
        while not self.at("}"):
            row_tok = self.expect("(")
            args = self.comma_list(self.element, ")")
            self.expect(")")
            if len(args) != len(op.args):
                self.error(row_tok, f"row of {op.name} has {len(args)} arguments, expected {len(op.args)}", "typing")
            pos = tuple(self.elem_index(a, s, carriers) for a, s in zip(args, op.args))
            self.expect("->")
            val = self.elem_index(self.element(), op.result, carriers)
            if table[pos] >= 0:
                self.error(row_tok, f"duplicate row for {op.name}({', '.join(a.text for a in args)})", "typing")
            table[pos] = val
            if not self.optional(";"):
                break
        self.expect("}")
        return table

    # -- models ------------------------------------------------------------
    def relation_block(self, G: FiniteAlgebra) -> dict[str, frozenset]:
        """``{ p = {(a), (b)}; q = {(a,b)}; }``"""
        sig = G.signature
        carriers = {s: list(c) for s, c in G.carriers.items()}
        self.expect("{")
        out: dict[str, frozenset] = {}
        while not self.at("}"):
            rt = self.name("relation name")
            if not sig.has_rel(rt.text):
                self.error(rt, f"unknown relation {rt.text!r} in signature {sig.name}", "resolution",
                           f"relations: {', '.join(r.name for r in sig.rels) or 'none'}")
            if rt.text in out:
                self.error(rt, f"relation {rt.text!r} given twice", "typing")
            r = sig.rel(rt.text)
            self.expect("=")
            self.expect("{")
            tuples = set()
            while not self.at("}"):
                tt = self.tok
                if self.optional("("):
                    args = self.comma_list(self.element, ")")
                    self.expect(")")
                else:
                    args = [self.element()]
                if len(args) != len(r.args):
                    self.error(tt, f"tuple for {r.name} has {len(args)} entries, expected {len(r.args)}", "typing")
                tup = tuple(self.elem_index(a, s, carriers) for a, s in zip(args, r.args))
                if tup in tuples:
                    self.error(tt, f"duplicate tuple in {r.name}", "typing")
                tuples.add(tup)
                if not self.optional(","):
                    break
            self.expect("}")
            out[r.name] = frozenset(tuples)
            if not self.optional(";"):
                break
        self.expect("}")
        return out

    def model(self) -> None:
        name = self.name("model name")
        self.expect("=")
        G: FiniteAlgebra = self.lookup("algebra", self.name("algebra name"))
        rels: dict[str, frozenset] = {}
        if self.optional("with"):
            rels = self.relation_block(G)
        self.declare("model", name, Model(G, G.signature, rels, name.text))

    def multimodel(self) -> None:
        name = self.name("multimodel name")
        self.expect("=")
        G: FiniteAlgebra = self.lookup("algebra", self.name("algebra name"))
        self.expect("with")
        self.expect("instances")
        self.expect("{")
        names: list[str] = []
        models: list[Model] = []
        while not self.at("}"):
            it = self.name("instance name")
            if it.text in names:
                self.error(it, f"duplicate instance {it.text!r}", "resolution")
            self.expect(":")
            rels = self.relation_block(G)
            names.append(it.text)
            models.append(Model(G, G.signature, rels, f"{name.text}.{it.text}"))
            if not self.optional(";"):
                break
        self.expect("}")
        self.declare("multimodel", name, Multimodel(G, G.signature, tuple(models), tuple(names), name.text))

    # -- contexts, systems, formulas, point sets --------------------------------
    def known_sorts(self) -> set[str]:
        out: set[str] = set()
        for sig in self.ws.signatures.values():
            out |= set(sig.sorts)
        return out

    def context(self) -> None:
        name = self.name("context name")
        self.expect("{")
        pairs = []
        known = self.known_sorts()
        while not self.at("}"):
            v = self.name("variable name")
            if any(v.text == p[0] for p in pairs):
                self.error(v, f"variable {v.text!r} declared twice", "resolution")
            self.expect(":")
            st = self.name("sort name")
            if st.text not in known:
                self.error(st, f"unknown sort {st.text!r}", "resolution",
                           f"declared sorts: {', '.join(sorted(known)) or 'none'}")
            pairs.append((v.text, st.text))
            self.expect(";")
        self.expect("}")
        self.declare("context", name, VarContext(tuple(pairs), name.text))

    def over_in(self) -> tuple[VarContext, Signature, str]:
        self.expect("over")
        ct = self.name("context name")
        ctx: VarContext = self.lookup("context", ct)
        if self.optional("in"):
            sig = self.lookup("signature", self.name("signature name"))
            bad = [s for _, s in ctx.variables if s not in sig.sorts]
            if bad:
                self.error(ct, f"context {ctx.name} uses sorts {bad} unknown to {sig.name}", "typing")
            return ctx, sig, ct.text
        sorts = {s for _, s in ctx.variables}
        cands = [s for s in self.ws.signatures.values() if sorts <= set(s.sorts)]
        if len(cands) != 1:
            self.error(ct, f"cannot infer the signature for context {ctx.name} ({len(cands)} candidates)",
                       "resolution", "add 'in SIGNATURE' after the context")
        return ctx, cands[0], ct.text

    def system(self) -> None:
        name = self.name("system name")
        ctx, sig, _ = self.over_in()
        self.expect("{")
        eqs = []
        while not self.at("}"):
            start = self.tok
            lhs = self.term(sig, ctx)
            self.expect("=")
            rhs = self.term(sig, ctx)
            if lhs.sort != rhs.sort:
                self.error(start, f"equation sides have sorts {lhs.sort} and {rhs.sort}", "typing")
            eqs.append(Equation(lhs, rhs))
            self.expect(";")
        self.expect("}")
        self.declare("system", name, SystemDecl(EquationSystem(ctx, tuple(eqs), name.text), sig.name))

    def formula_decl(self) -> None:
        name = self.name("formula name")
        ctx, sig, cname = self.over_in()
        self.expect("=")
        u = self.formula(sig, ctx)
        self.expect(";", hint="end the formula with ';'")
        self.declare("formula", name, FormulaDecl(u, cname, sig.name))

    def formula(self, sig: Signature, ctx: VarContext) -> Formula:
        if self.at("exists") or self.at("all"):
            return self.quantified(sig, ctx)
        left = self.conjunction(sig, ctx)
        while self.optional("\\/"):
            if self.at("exists") or self.at("all"):
                return Or(left, self.quantified(sig, ctx))
            left = Or(left, self.conjunction(sig, ctx))
        return left

    def quantified(self, sig: Signature, ctx: VarContext) -> Formula:
        q = self.advance()
        v = self.name("variable name")
        if v.text not in ctx:
            self.error(v, f"quantified variable {v.text!r} is not in context {ctx.name}", "resolution")
        self.expect(".")
        body = self.formula(sig, ctx)
        return Exists(v.text, body) if q.text == "exists" else Not(Exists(v.text, Not(body)))

    def conjunction(self, sig: Signature, ctx: VarContext) -> Formula:
        left = self.unary(sig, ctx)
        while self.optional("/\\"):
            if self.at("exists") or self.at("all"):
                return And(left, self.quantified(sig, ctx))
            left = And(left, self.unary(sig, ctx))
        return left

    def unary(self, sig: Signature, ctx: VarContext) -> Formula:
        if self.optional("~"):
            if self.at("exists") or self.at("all"):
                return Not(self.quantified(sig, ctx))
            return Not(self.unary(sig, ctx))
        if self.optional("("):
            u = self.formula(sig, ctx)
            self.expect(")")
            return u
        if self.at("exists") or self.at("all"):
            return self.quantified(sig, ctx)
        return self.atom(sig, ctx)

    def atom(self, sig: Signature, ctx: VarContext) -> Formula:
        t = self.tok
        if t.kind == "ident" and sig.has_rel(t.text) and t.text not in ctx:
            self.advance()
            r = sig.rel(t.text)
            self.expect("(")
            toks = []

            def one():
                toks.append(self.tok)
                return self.term(sig, ctx)

            args = self.comma_list(one, ")")
            self.expect(")")
            if len(args) != len(r.args):
                self.error(t, f"{r.name} expects {len(r.args)} arguments, got {len(args)}", "typing")
            for a, s, at in zip(args, r.args, toks):
                if a.sort != s:
                    self.error(at, f"argument of {r.name} must have sort {s}, got {a.sort}", "typing")
            return Rel(r.name, tuple(args))
        lhs = self.term(sig, ctx)
        self.expect("=", hint="atoms are equalities t = t' or relation applications")
        rhs = self.term(sig, ctx)
        if lhs.sort != rhs.sort:
            self.error(t, f"equality between sorts {lhs.sort} and {rhs.sort}", "typing")
        return Eq(lhs, rhs)

    def pointset(self) -> None:
        name = self.name("point set name")
        self.expect("over")
        ct = self.name("context name")
        ctx: VarContext = self.lookup("context", ct)
        self.expect("in")
        at = self.name("algebra name")
        G: FiniteAlgebra = self.lookup("algebra", at)
        bad = [s for _, s in ctx.variables if s not in G.signature.sorts]
        if bad:
            self.error(ct, f"context {ctx.name} uses sorts {bad} unknown to algebra {G.name}", "typing")
        space = PointSpace(ctx, G)
        self.expect("=")
        self.expect("{")
        points = set()
        while not self.at("}"):
            pt = self.expect("{")
            named: dict[str, str] = {}
            while not self.at("}"):
                v = self.name("variable name")
                if v.text not in ctx:
                    self.error(v, f"variable {v.text!r} is not in context {ctx.name}", "resolution")
                if v.text in named:
                    self.error(v, f"variable {v.text!r} assigned twice", "typing")
                self.expect("=")
                e = self.element()
                s = ctx.sort_of(v.text)
                self.elem_index(e, s, {s: list(G.carriers[s])})
                named[v.text] = e.text
                if not self.optional(","):
                    break
            self.expect("}")
            missing = [x for x in ctx.names if x not in named]
            if missing:
                self.error(pt, f"point leaves {missing} unassigned", "typing")
            points.add(space.index_of_names(named))
            if not self.optional(","):
                break
        self.expect("}")
        self.declare("pointset", name, PointSetDecl(ctx.name, G.name, tuple(sorted(points))))


def parse_into(ws: Workspace, text: str, file: str = "<input>") -> Workspace:
    Parser(text, file, ws).parse()
    return ws


def parse_workspace(sources: Iterable[tuple[str, str]] | str, file: str = "<input>") -> Workspace:
    """Parse ``(file, text)`` pairs (or one text) into a fresh workspace; raises DslError."""
    if isinstance(sources, str):
        sources = [(file, sources)]
    ws = Workspace()
    for name, text in sources:
        parse_into(ws, text, name)
    return ws
