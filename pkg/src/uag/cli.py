"""Command line front end: ``uag -f FILE.uag COMMAND ARGS [--json]``.

Exit codes: 0 success, 1 negative decision, 2 diagnostics or usage errors,
3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from typing import Callable, Sequence

from . import __version__
from . import eqgeo, folgeo, kbase, omega
from .budget import DEFAULT_CAPS, ENV_VAR, Budget, BudgetExceeded
from .dsl.diagnostics import DslError
from .dsl.parser import parse_workspace
from .dsl.workspace import Workspace
from .sigcore import FiniteAlgebra, Homomorphism, automorphism_group, enumerate_homs
from .space import PointSet
from .terms import VarContext

OK, NEGATIVE, DIAGNOSTICS, BUDGET = 0, 1, 2, 3
FILLER = {"over", "in"}


class UsageError(Exception):
    pass


@dataclass
class Outcome:
    result: object
    text: list[str]
    code: int = OK
    witness: object = None


@dataclass
class Ctx:
    ws: Workspace
    budget: Budget
    opts: argparse.Namespace
    args: list[str] = field(default_factory=list)

    def take(self, n: int, usage: str) -> list[str]:
        if len(self.args) != n:
            raise UsageError(f"usage: {usage}")
        return self.args

    def get(self, kind: str, name: str):
        table = self.ws.table(kind)
        if name not in table:
            raise UsageError(f"unknown {kind} {name!r}; known: {', '.join(sorted(table)) or 'none'}")
        return table[name]

    def algebra(self, name: str) -> FiniteAlgebra:
        return self.get("algebra", name)

    def algebra_or_model(self, name: str):
        if name in self.ws.models:
            return self.ws.models[name]
        return self.algebra(name)


# ---------------------------------------------------------------------------
# Rendering


def render_hom(h: Homomorphism) -> dict:
    return h.describe()


def render_set(A: PointSet) -> dict:
    return {"points": A.indices(), "text": [A.space.format_point(i) for i in A.indices()]}


def set_line(A: PointSet) -> str:
    return A.format()


# ---------------------------------------------------------------------------
# Commands


def cmd_validate(c: Ctx) -> Outcome:
    c.take(0, "validate")
    counts = c.ws.counts()
    text = ["workspace ok: " + ", ".join(f"{v} {k}s" for k, v in counts.items() if v)]
    return Outcome(counts, text)


def cmd_homs(c: Ctx) -> Outcome:
    a, b = c.take(2, "homs A B")
    homs = enumerate_homs(c.algebra(a), c.algebra(b), c.budget)
    return Outcome({"count": len(homs), "homs": [render_hom(h) for h in homs]},
                   [f"{len(homs)} homomorphisms {a} -> {b}"] + [str(h.describe()) for h in homs])


def cmd_aut(c: Ctx) -> Outcome:
    (a,) = c.take(1, "aut A|MODEL")
    obj = c.algebra_or_model(a)
    group = folgeo.aut_of_model(obj, c.budget) if isinstance(obj, folgeo.Model) else automorphism_group(obj, c.budget)
    return Outcome({"order": len(group), "elements": [render_hom(g) for g in group]},
                   [f"|Aut({a})| = {len(group)}"] + [str(g.describe()) for g in group])


def cmd_solve(c: Ctx) -> Outcome:
    if len(c.args) == 3:
        t, x, a = c.args
    else:
        t, a = c.take(2, "solve T [over X] in A")
        x = None
    decl = c.get("system", t)
    if x is not None and decl.system.context.name != x:
        raise UsageError(f"system {t} is declared over {decl.system.context.name}, not {x}")
    A = eqgeo.solutions(decl.system, c.algebra(a), budget=c.budget)
    return Outcome(render_set(A), [f"{len(A)} solutions", set_line(A)])


def cmd_closure(c: Ctx) -> Outcome:
    if len(c.args) == 3:
        p, x, a = c.args
    else:
        (p,) = c.take(1, "closure POINTSET [in (X,A)]")
        x = a = None
    decl = c.get("pointset", p)
    if x is not None and (decl.context, decl.algebra) != (x, a):
        raise UsageError(f"point set {p} lives over ({decl.context},{decl.algebra}), not ({x},{a})")
    A = decl.pointset(c.ws)
    cl = eqgeo.closure(A, c.budget)
    return Outcome({"input": render_set(A), "closure": render_set(cl), "closed": cl.mask == A.mask},
                   [f"closure of {p}: {set_line(cl)}", "closed" if cl.mask == A.mask else "not closed"])


def cmd_lattice(c: Ctx) -> Outcome:
    x, a = c.take(2, "lattice X A|MODEL [--zariski] [--level L]")
    ctx = c.get("context", x)
    obj = c.algebra_or_model(a)
    if c.opts.level is not None:
        level = folgeo.LogicLevel.parse(c.opts.level)
        model = obj if isinstance(obj, folgeo.Model) else folgeo.Model(obj, obj.signature, {}, obj.name)
        geo = folgeo.zariski_at_level(ctx, model, level, c.budget)
        fam = geo.closed if c.opts.zariski else geo.algebraic
        what = "closed sets" if c.opts.zariski else f"{level.name}-algebraic sets"
    else:
        H = obj.algebra if isinstance(obj, folgeo.Model) else obj
        if c.opts.zariski:
            fam = eqgeo.zariski_closed_sets(ctx, H, c.budget)
            what = "Zariski closed sets"
        else:
            fam = eqgeo.list_closed_sets(ctx, H, c.budget).sets
            what = "closed sets"
    return Outcome({"count": len(fam), "sets": [s.indices() for s in fam]},
                   [f"{len(fam)} {what}"] + [set_line(s) for s in fam])


def cmd_stable(c: Ctx) -> Outcome:
    a, x = c.take(2, "stable A X")
    res = eqgeo.is_stable(c.algebra(a), c.get("context", x), c.budget)
    if res.stable:
        return Outcome({"stable": True}, [f"{a} is stable over {x}"])
    p, q = res.counterexample
    w = {"pair": [render_set(p), render_set(q)], "union": render_set(res.union)}
    return Outcome({"stable": False}, [f"{a} is not stable over {x}", f"  {set_line(p)} | {set_line(q)}",
                                       f"  union {set_line(res.union)} is not closed"], NEGATIVE, w)


def cmd_geq(c: Ctx) -> Outcome:
    a, b = c.take(2, "geq A B")
    H1, H2 = c.algebra(a), c.algebra(b)
    fail = eqgeo.separation_failure(H1, H2, c.budget) or eqgeo.separation_failure(H2, H1, c.budget)
    if fail is None:
        return Outcome({"equivalent": True}, [f"{a} and {b} are geometrically equivalent"])
    w = {"algebra": fail.source.name, "sort": fail.sort,
         "pair": [fail.source.name_of(fail.sort, fail.a), fail.source.name_of(fail.sort, fail.b)],
         "unseparated_by_homs_into": fail.target.name}
    return Outcome({"equivalent": False}, [f"{a} and {b} are not geometrically equivalent",
                                           f"  {w['pair'][0]} and {w['pair'][1]} in {w['algebra']} are not "
                                           f"separated by homomorphisms into {fail.target.name}"], NEGATIVE, w)


def cmd_minimize(c: Ctx) -> Outcome:
    if len(c.args) == 3:
        t, x, a = c.args
    else:
        t, a = c.take(2, "minimize T [X] A")
        x = None
    decl = c.get("system", t)
    if x is not None and decl.system.context.name != x:
        raise UsageError(f"system {t} is declared over {decl.system.context.name}, not {x}")
    small = eqgeo.minimize_system(decl.system, c.algebra(a), c.budget)
    eqs = [str(e) for e in small.equations]
    return Outcome({"equations": eqs}, [f"{len(eqs)} of {len(decl.system)} equations kept"] + eqs)


def cmd_coord(c: Ctx) -> Outcome:
    (p,) = c.take(1, "coord POINTSET")
    A = c.get("pointset", p).pointset(c.ws)
    ca = eqgeo.coordinate_algebra(A, c.budget)
    K = ca.algebra
    res = {"sizes": K.sizes, "generators": ca.generator_names(),
           "carriers": {s: list(v) for s, v in K.carriers.items()}}
    return Outcome(res, [f"coordinate algebra of {p}: sizes {K.sizes}",
                         "generators " + ", ".join(f"{x}={v}" for x, v in ca.generator_names().items())])


def _omega(c: Ctx, name: str) -> omega.OmegaGroup:
    return omega.OmegaGroup.of(c.algebra(name))


def cmd_zd(c: Ctx) -> Outcome:
    (a,) = c.take(1, "zd A [--element a]")
    H = _omega(c, a)
    if c.opts.element is not None:
        e = H.index(c.opts.element)
        r = omega.is_zero_divisor(H, e)
        w = None if not r else {"partner": H.describe([r.witness])[0]}
        lines = [f"{c.opts.element} is {'a' if r else 'not a'} zero divisor"]
        if r:
            lines.append(f"  [({c.opts.element}), ({w['partner']})] = 0")
        return Outcome({"zero_divisor": bool(r)}, lines, OK if r else NEGATIVE, w)
    zds = H.describe(omega.zero_divisors(H))
    return Outcome({"zero_divisors": zds}, [f"zero divisors of {a}: {{{', '.join(zds)}}}"])


def cmd_domain(c: Ctx) -> Outcome:
    (a,) = c.take(1, "domain A")
    H = _omega(c, a)
    d = omega.is_domain(H)
    return Outcome({"domain": d}, [f"{a} is {'' if d else 'not '}a domain"], OK if d else NEGATIVE)


def cmd_cd(c: Ctx) -> Outcome:
    (a,) = c.take(1, "cd A")
    ok = omega.check_cd(_omega(c, a), c.budget)
    return Outcome({"cd": ok}, [f"{a} {'satisfies' if ok else 'violates'} commutator distributivity"],
                   OK if ok else NEGATIVE)


def cmd_nilpotent(c: Ctx) -> Outcome:
    a, e = c.take(2, "nilpotent A a [--strict]")
    H = _omega(c, a)
    idx = H.index(e)
    if c.opts.strict:
        series, ok = omega.strict_series(H, idx), omega.is_strictly_nilpotent(H, idx)
    else:
        series, ok = omega.derived_series(H, idx), omega.is_weakly_nilpotent(H, idx)
    kind = "strictly" if c.opts.strict else "weakly"
    rendered = [H.describe(U) for U in series]
    return Outcome({"nilpotent": ok, "series": rendered},
                   [f"{e} is {'' if ok else 'not '}{kind} nilpotent"] + ["  {" + ", ".join(U) + "}" for U in rendered],
                   OK if ok else NEGATIVE)


def cmd_spec(c: Ctx) -> Outcome:
    (a,) = c.take(1, "spec A")
    H = _omega(c, a)
    primes = [H.describe(U) for U in omega.prime_ideals(H, c.budget)]
    return Outcome({"prime_ideals": primes}, [f"{len(primes)} prime ideals"] + ["  {" + ", ".join(U) + "}" for U in primes])


def cmd_eval(c: Ctx) -> Outcome:
    if len(c.args) == 3:
        f, m, x = c.args
    else:
        f, m = c.take(2, "eval FORMULA in MODEL [over X]")
        x = None
    decl = c.get("formula", f)
    model = c.get("model", m)
    if x is not None and x != decl.context:
        raise UsageError(f"formula {f} is declared over {decl.context}, not {x}")
    if not model.signature.same_algebraic_part(c.ws.signatures[decl.signature]) or \
            model.signature.rels != c.ws.signatures[decl.signature].rels:
        raise UsageError(f"formula {f} and model {m} have different signatures")
    A = folgeo.eval_formula(decl.formula, model, c.get("context", decl.context), c.budget)
    return Outcome(render_set(A), [f"Val({f}) has {len(A)} points", set_line(A)])


def cmd_elem(c: Ctx) -> Outcome:
    p, m = c.take(2, "elem POINTSET in MODEL")
    model = c.get("model", m)
    A = _set_for_model(c, p, model)
    cl = folgeo.closure_elementary(A, model)
    ok = cl.mask == A.mask
    w = None if ok else {"closure": render_set(cl)}
    return Outcome({"elementary": ok}, [f"{p} is {'' if ok else 'not '}elementary in {m}"] +
                   ([] if ok else [f"  least elementary superset {set_line(cl)}"]), OK if ok else NEGATIVE, w)


def _set_for_model(c: Ctx, p: str, model: folgeo.Model) -> PointSet:
    decl = c.get("pointset", p)
    if decl.algebra != model.algebra.name:
        raise UsageError(f"point set {p} lives in {decl.algebra}, model is over {model.algebra.name}")
    return decl.pointset(c.ws)


def cmd_define(c: Ctx) -> Outcome:
    p, m = c.take(2, "define POINTSET in MODEL --budget N")
    model = c.get("model", m)
    A = _set_for_model(c, p, model)
    if not folgeo.is_elementary(A, model):
        return Outcome({"formula": None, "elementary": False}, [f"{p} is not elementary in {m}"], NEGATIVE)
    u = folgeo.defining_formula(A, model, max_size=c.opts.max_size, budget=c.budget)
    if u is None:
        return Outcome({"formula": None, "elementary": True},
                       [f"no defining formula of size <= {c.opts.max_size}"], NEGATIVE)
    text = folgeo.format_formula(u)
    return Outcome({"formula": text, "size": folgeo.formula_size(u)}, [text])


def cmd_galois(c: Ctx) -> Outcome:
    (m,) = c.take(1, "galois MODEL [--verify]")
    model = c.get("model", m)
    G = model.algebra
    aut = folgeo.aut_of_model(model, c.budget)
    ctx = VarContext((("x1", G.sort),), "X1")
    R = folgeo.definable_sets(model, ctx, budget=c.budget)
    blocks = [b.indices() for b in R.blocks()]
    res = {"aut_order": len(aut), "aut": [render_hom(g) for g in aut], "blocks_x1": blocks}
    lines = [f"|Aut(f)| = {len(aut)}", f"definable atoms over one variable: {blocks}"]
    code = OK
    if c.opts.verify:
        rep = folgeo.verify_galois_closure(G, 2, budget=c.budget)
        res["verify"] = {"subgroups": rep.subgroups, "closed_subgroups": rep.closed_subgroups,
                         "algebras_checked": rep.algebras_checked, "algebra_failures": rep.algebra_failures,
                         "injective": rep.injective, "ok": rep.ok}
        lines.append(f"Galois closure check on {G.name}: {'ok' if rep.ok else 'FAILED'} "
                     f"({rep.closed_subgroups}/{rep.subgroups} subgroups closed, "
                     f"{rep.algebras_checked} set algebras checked)")
        code = OK if rep.ok else NEGATIVE
    return Outcome(res, lines, code)


def _kb_witness(M1, M2, r: kbase.KBResult):
    if r.alpha is None:
        return None
    return {"alpha": [[M1.names[i], M2.names[j]] for i, j in enumerate(r.alpha)],
            "maps": [render_hom(h) for h in r.witnesses]}


def cmd_kb(c: Ctx) -> Outcome:
    if not c.args:
        raise UsageError("usage: kb iso|equiv|geq M1 M2")
    sub, rest = c.args[0], c.args[1:]
    if sub not in ("iso", "equiv", "geq") or len(rest) != 2:
        raise UsageError("usage: kb iso|equiv|geq M1 M2")
    M1, M2 = c.get("multimodel", rest[0]), c.get("multimodel", rest[1])
    if sub in ("iso", "equiv"):
        r = kbase.kb_isomorphic(M1, M2, c.budget) if sub == "iso" else kbase.kb_equivalent(M1, M2, c.budget)
        w = _kb_witness(M1, M2, r)
        lines = [f"{rest[0]} and {rest[1]}: {r.reason}"]
        if w:
            lines += [f"  {a} -> {b} via {h}" for (a, b), h in zip(w["alpha"], w["maps"])]
        return Outcome({"verdict": r.verdict}, lines, OK if r else NEGATIVE, w)
    nv, ns = c.opts.bounds
    r = kbase.geom_equivalent_multimodels(M1, M2, nv, ns, c.budget)
    verdict = {True: "true", False: "false", None: "unknown"}[r.verdict]
    w = None
    if r.verdict is False and r.details:
        d = r.details[0]
        if d.hypothesis is not None:
            w = {"context": list(d.context.variables), "hypothesis": folgeo.format_formula(d.hypothesis),
                 "consequence": folgeo.format_formula(d.consequence), "holds_in": d.holds_in}
    lines = [f"{rest[0]} and {rest[1]}: geometric equivalence {verdict} ({r.reason})"]
    if w:
        lines.append(f"  from {w['hypothesis']} follows {w['consequence']} only in model {w['holds_in']}")
    return Outcome({"verdict": verdict, "bounds": {"variables": nv, "size": ns}}, lines,
                   OK if r.verdict else NEGATIVE, w)


COMMANDS: dict[str, Callable[[Ctx], Outcome]] = {
    "validate": cmd_validate, "homs": cmd_homs, "aut": cmd_aut, "solve": cmd_solve, "closure": cmd_closure,
    "lattice": cmd_lattice, "stable": cmd_stable, "geq": cmd_geq, "minimize": cmd_minimize, "coord": cmd_coord,
    "zd": cmd_zd, "domain": cmd_domain, "cd": cmd_cd, "nilpotent": cmd_nilpotent, "spec": cmd_spec,
    "eval": cmd_eval, "elem": cmd_elem, "define": cmd_define, "galois": cmd_galois, "kb": cmd_kb,
}


# ---------------------------------------------------------------------------
# Entry point


def _bounds(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(",")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError("bounds are VARS,SIZE, e.g. 1,3") from None


def _cap(text: str) -> tuple[str, int]:
    key, _, value = text.partition("=")
    if key not in DEFAULT_CAPS or not value.isdigit():
        raise argparse.ArgumentTypeError(f"caps are KIND=N with KIND in {', '.join(sorted(DEFAULT_CAPS))}")
    return key, int(value)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage().strip()}\n{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="uag", description="Workbench for universal algebraic geometry over finite algebras.",
                epilog=f"Budget caps may also be set with {ENV_VAR}=kind=n,...  "
                       "Exit codes: 0 ok, 1 negative decision, 2 diagnostics, 3 budget exceeded.")
    p.add_argument("-f", "--file", action="append", default=[], help="workspace source (.uag); '-' reads stdin")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--max-points", type=int, help="cap on the size of one point space")
    p.add_argument("--max-subsets", type=int, help="cap on subsets and closed sets scanned")
    p.add_argument("--max-formulas", type=int, help="cap on formula search candidates")
    p.add_argument("--cap", type=_cap, action="append", default=[], help="any budget cap, KIND=N")
    p.add_argument("--budget", type=int, help="formula budget for 'define'")
    p.add_argument("--max-size", type=int, default=7, help="largest formula size for 'define'")
    p.add_argument("--zariski", action="store_true")
    p.add_argument("--level")
    p.add_argument("--element")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--bounds", type=_bounds, default=(1, 3), help="VARS,SIZE for 'kb geq'")
    p.add_argument("--version", action="version", version=f"uag {__version__}")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("args", nargs="*")
    return p


def _clean_args(raw: Sequence[str]) -> list[str]:
    out = []
    for a in raw:
        for piece in a.replace("(", " ").replace(")", " ").replace(",", " ").split():
            if piece not in FILLER:
                out.append(piece)
    return out


def _read_sources(files: Sequence[str], stdin) -> list[tuple[str, str]]:
    out = []
    for f in files:
        if f == "-":
            out.append(("<stdin>", stdin.read()))
        else:
            with open(f, encoding="utf-8") as fh:
                out.append((f, fh.read()))
    return out


def _emit(opts, out, payload: dict, lines: list[str]) -> None:
    if opts.json:
        out.write(json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n")
    else:
        out.write("\n".join(lines) + "\n")


def run(argv: Sequence[str], stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        opts = parser.parse_intermixed_args(list(argv))
    except UsageError as exc:
        stderr.write(str(exc) + "\n")
        return DIAGNOSTICS
    except SystemExit as exc:           # --help / --version
        return int(exc.code or 0)
    try:
        budget = Budget()
    except ValueError as exc:
        stderr.write(f"uag: {exc}\n")
        return DIAGNOSTICS
    for key, flag in (("points", opts.max_points), ("subsets", opts.max_subsets),
                      ("formulas", opts.max_formulas), ("formulas", opts.budget)):
        if flag is not None:
            budget.caps[key] = flag
    for key, value in opts.cap:
        budget.caps[key] = value
    base = {"command": opts.command, "inputs": {"files": list(opts.file), "args": list(opts.args)},
            "version": __version__}
    try:
        ws = parse_workspace(_read_sources(opts.file, stdin))
    except DslError as exc:
        _emit(opts, stdout, {**base, "result": None, "diagnostics": [d.to_json() for d in exc.diagnostics],
                             "budget": budget.report()}, [d.format() for d in exc.diagnostics])
        return DIAGNOSTICS
    except OSError as exc:
        stderr.write(f"uag: cannot read source: {exc}\n")
        return DIAGNOSTICS
    ctx = Ctx(ws, budget, opts, _clean_args(opts.args))
    try:
        outcome = COMMANDS[opts.command](ctx)
    except UsageError as exc:
        stderr.write(str(exc) + "\n")
        return DIAGNOSTICS
    except BudgetExceeded as exc:
        _emit(opts, stdout, {**base, "result": None, "error": str(exc), "budget": budget.report()},
              [f"uag: {exc}"])
        return BUDGET
    except (ValueError, TypeError, KeyError) as exc:
        stderr.write(f"uag: {exc}\n")
        return DIAGNOSTICS
    payload = {**base, "result": outcome.result, "budget": budget.report()}
    if outcome.witness is not None:
        payload["witness"] = outcome.witness
    _emit(opts, stdout, payload, outcome.text)
    return outcome.code


def main(argv: Sequence[str] | None = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
