"""Acceptance suite: one test per criterion, each run against its time limit.

Every test prints a single ``criterion N [PASS|FAIL]`` line.  Run with
``pytest tests/test_acceptance.py -v`` or directly as a script.
"""

from __future__ import annotations

import itertools
import json
import re
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from uag.budget import Budget, BudgetExceeded
from uag.corpus import (alternating_group, binary_relation_signature, cyclic_group, direct_product,
                        group_signature, small_groups, small_omega_groups, symmetric_group, trivial_group,
                        zero_ring, zn_ring)
from uag.dsl import DslError, parse_workspace, print_workspace
from uag.eqgeo import (EquationSystem, closure, geom_equivalent_finite, is_closed, is_stable, point_in_closure,
                       solutions, term_functions)
from uag.folgeo import (Eq, Exists, Model, Not, And, aut_of_model, definable_sets, eval_formula, exists_set,
                        galois_group, is_elementary, solutions_f, verify_galois_closure)
from uag.kbase import Multimodel, kb_equivalent, kb_isomorphic
from uag.omega import (OmegaGroup, check_cd, group_no_zero_divisor_criterion, is_antiabelian, is_domain,
                       is_strictly_nilpotent, is_zero_divisor, stability_cross_check, zero_divisors)
from uag.sigcore import FiniteAlgebra, product_algebra
from uag.space import PointSet, all_points
from uag.terms import Equation, Var, enumerate_terms

from oracles import (closure_by_terms, ctx, eval_naive, invariant_by_perms, magma_signature, model_automorphisms,
                     random_formula, random_small_algebra, term_table, unary_signature)

ROOT = Path(__file__).resolve().parent.parent
Z2, Z3, Z4 = cyclic_group(2), cyclic_group(3), cyclic_group(4)
V4 = direct_product(Z2, Z2, name="Z2xZ2")
S3 = symmetric_group(3)


def run_criterion(number: int, title: str, limit: float, check, capsys=None) -> None:
    start = time.perf_counter()
    failure = None
    try:
        check()
    except AssertionError as exc:
        failure = str(exc).splitlines()[0] if str(exc) else "assertion failed"
    except Exception as exc:
        failure = f"{type(exc).__name__}: {exc}"
    elapsed = time.perf_counter() - start
    ok = failure is None and elapsed < limit
    line = f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {elapsed:.2f}s (limit {limit:g}s)"
    if failure:
        line += f" - {failure}"
    if capsys is not None:
        with capsys.disabled():
            print("\n" + line)
    else:
        print(line)
    assert failure is None, line
    assert elapsed < limit, line


# ---------------------------------------------------------------------------
# 1. Galois laws


class GaloisInstance:
    """A point space with its term functions; T are sets of index pairs of term functions."""

    def __init__(self, H: FiniteAlgebra, k: int):
        while True:
            try:
                self.context = ctx(k, H.sort)
                self.ra = term_functions(self.context, H, Budget().with_caps(rows=64))
                break
            except BudgetExceeded:
                k -= 1
        self.H = H
        self.space = all_points(self.context, H)
        self.rows = self.ra.rows[H.sort].reshape(-1, self.space.n)
        self.m = self.rows.shape[0]
        self._terms = {}

    def term(self, i: int):
        if i not in self._terms:
            self._terms[i] = self.ra.term(self.H.sort, i)
        return self._terms[i]

    def solve(self, pairs) -> np.ndarray:
        """T′ through the library's equation solver."""
        eqs = tuple(Equation(self.term(i), self.term(j)) for i, j in sorted(pairs))
        return solutions(EquationSystem(self.context, eqs), self.H).to_bool()

    def prime(self, flags: np.ndarray) -> np.ndarray:
        """A′ as a matrix: term functions i, j agree on every point of A."""
        cols = self.rows[:, flags]
        return (cols[:, None, :] == cols[None, :, :]).all(axis=2)

    def closure(self, flags: np.ndarray) -> np.ndarray:
        return closure(PointSet.from_bool(self.space, flags)).to_bool()

    @staticmethod
    def span(M: np.ndarray) -> set:
        """Pairs generating the equivalence relation M."""
        if M.size == 0:
            return set()
        reps = M.argmax(axis=1)
        return {(int(reps[i]), i) for i in range(len(M)) if reps[i] != i}

    def contains(self, M: np.ndarray, pairs) -> bool:
        return all(M[i, j] for i, j in pairs)


def galois_pool(rng: np.random.Generator) -> FiniteAlgebra:
    fixed = [trivial_group(), Z2, Z3, Z4, V4, zn_ring(2), zn_ring(3), zn_ring(4), zero_ring(4)]
    if rng.random() < 0.5:
        return fixed[int(rng.integers(len(fixed)))]
    return random_small_algebra(rng)


def check_galois_instance(rng: np.random.Generator) -> None:
    G = GaloisInstance(galois_pool(rng), int(rng.integers(3)))
    n, m = G.space.n, G.m

    def pts():
        return rng.random(n) < rng.random()

    def pairs(count):
        if m == 0:
            return set()
        return {tuple(sorted((int(rng.integers(m)), int(rng.integers(m))))) for _ in range(count)}

    name = f"{G.H.name} over {G.context.name}"
    T1, A1 = pairs(int(rng.integers(0, 4))), pts()
    T2, A2 = T1 | pairs(int(rng.integers(0, 3))), A1 | pts()
    S1, S2 = G.solve(T1), G.solve(T2)
    P1, P2 = G.prime(A1), G.prime(A2)
    # antitone in both directions
    assert not (S2 & ~S1).any(), f"T-antitone fails on {name}"
    assert not (P2 & ~P1).any(), f"A-antitone fails on {name}"
    # the adjunction A ⊆ T′ ⇔ T ⊆ A′
    assert (not (A1 & ~S1).any()) == G.contains(P1, T1), f"adjunction fails on {name}"
    # closure: extensive, idempotent, and equal to A″ and to the term oracle
    C = G.closure(A1)
    assert not (A1 & ~C).any() and (G.closure(C) == C).all(), f"closure laws fail on {name}"
    assert (G.solve(G.span(P1)) == C).all(), f"closure differs from A'' on {name}"
    assert (closure_by_terms(PointSet.from_bool(G.space, A1), 0, {G.H.sort: G.rows}) == C).all()
    assert [point_in_closure(i, PointSet.from_bool(G.space, A1)) for i in range(n)] == C.tolist()
    TT = G.prime(S1)
    assert G.contains(TT, T1) and (G.solve(G.span(TT)) == S1).all(), f"T'' laws fail on {name}"
    # families
    r = int(rng.integers(2, 4))
    As = [pts() for _ in range(r)]
    core = pairs(int(rng.integers(0, 3)))
    Ts = [core | pairs(int(rng.integers(0, 3))) for _ in range(r)]
    primes = [G.prime(A) for A in As]
    sols = [G.solve(T) for T in Ts]
    union_A = np.logical_or.reduce(As)
    meet_A = np.logical_and.reduce(As)
    # 1. (∪A)′ = ∩A′     2. (∪T)′ = ∩T′
    assert (G.prime(union_A) == np.logical_and.reduce(primes)).all(), f"formula 1 fails on {name}"
    assert (G.solve(set().union(*Ts)) == np.logical_and.reduce(sols)).all(), f"formula 2 fails on {name}"
    # 3. ∪T′ ⊆ (∩T)′     4. ∪A′ ⊆ (∩A)′
    meet_T = set.intersection(*Ts)
    assert not (np.logical_or.reduce(sols) & ~G.solve(meet_T)).any(), f"formula 3 fails on {name}"
    assert not (np.logical_or.reduce(primes) & ~G.prime(meet_A)).any(), f"formula 4 fails on {name}"
    # 5. closed T: (∪T′)″ = (∩T)′
    closed_T = [G.prime(S) for S in sols]
    lhs5 = G.closure(np.logical_or.reduce([G.solve(G.span(M)) for M in closed_T]))
    rhs5 = G.solve(G.span(np.logical_and.reduce(closed_T)))
    assert (lhs5 == rhs5).all(), f"formula 5 fails on {name}"
    # 6. closed A: (∪A′)″ = (∩A)′
    closed_A = [G.closure(A) for A in As]
    gens = set().union(*(G.span(G.prime(A)) for A in closed_A))
    lhs6 = G.prime(G.solve(gens))
    rhs6 = G.prime(np.logical_and.reduce(closed_A))
    assert (lhs6 == rhs6).all(), f"formula 6 fails on {name}"


def criterion_1():
    rng = np.random.default_rng(20240601)
    for _ in range(200):
        check_galois_instance(rng)


def test_criterion_1_galois_laws(capsys):
    run_criterion(1, "Galois laws on 200 random instances", 10, criterion_1, capsys)


# ---------------------------------------------------------------------------
# 2. Closure against the depth-4 term oracle


def criterion_2():
    spaces = 0
    for H in (Z2, Z3, Z4, V4, S3):
        for k in range(4):
            if H.size("g") ** k > 9:
                break
            sp = all_points(ctx(k), H)
            table = term_table(sp, 4)
            # depth 4 already reaches every term function here, so the oracle is exact
            assert all(len(table[s]) == len(v) for s, v in term_table(sp, 5).items()), f"{H.name} X{k} unsaturated"
            for mask in range(1 << sp.n):
                A = PointSet(sp, mask)
                want = closure_by_terms(A, 4, table).tolist()
                got = [point_in_closure(i, A) for i in range(sp.n)]
                assert got == want, f"{H.name} X{k} subset {mask}: {got} != {want}"
            spaces += 1
    assert spaces == 13, f"{spaces} spaces checked"


def test_criterion_2_closure_oracle(capsys):
    run_criterion(2, "pointInClosure equals the depth-4 term oracle", 60, criterion_2, capsys)


# ---------------------------------------------------------------------------
# 3. Stability


def one_element_algebras() -> list[FiniteAlgebra]:
    one = {"g": ["0"]}
    return [trivial_group(), zn_ring(1),
            FiniteAlgebra(magma_signature(), one, {"mul": np.zeros((1, 1), dtype=np.int64)}, "M1"),
            FiniteAlgebra(unary_signature(), one, {"f": np.zeros(1, dtype=np.int64)}, "U1")]


def criterion_3():
    r = is_stable(Z2, ctx(2))
    assert not r.stable, "Z2 over {x,y} reported stable"
    a, b = r.counterexample
    U = r.union
    assert len(U) == 3 and U.mask == (a | b).mask
    assert is_closed(a) and is_closed(b) and not is_closed(U)
    for S in (a, b):
        assert closure_by_terms(S, 4).tolist() == S.to_bool().tolist()
    assert closure_by_terms(U, 4).tolist() != U.to_bool().tolist()
    for H in one_element_algebras():
        for k in range(4):
            assert is_stable(H, ctx(k, H.sort)).stable, f"{H.name} X{k} not stable"
    cc = stability_cross_check(OmegaGroup.of(S3), variables=1)
    assert cc.stable is False and not cc.domain and cc.cd and cc.consistent, f"S3 cross-check: {cc}"


def test_criterion_3_stability(capsys):
    run_criterion(3, "stability examples and the S3 cross-check", 5, criterion_3, capsys)


# ---------------------------------------------------------------------------
# 4. Geometric equivalence


def equation_closure_system_agrees(vals1: np.ndarray, vals2: np.ndarray) -> bool:
    """Is every point kernel of the first algebra an intersection of point kernels of the second?

    ``vals[t, p]`` is the value of term t at point p.  A kernel is the
    partition of terms by value; the consequence operator on equations is
    determined by the family of kernels, so this compares closures of
    every equation set over the sampled terms.
    """
    n2 = vals2.shape[1]
    for p in range(vals1.shape[1]):
        v1 = vals1[:, p]
        k1 = len(np.unique(v1))
        coarser = [q for q in range(n2) if len(np.unique(v1 * 64 + vals2[:, q])) == k1]
        if not coarser:
            if k1 != 1:
                return False
            continue
        joint = vals2[:, coarser]
        if len(np.unique(joint, axis=0)) != k1:
            return False
    return True


def term_values(terms, H: FiniteAlgebra, context) -> np.ndarray:
    sp = all_points(context, H)
    memo = {}

    def value(t):
        if t not in memo:
            if isinstance(t, Var):
                memo[t] = sp.columns[t.name]
            elif not t.args:
                memo[t] = np.full(sp.n, int(H.tables[t.op][()]), dtype=np.int64)
            else:
                memo[t] = H.tables[t.op][tuple(value(a) for a in t.args)]
        return memo[t]

    return np.stack([value(t) for t in terms])


def criterion_4():
    corpus = small_groups(6)
    for H in corpus:
        P, _ = product_algebra([H, H])
        assert geom_equivalent_finite(H, P), f"{H.name} not equivalent to its square"
    assert not geom_equivalent_finite(Z2, Z4)
    X2 = ctx(2)
    terms = enumerate_terms(group_signature(), X2, "g", 3)
    values = [term_values(terms, H, X2) for H in corpus]
    # terms with equal values at every point of every algebra carry no extra information
    _, keep = np.unique(np.concatenate(values, axis=1), axis=0, return_index=True)
    values = [v[np.sort(keep)] for v in values]
    for (i, H1), (j, H2) in itertools.product(enumerate(corpus), repeat=2):
        oracle = (equation_closure_system_agrees(values[i], values[j])
                  and equation_closure_system_agrees(values[j], values[i]))
        assert geom_equivalent_finite(H1, H2) == oracle, f"{H1.name} vs {H2.name}: oracle says {oracle}"


def test_criterion_4_geometric_equivalence(capsys):
    run_criterion(4, "geometric equivalence against the bounded closure oracle", 120, criterion_4, capsys)


# ---------------------------------------------------------------------------
# 5. Omega-groups


def criterion_5():
    for G in small_groups(10):
        H = OmegaGroup.of(G)
        crit, dom, anti = group_no_zero_divisor_criterion(H), is_domain(H), is_antiabelian(H)
        assert crit == dom == anti, f"{G.name}: criterion {crit}, domain {dom}, antiabelian {anti}"
    for R in small_omega_groups():
        H = OmegaGroup.of(R)
        assert is_domain(H) == is_antiabelian(H), f"{R.name}: domain and antiabelian differ"
    assert zero_divisors(OmegaGroup.of(S3)), "S3 has no zero divisors"
    assert zero_divisors(OmegaGroup.of(alternating_group(5))) == [], "A5 has zero divisors"
    Z4r = OmegaGroup.of(zn_ring(4))
    assert is_zero_divisor(Z4r, 2) and is_strictly_nilpotent(Z4r, 2)
    assert check_cd(Z4r)


def test_criterion_5_omega_groups(capsys):
    run_criterion(5, "zero divisors, antiabelian and CD", 120, criterion_5, capsys)


# ---------------------------------------------------------------------------
# 6. Quantifier axioms and invariance of solution sets


def fol_models() -> list[Model]:
    edge = Model(V4, binary_relation_signature(V4), {"r": frozenset({(0, 1), (1, 0), (2, 3)})}, "Edge")
    return [Model.of(Z3, "P1", p=["1"]), edge]


def criterion_6():
    rng = np.random.default_rng(7)
    x, y, z = Var("x", "g"), Var("y", "g"), Var("z", "g")
    for model in fol_models():
        X2, X3 = ctx(2), ctx(3)
        sp = all_points(X2, model.algebra)
        sorts = dict(X2.variables)
        perms = model_automorphisms(model)
        group = aut_of_model(model)
        assert {d.maps["g"] for d in group} == perms, f"Aut({model.name}) differs from brute force"
        val = lambda u: eval_formula(u, model, sp)
        full = sp.full().mask
        assert val(Eq(x, x)).mask == full and val(Eq(x, y)).mask == val(Eq(y, x)).mask
        sp3 = all_points(X3, model.algebra)
        d_xy = eval_formula(Eq(x, y), model, sp3)
        via_z = exists_set(eval_formula(Eq(x, z), model, sp3) & eval_formula(Eq(z, y), model, sp3), "z")
        assert d_xy.mask == via_z.mask
        prev = Eq(x, y)
        for _ in range(500):
            u = random_formula(rng, model, X2)
            A, B = val(u), val(prev)
            assert A.to_bool().tolist() == [eval_naive(u, model, sp.assignment(i), sorts) for i in range(sp.n)]
            for v in ("x", "y"):
                E = exists_set(A, v)
                assert exists_set(sp.empty(), v).mask == 0
                assert A.issubset(E) and exists_set(E, v).mask == E.mask
                assert exists_set(A & exists_set(B, v), v).mask == (E & exists_set(B, v)).mask
                assert val(Exists(v, u)).mask == E.mask
            assert exists_set(exists_set(A, "x"), "y").mask == exists_set(exists_set(A, "y"), "x").mask
            d = val(Eq(x, y))
            assert (exists_set(d & A, "x") & exists_set(d & A.complement(), "x") & d).mask == 0
            assert val(Not(u)).mask == A.complement().mask and val(And(u, prev)).mask == (A & B).mask
            S = solutions_f([u, prev], model, X2)
            assert S.mask == (A & B).mask
            assert invariant_by_perms(S, perms), f"solution set not Aut-invariant in {model.name}"
            prev = u


def test_criterion_6_quantifiers_and_invariance(capsys):
    run_criterion(6, "quantifier axioms and Aut(f)-invariance on 500 formulas per model", 30, criterion_6, capsys)


# ---------------------------------------------------------------------------
# 7. Finite Galois correspondence


def corpus_models() -> list[Model]:
    out = []
    for path in sorted((ROOT / "workspaces").glob("*.uag")):
        ws = parse_workspace(path.read_text(), str(path))
        out += list(ws.models.values())
        for mm in ws.multimodels.values():
            out += list(mm.instances)
    return out


def criterion_7():
    for G in (Z2, Z3, V4):
        rep = verify_galois_closure(G, 2)
        assert rep.ok, f"Galois closure fails on {G.name}: {rep}"
    models = corpus_models()
    assert len(models) >= 12
    subsets = 0
    for m in models:
        G, s = m.algebra, m.algebra.sort
        perms = model_automorphisms(m)
        aut = aut_of_model(m)
        assert {d.maps[s] for d in aut} == perms, f"Aut({m.name}) differs from brute force"
        for k in (1, 2):
            R = definable_sets(m, ctx(k, s))
            back = {d.maps[s] for d in galois_group(R, G)}
            assert back == perms, f"R_f' != Aut(f) for {m.name} at X{k}"
        for k in range(4):
            if G.size(s) ** k > 9:
                break
            c = ctx(k, s)
            R = definable_sets(m, c)
            for mask in range(1 << R.space.n):
                A = PointSet(R.space, mask)
                lib, syn, brute = is_elementary(A, m, aut), R.contains(A), invariant_by_perms(A, perms)
                assert lib == syn == brute, f"{m.name} X{k} subset {mask}: {lib}, {syn}, {brute}"
                subsets += 1
    assert subsets > 5000


def test_criterion_7_galois_krasner(capsys):
    run_criterion(7, "Galois closure, R_f' = Aut(f), elementary = invariant", 120, criterion_7, capsys)


# ---------------------------------------------------------------------------
# 8. Knowledge-base decisions


def criterion_8():
    M1 = Multimodel.of(Z3, "P1", f={"p": ["1"]})
    M2 = Multimodel.of(Z3, "P2", f={"p": ["2"]})
    assert kb_isomorphic(M1, M2)
    M0 = Multimodel.of(Z3, "P0", f={"p": ["0"]})
    MA = Multimodel.of(Z3, "PAll", f={"p": ["0", "1", "2"]})
    assert kb_equivalent(M0, MA) and not kb_isomorphic(M0, MA)
    ws = parse_workspace((ROOT / "workspaces" / "z3_kb.uag").read_text())
    corpus = list(ws.multimodels.values())
    assert len(corpus) == 6
    eq = {(a.name, b.name): kb_equivalent(a, b).verdict for a in corpus for b in corpus}
    for a in corpus:
        assert eq[a.name, a.name], f"{a.name} not equivalent to itself"
        for b in corpus:
            assert eq[a.name, b.name] == eq[b.name, a.name], f"asymmetric on {a.name}, {b.name}"
            assert not kb_isomorphic(a, b).verdict or eq[a.name, b.name]
            for c in corpus:
                assert not (eq[a.name, b.name] and eq[b.name, c.name]) or eq[a.name, c.name]


def test_criterion_8_knowledge_bases(capsys):
    run_criterion(8, "KB isomorphism and equivalence", 30, criterion_8, capsys)


# ---------------------------------------------------------------------------
# 9. Parser and JSON stability

JSON_COMMANDS = [
    ["-f", "z3_kb.uag", "kb", "equiv", "KB0", "KBAll"],
    ["-f", "z2.uag", "stable", "Z2", "X2"],
    ["-f", "z2.uag", "lattice", "X2", "Z2"],
    ["-f", "s3.uag", "zd", "S3"],
    ["-f", "z3_kb.uag", "eval", "SomeP", "in", "P1", "over", "X2"],
]

RUNNER = """
import io, sys
from uag.cli import run
for argv in {commands!r}:
    out = io.StringIO()
    run(argv + ["--json"], io.StringIO(), out, io.StringIO())
    sys.stdout.write(out.getvalue())
"""


def criterion_9():
    golden = sorted((ROOT / "workspaces").glob("*.uag"))
    assert len(golden) >= 10
    for path in golden:
        ws = parse_workspace(path.read_text(), str(path))
        text = print_workspace(ws)
        assert parse_workspace(text).structure() == ws.structure(), f"{path.name} does not round-trip"
    invalid = sorted((ROOT / "tests" / "invalid").glob("*.uag"))
    assert len(invalid) == 20
    for path in invalid:
        text = path.read_text()
        line, col, kind = re.match(r"# expect: (\d+):(\d+) (\w+)", text).groups()
        try:
            parse_workspace(text, str(path))
        except DslError as exc:
            d = exc.diagnostics[0]
            assert (d.line, d.col, d.kind) == (int(line), int(col), kind), f"{path.name}: {d.format()}"
        else:
            raise AssertionError(f"{path.name} was accepted")
    commands = [[str(ROOT / "workspaces" / a) if a.endswith(".uag") else a for a in argv] for argv in JSON_COMMANDS]
    script = RUNNER.format(commands=commands)
    outs = [subprocess.run([sys.executable, "-c", script], capture_output=True, check=True).stdout
            for _ in range(2)]
    assert outs[0] == outs[1], "JSON output differs between runs"
    lines = outs[0].decode().splitlines()
    assert len(lines) == len(commands) and all(json.loads(s)["command"] for s in lines)


def test_criterion_9_parser(capsys):
    run_criterion(9, "golden round-trip, positioned diagnostics, stable JSON", 5, criterion_9, capsys)


CRITERIA = [
    (1, "Galois laws on 200 random instances", 10, criterion_1),
    (2, "pointInClosure equals the depth-4 term oracle", 60, criterion_2),
    (3, "stability examples and the S3 cross-check", 5, criterion_3),
    (4, "geometric equivalence against the bounded closure oracle", 120, criterion_4),
    (5, "zero divisors, antiabelian and CD", 120, criterion_5),
    (6, "quantifier axioms and Aut(f)-invariance on 500 formulas per model", 30, criterion_6),
    (7, "Galois closure, R_f' = Aut(f), elementary = invariant", 120, criterion_7),
    (8, "KB isomorphism and equivalence", 30, criterion_8),
    (9, "golden round-trip, positioned diagnostics, stable JSON", 5, criterion_9),
]


if __name__ == "__main__":
    failed = 0
    for number, title, limit, check in CRITERIA:
        try:
            run_criterion(number, title, limit, check)
        except AssertionError:
            failed += 1
    sys.exit(1 if failed else 0)
