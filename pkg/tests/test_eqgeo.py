from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uag.budget import Budget, BudgetExceeded
from uag.corpus import (alternating_group, cyclic_group, direct_product, small_groups, symmetric_group,
                        trivial_group, zn_ring)
from uag.eqgeo import (EquationSystem, admissible, admissible_dual, closure, coordinate_algebra,
                       eq_in_closure, geom_equivalent_finite, is_closed, is_stable, list_closed_sets,
                       minimize_system, point_in_closure, preimage_under, separation_failure, solutions,
                       term_functions, zariski_closed_sets)
from uag.sigcore import enumerate_homs, find_isomorphism, product_algebra, subalgebra_generated
from uag.space import PointSet, all_points
from uag.terms import App, Equation, Substitution, Var, VarContext, enumerate_terms

from oracles import (closed_sets_by_terms, closure_by_terms, ctx, magma_signature, separates,
                     solutions_by_points)
from uag.sigcore import FiniteAlgebra

Z2, Z3, Z4 = cyclic_group(2), cyclic_group(3), cyclic_group(4)
V4 = direct_product(Z2, Z2, name="Z2xZ2")
S3 = symmetric_group(3)
x, y = Var("x", "g"), Var("y", "g")
e = App("e", (), "g")


def mul(a, b):
    return App("mul", (a, b), "g")


def pts(space, *points):
    return PointSet.from_indices(space, [space.index(p) for p in points])


def test_solutions_examples():
    X1 = ctx(1)
    full = all_points(X1, Z2).full()
    assert solutions(EquationSystem(X1), Z2).mask == full.mask
    assert solutions(EquationSystem(X1, (Equation(x, x),)), Z2).mask == full.mask
    assert solutions(EquationSystem(X1, (Equation(x, e),)), Z2).indices() == [0]


def test_point_in_closure_examples():
    sp1 = all_points(ctx(1), Z2)
    assert not point_in_closure(1, pts(sp1, (0,)))
    sp2 = all_points(ctx(2), Z2)
    three = pts(sp2, (0, 0), (0, 1), (1, 0))
    assert point_in_closure(sp2.index((1, 1)), three)
    assert closure(three).mask == sp2.full().mask
    assert all(point_in_closure(i, three) for i in three)


@pytest.mark.parametrize("H", [Z2, Z3, Z4, V4, S3, trivial_group()])
def test_closure_of_empty_is_zero_point(H):
    sp = all_points(ctx(2), H) if H.size("g") <= 3 else all_points(ctx(1), H)
    zero = sp.index([0] * len(sp.context))
    assert closure(sp.empty()).indices() == [zero]


def test_closure_of_empty_without_constants():
    # mul(a, a) != a everywhere, so no point makes every term agree
    H = FiniteAlgebra(magma_signature(), {"g": ["a", "b"]}, {"mul": np.array([[1, 0], [1, 0]])}, "Swap")
    assert len(closure(all_points(ctx(1), H).empty())) == 0


@pytest.mark.parametrize("H,k", [(Z2, 1), (Z2, 2), (Z2, 3), (Z3, 1), (Z3, 2), (Z4, 1), (V4, 1), (S3, 1)])
def test_closed_sets_match_term_oracle(H, k):
    lat = list_closed_sets(ctx(k), H)
    assert {s.mask for s in lat.sets} == closed_sets_by_terms(lat.space, 4)


@pytest.mark.parametrize("H,k,count", [(Z2, 1, 2), (Z2, 2, 5), (Z2, 3, 16), (Z3, 2, 6), (Z4, 1, 3),
                                       (S3, 1, 4), (zn_ring(4), 1, 8)])
def test_closed_set_counts(H, k, count):
    assert len(list_closed_sets(ctx(k, H.sort), H)) == count


def test_lattice_operations():
    lat = list_closed_sets(ctx(2), Z2)
    for a, b in itertools.product(lat.sets, repeat=2):
        m = lat.meet(a, b)
        assert m in lat and m.mask == a.mask & b.mask
        assert lat.join(a, b).mask == closure(a | b).mask
    assert lat.space.full() in lat


def test_eq_in_closure_examples():
    X1 = ctx(1)
    T = EquationSystem(X1, (Equation(x, e),))
    assert eq_in_closure(T, Equation(x, e), Z2)
    assert eq_in_closure(T, Equation(mul(x, x), e), Z2)
    T4 = EquationSystem(X1, (Equation(mul(x, x), e),))
    assert not eq_in_closure(T4, Equation(x, e), Z4)


def test_stability():
    r = is_stable(Z2, ctx(2))
    assert not r
    a, b = r.counterexample
    assert len(r.union) == 3 and not is_closed(r.union)
    assert is_closed(a) and is_closed(b)
    for k in range(4):
        assert is_stable(trivial_group(), ctx(k))
    assert is_stable(S3, ctx(1))
    # a non-abelian simple group has no zero divisors, hence is stable
    assert is_stable(alternating_group(5), ctx(1))


def test_zariski_family():
    X2 = ctx(2)
    fam = zariski_closed_sets(X2, Z2)
    masks = {s.mask for s in fam}
    sp = fam[0].space
    three = pts(sp, (0, 0), (0, 1), (1, 0))
    assert three.mask in masks and not is_closed(three)
    assert sp.full().mask in masks and len(fam) == 9
    stable_lat = list_closed_sets(ctx(1), Z3)
    assert {s.mask for s in zariski_closed_sets(ctx(1), Z3)} - {0} <= {s.mask for s in stable_lat.sets}


def test_coordinate_algebra():
    sp = all_points(ctx(1), Z2)
    K = coordinate_algebra(sp.full())
    assert K.algebra.size("g") == 2
    one = coordinate_algebra(pts(all_points(ctx(1), Z4), (2,)))
    S, _ = subalgebra_generated(Z4, {"g": [2]})
    assert find_isomorphism(one.algebra, S) is not None
    with pytest.raises(ValueError):
        coordinate_algebra(sp.empty())


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([(Z2, 2), (Z3, 2), (Z4, 1), (S3, 1), (V4, 1)]), st.integers(1, 2**36 - 1))
def test_coordinate_algebra_points_equal_closure(case, bits):
    H, k = case
    sp = all_points(ctx(k), H)
    A = PointSet(sp, bits % (1 << sp.n) or 1)
    K = coordinate_algebra(A)
    homs = enumerate_homs(K.algebra, H)
    got = sorted(sp.index([h("g", K.generators[v]) for v in sp.context.names]) for h in homs)
    assert got == closure(A).indices()


@settings(max_examples=40, deadline=None)
@given(st.sampled_from([(Z2, 3), (Z3, 2), (Z4, 1), (S3, 1), (V4, 1)]), st.integers(0, 2**36 - 1))
def test_closure_laws_and_oracle(case, bits):
    H, k = case
    sp = all_points(ctx(k), H)
    A = PointSet(sp, bits % (1 << sp.n))
    C = closure(A)
    assert A.issubset(C)
    assert closure(C).mask == C.mask
    assert C.to_bool().tolist() == closure_by_terms(A, 4).tolist()
    assert [point_in_closure(i, A) for i in range(sp.n)] == C.to_bool().tolist()


terms2 = enumerate_terms(S3.signature, ctx(2), "g", 2)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, len(terms2) - 1), st.integers(0, len(terms2) - 1)), max_size=4),
       st.sampled_from([Z2, Z3, Z4]))
def test_solutions_match_pointwise_evaluation(pairs, H):
    T = EquationSystem(ctx(2), tuple(Equation(terms2[i], terms2[j]) for i, j in pairs))
    sol = solutions(T, H)
    assert sol.to_bool().tolist() == solutions_by_points(T.equations, sol.space).tolist()
    assert is_closed(sol)
    small = minimize_system(T, H)
    assert solutions(small, H).mask == sol.mask
    assert set(small.equations) <= set(T.equations)
    # no equation can be dropped from the result
    for i in range(len(small)):
        rest = EquationSystem(T.context, small.equations[:i] + small.equations[i + 1:])
        assert solutions(rest, H).mask != sol.mask


def test_minimize_examples():
    X1 = ctx(1)
    T = EquationSystem(X1, (Equation(x, e), Equation(mul(x, x), e)))
    assert minimize_system(T, Z4).equations == (Equation(x, e),)
    dup = EquationSystem(X1, (Equation(mul(x, x), e), Equation(mul(x, x), e)))
    assert len(minimize_system(dup, Z4)) == 1
    single = EquationSystem(X1, (Equation(mul(x, x), e),))
    assert minimize_system(single, Z4) == single


@pytest.mark.parametrize("H1,H2,expected", [(Z2, Z4, False), (Z2, V4, True), (Z3, Z2, False), (Z4, Z4, True),
                                            (S3, Z2, False), (Z2, direct_product(Z2, Z4), False)])
def test_geometric_equivalence(H1, H2, expected):
    assert geom_equivalent_finite(H1, H2) == expected
    assert expected == (separates(H1, H2) and separates(H2, H1))


@pytest.mark.parametrize("H", [Z2, Z3, Z4, V4, S3, zn_ring(4)])
def test_equivalent_to_square(H):
    P, _ = product_algebra([H, H])
    assert geom_equivalent_finite(H, P)
    assert separation_failure(P, H) is None


def test_geometric_equivalence_is_an_equivalence():
    corpus = small_groups(6)
    rel = {(a.name, b.name): geom_equivalent_finite(a, b) for a in corpus for b in corpus}
    for a in corpus:
        assert rel[a.name, a.name]
        for b in corpus:
            assert rel[a.name, b.name] == rel[b.name, a.name]
            for c in corpus:
                if rel[a.name, b.name] and rel[b.name, c.name]:
                    assert rel[a.name, c.name]


def test_admissible_examples():
    X1, Y = ctx(1), VarContext.of(("y", "g"), name="Y")
    s = Substitution.build(Y, X1, {"y": mul(x, x)})
    A = all_points(X1, Z2).full()
    B = pts(all_points(Y, Z2), (0,))
    r = admissible(s, A, B, dual_check=True)
    assert r and r.induced == {0: 0, 1: 0}
    assert admissible(s, A, all_points(Y, Z2).full())
    ident = Substitution.identity(X1)
    assert admissible(ident, pts(A.space, (0,)), A)
    s4 = Substitution.build(Y, X1, {"y": x})
    assert not admissible(s4, A, B, dual_check=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, len(terms2) - 1), st.integers(0, 2**9 - 1), st.integers(0, 2**9 - 1))
def test_admissible_agrees_with_dual(i, a, b):
    X, Y = ctx(2), VarContext.of(("u", "g"), name="Y")
    s = Substitution.build(Y, X, {"u": terms2[i]})
    A = PointSet(all_points(X, Z3), a)
    B = closure(PointSet(all_points(Y, Z3), b % 8))
    assert bool(admissible(s, A, B)) == admissible_dual(s, A, B)


@pytest.mark.parametrize("H,k", [(Z4, 1), (Z2, 2), (Z3, 2), (S3, 1)])
def test_preimage_of_closed_under_endomorphism_is_closed(H, k):
    lat = list_closed_sets(ctx(k), H)
    for delta in enumerate_homs(H, H):
        for A in lat.sets:
            assert is_closed(preimage_under(delta.maps, A))


def test_budget_caps_point_space():
    with pytest.raises(BudgetExceeded):
        all_points(ctx(3), S3, Budget().with_caps(points=100))
    with pytest.raises(BudgetExceeded):
        list_closed_sets(ctx(2), Z3, Budget().with_caps(subsets=3))


def test_term_functions_cover_the_clone():
    ra = term_functions(ctx(2), Z3)
    assert ra.total() == 9
    sp = all_points(ctx(2), Z3)
    from uag.terms import eval_term_columns
    for i in range(ra.size("g")):
        t = ra.term("g", i)
        assert eval_term_columns(t, sp.columns, Z3, sp.n).tolist() == ra.rows["g"][i].tolist()
