from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uag.budget import Budget, BudgetExceeded
from uag.corpus import (cyclic_group, direct_product, small_groups, symmetric_group,
                        trivial_group, zn_ring)
from uag.sigcore import (CongruencePartition, FiniteAlgebra, Homomorphism, OpSymbol, Signature,
                         automorphism_group, closure_of, congruence_generated, enumerate_homs,
                         find_isomorphism, identity_hom, image_subalgebra, product_algebra,
                         quotient_algebra, subalgebra_generated, validate_algebra, all_set_maps)

from oracles import magma_signature, random_small_algebra

Z2, Z3, Z4 = cyclic_group(2), cyclic_group(3), cyclic_group(4)
V4 = direct_product(Z2, Z2, name="Z2xZ2")


def brute_homs(H1, H2):
    out = []
    for maps in all_set_maps(H1, H2):
        h = Homomorphism(H1, H2, maps)
        if h.preserves_operations():
            out.append(h.key())
    return sorted(out)


def test_group_tables_validate():
    for G in small_groups(10):
        assert validate_algebra(G) == [], G.name


def test_broken_inverse_is_reported():
    tables = dict(Z2.tables)
    tables["mul"] = np.array([[0, 1], [1, 1]])
    bad = FiniteAlgebra(Z2.signature, Z2.carriers, tables, "bad")
    kinds = {v.kind for v in validate_algebra(bad)}
    assert kinds == {"identity"}
    assert any("inv" in v.message for v in validate_algebra(bad))


def test_missing_row_is_not_total():
    sig = magma_signature()
    H = FiniteAlgebra.from_tables(sig, {"g": ["a", "b"]}, {"mul": {("a", "a"): "a", ("a", "b"): "b",
                                                                   ("b", "a"): "b"}})
    report = validate_algebra(H)
    assert [v.kind for v in report] == ["totality"]
    assert "mul(b, b)" in report[0].message


def test_signature_rejects_duplicates_and_unknown_sorts():
    with pytest.raises(ValueError):
        Signature(("g", "g"))
    with pytest.raises(ValueError):
        Signature(("g",), (OpSymbol("f", ("h",), "g"),))
    with pytest.raises(ValueError):
        Signature(("g",), (OpSymbol("f", ("g",), "g"), OpSymbol("f", (), "g")))


@pytest.mark.parametrize("H1,H2,count", [(Z2, Z2, 2), (Z3, Z2, 1), (Z2, Z4, 2), (Z4, Z2, 2), (Z4, V4, 4),
                                         (V4, Z4, 4), (Z3, Z3, 3), (V4, V4, 16)])
def test_hom_counts(H1, H2, count):
    homs = enumerate_homs(H1, H2)
    assert len(homs) == count
    assert [h.key() for h in homs] == brute_homs(H1, H2)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_homs_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    H1 = random_small_algebra(rng, 3)
    H2 = random_small_algebra(rng, 3)
    if H1.signature != H2.signature:
        H2 = H1
    assert [h.key() for h in enumerate_homs(H1, H2)] == brute_homs(H1, H2)


@pytest.mark.parametrize("H,order", [(trivial_group(), 1), (Z2, 1), (Z3, 2), (Z4, 2), (V4, 6),
                                     (symmetric_group(3), 6), (cyclic_group(5), 4), (zn_ring(4), 1)])
def test_automorphism_orders(H, order):
    A = automorphism_group(H)
    assert len(A) == order
    assert A.is_group()
    assert identity_hom(H) in A
    bijections = [h for h in brute_homs(H, H) if len(set(h[0])) == len(h[0])]
    assert len(bijections) == order


def test_product_and_isomorphism():
    P, proj = product_algebra([Z2, Z3])
    assert P.size("g") == 6
    assert validate_algebra(P) == []
    assert all(p.preserves_operations() for p in proj)
    assert find_isomorphism(P, cyclic_group(6)) is not None
    assert find_isomorphism(Z4, V4) is None
    h = find_isomorphism(Z4, Z4)
    assert h is not None and h.is_bijective()


def test_generation_and_subalgebras():
    assert closure_of(Z4, {"g": {2}})["g"] == {0, 2}
    assert closure_of(Z4, {})["g"] == {0}
    S, inc = subalgebra_generated(Z4, {"g": [2]})
    assert S.size("g") == 2 and inc.preserves_operations()
    assert find_isomorphism(S, Z2) is not None


def test_congruences_and_quotients():
    T = congruence_generated(Z4, [("g", 0, 2)])
    assert T.blocks("g") == [(0, 2), (1, 3)]
    assert congruence_generated(Z4, []).key() == CongruencePartition.equality(Z4).key()
    assert congruence_generated(Z4, [("g", 0, 1)]).key() == CongruencePartition.full(Z4).key()
    Q, pi = quotient_algebra(Z4, T)
    assert find_isomorphism(Q, Z2) is not None and pi.preserves_operations()
    Q1, _ = quotient_algebra(Z4, CongruencePartition.full(Z4))
    assert Q1.size("g") == 1
    Q0, _ = quotient_algebra(Z4, CongruencePartition.equality(Z4))
    assert find_isomorphism(Q0, Z4) is not None


@pytest.mark.parametrize("H1,H2", [(Z4, Z2), (V4, Z2), (symmetric_group(3), Z2), (Z4, Z4), (cyclic_group(6), Z3)])
def test_kernel_quotient_matches_image(H1, H2):
    for mu in enumerate_homs(H1, H2):
        K = mu.kernel()
        assert K.is_congruence()
        Q, _ = quotient_algebra(H1, K)
        I, _ = image_subalgebra(mu)
        assert find_isomorphism(Q, I) is not None


def test_budget_caps_hom_search():
    with pytest.raises(BudgetExceeded):
        enumerate_homs(V4, V4, Budget().with_caps(homs=3))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_products_of_valid_algebras_validate(seed):
    rng = np.random.default_rng(seed)
    G = small_groups(6)[int(rng.integers(6))]
    H = small_groups(6)[int(rng.integers(6))]
    P, proj = product_algebra([G, H])
    assert validate_algebra(P) == []
    for p in proj:
        assert p.preserves_operations() and p.is_surjective()
