from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uag.corpus import (alternating_group, cyclic_group, non_cd_omega_group, small_groups, small_omega_groups,
                        symmetric_group, trivial_group, zn_ring)
from uag.omega import (OmegaGroup, check_cd, derived_series, group_no_zero_divisor_criterion, ideal_generated,
                       is_abelian, is_antiabelian, is_domain, is_ideal, is_strictly_nilpotent,
                       is_weakly_nilpotent, is_zero_divisor, list_ideals, mutual_commutant, prime_ideals,
                       stability_cross_check, zero_divisors)
from uag.sigcore import enumerate_homs

S3 = OmegaGroup.of(symmetric_group(3))
Z4 = OmegaGroup.of(zn_ring(4))
SMALL = [OmegaGroup.of(H) for H in small_omega_groups()] + [OmegaGroup.of(G) for G in small_groups(8)]


def brute_cd(H: OmegaGroup) -> bool:
    for op in H.ops:
        k = len(op.args)
        for t in itertools.product(range(H.n), repeat=3 * k):
            x, y, z = t[:k], t[k:2 * k], t[2 * k:]
            xy = [H.plus(a, b) for a, b in zip(x, y)]
            lhs = H.omega_commutator(xy, z, op.name)
            rhs = H.plus(H.omega_commutator(x, z, op.name), H.omega_commutator(y, z, op.name))
            if lhs != rhs:
                return False
    return True


def additive_span(H: OmegaGroup, gens) -> tuple:
    out = {H.zero} | set(gens)
    while True:
        nxt = out | {H.plus(a, b) for a in out for b in out}
        if nxt == out:
            return tuple(sorted(out))
        out = nxt


def test_ring_omega_commutator_expansion():
    for a1, a2, b1, b2 in itertools.product(range(4), repeat=4):
        want = (a1 * b2 + b1 * a2) % 4
        assert Z4.omega_commutator((a1, a2), (b1, b2), "mul") == want
    assert Z4.omega_commutator((0, 0), (0, 0), "mul") == 0


def test_group_commutator_of_commuting_elements():
    G = OmegaGroup.of(cyclic_group(6))
    assert all(G.commutator(a, b) == G.zero for a in range(6) for b in range(6))


def test_generated_ideals():
    assert len(ideal_generated(S3, [S3.index("120")])) == 3
    assert ideal_generated(S3, []) == (S3.zero,)
    assert ideal_generated(Z4, [2]) == (0, 2)


@pytest.mark.parametrize("H", [h for h in SMALL if h.n <= 6])
def test_ideal_enumeration_methods_agree(H):
    by_subsets = list_ideals(H, "subsets")
    assert list_ideals(H, "principal") == by_subsets
    assert list_ideals(H, "congruences") == by_subsets
    assert all(is_ideal(H, U) for U in by_subsets)


def test_s3_ideals_and_commutants():
    ideals = list_ideals(S3)
    assert [len(U) for U in ideals] == [1, 3, 6]
    A3 = ideals[1]
    assert mutual_commutant(S3, A3, A3) == (S3.zero,)
    assert not is_abelian(S3) and is_abelian(S3, A3)


@pytest.mark.parametrize("H", SMALL, ids=lambda h: h.name)
def test_commutant_symmetry_and_containment(H):
    ideals = list_ideals(H)
    for U, V in itertools.product(ideals, repeat=2):
        C = mutual_commutant(H, U, V)
        assert C == mutual_commutant(H, V, U)
        assert set(C) <= set(U) & set(V)


def test_ring_commutant_is_sum_of_products():
    Z8 = OmegaGroup.of(zn_ring(8))
    for U, V in itertools.product(list_ideals(Z8), repeat=2):
        prods = {(u * v) % 8 for u in U for v in V}
        assert mutual_commutant(Z8, U, V) == additive_span(Z8, prods)


def test_zero_divisors():
    zd = zero_divisors(S3)
    assert sorted(S3.describe(zd)) == ["120", "201"]
    assert is_zero_divisor(S3, S3.index("120")).witness in zd
    assert zero_divisors(OmegaGroup.of(alternating_group(5))) == []
    r = is_zero_divisor(Z4, 2)
    assert r and r.witness == 2
    with pytest.raises(ValueError):
        is_zero_divisor(Z4, 0)


def test_antiabelian_examples():
    assert not is_antiabelian(S3)
    assert not is_antiabelian(OmegaGroup.of(cyclic_group(2)))
    assert is_antiabelian(OmegaGroup.of(alternating_group(5)))
    assert not group_no_zero_divisor_criterion(S3)
    assert not group_no_zero_divisor_criterion(OmegaGroup.of(cyclic_group(2)))


@pytest.mark.parametrize("G", small_groups(10), ids=lambda g: g.name)
def test_group_criterion_domain_and_antiabelian_agree(G):
    H = OmegaGroup.of(G)
    crit = group_no_zero_divisor_criterion(H)
    assert crit == is_domain(H) == is_antiabelian(H)


@pytest.mark.parametrize("H", SMALL, ids=lambda h: h.name)
def test_domain_iff_antiabelian(H):
    assert is_domain(H) == is_antiabelian(H)
    assert is_domain(H) == (zero_divisors(H) == [])


@pytest.mark.parametrize("H", SMALL, ids=lambda h: h.name)
def test_cd_matches_brute_force(H):
    assert check_cd(H) == brute_cd(H)


def test_cd_examples():
    assert check_cd(Z4)
    assert check_cd(S3)
    assert not check_cd(OmegaGroup.of(non_cd_omega_group()))


def test_nilpotency():
    assert is_strictly_nilpotent(Z4, 2) and is_weakly_nilpotent(Z4, 2)
    assert not is_strictly_nilpotent(Z4, 1)
    C6 = OmegaGroup.of(cyclic_group(6))
    assert all(is_weakly_nilpotent(C6, a) for a in range(1, 6))
    A5 = OmegaGroup.of(alternating_group(5))
    assert not is_strictly_nilpotent(A5, 1) and not is_weakly_nilpotent(A5, 1)
    assert len(derived_series(A5, 1)[-1]) == 60


def test_prime_ideals():
    assert prime_ideals(Z4) == [(0, 2)]
    assert prime_ideals(S3) == []
    assert (0,) in prime_ideals(OmegaGroup.of(alternating_group(5)))
    for H in SMALL:
        assert tuple(range(H.n)) not in prime_ideals(H)


@pytest.mark.parametrize("src,dst", [(zn_ring(4), zn_ring(2)), (zn_ring(6), zn_ring(3)), (zn_ring(8), zn_ring(4)),
                                     (symmetric_group(3), cyclic_group(2))])
def test_kernels_are_ideals_with_coset_classes(src, dst):
    H = OmegaGroup.of(src)
    s = src.sort
    for mu in enumerate_homs(src, dst):
        m = mu.maps[s]
        zero_dst = int(dst.tables[OmegaGroup.of(dst).names[2]][()])
        U = tuple(i for i in range(H.n) if m[i] == zero_dst)
        assert is_ideal(H, U)
        for a in range(H.n):
            coset = {H.plus(a, u) for u in U}
            assert coset == {b for b in range(H.n) if m[b] == m[a]}


def test_stability_cross_check():
    r = stability_cross_check(S3, variables=1)
    assert r.stable is False and not r.domain and r.cd
    assert r.consistent
    one = stability_cross_check(OmegaGroup.of(trivial_group()))
    assert one.stable and one.consistent


def test_zero_operation_condition_enforced():
    bad = non_cd_omega_group()
    tables = dict(bad.tables)
    tables["w"] = np.array([1, 0, 0, 1])
    from uag.sigcore import FiniteAlgebra
    with pytest.raises(ValueError):
        OmegaGroup.of(FiniteAlgebra(bad.signature, bad.carriers, tables, "bad"))


@settings(max_examples=30, deadline=None)
@given(st.sampled_from([h for h in SMALL if h.n <= 8]), st.sets(st.integers(0, 7), max_size=3))
def test_generated_ideal_is_least(H, seed):
    seed = {s % H.n for s in seed}
    U = ideal_generated(H, seed)
    assert set(seed) <= set(U) and is_ideal(H, U)
    assert all(set(U) <= set(V) for V in list_ideals(H) if set(seed) <= set(V))
