import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twowell.multiplier import (
    MultiplierPoly,
    OrderExceedsCap,
    SubspaceUnion,
    basis_well,
    compare_curl_div,
    decay_factor,
    expected_order,
    ratio_inf_sample,
    sphere_sample,
    vanishing_order_estimate,
    zero_set,
)
from twowell.operators import CapabilityError, DivergenceM, SaintVenant
from twowell.symtensor import SymTensor, multinomial


@given(st.integers(0, 4), st.integers(0, 4), st.floats(0, 2 * np.pi))
def test_curl_multiplier_closed_form(l1, l2, t):
    if l1 + l2 == 0:
        return
    m = l1 + l2
    op = SaintVenant(2, m)
    p = MultiplierPoly(op, SymTensor.basis((l1, l2)))
    xi = np.array([np.cos(t), np.sin(t)])
    ref = 2.0 ** (-m) * xi[1] ** (2 * l1) * xi[0] ** (2 * l2)
    assert p(xi) == pytest.approx(ref, rel=1e-10, abs=1e-14)


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 10**6))
def test_divergence_multiplier_closed_form(l1, l2, seed):
    if l1 + l2 == 0:
        return
    m = l1 + l2
    op = DivergenceM(2, m, 1)
    p = MultiplierPoly(op, basis_well(op, (l1, l2)))
    xi = np.random.default_rng(seed).standard_normal(2)
    ref = (xi[0] ** l1 * xi[1] ** l2 / multinomial((l1, l2))) ** 2
    assert p(xi) == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_zero_sets_for_basis_wells():
    e = np.eye(3)
    V = zero_set(SaintVenant(3, 3), SymTensor.basis((2, 0, 1)))
    assert len(V.bases) == 2
    assert V.dist(e[0]) < 1e-12 and V.dist(e[2]) < 1e-12 and V.dist(e[1]) == pytest.approx(1.0)
    W = zero_set(DivergenceM(3, 2, 1), basis_well(DivergenceM(3, 2, 1), (1, 1, 0)))
    # hyperplanes e1-perp and e2-perp
    assert W.dist(e[2]) < 1e-12 and W.dist(e[1]) < 1e-12
    assert W.dist(np.array([1.0, 1.0, 0.0]) / np.sqrt(2)) == pytest.approx(1 / np.sqrt(2))


def test_zero_set_needs_basis_well():
    M = SymTensor(2, 2, [1.0, 1.0, 0.0])
    with pytest.raises(CapabilityError):
        zero_set(SaintVenant(2, 2), M)


@given(st.integers(0, 10**6))
def test_multiplier_vanishes_on_zero_set(seed):
    rng = np.random.default_rng(seed)
    op = SaintVenant(3, 3)
    M = SymTensor.basis((1, 0, 2))
    V = zero_set(op, M, check=False)
    p = MultiplierPoly(op, M)
    for B in V.bases:
        v = B @ rng.standard_normal(B.shape[1])
        assert p(v) < 1e-14 * max(1.0, np.linalg.norm(v)) ** 6


def test_order_two_infimum_for_e1_squared():
    # p = xi_2^4 / 4 and dist = |xi_2| on the circle, so the ratio is 1/4
    op = SaintVenant(2, 2)
    M = SymTensor.basis((2, 0))
    V = zero_set(op, M)
    assert ratio_inf_sample(MultiplierPoly(op, M), V, 2) == pytest.approx(0.25, rel=1e-9)
    rep = vanishing_order_estimate(MultiplierPoly(op, M), V)
    assert rep.L == 2 and rep.witness_ell == 1
    assert rep.witness_decay == pytest.approx(4.0, rel=0.05)


@pytest.mark.parametrize("l", [(1, 0), (1, 1), (3, 1), (2, 2)])
def test_vanishing_order_matches_exponents(l):
    for op in (SaintVenant(2, sum(l)), DivergenceM(2, sum(l), 1)):
        M = basis_well(op, l)
        rep = vanishing_order_estimate(MultiplierPoly(op, M), zero_set(op, M))
        assert rep.L == expected_order(op, l)


def test_compare_curl_div():
    assert compare_curl_div((2, 1)) == (2, 2)
    assert compare_curl_div((3, 0, 1)) == (4, 3)


def test_order_cap():
    op = SaintVenant(2, 3)
    M = SymTensor.basis((3, 0))
    with pytest.raises(OrderExceedsCap):
        vanishing_order_estimate(MultiplierPoly(op, M), zero_set(op, M), ell_max=2)


def test_decay_factor():
    assert decay_factor(np.array([1.0, 0.25, 0.0625, 1 / 64, 1 / 256])) == pytest.approx(4.0)
    assert decay_factor(np.array([1.0, 1.0, 1.0, 1.0, 1.0])) == pytest.approx(1.0)
    assert decay_factor(np.array([1.0, 0.0])) == np.inf


def test_strata_include_intersections():
    V = SubspaceUnion(3, (np.eye(3)[:, [0, 1]], np.eye(3)[:, [1, 2]]))
    dims = sorted(B.shape[1] for B in V.strata())
    assert dims == [1, 2, 2]


def test_sphere_sample_layer_distances():
    V = SubspaceUnion.spans(3, [[1, 0, 0]])
    s = sphere_sample(V, 256, 5)
    for rho, pts in zip(s.rhos, s.layers):
        assert np.allclose(np.linalg.norm(pts, axis=1), 1.0)
        assert np.allclose(V.dist(pts), rho / np.sqrt(1 + rho**2))


def test_subspace_union_validation():
    with pytest.raises(ValueError):
        SubspaceUnion(2, (np.eye(2),))
    with pytest.raises(ValueError):
        SubspaceUnion(2, ())
