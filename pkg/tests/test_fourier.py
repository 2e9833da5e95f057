import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import zeta

from fields import checkerboard
from twowell.construction2d.assembly import build_construction, rasterize
from twowell.fourier_bound import (
    PaddingWarning,
    constructive_alpha,
    direct_dft_energy,
    dist_weight,
    full_multiplier_energy,
    grid_mass,
    key_estimate_report,
    multiplier_weight,
    perimeter,
    slicing_check,
    spectral_energy,
    spectrum,
    sphere_area,
    total_variation,
)
from twowell.multiplier import MultiplierPoly, SubspaceUnion, basis_well, zero_set
from twowell.operators import DivergenceM, SaintVenant
from twowell.sweep import FullLaminate


def _sv_setup(m=2, l=(2, 0)):
    op = SaintVenant(2, m)
    M = basis_well(op, l)
    return op, M, zero_set(op, M)


@given(seed=st.integers(0, 2**32 - 1), k=st.sampled_from([1, 2, 4, 8]), lam=st.floats(0.1, 0.9))
def test_parseval(seed, k, lam):
    f = checkerboard(np.random.default_rng(seed), n=16, k=k, pad=2.0, lam=lam)
    assert spectrum(f).integrate() == pytest.approx(grid_mass(f), rel=1e-10)


def test_parseval_3d(rng):
    f = checkerboard(rng, n=8, k=2, pad=2.0, d=3)
    assert spectrum(f).integrate() == pytest.approx(grid_mass(f), rel=1e-10)


@pytest.mark.parametrize("seed", range(3))
def test_spectral_energy_matches_direct_dft(seed):
    _, _, V = _sv_setup()
    f = checkerboard(np.random.default_rng(seed), n=8, k=4, pad=3.0)
    fast = spectral_energy(f, V, 2, 0.0).E_el
    slow = direct_dft_energy(f, dist_weight(V, 2))
    assert fast == pytest.approx(slow, rel=1e-10)


def test_full_multiplier_matches_direct_dft(rng):
    op, M, _ = _sv_setup(2, (1, 1))
    f = checkerboard(rng, n=8, k=4, pad=3.0)
    assert full_multiplier_energy(f, op, M, 0.0).E_el == pytest.approx(
        direct_dft_energy(f, multiplier_weight(op, M)), rel=1e-10)


@pytest.mark.parametrize("width", [1 / 8, 1 / 16])
def test_laminate_energy_closed_form(width):
    """A lambda = 1/2 laminate only pays at its two cut ends: 7 zeta(3) w / (16 pi^3)."""
    _, _, V = _sv_setup()
    f = rasterize(FullLaminate(width, 0.5, axis=0, m=2), 512, 2.0)
    E = spectral_energy(f, V, 2, 0.0).E_el
    assert E == pytest.approx(7 * zeta(3) / (16 * np.pi**3) * width, rel=0.06)


@pytest.mark.parametrize("l", [(2, 0), (1, 1)])
def test_full_dominates_reduced(l, rng):
    """p >= c dist_V^{2L} on the sphere, so the full energy dominates the reduced one with the same c."""
    op, M, V = _sv_setup(2, l)
    L = max(l)
    th = np.linspace(0, 2 * np.pi, 20001)[:-1]
    xi = np.column_stack([np.cos(th), np.sin(th)])
    d = V.dist(xi)
    keep = d > 1e-3
    c = float(np.min(MultiplierPoly(op, M)(xi[keep]) / d[keep] ** (2 * L)))
    for _ in range(3):
        f = checkerboard(rng, n=32, k=8)
        assert full_multiplier_energy(f, op, M, 0.0).E_el >= c * spectral_energy(f, V, L, 0.0).E_el * (1 - 1e-9)


def test_total_variation_and_perimeter():
    codes = np.zeros((8, 8), dtype=np.int8)
    codes[2:6, 2:6] = 1
    codes[2:6, 4:6] = -1
    from twowell.phasefield import PhaseField

    f = PhaseField(codes, 0.5, (0, 0, 2, 2), (0.5, 0.5, 1.5, 1.5))
    # one internal jump line of length 1, jump size 1
    assert total_variation(f) == pytest.approx(1.0)
    assert perimeter(f) == pytest.approx(4.0)
    V = SubspaceUnion(2, (np.array([[1.0], [0.0]]),))
    rep = spectral_energy(f, V, 1, 0.1)
    assert rep.E_total == pytest.approx(rep.E_el + 0.1 * rep.E_surf)


def test_empty_field_energy():
    from twowell.phasefield import PhaseField

    f = PhaseField(np.zeros((8, 8)), 0.5, (0, 0, 2, 2), (0.5, 0.5, 1.5, 1.5))
    _, _, V = _sv_setup()
    assert spectral_energy(f, V, 2, 1.0).E_total == 0.0


def test_padding_warning(rng):
    _, _, V = _sv_setup()
    f = checkerboard(rng, n=16, k=4, pad=1.5)
    with pytest.warns(PaddingWarning):
        rep = spectral_energy(f, V, 2, 0.0)
    assert rep.warnings
    g = checkerboard(rng, n=16, k=4, pad=2.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert not spectral_energy(g, V, 2, 0.0).warnings


def test_dimension_mismatch(rng):
    V = SubspaceUnion(3, (np.eye(3)[:, [0]],))
    with pytest.raises(ValueError):
        spectral_energy(checkerboard(rng, n=8, k=2), V, 1, 0.0)


def test_sphere_area():
    assert sphere_area(1) == pytest.approx(2.0)
    assert sphere_area(2) == pytest.approx(2 * np.pi)
    assert sphere_area(3) == pytest.approx(4 * np.pi)


def test_constructive_alpha_formula():
    _, _, V = _sv_setup(2, (1, 1))  # two lines
    a, alphas = constructive_alpha(V, math.sqrt(2), 0.5)
    assert len(alphas) == 2
    assert a == pytest.approx(2 * np.pi / math.sqrt(2) * 0.25 / 2.0)


@pytest.mark.parametrize("op,l,L", [(SaintVenant(2, 2), (2, 0), 2), (SaintVenant(2, 2), (1, 1), 1),
                                    (DivergenceM(2, 2, 1), (1, 1), 1), (SaintVenant(2, 3), (2, 1), 2)])
def test_key_estimates_random(op, l, L):
    V = zero_set(op, basis_well(op, l))
    rng = np.random.default_rng(7)
    for _ in range(5):
        f = checkerboard(rng, n=64, k=int(rng.choice([2, 4, 8, 16])))
        r = key_estimate_report(f, V, L, 16.0, 0.5)
        assert r.part_i.passed and r.part_ii.passed and r.part_iii.passed


def test_key_estimate_3d(rng):
    op = SaintVenant(3, 1)
    V = zero_set(op, basis_well(op, (1, 0, 0)))
    f = checkerboard(rng, n=32, k=4, d=3)
    r = key_estimate_report(f, V, 1, 16.0, 0.5)
    assert r.part_i.passed and r.part_ii.passed and r.part_iii.passed


def test_key_estimate_branching_field():
    op, M, V = _sv_setup()
    f = rasterize(build_construction("curl", (2, 0), 8), 128, 4.0)
    r = key_estimate_report(f, V, 2, 16.0, 0.5)
    assert r.lattice_guarantee
    assert r.part_i.passed and r.part_ii.passed and r.part_iii.passed
    assert 0 < r.iii_constant < 10


def test_key_estimate_validation(rng):
    _, _, V = _sv_setup()
    f = checkerboard(rng, n=16, k=2)
    with pytest.raises(ValueError):
        key_estimate_report(f, V, 2, 0.5, 0.5)
    with pytest.raises(ValueError):
        key_estimate_report(f, V, 2, 16.0, 1.5)


@given(seed=st.integers(0, 2**32 - 1), s=st.sampled_from([1, 2]), k=st.sampled_from([1, 2, 4]))
def test_slicing_inequality(seed, s, k):
    f = checkerboard(np.random.default_rng(seed), n=16, k=k, pad=2.0)
    r = slicing_check(f, s)
    assert r.passed and r.worst_margin >= 1.0


def test_slicing_3d(rng):
    f = checkerboard(rng, n=8, k=2, pad=2.0, d=3)
    for s in (1, 2, 3):
        assert slicing_check(f, s).passed
    with pytest.raises(ValueError):
        slicing_check(f, 4)
