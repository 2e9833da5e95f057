import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from twowell.construction2d.assembly import (
    Branching,
    BranchingParams,
    DivergenceTransformed,
    Lifted,
    Swapped,
    build_construction,
    construction_energy,
    default_theta,
    divergence_factors,
    grid_points,
    lift_coefficients,
    rasterize,
    read_polylines,
    residual_report,
    theta_interval,
    write_polylines,
)
from twowell.operators import DivergenceM, SaintVenant
from twowell.symtensor import SymTensor, VecSymTensor, class_weights


def test_theta_window():
    lo, hi = theta_interval(2)
    assert lo == pytest.approx(2 ** (-4 / 3)) and hi == 0.5
    assert lo < default_theta(2) < hi
    with pytest.raises(ValueError):
        BranchingParams(8, 2, theta=0.3)
    with pytest.raises(ValueError):
        BranchingParams(3, 2)


@pytest.mark.parametrize("N,m", [(4, 1), (8, 2), (16, 3)])
def test_band_layout(N, m):
    b = Branching(BranchingParams(N, m))
    p = b.p
    assert b.bands[0].y0 == 0.5 and b.bands[-1].y1 == 1.0
    for lo, hi in zip(b.bands[:-1], b.bands[1:]):
        assert lo.y1 == pytest.approx(hi.y0)
    for band in b.bands:
        assert band.count * band.width == pytest.approx(1.0)
    j0 = p.j0
    assert p.width(j0) < p.height(j0) or j0 == 0
    assert p.width(j0 + 1) >= p.height(j0 + 1)
    assert b.bands[-1].kind == "cutoff"
    assert b.bands[-1].y1 - b.bands[-1].y0 == pytest.approx(p.theta ** (j0 + 1) / 2)


def test_capped_branching():
    p = BranchingParams(8, 2, max_level=1)
    b = Branching(p)
    assert [x.kind for x in b.bands] == ["unit", "unit", "laminate", "cutoff"]
    assert b.finest_width() == pytest.approx(p.width(2))
    assert b.bands[-1].y1 == 1.0


@pytest.mark.parametrize("m", [1, 2, 3])
def test_mirror_symmetry(m):
    c = Branching(BranchingParams(4, m))
    rng = np.random.default_rng(m)
    x, y = rng.uniform(0, 1, (2, 300))
    top = c.components(x, y)
    bot = c.components(x, 1 - y)
    signs = (-1.0) ** np.arange(m + 1)
    assert np.allclose(bot, signs[:, None] * top, atol=1e-12)
    assert np.array_equal(c.phase(x, y), c.phase(x, 1 - y))


@pytest.mark.parametrize("gamma", ["mollifier", "smoothstep"])
def test_energy_against_dense_grid(gamma):
    c = Branching(BranchingParams(4, 2, gamma_kind=gamma))
    rep = construction_energy(c, 0.0, 128)
    X, Y, h = grid_points(2048)
    d = c.components(X, Y) - c.targets(X, Y)
    brute = np.sum(class_weights(2, 2)[:, None, None] * d**2) * h * h
    assert rep.E_el == pytest.approx(brute, rel=1e-2)


def test_energy_is_sum_of_cells():
    c = Branching(BranchingParams(8, 2))
    parts = sum(b.count * b.cell.energy(64).component_sq for b in c.bands)
    assert np.allclose(c.component_sq(64), 2 * parts, rtol=1e-12)


def test_surface_energy_matches_polyline_length():
    c = Branching(BranchingParams(4, 2))
    curves = c.polylines()
    length = sum(np.sum(np.linalg.norm(np.diff(p, axis=0), axis=1)) for p in curves)
    assert length == pytest.approx(c.interface_length(), rel=2e-3)
    rep = construction_energy(c, 1e-3)
    assert rep.E_surf == pytest.approx(c.well_norm * c.interface_length())
    assert rep.E_total == pytest.approx(rep.E_el + 1e-3 * rep.E_surf)


def test_polyline_roundtrip(tmp_path):
    c = Branching(BranchingParams(4, 1))
    curves = c.polylines()
    path = tmp_path / "c.txt"
    write_polylines(curves, path)
    back = read_polylines(path)
    assert len(back) == len(curves)
    assert all(np.array_equal(a, b) for a, b in zip(curves, back))


@pytest.mark.parametrize("m", [1, 2])
def test_branching_energy_bound(m):
    """E_el N^{2m} and E_surf / N stay within a bounded band over N = 8..64."""
    Ns = [8, 16, 32, 64]
    reps = [construction_energy(Branching(BranchingParams(N, m)), 0.0) for N in Ns]
    el = np.array([r.E_el * N ** (2 * m) for r, N in zip(reps, Ns)])
    surf = np.array([r.E_surf / N for r, N in zip(reps, Ns)])
    assert el.max() / el.min() < 2 and surf.max() / surf.min() < 2


def test_energy_u_shaped_in_N():
    eps = 1e-5
    Ns = [4, 6, 8, 12, 16, 24, 32, 48]
    E = [construction_energy(Branching(BranchingParams(N, 2)), eps).E_total for N in Ns]
    i = int(np.argmin(E))
    assert 0 < i < len(Ns) - 1
    assert np.all(np.diff(E[: i + 1]) < 0) and np.all(np.diff(E[i:]) > 0)
    assert 0.5 < Ns[i] / eps ** (-1 / 5) < 2


# lifting, swapping, divergence --------------------------------------------


def test_lift_coefficients_formula():
    # m = 2, l = 1: k >= 1 only
    c = lift_coefficients(2, 1)
    assert c[0] == 0
    assert c[1] == pytest.approx(-2 * 1 * 1 / 2)
    assert c[2] == pytest.approx(-2 * 1 * 2 / (2 * 1))


@pytest.mark.parametrize("l", [(2, 1), (1, 1), (3, 1), (1, 2), (0, 2)])
def test_curl_wells_are_basis_directions(l):
    c = build_construction("curl", l, 4)
    w = SymTensor(2, sum(l), c.well_components)
    assert w.support() == [tuple(l)]


@pytest.mark.parametrize("l", [(2, 0), (1, 1), (1, 2)])
def test_divergence_well_is_basis_direction(l):
    c = build_construction("divergence", l, 4)
    assert isinstance(c, DivergenceTransformed)
    assert c.well.support() == [tuple(l)]


def test_dispatch_types():
    assert isinstance(build_construction("curl", (2, 0), 4), Branching)
    assert isinstance(build_construction("curl", (0, 2), 4), Swapped)
    assert isinstance(build_construction("curl", (2, 1), 4), Lifted)
    assert isinstance(build_construction("curl", (1, 2), 4), Swapped)
    with pytest.raises(ValueError):
        build_construction("grad", (1, 0), 4)


def test_divergence_factor_tables():
    assert np.allclose(divergence_factors(1), [0.5, -0.5])
    assert np.allclose(divergence_factors(2), [0.25, -0.5, 0.25])


@pytest.mark.parametrize("op,l", [("curl", (1, 1)), ("curl", (2, 1)), ("divergence", (1, 1)), ("divergence", (1, 2))])
def test_lifted_residual_is_roundoff(op, l):
    r = residual_report(build_construction(op, l, 4), 256)
    assert r.max_abs < 1e-8


@pytest.mark.parametrize("op,l", [("curl", (0, 2)), ("divergence", (2, 0))])
def test_swapped_residual_converges(op, l):
    c = build_construction(op, l, 4, gamma_kind="smoothstep")
    a, b = residual_report(c, 256), residual_report(c, 512)
    assert 3 < a.max_abs / b.max_abs < 5


@pytest.mark.parametrize("l", [(2, 1), (0, 2), (1, 1)])
def test_symbol_annihilates_lifted_well_direction(l):
    """The construction's well lies in the wave cone of its operator."""
    c = build_construction("curl", l, 4)
    M = SymTensor(2, sum(l), c.well_components)
    op = SaintVenant(2, sum(l))
    xi = np.eye(2)[0] if l[0] >= l[1] else np.eye(2)[1]
    # laminates oscillate along xi with normal in the zero set
    assert np.max(np.abs(op.apply(xi, M))) < 1e-12


def test_transformed_energy_factor_bounded():
    base = build_construction("curl", (2, 1), 4)
    div = build_construction("divergence", (1, 2), 4)
    e0 = construction_energy(base, 1e-3).E_el
    e1 = construction_energy(div, 1e-3).E_el
    a = np.abs(divergence_factors(3))
    bound = max(np.max(a**2), np.max(a**-2)) * 4
    assert e1 / e0 <= bound and e0 / e1 <= bound


def test_rasterize_phase_field():
    c = Branching(BranchingParams(4, 2))
    f = rasterize(c, 128, pad=2.0)
    assert f.shape == (256, 256)
    assert f.omega_mask().sum() == 128 * 128
    vals = f.values()
    assert np.all(vals[~f.omega_mask()] == 0)
    assert abs(vals[f.omega_mask()].mean()) < 0.02  # lambda = 1/2
