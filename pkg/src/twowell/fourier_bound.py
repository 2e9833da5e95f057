"""Fourier-side energies and the estimates behind the lower bound.

Transforms are unitary: for a field sampled on cells of size ``h`` in a box of
side ``B`` (per axis),

    f^(xi_k) = (2 pi)^{-d/2} h^d sum_x f(x) exp(-i xi_k . x),  xi_k = 2 pi k / B,

so that ``sum_k |f^(xi_k)|^2 dxi^d`` equals the grid L^2 mass ``h^d sum f^2``
(``dxi = 2 pi / B``).  The periodic transform sees the field on the torus of
the padded box; padding at least 2 keeps aliasing of the multiplier energy
small.  With this normalization the slicing inequality holds exactly on the
grid with the continuum constant ``(diam / 2 pi)^s``: the partial transform
of a field supported in Omega is bounded by Cauchy-Schwarz over at most
``extent / h`` cells per axis.

Only half of the spectrum is stored (``rfftn``); every weight used here is
even in xi, so the other half is accounted for by multiplicities.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .multiplier import SubspaceUnion
from .operators import Element, HomogeneousOperator
from .phasefield import PhaseField

MIN_PADDING = 2.0
_CHUNK = 1 << 20


class PaddingWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Half spectrum of a real field with frequencies and multiplicities."""

    fhat_sq: np.ndarray  # |f^|^2 on the rfftn grid
    axes_freq: tuple  # per-axis angular frequencies (last axis one-sided)
    mult: np.ndarray  # multiplicity of each stored bin (1 or 2), broadcastable
    dxi: np.ndarray  # per-axis frequency spacing
    cell_volume: float

    @property
    def d(self) -> int:
        return self.fhat_sq.ndim

    @property
    def dxi_volume(self) -> float:
        return float(np.prod(self.dxi))

    def integrate(self, weight: np.ndarray | float = 1.0) -> float:
        return float(np.sum(self.mult * weight * self.fhat_sq) * self.dxi_volume)

    def xi_chunks(self):
        """Yield (flat slice, frequency array (n, d)) over the stored bins."""
        grids = np.meshgrid(*self.axes_freq, indexing="ij", sparse=True)
        shape = self.fhat_sq.shape
        total = int(np.prod(shape))
        for start in range(0, total, _CHUNK):
            stop = min(total, start + _CHUNK)
            idx = np.unravel_index(np.arange(start, stop), shape)
            xi = np.column_stack([np.broadcast_to(g, shape)[idx] for g in grids])
            yield slice(start, stop), xi

    def weight_from(self, fn) -> np.ndarray:
        """Evaluate ``fn(xi)`` (vectorized over rows) on every stored bin."""
        out = np.empty(self.fhat_sq.size)
        for sl, xi in self.xi_chunks():
            out[sl] = fn(xi)
        return out.reshape(self.fhat_sq.shape)

    def radius(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes_freq, indexing="ij", sparse=True)
        return np.sqrt(sum(g * g for g in grids))


def spectrum(f: PhaseField) -> Spectrum:
    vals = f.values()
    h = f.spacing
    F = np.fft.rfftn(vals)
    scale = (2 * np.pi) ** (-f.d / 2) * f.cell_volume
    fhat_sq = (scale * np.abs(F)) ** 2
    shape = vals.shape
    box = h * np.array(shape)
    freqs = [2 * np.pi * np.fft.fftfreq(n, d=hh) for n, hh in zip(shape[:-1], h[:-1])]
    freqs.append(2 * np.pi * np.fft.rfftfreq(shape[-1], d=h[-1]))
    n_last = shape[-1]
    mult_last = np.full(n_last // 2 + 1, 2.0)
    mult_last[0] = 1.0
    if n_last % 2 == 0:
        mult_last[-1] = 1.0
    mult = mult_last.reshape((1,) * (f.d - 1) + (-1,))
    return Spectrum(fhat_sq, tuple(freqs), mult, 2 * np.pi / box, f.cell_volume)


def grid_mass(f: PhaseField) -> float:
    return float(np.sum(f.values() ** 2) * f.cell_volume)


def total_variation(f: PhaseField) -> float:
    """Anisotropic TV inside Omega: |jumps| between neighbouring Omega cells times h^{d-1}."""
    vals = f.values()
    inside = f.omega_mask()
    h = f.spacing
    tv = 0.0
    for ax in range(f.d):
        a = [slice(None)] * f.d
        b = [slice(None)] * f.d
        a[ax] = slice(1, None)
        b[ax] = slice(None, -1)
        both = inside[tuple(a)] & inside[tuple(b)]
        jumps = np.abs(vals[tuple(a)] - vals[tuple(b)])[both]
        tv += float(np.sum(jumps)) * float(np.prod(np.delete(h, ax)))
    return tv


def perimeter(f: PhaseField) -> float:
    """Perimeter of the Omega box."""
    ext = f.omega_extent()
    d = f.d
    return float(sum(2.0 * np.prod(np.delete(ext, ax)) for ax in range(d)))


@dataclass(frozen=True)
class SpectralEnergyReport:
    E_el: float
    E_surf: float
    eps: float
    E_total: float
    mass: float  # spectral mass sum |f^|^2 dxi^d
    grid_mass: float
    warnings: tuple = ()


def _check_padding(f: PhaseField) -> tuple:
    if f.padding_factor() < MIN_PADDING - 1e-12:
        msg = f"padding factor {f.padding_factor():.3g} is below {MIN_PADDING}; periodic aliasing is not controlled"
        warnings.warn(msg, PaddingWarning, stacklevel=3)
        return (msg,)
    return ()


def dist_weight(V: SubspaceUnion, L: int):
    """xi -> dist_V(xi/|xi|)^{2L}, zero at xi = 0."""

    def fn(xi):
        r = np.linalg.norm(xi, axis=1)
        out = np.zeros(len(xi))
        nz = r > 0
        out[nz] = (V.dist(xi[nz] / r[nz, None])) ** (2 * L)
        return out

    return fn


def multiplier_weight(op: HomogeneousOperator, M: Element):
    """xi -> |symbol(xi/|xi|) M|^2, zero at xi = 0."""
    gram = op.symbol_gram(M)

    def fn(xi):
        r = np.linalg.norm(xi, axis=1)
        out = np.zeros(len(xi))
        nz = r > 0
        out[nz] = op.symbol_norm_sq(xi[nz] / r[nz, None], M, gram)
        return out

    return fn


def _weighted_report(f: PhaseField, weight_fn, eps: float, spec: Spectrum | None = None) -> SpectralEnergyReport:
    warn = _check_padding(f)
    if f.is_empty():
        return SpectralEnergyReport(0.0, 0.0, eps, 0.0, 0.0, 0.0, warn)
    spec = spec or spectrum(f)
    w = spec.weight_from(weight_fn)
    E_el = spec.integrate(w)
    E_surf = total_variation(f)
    return SpectralEnergyReport(E_el, E_surf, float(eps), E_el + eps * E_surf, spec.integrate(), grid_mass(f), warn)


def spectral_energy(f: PhaseField, V: SubspaceUnion, L: int, eps: float, spec: Spectrum | None = None) -> SpectralEnergyReport:
    """Integral of dist_V(xi/|xi|)^{2L} |f^|^2 plus eps times the TV of f in Omega."""
    if V.d != f.d:
        raise ValueError("dimension mismatch between V and the phase field")
    return _weighted_report(f, dist_weight(V, L), eps, spec)


def full_multiplier_energy(f: PhaseField, op: HomogeneousOperator, M: Element, eps: float,
                           spec: Spectrum | None = None) -> SpectralEnergyReport:
    """Integral of |symbol(xi/|xi|) M|^2 |f^|^2 plus eps times the TV of f in Omega."""
    if op.d != f.d:
        raise ValueError("dimension mismatch between the operator and the phase field")
    return _weighted_report(f, multiplier_weight(op, M), eps, spec)


# key estimates ---------------------------------------------------------------


def sphere_area(s: int) -> float:
    """Area of the unit (s-1)-sphere, 2 pi^{s/2} / Gamma(s/2)."""
    return float(2 * np.pi ** (s / 2) / gamma_fn(s / 2))


def constructive_alpha(V: SubspaceUnion, diam: float, delta: float) -> tuple[float, list[float]]:
    """alpha = min_j alpha_j with C(s_j) (alpha_j diam / 2 pi)^{s_j} = delta / N, s_j = codim."""
    N = len(V.bases)
    alphas = []
    for B in V.bases:
        s = V.d - B.shape[1]
        alphas.append(2 * np.pi / diam * (delta / (N * sphere_area(s))) ** (1.0 / s))
    return min(alphas), alphas


def tube_lattice_measure(spec: Spectrum, V: SubspaceUnion, alpha: float) -> list[float]:
    """Per subspace: lattice measure of the alpha-tube cross-section, count * dxi^s."""
    out = []
    for B in V.bases:
        s = V.d - B.shape[1]
        comp = np.linalg.svd(B, full_matrices=True)[0][:, B.shape[1]:]
        # cross-section lattice along the complement axes (coordinate subspaces)
        axes = [int(np.argmax(np.abs(comp[:, j]))) for j in range(s)]
        dxi = spec.dxi[axes]
        r = int(np.floor(alpha / dxi.min()))
        grids = np.meshgrid(*[np.arange(-r, r + 1) * dx for dx in dxi], indexing="ij")
        rad = np.sqrt(sum(g * g for g in grids))
        out.append(float(np.count_nonzero(rad <= alpha) * np.prod(dxi)))
    return out


@dataclass(frozen=True)
class EstimateCheck:
    lhs: float
    rhs: float
    passed: bool


@dataclass(frozen=True)
class KeyEstimateReport:
    alpha: float
    alphas: list
    lattice_guarantee: bool  # lattice tube measure stays below the continuum bound
    part_i: EstimateCheck
    part_ii: EstimateCheck
    part_iii: EstimateCheck  # lhs/rhs: min and max of eta * LHS(eta) over the sweep
    eta_sweep: dict = field(default_factory=dict)  # eta -> LHS(eta)
    iii_constant: float = 0.0  # max over the sweep of eta LHS / (|f|_inf (TV + |f|_inf Per))


def key_estimate_report(
    f: PhaseField,
    V: SubspaceUnion,
    L: int,
    eta: float,
    delta: float,
    eta_sweep=(8.0, 16.0, 32.0, 64.0),
    spec: Spectrum | None = None,
) -> KeyEstimateReport:
    """Evaluate both sides of the three frequency-splitting estimates.

    (i)   mass in {dist_V(xi) <= alpha} <= delta * total mass
    (ii)  mass in {dist_V >= alpha, |xi| <= eta} <= (eta/alpha)^{2L} * weighted energy
    (iii) eta * mass in {|xi| >= eta} stays within one decade over ``eta_sweep``
    """
    if eta <= 1:
        raise ValueError("eta must exceed 1")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    spec = spec or spectrum(f)
    alpha, alphas = constructive_alpha(V, f.diameter(), delta)
    diam = f.diameter()
    lattice = tube_lattice_measure(spec, V, alpha)
    guarantee = all(
        meas * (diam / (2 * np.pi)) ** (V.d - B.shape[1]) <= delta / len(V.bases) * (1 + 1e-12)
        for meas, B in zip(lattice, V.bases)
    )
    dist = spec.weight_from(lambda xi: V.dist(xi))
    rad = spec.radius()
    mass = spec.integrate()

    lhs_i = spec.integrate(dist <= alpha)
    part_i = EstimateCheck(lhs_i, delta * mass, lhs_i <= delta * mass * (1 + 1e-12) + 1e-300)

    with np.errstate(divide="ignore", invalid="ignore"):
        w = np.where(rad > 0, (dist / np.where(rad > 0, rad, 1.0)) ** (2 * L), 0.0)
    lhs_ii = spec.integrate((dist >= alpha) & (rad <= eta))
    rhs_ii = (eta / alpha) ** (2 * L) * spec.integrate(w)
    part_ii = EstimateCheck(lhs_ii, rhs_ii, lhs_ii <= rhs_ii * (1 + 1e-12) + 1e-300)

    sweep = {float(e): spec.integrate(rad >= e) for e in eta_sweep}
    prods = np.array([e * v for e, v in sweep.items()])
    if np.all(prods == 0):
        part_iii = EstimateCheck(0.0, 0.0, True)
    else:
        lo, hi = float(prods.min()), float(prods.max())
        part_iii = EstimateCheck(lo, hi, lo > 0 and hi / lo < 10.0)
    fmax = float(np.max(np.abs(f.values()))) if not f.is_empty() else 0.0
    denom = fmax * (total_variation(f) + fmax * perimeter(f))
    const = float(prods.max() / denom) if denom > 0 else 0.0
    return KeyEstimateReport(alpha, alphas, guarantee, part_i, part_ii, part_iii, sweep, const)


@dataclass(frozen=True)
class SlicingReport:
    passed: bool
    worst_margin: float  # min over slices of rhs / lhs (inf when every slice vanishes)
    n_slices: int


def slicing_check(f: PhaseField, s: int, spec: Spectrum | None = None) -> SlicingReport:
    """sup_{xi'} |f^(xi', xi'')|^2 <= (diam / 2 pi)^s sum_{xi'} |f^(xi', xi'')|^2 dxi'^s.

    ``xi'`` runs over the first ``s`` axes; every value of the remaining
    frequencies ``xi''`` is one slice.
    """
    d = f.d
    if not 1 <= s <= d:
        raise ValueError("need 1 <= s <= d")
    if f.is_empty():
        return SlicingReport(True, math.inf, 0)
    spec = spec or spectrum(f)
    # full spectrum needed along the sliced axes; rebuild the last axis when sliced
    if s == d:
        full = np.abs(np.fft.fftn(f.values()) * (2 * np.pi) ** (-d / 2) * f.cell_volume) ** 2
    else:
        full = spec.fhat_sq  # last axis is not sliced, half spectrum suffices
    axes = tuple(range(s))
    sup = full.max(axis=axes)
    dxi_s = float(np.prod(spec.dxi[:s]))
    tot = full.sum(axis=axes) * dxi_s
    rhs = (f.diameter() / (2 * np.pi)) ** s * tot
    nz = sup > 1e-300
    if not np.any(nz):
        return SlicingReport(True, math.inf, int(sup.size))
    margins = rhs[nz] / sup[nz]
    worst = float(margins.min())
    return SlicingReport(bool(worst >= 1.0 - 1e-12), worst, int(sup.size))


# direct DFT oracle ----------------------------------------------------------------


def direct_dft_energy(f: PhaseField, weight_fn) -> float:
    """Weighted spectral energy by an explicit double sum over cells and frequencies (small grids)."""
    vals = f.values()
    if vals.ndim != 2:
        raise ValueError("oracle supports d = 2 only")
    n0, n1 = vals.shape
    h = f.spacing
    x0 = (np.arange(n0)) * h[0]
    x1 = (np.arange(n1)) * h[1]
    k0 = 2 * np.pi * np.fft.fftfreq(n0, d=h[0])
    k1 = 2 * np.pi * np.fft.fftfreq(n1, d=h[1])
    E0 = np.exp(-1j * np.outer(k0, x0))
    E1 = np.exp(-1j * np.outer(k1, x1))
    F = E0 @ vals @ E1.T
    fhat_sq = (np.abs(F) * (2 * np.pi) ** (-1) * h[0] * h[1]) ** 2
    K0, K1 = np.meshgrid(k0, k1, indexing="ij")
    w = weight_fn(np.column_stack([K0.ravel(), K1.ravel()])).reshape(fhat_sq.shape)
    dxi = (2 * np.pi) ** 2 / (n0 * h[0] * n1 * h[1])
    return float(np.sum(w * fhat_sq) * dxi)
