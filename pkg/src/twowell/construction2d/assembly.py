"""Assembled constructions on Omega = (0,1)^2 and their energies.

A construction exposes the field components ``u_0..u_m`` (k = number of twos
in the index), the scalar phase ``f`` and the targets ``chi_k = f * w_k`` for
the well direction ``w``.  Everything is measured relative to F_lambda, so
the exterior data is zero.

The elastic energy uses the multiplicity-weighted norm
``sum_k binom(m,k) |u_k - chi_k|^2``; the surface energy is |w| times the
total interface length inside Omega.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import ndimage

from ..operators import div_residual_terms_2d, fd_reach, sv_residual_terms_2d
from ..phasefield import PhaseField
from ..symtensor import SymTensor, VecSymTensor, class_weights
from .cells import CellEnergy, CutoffCell, UnitCell, UnitCellParams
from .profiles import CutoffProfile, GammaProfile


def theta_interval(m: int) -> tuple[float, float]:
    return 2.0 ** (-2.0 * m / (2.0 * m - 1.0)), 0.5


def default_theta(m: int) -> float:
    lo, hi = theta_interval(m)
    return 0.5 * (lo + hi)


# ----------------------------------------------------------------------------
# base class


class Construction2D:
    """Interface shared by every assembled construction."""

    m: int
    operator: str  # "curl" or "divergence"
    domain = (0.0, 1.0, 0.0, 1.0)
    lam: float

    # fields, evaluated at arrays x, y of equal shape
    def components(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def phase(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def region_id(self, x, y) -> np.ndarray:
        """Integer label that changes across every interface and cell boundary."""
        raise NotImplementedError

    @property
    def well_components(self) -> np.ndarray:
        raise NotImplementedError

    def targets(self, x, y) -> np.ndarray:
        f = self.phase(x, y)
        return self.well_components.reshape((-1,) + (1,) * np.ndim(f)) * f

    # energies
    def component_sq(self, n_y: int = 64) -> np.ndarray:
        raise NotImplementedError

    def interface_length(self, n_y: int = 64) -> float:
        raise NotImplementedError

    def max_intended_error(self, n_y: int = 64) -> float:
        return 0.0

    @property
    def well_norm(self) -> float:
        w = self.well_components
        return float(np.sqrt(np.sum(class_weights(2, self.m) * w**2)))

    def polylines(self, min_width: float = 1.0 / 4096) -> list[np.ndarray]:
        return []

    def _inside(self, x, y):
        x0, x1, y0, y1 = self.domain
        return (x >= x0) & (x <= x1) & (y >= y0) & (y <= y1)


# ----------------------------------------------------------------------------
# branching


class LaminateStrip:
    """Straight two-interface laminate of width l and height h with u = chi."""

    def __init__(self, l: float, h: float, lam: float, m: int):
        self.l, self.h, self.lam, self.m = float(l), float(h), float(lam), int(m)
        self.knots = np.array([0.0, lam * l / 2, (2 - lam) * l / 2, l])

    def region(self, x, y=None):
        return np.sum(np.asarray(x)[..., None] >= self.knots[1:3], axis=-1)

    def phase(self, x, y=None):
        return np.where(self.region(x) == 1, -self.lam, 1.0 - self.lam)

    def components(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.zeros((self.m + 1,) + x.shape)
        out[0] = self.phase(x)
        return out

    def energy(self, n_y: int = 64) -> CellEnergy:
        return CellEnergy(np.zeros(self.m + 1), 2.0 * self.h, 0.0)

    def interface_polylines(self, n: int = 2):
        y = np.linspace(0.0, self.h, n)
        return [np.column_stack([np.full(n, k), y]) for k in self.knots[1:3]]


@dataclass(frozen=True)
class Band:
    """Horizontal strip [y0, y1] of the upper half tiled by ``count`` copies of ``cell``."""

    level: int
    y0: float
    y1: float
    width: float
    count: int
    cell: object
    kind: str  # "unit", "cutoff" or "laminate"


@dataclass(frozen=True)
class BranchingParams:
    N: int
    m: int
    lam: float = 0.5
    theta: float | None = None
    delta: float = 0.1
    gamma_kind: str = "mollifier"
    mode: str = "formula"
    max_level: int | None = None  # cap on the refinement depth (None: the full construction)

    def __post_init__(self):
        if self.N < 4:
            raise ValueError("branching needs N >= 4")
        if self.m < 1:
            raise ValueError("order m must be positive")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if self.theta is None:
            object.__setattr__(self, "theta", default_theta(self.m))
        lo, hi = theta_interval(self.m)
        if not lo < self.theta < hi:
            raise ValueError(f"theta must lie in ({lo:.6g}, {hi})")
        if not 0.0 < self.delta < 0.25:
            raise ValueError("delta must lie in (0, 1/4)")
        if self.max_level is not None and self.max_level < 0:
            raise ValueError("max_level must be nonnegative")

    def y(self, j: int) -> float:
        return 1.0 - self.theta**j / 2.0

    def width(self, j: int) -> float:
        return 2.0 ** (-j) / self.N

    def height(self, j: int) -> float:
        return self.y(j + 1) - self.y(j)

    @property
    def j0(self) -> int:
        """Last generation with l_j < h_j."""
        j = 0
        while self.width(j + 1) < self.height(j + 1):
            j += 1
        return j

    @property
    def last_level(self) -> int:
        return self.j0 if self.max_level is None else min(self.j0, self.max_level)


class Branching(Construction2D):
    """Self-similar branching for the well e_1^{(.)m} on (0,1)^2.

    The upper half [0,1] x [1/2,1] is tiled by generations of unit cells
    refining toward y = 1 and closed by a cut-off generation; the lower half is
    its mirror image, ``u_k(x, y) = (-1)^k u_k(x, 1 - y)``.
    """

    operator = "curl"

    def __init__(self, params: BranchingParams):
        self.p = params
        self.m = params.m
        self.lam = params.lam
        self.gamma = GammaProfile(params.delta, kind=params.gamma_kind)
        self.cutoff_profile = CutoffProfile(kind=params.gamma_kind)
        self.bands = self._build_bands()

    @property
    def well_components(self) -> np.ndarray:
        return SymTensor.basis((self.m, 0)).components

    def _build_bands(self) -> list[Band]:
        p = self.p
        bands = []
        J = p.last_level
        for j in range(J + 1):
            cp = UnitCellParams(p.width(j), p.height(j), p.lam, p.m, self.gamma)
            cell = UnitCell(cp, mode=p.mode)
            bands.append(Band(j, p.y(j), p.y(j + 1), p.width(j), p.N * 2**j, cell, "unit"))
        l_cut = p.width(J + 1)
        count = p.N * 2 ** (J + 1)
        if J == p.j0:
            # closing generation of height theta^{j0+1}/2, which may exceed its width
            H = p.theta ** (J + 1) / 2.0
            cell = CutoffCell(l_cut, H, p.lam, p.m, self.cutoff_profile, validate=False)
            bands.append(Band(J + 1, p.y(J + 1), 1.0, l_cut, count, cell, "cutoff"))
        else:
            # truncated refinement: straight laminate, then a square cut-off
            H = min(l_cut, 1.0 - p.y(J + 1))
            y_lam = 1.0 - H
            if y_lam > p.y(J + 1):
                strip = LaminateStrip(l_cut, y_lam - p.y(J + 1), p.lam, p.m)
                bands.append(Band(J + 1, p.y(J + 1), y_lam, l_cut, count, strip, "laminate"))
            cell = CutoffCell(l_cut, H, p.lam, p.m, self.cutoff_profile)
            bands.append(Band(J + 2, y_lam, 1.0, l_cut, count, cell, "cutoff"))
        return bands

    # evaluation ---------------------------------------------------------------
    def _locate(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        inside = self._inside(x, y)
        lower = y < 0.5
        yu = np.where(lower, 1.0 - y, y)
        band = np.full(x.shape, -1, dtype=np.int64)
        for i, b in enumerate(self.bands):
            sel = inside & (yu >= b.y0) & ((yu < b.y1) | ((b.y1 >= 1.0) & (yu <= 1.0)))
            band[sel] = i
        return x, yu, lower, band

    def _per_band(self, x, y, fn, out_shape_prefix=()):
        x, yu, lower, band = self._locate(x, y)
        out = np.zeros(out_shape_prefix + x.shape)
        for i, b in enumerate(self.bands):
            sel = band == i
            if not np.any(sel):
                continue
            xs = x[sel]
            idx = np.minimum(np.floor(xs / b.width), b.count - 1)
            xl = xs - idx * b.width
            yl = yu[sel] - b.y0
            out[(Ellipsis, sel)] = fn(b, xl, yl, idx, lower[sel], i)
        return out

    def components(self, x, y) -> np.ndarray:
        signs = (-1.0) ** np.arange(self.m + 1)

        def fn(b, xl, yl, idx, low, i):
            c = b.cell.components(xl, yl)
            return np.where(low, signs[:, None], 1.0) * c

        return self._per_band(x, y, fn, (self.m + 1,))

    def phase(self, x, y) -> np.ndarray:
        return self._per_band(x, y, lambda b, xl, yl, idx, low, i: b.cell.phase(xl, yl))

    def region_id(self, x, y) -> np.ndarray:
        def fn(b, xl, yl, idx, low, i):
            r = b.cell.region(xl, yl)
            return ((idx * 8 + r) * 512 + 2 * i + low).astype(float)

        out = self._per_band(x, y, fn)
        _, _, _, band = self._locate(x, y)
        return np.where(band < 0, -1, out).astype(np.int64)

    # energies -------------------------------------------------------------------
    def _band_energies(self, n_y: int):
        key = n_y
        cache = self.__dict__.setdefault("_energy_cache", {})
        if key not in cache:
            cache[key] = [b.cell.energy(n_y) for b in self.bands]
        return cache[key]

    def component_sq(self, n_y: int = 64) -> np.ndarray:
        tot = np.zeros(self.m + 1)
        for b, e in zip(self.bands, self._band_energies(n_y)):
            tot += b.count * e.component_sq
        return 2.0 * tot

    def interface_length(self, n_y: int = 64) -> float:
        tot = sum(b.count * e.interface_length for b, e in zip(self.bands, self._band_energies(n_y)))
        return 2.0 * tot

    def max_intended_error(self, n_y: int = 64) -> float:
        return max(e.max_intended_error for b, e in zip(self.bands, self._band_energies(n_y)) if b.kind == "unit")

    def finest_width(self) -> float:
        return min(b.width for b in self.bands)

    def resolved_depth(self, cell_size: float, min_cells: int = 8) -> float:
        """Distance to y = 1 below which cells are narrower than min_cells grid cells."""
        for b in self.bands:
            if b.width < min_cells * cell_size:
                return 1.0 - b.y0
        return 0.0

    def polylines(self, min_width: float = 1.0 / 4096) -> list[np.ndarray]:
        curves = []
        for b in self.bands:
            if b.width < min_width:
                continue
            local = b.cell.interface_polylines()
            for k in range(b.count):
                for c in local:
                    xs = c[:, 0] + k * b.width
                    ys = c[:, 1] + b.y0
                    curves.append(np.column_stack([xs, ys]))
                    curves.append(np.column_stack([xs, 1.0 - ys]))
        return curves


# ----------------------------------------------------------------------------
# lifting, axis swap and the divergence transform


def lift_coefficients(m: int, l: int) -> np.ndarray:
    """c_k with u_k = c_k w_{k-(m-l)} for k >= m-l, zero below."""
    out = np.zeros(m + 1)
    s = m - l
    for k in range(s, m + 1):
        out[k] = (-1) ** (l - m) * 2.0 ** (m - l) * math.factorial(l) * math.factorial(k) / (
            math.factorial(m) * math.factorial(k - s)
        )
    return out


class Lifted(Construction2D):
    """Order-m field built from an order-l construction for e_1^{(.)l}.

    The well direction becomes c_{m-l} e_1^{(.)l} (.) e_2^{(.)(m-l)}.
    """

    def __init__(self, base: Construction2D, m: int, l: int):
        if base.operator != "curl":
            raise ValueError("lifting applies to curl constructions")
        if l in (0, m):
            raise ValueError("l in {0, m} needs no lift; use the branching construction directly")
        if not 0 < l < m:
            raise ValueError("need 0 < l < m")
        if base.m != l:
            raise ValueError(f"base construction has order {base.m}, expected {l}")
        if 2 * l < m:
            raise ValueError("lift requires l >= m - l; swap axes first")
        if not np.allclose(base.well_components, SymTensor.basis((l, 0)).components):
            raise ValueError("base construction must use the well e_1^{(.)l}")
        self.base, self.m, self.l = base, m, l
        self.operator = "curl"
        self.lam = base.lam
        self.coef = lift_coefficients(m, l)

    @property
    def shift(self) -> int:
        return self.m - self.l

    @property
    def well_components(self) -> np.ndarray:
        w = np.zeros(self.m + 1)
        w[self.shift] = self.coef[self.shift]
        return w

    def components(self, x, y):
        wc = self.base.components(x, y)
        out = np.zeros((self.m + 1,) + wc.shape[1:])
        out[self.shift:] = self.coef[self.shift:].reshape((-1,) + (1,) * (wc.ndim - 1)) * wc
        return out

    def phase(self, x, y):
        return self.base.phase(x, y)

    def region_id(self, x, y):
        return self.base.region_id(x, y)

    def component_sq(self, n_y: int = 64):
        out = np.zeros(self.m + 1)
        out[self.shift:] = self.coef[self.shift:] ** 2 * self.base.component_sq(n_y)
        return out

    def interface_length(self, n_y: int = 64):
        return self.base.interface_length(n_y)

    def max_intended_error(self, n_y: int = 64):
        return self.base.max_intended_error(n_y)

    def polylines(self, min_width: float = 1.0 / 4096):
        return self.base.polylines(min_width)


class Swapped(Construction2D):
    """Exchange x and y: u'_k(x, y) = u_{m-k}(y, x)."""

    def __init__(self, base: Construction2D):
        self.base = base
        self.m = base.m
        self.operator = base.operator
        self.lam = base.lam
        x0, x1, y0, y1 = base.domain
        self.domain = (y0, y1, x0, x1)

    @property
    def well_components(self):
        return self.base.well_components[::-1].copy()

    def components(self, x, y):
        return self.base.components(y, x)[::-1]

    def phase(self, x, y):
        return self.base.phase(y, x)

    def region_id(self, x, y):
        return self.base.region_id(y, x)

    def component_sq(self, n_y: int = 64):
        return self.base.component_sq(n_y)[::-1].copy()

    def interface_length(self, n_y: int = 64):
        return self.base.interface_length(n_y)

    def max_intended_error(self, n_y: int = 64):
        return self.base.max_intended_error(n_y)

    def polylines(self, min_width: float = 1.0 / 4096):
        return [c[:, ::-1].copy() for c in self.base.polylines(min_width)]


def swap_axes(c: Construction2D) -> Construction2D:
    return Swapped(c)


def divergence_factors(m: int) -> np.ndarray:
    """alpha(m, j) = (-1)^j 2^{-m} binom(m, j)."""
    return np.array([(-1) ** j * 2.0 ** (-m) * math.comb(m, j) for j in range(m + 1)])


class DivergenceTransformed(Construction2D):
    """Divergence-free field u_{m-j} = alpha(m,j) u'_j from a curl-free field u'."""

    operator = "divergence"

    def __init__(self, base: Construction2D, m: int | None = None):
        if base.operator != "curl":
            raise ValueError("the divergence transform takes a curl construction")
        if m is not None and m != base.m:
            raise ValueError(f"order mismatch: construction has order {base.m}, got {m}")
        self.base = base
        self.m = base.m
        self.lam = base.lam
        self.alpha = divergence_factors(self.m)

    def _map(self, arr, power=1):
        a = self.alpha**power
        return (a.reshape((-1,) + (1,) * (np.ndim(arr) - 1)) * arr)[::-1]

    @property
    def well_components(self):
        return self._map(self.base.well_components)

    @property
    def well(self) -> VecSymTensor:
        return VecSymTensor(1, 2, self.m, self.well_components)

    def components(self, x, y):
        return self._map(self.base.components(x, y))

    def phase(self, x, y):
        return self.base.phase(x, y)

    def region_id(self, x, y):
        return self.base.region_id(x, y)

    def component_sq(self, n_y: int = 64):
        return self._map(self.base.component_sq(n_y), power=2)

    def interface_length(self, n_y: int = 64):
        return self.base.interface_length(n_y)

    def max_intended_error(self, n_y: int = 64):
        return self.base.max_intended_error(n_y)

    def polylines(self, min_width: float = 1.0 / 4096):
        return self.base.polylines(min_width)


def divergence_transform(c: Construction2D, m: int | None = None) -> DivergenceTransformed:
    return DivergenceTransformed(c, m)


def intermediate_lift(w: Construction2D, m: int, l: int) -> Lifted:
    return Lifted(w, m, l)


def branching(params: BranchingParams) -> Branching:
    return Branching(params)


def build_construction(
    operator: str,
    l,
    N: int,
    lam: float = 0.5,
    delta: float = 0.1,
    theta: float | None = None,
    gamma_kind: str = "mollifier",
    mode: str = "formula",
    max_level: int | None = None,
) -> Construction2D:
    """Construction for the basis well with exponent ``l = (l1, l2)``.

    Curl: branching for e_1^{(.)m}, lifted when both exponents are positive,
    with the axes exchanged when l1 < l2.  Divergence: the transform of the
    curl construction for the exchanged exponent.
    """
    l1, l2 = (int(k) for k in l)
    m = l1 + l2
    if operator == "divergence":
        return DivergenceTransformed(build_construction("curl", (l2, l1), N, lam, delta, theta, gamma_kind, mode, max_level))
    if operator != "curl":
        raise ValueError(f"unknown operator {operator!r}")
    top = max(l1, l2)

    def base(order):
        return Branching(BranchingParams(N, order, lam, theta if order == top else None, delta, gamma_kind, mode, max_level))

    if l2 == 0:
        return base(m)
    if l1 == 0:
        return Swapped(base(m))
    if l1 >= l2:
        return Lifted(base(l1), m, l1)
    return Swapped(Lifted(base(l2), m, l2))


# ----------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class ResidualReport:
    n: int
    max_abs: float
    max_rel: float  # max_abs / scale
    scale: float  # largest single residual term over the kept points
    n_points: int
    band: int


@dataclass(frozen=True)
class EnergyReport:
    E_el: float
    E_surf: float
    eps: float
    E_total: float
    component_sq: np.ndarray
    resolution: int  # quadrature nodes per cell in y
    max_intended_error: float
    residual: ResidualReport | None = None
    extra: dict = field(default_factory=dict)


def grid_points(n: int, domain=(0.0, 1.0, 0.0, 1.0)):
    x0, x1, y0, y1 = domain
    xs = x0 + (np.arange(n) + 0.5) * (x1 - x0) / n
    ys = y0 + (np.arange(n) + 0.5) * (y1 - y0) / n
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    return X, Y, (x1 - x0) / n


def residual_field(c: Construction2D, n: int) -> tuple[np.ndarray, np.ndarray, float, np.ndarray]:
    """Discrete compatibility residual on an n x n grid, region labels, spacing and term scale.

    The term scale is the largest single term of the residual sum at each point.
    """
    X, Y, h = grid_points(n, c.domain)
    comps = c.components(X, Y)
    terms = sv_residual_terms_2d(comps, h) if c.operator == "curl" else div_residual_terms_2d(comps, h)
    res = sum(terms)
    scale = np.max(np.abs(np.stack(terms)), axis=0)
    return res, c.region_id(X, Y), h, scale


def residual_report(c: Construction2D, n: int = 512, band: int = 2) -> ResidualReport:
    """Max residual at points at least ``band`` cells away from any label change.

    ``max_rel`` divides by the largest single residual term over the same
    points, so cancellation between terms is measured on its own scale.
    """
    band = max(band, fd_reach(c.m))
    res, rid, h, terms = residual_field(c, n)
    size = 2 * band + 1
    same = ndimage.maximum_filter(rid, size=size, mode="nearest") == ndimage.minimum_filter(rid, size=size, mode="nearest")
    keep = same & np.isfinite(res)
    vals = np.abs(res[keep])
    max_abs = float(vals.max()) if vals.size else 0.0
    scale = float(terms[keep].max()) if vals.size else 0.0
    return ResidualReport(n, max_abs, max_abs / scale if scale > 0 else 0.0, scale, int(keep.sum()), band)


def construction_energy(c: Construction2D, eps: float, n_y: int = 64, residual_grid: int | None = None) -> EnergyReport:
    sq = c.component_sq(n_y)
    E_el = float(np.sum(class_weights(2, c.m) * sq))
    E_surf = c.well_norm * c.interface_length(n_y)
    res = residual_report(c, residual_grid) if residual_grid else None
    return EnergyReport(E_el, E_surf, float(eps), E_el + eps * E_surf, sq, n_y, c.max_intended_error(n_y), res)


def rasterize(c: Construction2D, n: int, pad: float = 2.0) -> PhaseField:
    """Sample f at cell centers of an n x n grid on Omega inside a padded box."""
    x0, x1, y0, y1 = c.domain
    nb = int(round(n * pad))
    h = (x1 - x0) / n
    lo_x = x0 - (nb - n) // 2 * h
    lo_y = y0 - (nb - n) // 2 * h
    box = (lo_x, lo_y, lo_x + nb * h, lo_y + nb * h)
    xs = lo_x + (np.arange(nb) + 0.5) * h
    ys = lo_y + (np.arange(nb) + 0.5) * h
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    f = c.phase(X, Y)
    inside = (X > x0) & (X < x1) & (Y > y0) & (Y < y1)
    codes = np.where(inside, np.where(f > 0, 1, np.where(f < 0, -1, 0)), 0).astype(np.int8)
    return PhaseField(codes, c.lam, box, (x0, y0, x1, y1))


def write_polylines(curves, path) -> None:
    """Plain text: one curve per block of ``x y`` lines, blocks separated by blank lines."""
    with open(path, "w") as fh:
        for c in curves:
            for x, y in c:
                fh.write(f"{x:.17g} {y:.17g}\n")
            fh.write("\n")


def read_polylines(path) -> list[np.ndarray]:
    curves, cur = [], []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                if cur:
                    curves.append(np.array(cur))
                    cur = []
                continue
            cur.append([float(v) for v in line.split()])
    if cur:
        curves.append(np.array(cur))
    return curves
