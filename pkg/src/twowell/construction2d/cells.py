"""Unit cell and cut-off layer of the two-dimensional branching construction.

Components follow the d = 2 convention: ``u_k`` is the component of an
order-m symmetric tensor whose index contains ``k`` twos, and a potential
``v`` of order m-1 produces

    u_0 = d1 v_0,  u_k = (m-k)/m d1 v_k + k/m d2 v_{k-1},  u_m = d2 v_{m-1}.

Inside a unit cell the phase interfaces are the curves ``x = a_i(y)``,
i = 1..4.  ``d2^k v_0`` is piecewise constant in x, so every potential
component is an exact piecewise polynomial in x built from truncated powers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..symtensor import SymTensor
from .profiles import CutoffProfile, GammaProfile

_SIGNS = np.array([1.0, -1.0, -1.0, 1.0])
# _SIGNS times the direction in which each breakpoint moves as gamma grows
_MOVE = np.array([1.0, -1.0, 1.0, -1.0])


def truncated_power(s: np.ndarray, n: int) -> np.ndarray:
    """s_+^n / n!, with the convention s_+^0 = 1 for s >= 0."""
    if n == 0:
        return (s >= 0).astype(float)
    return np.where(s > 0, s, 0.0) ** n / math.factorial(n)


def gauss_legendre(a: float, b: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_gauss(breaks, n_per_panel: int) -> tuple[np.ndarray, np.ndarray]:
    xs, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            x, w = gauss_legendre(a, b, n_per_panel)
            xs.append(x)
            ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def potential_factors(m: int) -> np.ndarray:
    """P_k = prod_{j=1}^k (-j/(m-j)) for k = 0..m-1."""
    out = np.ones(max(m, 1))
    for k in range(1, m):
        out[k] = out[k - 1] * (-k / (m - k))
    return out


def _check_resolution(n: int):
    if n < 8:
        raise ValueError("quadrature resolution must be at least 8 nodes")


@dataclass(frozen=True)
class CellEnergy:
    component_sq: np.ndarray  # int |u_k - chi_k|^2 over the cell, k = 0..m
    interface_length: float
    max_intended_error: float  # max |u_0 - f|, |u_k| (0<k<m) at quadrature points


@dataclass(frozen=True)
class UnitCellParams:
    l: float
    h: float
    lam: float
    m: int
    gamma: GammaProfile

    def __post_init__(self):
        if not 0.0 < self.l < self.h <= 1.0:
            raise ValueError("unit cell needs 0 < l < h <= 1")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if self.m < 1:
            raise ValueError("order m must be positive")
        if not self.gamma.delta < 0.25:
            raise ValueError("delta must be below 1/4")


class UnitCell:
    """Cell (0,l) x (0,h): two interfaces at the bottom, four at the top.

    ``mode="formula"`` evaluates y-derivatives of the potentials by
    differentiating the integrand only, so u_1..u_{m-1} vanish identically.
    ``mode="exact"`` differentiates the potentials themselves, including the
    terms created by the moving breakpoints; then u = D^sym v holds exactly
    inside the cell but u_k, 2 <= k < m, no longer vanish.
    """

    def __init__(self, params: UnitCellParams, *, mode: str = "formula", validate: bool = True):
        if validate:
            params.__post_init__()
        if mode not in ("formula", "exact"):
            raise ValueError("mode must be 'formula' or 'exact'")
        self.mode = mode
        self.p = params
        self.l, self.h, self.lam, self.m = params.l, params.h, params.lam, params.m
        self.gamma = params.gamma
        self.c = self.lam * self.l / 4.0
        self.P = potential_factors(self.m)
        self.domain = (0.0, self.l, 0.0, self.h)
        self.well = SymTensor.basis((self.m, 0))

    # geometry -----------------------------------------------------------
    def breakpoints(self, y) -> np.ndarray:
        """Array (..., 4) with a_1(y) <= ... <= a_4(y)."""
        y = np.asarray(y, dtype=float)
        g = self.gamma(y / self.h)
        lam, l, c = self.lam, self.l, self.c
        return np.stack(
            [
                c * (1.0 + g),
                (2.0 - lam) * l / 4.0 + c * g,
                (2.0 + lam) * l / 4.0 - c * g,
                (4.0 - lam) * l / 4.0 - c * g,
            ],
            axis=-1,
        )

    def breakpoint_slope(self, y) -> np.ndarray:
        """|a_i'(y)|, identical for the four curves."""
        return np.abs(self.c * self.gamma.deriv(np.asarray(y) / self.h, 1) / self.h)

    def region(self, x, y) -> np.ndarray:
        """Index 0..4 of the region omega_1..omega_5 containing (x, y)."""
        a = self.breakpoints(y)
        x = np.asarray(x, dtype=float)
        return np.sum(x[..., None] >= a, axis=-1)

    def phase(self, x, y) -> np.ndarray:
        r = self.region(x, y)
        return np.where(r % 2 == 0, 1.0 - self.lam, -self.lam)

    def dy_coeff(self, y, k: int) -> np.ndarray:
        """d2^k v_0 equals +this on omega_2 and -this on omega_4 (k >= 1)."""
        return self.c * self.gamma.deriv(np.asarray(y) / self.h, k) / self.h**k

    def _Q(self, x, a, n: int) -> np.ndarray:
        """n-fold antiderivative from 0 of 1_[a1,a2) - 1_[a3,a4)."""
        x = np.asarray(x, dtype=float)
        return np.sum(_SIGNS * truncated_power(x[..., None] - a, n), axis=-1)

    # fields -----------------------------------------------------------------
    def v0(self, x, y) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        g = self.gamma(np.asarray(y) / self.h)
        lam, l, c = self.lam, self.l, self.c
        r = self.region(x, y)
        table = [
            (1 - lam) * x,
            -lam * x + c * g + c,
            (1 - lam) * x - (1 - lam) * l / 2,
            -lam * x - c * g + 3 * c,
            (1 - lam) * (x - l),
        ]
        return np.choose(r, table)

    def potential(self, x, y) -> np.ndarray:
        """v_0..v_{m-1} stacked along axis 0."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        a = self.breakpoints(y)
        out = [self.v0(x, y)]
        for k in range(1, self.m):
            out.append(self.P[k] * self.dy_coeff(y, k) * self._Q(x, a, k))
        return np.stack(out)

    def _fields(self, X, Y, piece=None) -> np.ndarray:
        """u_0..u_m at points (X, Y); ``piece`` optionally fixes the region index."""
        m, P = self.m, self.P
        a = self.breakpoints(Y)
        if piece is None:
            piece = np.sum(X[..., None] >= a, axis=-1)
        s = X[..., None] - a

        def T(n):
            if n == 0:
                return (np.arange(4) < piece[..., None]).astype(float)
            return truncated_power(s, n)

        def Q(n):
            return np.sum(_SIGNS * T(n), axis=-1)

        def R(n):
            return np.sum(_MOVE * T(n), axis=-1)

        d = [None] + [self.dy_coeff(Y, k) for k in range(1, m + 1)]

        def d2v(j):
            # y-derivative of v_j; the formula mode differentiates under the
            # integral sign, the exact mode adds the moving-breakpoint terms
            val = P[j] * d[j + 1] * Q(j)
            if j >= 1 and self.mode == "exact":
                val = val - P[j] * d[j] * d[1] * R(j - 1)
            return val

        out = [np.where(piece % 2 == 0, 1.0 - self.lam, -self.lam) * np.ones_like(X)]
        for k in range(1, m):
            out.append((m - k) / m * P[k] * d[k] * Q(k - 1) + k / m * d2v(k - 1))
        out.append(d2v(m - 1))
        return np.stack(out)

    def components(self, x, y) -> np.ndarray:
        """u_0..u_m stacked along axis 0."""
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        return self._fields(x, y)

    def targets(self, x, y) -> np.ndarray:
        f = self.phase(x, y)
        out = np.zeros((self.m + 1,) + np.shape(f))
        out[0] = f
        return out

    # integrals --------------------------------------------------------------
    def y_nodes(self, n: int = 64) -> tuple[np.ndarray, np.ndarray]:
        _check_resolution(n)
        d = self.gamma.delta
        h = self.h
        n_mid = max(8, n - 8)
        panels = max(1, n_mid // 8)
        mid_breaks = np.linspace(d * h, (1 - d) * h, panels + 1)
        ys, ws = [], []
        if d > 0:
            y, w = gauss_legendre(0.0, d * h, 4)
            ys.append(y)
            ws.append(w)
        y, w = composite_gauss(mid_breaks, n_mid // panels)
        ys.append(y)
        ws.append(w)
        if d > 0:
            y, w = gauss_legendre((1 - d) * h, h, 4)
            ys.append(y)
            ws.append(w)
        return np.concatenate(ys), np.concatenate(ws)

    def energy(self, n_y: int = 64) -> CellEnergy:
        ys, wy = self.y_nodes(n_y)
        a = self.breakpoints(ys)  # (ny, 4)
        edges = np.concatenate([np.zeros((ys.size, 1)), a, np.full((ys.size, 1), self.l)], axis=1)
        nx = self.m + 1
        gx, gw = np.polynomial.legendre.leggauss(nx)
        lo, hi = edges[:, :-1], edges[:, 1:]  # (ny, 5)
        half = 0.5 * (hi - lo)
        X = lo[..., None] + half[..., None] * (gx + 1.0)  # (ny, 5, nx)
        W = half[..., None] * gw  # (ny, 5, nx)
        Y = np.broadcast_to(ys[:, None, None], X.shape)
        # evaluate inside each piece using the piece index directly, so points
        # that sit on a collapsed piece cannot be misassigned
        piece = np.broadcast_to(np.arange(5)[None, :, None], X.shape)
        comps = self._fields(X, Y, piece)
        f = np.broadcast_to(np.where(np.arange(5) % 2 == 0, 1 - self.lam, -self.lam)[None, :, None], X.shape)
        diff = comps.copy()
        diff[0] = comps[0] - f
        sq = np.einsum("kyix,yix,y->k", diff**2, W, wy)
        intended = np.max(np.abs(diff[: self.m])) if self.m > 0 else 0.0
        slope = self.breakpoint_slope(ys)
        arc = np.sqrt(1.0 + slope**2)
        full = float(np.sum(wy * arc))
        partial = full - self.gamma.delta * self.h
        return CellEnergy(sq, 2 * full + 2 * partial, float(intended))

    def interface_polylines(self, n: int = 33) -> list[np.ndarray]:
        y = np.linspace(0.0, self.h, n)
        a = self.breakpoints(y)
        curves = [np.column_stack([a[:, 0], y]), np.column_stack([a[:, 3], y])]
        y0 = self.gamma.delta * self.h
        ys = np.concatenate([[y0], y[y > y0]])
        ap = self.breakpoints(ys)
        curves += [np.column_stack([ap[:, 1], ys]), np.column_stack([ap[:, 2], ys])]
        return curves


def unit_cell(params: UnitCellParams, mode: str = "formula") -> UnitCell:
    return UnitCell(params, mode=mode)


class CutoffCell:
    """Cell (0,l) x (0,h) where the 2-interface laminate is faded to F_lambda.

    The potential is ``phi(y/h) ftilde(x) e_1^{m-1}``; only ``v_0`` is nonzero.
    """

    def __init__(self, l: float, h: float, lam: float, m: int, profile: CutoffProfile | None = None,
                 *, validate: bool = True):
        if validate and h > l:
            raise ValueError("cut-off layer needs h <= l")
        if not 0.0 < lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        self.l, self.h, self.lam, self.m = float(l), float(h), float(lam), int(m)
        self.phi = profile or CutoffProfile()
        self.domain = (0.0, self.l, 0.0, self.h)
        self.well = SymTensor.basis((self.m, 0))

    @cached_property
    def knots(self) -> np.ndarray:
        lam, l = self.lam, self.l
        return np.array([0.0, lam * l / 2, (2 - lam) * l / 2, l])

    def region(self, x, y=None) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.sum(x[..., None] >= self.knots[1:3], axis=-1)

    def phase(self, x, y=None) -> np.ndarray:
        return np.where(self.region(x) == 1, -self.lam, 1.0 - self.lam)

    def ftilde(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        lam, l = self.lam, self.l
        r = self.region(x)
        return np.choose(r, [(1 - lam) * x, -lam * x + lam * l / 2, (1 - lam) * x - (1 - lam) * l])

    def potential(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.zeros((self.m,) + x.shape)
        out[0] = self.phi(y / self.h) * self.ftilde(x)
        return out

    def components(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.zeros((self.m + 1,) + x.shape)
        out[0] = self.phi(y / self.h) * self.phase(x)
        out[1] = self.phi.deriv(y / self.h, 1) / self.h * self.ftilde(x) / self.m
        return out

    def targets(self, x, y) -> np.ndarray:
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        out = np.zeros((self.m + 1,) + x.shape)
        out[0] = self.phase(x)
        return out

    def energy(self, n_y: int = 64) -> CellEnergy:
        _check_resolution(n_y)
        lam, l, h, m = self.lam, self.l, self.h, self.m
        ys, wy = composite_gauss(np.linspace(0.5 * h, 0.75 * h, max(1, n_y // 16) + 1), 16)
        phi = self.phi(ys / h)
        dphi = self.phi.deriv(ys / h, 1) / h
        int_1mphi = float(np.sum(wy * (1 - phi) ** 2)) + 0.25 * h
        int_dphi = float(np.sum(wy * dphi**2))
        f2 = lam * (1 - lam) * l
        xs, wx = composite_gauss(self.knots, 2)
        ft2 = float(np.sum(wx * self.ftilde(xs) ** 2))
        sq = np.zeros(m + 1)
        sq[0] = int_1mphi * f2
        sq[1] += int_dphi * ft2 / m**2
        return CellEnergy(sq, 2.0 * h, 0.0)

    def interface_polylines(self, n: int = 2) -> list[np.ndarray]:
        y = np.linspace(0.0, self.h, n)
        return [np.column_stack([np.full(n, k), y]) for k in self.knots[1:3]]


def cutoff_layer(l: float, h: float, lam: float, m: int, profile: CutoffProfile | None = None) -> CutoffCell:
    return CutoffCell(l, h, lam, m, profile)
