"""Smooth transition profiles used by the unit cell and the cut-off layer.

``GammaProfile`` equals 1 on ``[0, delta]``, 0 on ``[1 - delta, 1]`` and
interpolates in between.  Two realizations are available:

* ``"mollifier"``: ``H(1-delta-t) / (H(1-delta-t) + H(t-delta))`` with
  ``H(s) = exp(-1/s)``.  Writing it as the logistic ``1/(1 + exp(psi))`` with
  ``psi = 1/(1-delta-t) - 1/(t-delta)`` gives derivatives through Faa di
  Bruno's formula; the logistic derivatives are polynomials in the logistic
  itself, so everything stays finite near the end points.
* ``"smoothstep"``: the polynomial smoothstep of class C^{order}.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
import sympy as sp
from numpy.polynomial import Polynomial
from scipy.special import expit

# below this distance to the flat zones exp(-1/s) < 1e-200 and the profile is
# treated as exactly flat
_EDGE = 2e-3


@lru_cache(maxsize=None)
def _faa_di_bruno(n: int):
    """Callable (sigma, 1 - sigma, psi_1..psi_n) -> n-th derivative of 1/(1+exp(psi(t))).

    The k-th logistic derivative is -sigma (1 - sigma) Q_k(sigma); keeping the
    factor sigma (1 - sigma) explicit avoids cancellation when sigma is near 0 or 1.
    """
    s, tau = sp.symbols("s tau")
    psis = sp.symbols(f"p1:{n + 1}")
    P = [None, sp.expand(s * s - s)]
    for _ in range(2, n + 1):
        P.append(sp.expand(sp.diff(P[-1], s) * (s * s - s)))
    expr = 0
    for k in range(1, n + 1):
        Q = sp.cancel(P[k] / (s * s - s))
        expr += -s * tau * Q * sp.bell(n, k, psis[: n - k + 1])
    return sp.lambdify((s, tau) + tuple(psis), expr, "numpy")


def _smoothstep_poly(n: int) -> Polynomial:
    """S with S(0)=0, S(1)=1 and vanishing derivatives up to order n at both ends."""
    coeffs = np.zeros(2 * n + 2)
    for k in range(n + 1):
        coeffs[n + 1 + k] = math.comb(n + k, k) * math.comb(2 * n + 1, n - k) * (-1) ** k
    return Polynomial(coeffs)


class GammaProfile:
    """Decreasing step from 1 (t <= delta) to 0 (t >= 1 - delta)."""

    def __init__(self, delta: float = 0.1, kind: str = "mollifier", order: int = 4):
        if not 0.0 <= delta < 0.25:
            raise ValueError("delta must lie in [0, 1/4)")
        if kind not in ("mollifier", "smoothstep"):
            raise ValueError(f"unknown profile kind {kind!r}")
        self.delta = float(delta)
        self.kind = kind
        self.order = int(order)
        if kind == "smoothstep":
            self._poly = _smoothstep_poly(self.order + 1)

    def __repr__(self) -> str:
        return f"GammaProfile(delta={self.delta}, kind={self.kind!r}, order={self.order})"

    def __call__(self, t) -> np.ndarray:
        return self.deriv(t, 0)

    def deriv(self, t, k: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.kind == "smoothstep":
            return self._smoothstep(t, k)
        return self._mollifier(t, k)

    def _smoothstep(self, t, k):
        width = 1.0 - 2.0 * self.delta
        s = (t - self.delta) / width
        inside = (s > 0) & (s < 1)
        if k == 0:
            out = np.where(s <= 0, 1.0, 0.0)
            out = np.where(inside, 1.0 - self._poly(np.clip(s, 0, 1)), out)
            return out
        dp = self._poly.deriv(k)
        return np.where(inside, -dp(np.clip(s, 0, 1)) / width**k, 0.0)

    def _mollifier(self, t, k):
        a = 1.0 - self.delta - t
        b = t - self.delta
        inside = (a > _EDGE) & (b > _EDGE)
        a_s = np.where(inside, a, 1.0)
        b_s = np.where(inside, b, 1.0)
        psi = 1.0 / a_s - 1.0 / b_s
        sigma = expit(-psi)
        if k == 0:
            flat = np.where(t <= 0.5, 1.0, 0.0)
            return np.where(inside, sigma, flat)
        dpsi = [
            math.factorial(j) * (a_s ** (-(j + 1)) - (-1) ** j * b_s ** (-(j + 1)))
            for j in range(1, k + 1)
        ]
        val = _faa_di_bruno(k)(sigma, expit(psi), *dpsi)
        return np.where(inside, val, 0.0)

    def sup_norm(self, k: int, n: int = 20001) -> float:
        t = np.linspace(0.0, 1.0, n)
        return float(np.max(np.abs(self.deriv(t, k))))

    def transition(self) -> tuple[float, float]:
        return self.delta, 1.0 - self.delta


class CutoffProfile:
    """phi = 1 on [0, 1/2], 0 on [3/4, oo), built from a delta = 0 step."""

    def __init__(self, kind: str = "mollifier", order: int = 4):
        self._g = GammaProfile(0.0, kind=kind, order=order)

    def deriv(self, t, k: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self._g.deriv(4.0 * t - 2.0, k) * 4.0**k

    def __call__(self, t) -> np.ndarray:
        return self.deriv(t, 0)
