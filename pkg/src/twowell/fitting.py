"""Log-log power-law fits of energy sweeps."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MIN_ROWS = 6
WINDOW = 6
CURVATURE_TOL = 0.02


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float  # log10 prefactor
    r2: float
    residuals: np.ndarray
    theory: float | None
    window_slopes: np.ndarray = field(default_factory=lambda: np.zeros(0))
    curvature: bool = False
    n_rows: int = 0

    @property
    def deviation(self) -> float | None:
        return None if self.theory is None else self.slope - self.theory

    def summary(self) -> str:
        parts = [f"slope={self.slope:.4f}", f"intercept={self.intercept:.4f}", f"R2={self.r2:.6f}", f"rows={self.n_rows}"]
        if self.theory is not None:
            parts.append(f"theory={self.theory:.4f}")
            parts.append(f"deviation={self.slope - self.theory:+.4f}")
        if self.window_slopes.size:
            parts.append(f"window_slopes=[{self.window_slopes.min():.4f},{self.window_slopes.max():.4f}]")
        parts.append(f"curvature={'yes' if self.curvature else 'no'}")
        return " ".join(parts)


def theory_exponent(L: int) -> float:
    return 2.0 * L / (2.0 * L + 1.0)


def _line(x, y):
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    return coef


def fit_slope(eps, energy, theory: float | None = None, window: int = WINDOW,
              curvature_tol: float = CURVATURE_TOL) -> ScalingFit:
    """Least-squares line through (log10 eps, log10 E) plus sliding-window slopes."""
    eps = np.asarray(eps, dtype=float)
    energy = np.asarray(energy, dtype=float)
    if eps.shape != energy.shape:
        raise ValueError("eps and energy differ in length")
    if eps.size < MIN_ROWS:
        raise ValueError(f"need at least {MIN_ROWS} rows, got {eps.size}")
    if np.any(eps <= 0) or np.any(energy <= 0):
        raise ValueError("log-log fit needs positive values")
    order = np.argsort(eps)
    x = np.log10(eps[order])
    y = np.log10(energy[order])
    slope, intercept = _line(x, y)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    r2 = min(max(r2, 0.0), 1.0)
    wins = np.array([_line(x[i:i + window], y[i:i + window])[0] for i in range(x.size - window + 1)])
    curved = bool(wins.size > 1 and wins.max() - wins.min() > curvature_tol)
    return ScalingFit(float(slope), float(intercept), r2, resid, theory, wins, curved, int(x.size))


def fit_rows(rows, theory: float | None = None) -> ScalingFit:
    """Fit E_total against epsilon over the unflagged rows."""
    good = [r for r in rows if not r.flag]
    return fit_slope([r.epsilon for r in good], [r.E_total for r in good], theory)
