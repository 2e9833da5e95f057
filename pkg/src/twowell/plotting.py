"""Static figures: log-log sweep plots and construction geometry."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .fitting import ScalingFit  # noqa: E402


def _check_path(path) -> Path:
    path = Path(path)
    if not path.suffix:
        raise ValueError("output path needs an image extension such as .png or .svg")
    if path.parent and not path.parent.exists():
        raise OSError(f"directory {path.parent} does not exist")
    return path


def _frac(x: float) -> str:
    from fractions import Fraction

    q = Fraction(x).limit_denominator(32)
    return f"{q.numerator}/{q.denominator}" if q.denominator != 1 else str(q.numerator)


def emit_plot(series, path, title: str | None = None) -> Path:
    """Log-log plot of one or more sweeps.

    ``series`` is a list of ``(label, rows, fit)``; flagged rows are drawn
    hollow.  Each fit adds its fitted line and a reference line with the
    theoretical exponent through the same mid point.
    """
    path = _check_path(path)
    series = [s for s in series if s[1]]
    if not series:
        raise ValueError("no rows to plot")
    fig, ax = plt.subplots(figsize=(6.0, 4.5))
    for i, (label, rows, fit) in enumerate(series):
        color = f"C{i}"
        eps = np.array([r.epsilon for r in rows])
        E = np.array([r.E_total for r in rows])
        bad = np.array([bool(r.flag) for r in rows])
        ax.loglog(eps[~bad], E[~bad], "o", color=color, ms=4, label=label)
        if bad.any():
            ax.loglog(eps[bad], E[bad], "o", mfc="none", color=color, ms=4, label=f"{label} (flagged)")
        if isinstance(fit, ScalingFit):
            xs = np.array([eps.min(), eps.max()])
            ax.loglog(xs, 10**fit.intercept * xs**fit.slope, "-", color=color, lw=1,
                      label=f"fit slope {fit.slope:.3f}")
            if fit.theory is not None:
                xm = np.sqrt(xs[0] * xs[1])
                ym = 10**fit.intercept * xm**fit.slope
                ax.loglog(xs, ym * (xs / xm) ** fit.theory, "--", color=color, lw=1,
                          label=f"reference slope {_frac(fit.theory)}")
    ax.set_xlabel("epsilon")
    ax.set_ylabel("energy")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def emit_geometry_plot(curves, path, title: str | None = None) -> Path:
    """Interface curves of a construction on the unit square."""
    path = _check_path(path)
    if not curves:
        raise ValueError("no curves to plot")
    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    for c in curves:
        ax.plot(c[:, 0], c[:, 1], "k-", lw=0.5)
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path
