"""Energy sweeps over epsilon: explicit constructions (upper) and the Fourier functional (lower).

For a fixed candidate both energies are epsilon independent, so every
candidate is evaluated once and the per-epsilon minimum is an argmin over a
small table.  Candidate evaluations run in a thread pool; results are
assembled in a fixed order so the output does not depend on scheduling.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import SweepConfig, SweepRow
from .construction2d.assembly import (
    Construction2D,
    build_construction,
    construction_energy,
    rasterize,
)
from .fitting import ScalingFit, fit_rows, theory_exponent
from .fourier_bound import spectral_energy
from .multiplier import basis_well, zero_set
from .operators import DivergenceM, SaintVenant

MIN_N = 4
FLAG_SMALL_N = "N<4"
FLAG_RESOLUTION = "resolution"


def _map(fn, items, threads: int):
    items = list(items)
    if threads <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


# ----------------------------------------------------------------------------
# upper bounds


def candidate_N(eps: float, L: int) -> tuple[list[int], bool]:
    """{floor(c n0): c in 1/2, 1, 2} plus the powers of two around n0 = eps^(-1/(2L+1)).

    Values below 4 are dropped; the flag is set when n0 itself is below 4.
    """
    n0 = eps ** (-1.0 / (2 * L + 1))
    cands = {int(math.floor(c * n0)) for c in (0.5, 1.0, 2.0)}
    if n0 >= 1:
        k = math.log2(n0)
        cands |= {2 ** int(math.floor(k)), 2 ** int(math.ceil(k))}
    kept = sorted(N for N in cands if N >= MIN_N)
    return kept or [MIN_N], int(math.floor(n0)) < MIN_N


def upper_construction(cfg: SweepConfig, N: int) -> Construction2D:
    return build_construction(cfg.operator, cfg.l, N, cfg.lam, cfg.delta, cfg.theta, cfg.gamma_kind, cfg.mode)


@dataclass
class UpperSweep:
    rows: list[SweepRow]
    table: dict  # N -> (E_el, E_surf)
    fit: ScalingFit | None


def sweep_upper(cfg: SweepConfig) -> UpperSweep:
    eps_list = cfg.eps_values()
    plan = [candidate_N(e, cfg.L) for e in eps_list]
    Ns = sorted({N for cands, _ in plan for N in cands})

    def energy(N):
        r = construction_energy(upper_construction(cfg, N), 0.0, cfg.n_quad)
        return r.E_el, r.E_surf

    table = dict(zip(Ns, _map(energy, Ns, cfg.threads)))
    rows = []
    for e, (cands, small) in zip(eps_list, plan):
        tot = [table[N][0] + e * table[N][1] for N in cands]
        N = cands[int(np.argmin(tot))]
        E_el, E_surf = table[N]
        rows.append(SweepRow(float(e), N, E_el, E_surf, E_el + e * E_surf, FLAG_SMALL_N if small else ""))
    return UpperSweep(rows, table, _try_fit(rows, cfg.L))


# ----------------------------------------------------------------------------
# lower bounds


class FullLaminate(Construction2D):
    """Straight laminate of period ``width`` filling Omega, interfaces normal to ``axis``."""

    def __init__(self, width: float, lam: float, axis: int = 0, m: int = 1, operator: str = "curl"):
        self.width, self.lam, self.axis, self.m, self.operator = float(width), float(lam), int(axis), m, operator

    def phase(self, x, y):
        t = np.mod(x if self.axis == 0 else y, self.width) / self.width
        return np.where((t >= self.lam / 2) & (t < 1 - self.lam / 2), -self.lam, 1.0 - self.lam)

    def finest_width(self) -> float:
        return self.width


def laminate_axis(c: Construction2D, samples: int = 4097) -> int:
    """Axis normal to the first-generation interfaces of a construction."""
    t = (np.arange(samples) + 0.5) / samples
    mid = np.full_like(t, 0.5)
    changes_x = np.count_nonzero(np.diff(np.sign(c.phase(t, mid))))
    changes_y = np.count_nonzero(np.diff(np.sign(c.phase(mid, t))))
    return 0 if changes_x >= changes_y else 1


@dataclass(frozen=True)
class LowerCandidate:
    kind: str  # "laminate" or "branching"
    N: int  # periods across Omega
    level: int  # last refined generation (-1 for laminates)
    finest_width: float
    E_el: float = math.nan
    E_surf: float = math.nan
    skipped: bool = False


@dataclass
class LowerSweep:
    rows: list[SweepRow]
    candidates: list[LowerCandidate]
    fit: ScalingFit | None
    V: object = None
    L: int = 0
    winners: list[LowerCandidate] = field(default_factory=list)


def lower_zero_set(cfg: SweepConfig):
    op = SaintVenant(cfg.d, cfg.m) if cfg.operator == "curl" else DivergenceM(cfg.d, cfg.m, 1)
    M = basis_well(op, cfg.l)
    L = cfg.L
    return zero_set(op, M), L


def lower_family(cfg: SweepConfig, N_values=(4, 5, 6, 8, 10, 12, 16, 20, 24, 32, 48, 64)):
    """Candidate constructions: capped branching for each N and level, laminates of many periods."""
    h = 1.0 / cfg.grid
    limit = cfg.min_cells * h
    fam = []
    axis = laminate_axis(upper_construction(cfg, MIN_N))
    for N in N_values:
        for J in range(0, 64):
            c = build_construction(cfg.operator, cfg.l, N, cfg.lam, cfg.delta, cfg.theta, cfg.gamma_kind, cfg.mode, max_level=J)
            w = _finest(c)
            if w < limit:
                fam.append((LowerCandidate("branching", N, J, w, skipped=True), None))
                break
            fam.append((LowerCandidate("branching", N, J, w), c))
            if J >= _depth(c):
                break
    k_max = int(cfg.grid // cfg.min_cells)
    periods = sorted({int(round(v)) for v in np.geomspace(2, max(k_max, 2), 40)})
    for k in periods:
        c = FullLaminate(1.0 / k, cfg.lam, axis, cfg.m, cfg.operator)
        fam.append((LowerCandidate("laminate", k, -1, 1.0 / k), c))
    return fam


def _unwrap(c):
    while hasattr(c, "base"):
        c = c.base
    return c


def _finest(c) -> float:
    return _unwrap(c).finest_width()


def _depth(c) -> int:
    return _unwrap(c).p.j0


def sweep_lower(cfg: SweepConfig, family=None) -> LowerSweep:
    V, L = lower_zero_set(cfg)
    fam = family if family is not None else lower_family(cfg)
    live = [(cand, c) for cand, c in fam if not cand.skipped]

    def energy(item):
        cand, c = item
        r = spectral_energy(rasterize(c, cfg.grid, cfg.pad), V, L, 0.0)
        return LowerCandidate(cand.kind, cand.N, cand.level, cand.finest_width, r.E_el, r.E_surf)

    done = _map(energy, live, cfg.threads)
    skipped = [cand for cand, _ in fam if cand.skipped]
    edge = 2.0 * cfg.min_cells / cfg.grid
    rows, winners = [], []
    E_el = np.array([c.E_el for c in done])
    E_surf = np.array([c.E_surf for c in done])
    for e in cfg.eps_values():
        i = int(np.argmin(E_el + e * E_surf))
        w = done[i]
        flag = FLAG_RESOLUTION if w.finest_width < edge else ""
        rows.append(SweepRow(float(e), w.N, w.E_el, w.E_surf, w.E_el + e * w.E_surf, flag,
                             {"kind": w.kind, "level": w.level}))
        winners.append(w)
    return LowerSweep(rows, done + skipped, _try_fit(rows, L), V, L, winners)


def _try_fit(rows, L) -> ScalingFit | None:
    try:
        return fit_rows(rows, theory_exponent(L))
    except ValueError:
        return None


# ----------------------------------------------------------------------------
# joint run


@dataclass
class JointSweep:
    upper: UpperSweep
    lower: LowerSweep
    ratio_constant: float  # smallest c with E_upper >= c * E_lower on every row

    @property
    def slope_gap(self) -> float:
        if self.upper.fit is None or self.lower.fit is None:
            return math.nan
        return abs(self.upper.fit.slope - self.lower.fit.slope)


def sweep_joint(cfg: SweepConfig) -> JointSweep:
    up = sweep_upper(cfg)
    lo = sweep_lower(cfg)
    ratios = [u.E_total / l.E_total for u, l in zip(up.rows, lo.rows)]
    return JointSweep(up, lo, float(min(ratios)))
