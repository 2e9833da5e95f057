"""Command-line front end: ``twowell <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import config as cfgmod
from .construction2d.assembly import (
    build_construction,
    construction_energy,
    rasterize,
    read_polylines,
    residual_report,
    write_polylines,
)
from .fitting import fit_rows, theory_exponent
from .fourier_bound import key_estimate_report, slicing_check, spectral_energy
from .multiplier import MultiplierPoly, basis_well, expected_order, vanishing_order_estimate, zero_set
from .operators import DivergenceM, SaintVenant
from .phasefield import read_phase_field, write_phase_field


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.replace(";", ",").split(",") if v.strip())


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(";", ",").split(",") if v.strip())


def _operator(name: str, d: int, m: int, k: int = 1):
    if name == "curl":
        return SaintVenant(d, m)
    if name == "divergence":
        return DivergenceM(d, m, k)
    raise ValueError(f"unknown operator {name!r}")


def _writer(path):
    if path is None or str(path) == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def _g(v) -> str:
    return f"{float(v):.17g}"


# ----------------------------------------------------------------------------
# subcommands


def cmd_symbol(a) -> int:
    op = _operator(a.operator, a.d, a.m, a.k)
    S = op.symbol_matrix(np.array(_floats(a.xi)))
    w = csv.writer(sys.stdout, lineterminator="\n")
    for row in S:
        w.writerow([_g(v) for v in row])
    return 0


def cmd_kernel(a) -> int:
    op = _operator(a.operator, a.d, a.m, a.k)
    basis = op.kernel_basis(np.array(_floats(a.xi)))
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["# dimension", len(basis), "expected", op.kernel_dimension_expected()])
    for el in basis:
        w.writerow([_g(v) for v in el.weighted_coords()])
    return 0


def cmd_order(a) -> int:
    l = _ints(a.l)
    op = _operator(a.operator, len(l), sum(l), a.k)
    M = basis_well(op, l)
    V = zero_set(op, M)
    rep = vanishing_order_estimate(MultiplierPoly(op, M), V, boundary_layers=a.layers, seed=a.seed)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["# L", rep.L, "expected", expected_order(op, l), "witness_decay", _g(rep.witness_decay)])
    w.writerow(["ell", "layer", "min_ratio"])
    for ell, minima in sorted(rep.layer_minima.items()):
        for i, v in enumerate(minima):
            w.writerow([ell, i, _g(v)])
    return 0


def cmd_lower(a) -> int:
    f = read_phase_field(a.field)
    l = _ints(a.l)
    op = _operator(a.operator, f.d, sum(l), a.k)
    V = zero_set(op, basis_well(op, l))
    L = expected_order(op, l)
    rep = spectral_energy(f, V, L, a.eps)
    fh, close = _writer(a.out)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["quantity", "value"])
    for key in ("E_el", "E_surf", "eps", "E_total", "mass", "grid_mass"):
        w.writerow([key, _g(getattr(rep, key))])
    if a.key_estimates:
        k = key_estimate_report(f, V, L, a.eta, a.delta)
        for name in ("part_i", "part_ii", "part_iii"):
            chk = getattr(k, name)
            w.writerow([f"{name}_lhs", _g(chk.lhs)])
            w.writerow([f"{name}_rhs", _g(chk.rhs)])
            w.writerow([f"{name}_pass", int(chk.passed)])
        w.writerow(["alpha", _g(k.alpha)])
        for s in range(1, f.d + 1):
            sl = slicing_check(f, s)
            w.writerow([f"slicing_{s}_pass", int(sl.passed)])
    if close:
        fh.close()
    for msg in rep.warnings:
        print(f"warning: {msg}", file=sys.stderr)
    return 0


def cmd_construct(a) -> int:
    l = _ints(a.l)
    c = build_construction(a.operator, l, a.N, a.lam, a.delta, a.theta, a.gamma, a.mode, a.max_level)
    rep = construction_energy(c, a.eps, a.n_quad)
    res = residual_report(c, a.residual_grid) if a.residual_grid else None
    fh, close = _writer(a.out)
    w = csv.writer(fh, lineterminator="\n")
    head = ["E_el", "E_surf", "eps", "E_total", "max_intended_error"]
    vals = [rep.E_el, rep.E_surf, rep.eps, rep.E_total, rep.max_intended_error]
    head += [f"component_sq_{k}" for k in range(len(rep.component_sq))]
    vals += list(rep.component_sq)
    if res is not None:
        head += ["residual_max_abs", "residual_max_rel"]
        vals += [res.max_abs, res.max_rel]
    w.writerow(head)
    w.writerow([_g(v) for v in vals])
    if close:
        fh.close()
    if a.raster:
        write_phase_field(rasterize(c, a.grid, a.pad), a.raster)
    if a.polylines:
        write_polylines(c.polylines(), a.polylines)
    return 0


def _sweep_config(a):
    over = {
        "operator": a.operator,
        "l": _ints(a.l) if a.l else None,
        "lam": a.lam,
        "grid": a.grid,
        "threads": a.threads,
        "out_dir": a.out_dir,
        "eps_min": a.eps_min,
        "eps_max": a.eps_max,
        "n_eps": a.n_eps,
        "gamma_kind": a.gamma,
    }
    return cfgmod.load_config(a.config, over)


def cmd_sweep(a) -> int:
    from .plotting import emit_plot
    from .sweep import sweep_lower, sweep_upper

    cfg = _sweep_config(a)
    series = []
    if a.which in ("upper", "both"):
        up = sweep_upper(cfg)
        path = cfgmod.output_path(cfg, "upper.csv")
        cfgmod.write_rows(up.rows, path)
        print(f"upper: {path}")
        print(f"  {up.fit.summary() if up.fit else 'fit unavailable (fewer than 6 unflagged rows)'}")
        series.append(("upper", up.rows, up.fit))
    if a.which in ("lower", "both"):
        lo = sweep_lower(cfg)
        path = cfgmod.output_path(cfg, "lower.csv")
        cfgmod.write_rows(lo.rows, path)
        skipped = sum(c.skipped for c in lo.candidates)
        print(f"lower: {path}  ({len(lo.candidates)} candidates, {skipped} skipped as unresolved)")
        print(f"  {lo.fit.summary() if lo.fit else 'fit unavailable (fewer than 6 unflagged rows)'}")
        series.append(("lower", lo.rows, lo.fit))
    if len(series) == 2 and all(s[2] for s in series):
        print(f"slope gap: {abs(series[0][2].slope - series[1][2].slope):.4f}")
    if a.plot:
        emit_plot(series, cfgmod.output_path(cfg, a.plot), title=f"{cfg.operator} l={cfg.l}")
    return 0


def cmd_fit(a) -> int:
    rows = cfgmod.read_rows(a.csv)
    theory = theory_exponent(a.L) if a.L else None
    print(fit_rows(rows, theory).summary())
    return 0


def cmd_plot(a) -> int:
    from .plotting import emit_geometry_plot, emit_plot

    if a.polylines:
        emit_geometry_plot(read_polylines(a.polylines), a.out)
        return 0
    if not a.csv:
        raise ValueError("plot needs CSV files or --polylines")
    theory = theory_exponent(a.L) if a.L else None
    series = []
    for path in a.csv:
        rows = cfgmod.read_rows(path)
        if not rows:
            raise ValueError(f"{path}: no rows")
        try:
            fit = fit_rows(rows, theory)
        except ValueError:
            fit = None
        series.append((Path(path).stem, rows, fit))
    emit_plot(series, a.out)
    return 0


# ----------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twowell", description="Scaling laws for higher-order two-well problems.")
    sub = p.add_subparsers(dest="cmd", required=True)

    def op_args(q, with_l=False):
        q.add_argument("--operator", choices=["curl", "divergence"], default="curl")
        q.add_argument("--k", type=int, default=1, help="target dimension of the divergence operator")
        if with_l:
            q.add_argument("--l", required=True, help="well exponents, e.g. 2,0")

    q = sub.add_parser("symbol", help="print the symbol matrix at a frequency")
    op_args(q)
    q.add_argument("--d", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--xi", required=True, help="frequency, e.g. 1,0.5")
    q.set_defaults(func=cmd_symbol)

    q = sub.add_parser("kernel", help="print a kernel basis of the symbol")
    op_args(q)
    q.add_argument("--d", type=int, required=True)
    q.add_argument("--m", type=int, required=True)
    q.add_argument("--xi", required=True)
    q.set_defaults(func=cmd_kernel)

    q = sub.add_parser("order", help="estimate the maximal vanishing order of a basis well")
    op_args(q, with_l=True)
    q.add_argument("--layers", type=int, default=8)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_order)

    q = sub.add_parser("lower", help="Fourier lower-bound functional of a phase-field file")
    op_args(q, with_l=True)
    q.add_argument("field")
    q.add_argument("--eps", type=float, default=1e-3)
    q.add_argument("--key-estimates", action="store_true")
    q.add_argument("--eta", type=float, default=16.0)
    q.add_argument("--delta", type=float, default=0.5)
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_lower)

    q = sub.add_parser("construct", help="assemble a construction and report its energy")
    op_args(q, with_l=True)
    q.add_argument("--N", type=int, required=True)
    q.add_argument("--eps", type=float, default=1e-4)
    q.add_argument("--lam", type=float, default=0.5)
    q.add_argument("--delta", type=float, default=0.1)
    q.add_argument("--theta", type=float, default=None)
    q.add_argument("--gamma", choices=["mollifier", "smoothstep"], default="mollifier")
    q.add_argument("--mode", choices=["formula", "exact"], default="formula")
    q.add_argument("--max-level", type=int, default=None)
    q.add_argument("--n-quad", type=int, default=64)
    q.add_argument("--residual-grid", type=int, default=None)
    q.add_argument("--out", default=None)
    q.add_argument("--raster", default=None, help="write the phase field to this file")
    q.add_argument("--grid", type=int, default=512)
    q.add_argument("--pad", type=float, default=2.0)
    q.add_argument("--polylines", default=None, help="write interface curves to this file")
    q.set_defaults(func=cmd_construct)

    q = sub.add_parser("sweep", help="epsilon sweep of upper and/or lower bounds")
    q.add_argument("--config", default=None)
    q.add_argument("--which", choices=["upper", "lower", "both"], default="upper")
    q.add_argument("--operator", choices=["curl", "divergence"], default=None)
    q.add_argument("--l", default=None)
    q.add_argument("--lam", type=float, default=None)
    q.add_argument("--grid", type=int, default=None)
    q.add_argument("--threads", type=int, default=None)
    q.add_argument("--out-dir", default=None)
    q.add_argument("--eps-min", type=float, default=None)
    q.add_argument("--eps-max", type=float, default=None)
    q.add_argument("--n-eps", type=int, default=None)
    q.add_argument("--gamma", choices=["mollifier", "smoothstep"], default=None)
    q.add_argument("--plot", default=None, help="image file name inside the output directory")
    q.set_defaults(func=cmd_sweep)

    q = sub.add_parser("fit", help="log-log slope fit of a sweep CSV")
    q.add_argument("csv")
    q.add_argument("--L", type=int, default=None)
    q.set_defaults(func=cmd_fit)

    q = sub.add_parser("plot", help="render sweep CSVs or a polyline file")
    q.add_argument("csv", nargs="*")
    q.add_argument("--out", required=True)
    q.add_argument("--L", type=int, default=None)
    q.add_argument("--polylines", default=None)
    q.set_defaults(func=cmd_plot)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return int(args.func(args) or 0)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
