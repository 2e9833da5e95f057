"""Sweep configuration, flat ``key = value`` config files and the sweep CSV schema."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

CSV_COLUMNS = ("epsilon", "N", "E_el", "E_surf", "E_total", "flag")
ENV_THREADS = "TWOWELL_THREADS"
ENV_OUTDIR = "TWOWELL_OUTDIR"


@dataclass(frozen=True)
class SweepConfig:
    operator: str = "curl"
    d: int = 2
    l: tuple = (2, 0)
    lam: float = 0.5
    eps_min: float = 1e-6
    eps_max: float = 1e-2
    n_eps: int = 24
    eps: tuple | None = None  # explicit list overrides the geometric range
    delta: float = 0.1
    theta: float | None = None
    gamma_kind: str = "mollifier"
    mode: str = "formula"
    n_quad: int = 64
    grid: int = 1024  # cells across Omega for rasterized lower-bound candidates
    pad: float = 2.0
    min_cells: int = 8  # a candidate is resolved when its finest cells span this many grid cells
    out_dir: str = "."
    threads: int = 1

    def __post_init__(self):
        l = tuple(int(k) for k in self.l)
        object.__setattr__(self, "l", l)
        if self.operator not in ("curl", "divergence"):
            raise ValueError("operator must be 'curl' or 'divergence'")
        if self.d != 2:
            raise ValueError("sweeps are two-dimensional")
        if len(l) != self.d or any(k < 0 for k in l) or sum(l) < 1:
            raise ValueError("l must list d nonnegative exponents with positive sum")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if self.eps is not None:
            e = tuple(float(v) for v in self.eps)
            if any(b <= a for a, b in zip(e[:-1], e[1:])):
                raise ValueError("epsilon values must be sorted ascending")
            object.__setattr__(self, "eps", e)
        elif not 0.0 < self.eps_min < self.eps_max:
            raise ValueError("need 0 < eps_min < eps_max")
        if self.threads < 1:
            raise ValueError("threads must be positive")

    @property
    def m(self) -> int:
        return sum(self.l)

    @property
    def L(self) -> int:
        if self.operator == "curl":
            return max(self.l)
        return self.m - min(self.l)

    def eps_values(self) -> np.ndarray:
        if self.eps is not None:
            return np.array(self.eps)
        return np.geomspace(self.eps_min, self.eps_max, self.n_eps)


def _coerce(name: str, raw: str, current):
    raw = raw.strip()
    if name in ("l", "eps"):
        vals = [v for v in raw.replace(";", ",").split(",") if v.strip()]
        return tuple(int(v) for v in vals) if name == "l" else tuple(float(v) for v in vals)
    if name == "theta":
        return None if raw.lower() in ("", "none", "default") else float(raw)
    if isinstance(current, bool):
        return raw.lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    return raw


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path=None, overrides: dict | None = None) -> SweepConfig:
    """Defaults, then the config file, then environment, then explicit overrides."""
    base = SweepConfig()
    known = {f.name: getattr(base, f.name) for f in fields(SweepConfig)}
    values = {}
    if path is not None:
        raw = parse_config_text(Path(path).read_text(encoding="utf-8"))
        for k, v in raw.items():
            if k not in known:
                raise ValueError(f"unknown config key {k!r}")
            values[k] = _coerce(k, v, known[k])
    if os.environ.get(ENV_THREADS):
        values["threads"] = int(os.environ[ENV_THREADS])
    if os.environ.get(ENV_OUTDIR):
        values["out_dir"] = os.environ[ENV_OUTDIR]
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
    return replace(base, **values)


@dataclass(frozen=True)
class SweepRow:
    epsilon: float
    N: int
    E_el: float
    E_surf: float
    E_total: float
    flag: str = ""
    extra: dict = field(default_factory=dict, compare=False)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_rows(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in sorted(rows, key=lambda r: r.epsilon):
            w.writerow([_fmt(r.epsilon), _fmt(r.N), _fmt(r.E_el), _fmt(r.E_surf), _fmt(r.E_total), r.flag])


def read_rows(path) -> list[SweepRow]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"{path}: unexpected columns {reader.fieldnames}")
        return [
            SweepRow(float(r["epsilon"]), int(r["N"]), float(r["E_el"]), float(r["E_surf"]), float(r["E_total"]), r["flag"])
            for r in reader
        ]


def output_path(cfg: SweepConfig, name: str) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name
