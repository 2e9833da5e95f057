"""Phase fields on a padded uniform grid and their flat binary file format.

File layout (little endian)::

    magic   8 bytes   b"TWPHASE1"
    d       int32
    shape   d x int32
    lam     float64
    box     2d x float64   (lower corner, then upper corner)
    omega   2d x float64   (lower and upper corner of the domain)
    cells   prod(shape) x int8, C order, codes +1 -> 1-lam, -1 -> -lam, 0 -> 0
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"TWPHASE1"


@dataclass(frozen=True, eq=False)
class PhaseField:
    """Codes in {-1, 0, 1} on a grid of cells covering ``box``; Omega inside the box."""

    codes: np.ndarray
    lam: float
    box: tuple  # (lo_0, ..., lo_{d-1}, hi_0, ..., hi_{d-1})
    omega: tuple  # same layout

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int8)
        if codes.ndim not in (2, 3):
            raise ValueError("phase fields are two- or three-dimensional")
        if not np.all(np.isin(codes, (-1, 0, 1))):
            raise ValueError("codes must lie in {-1, 0, 1}")
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        d = codes.ndim
        if len(self.box) != 2 * d or len(self.omega) != 2 * d:
            raise ValueError("box and omega need 2d coordinates")
        codes.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "box", tuple(float(b) for b in self.box))
        object.__setattr__(self, "omega", tuple(float(b) for b in self.omega))
        if np.any(codes[~self.omega_mask()] != 0):
            raise ValueError("phase field must vanish outside Omega")

    @property
    def d(self) -> int:
        return self.codes.ndim

    @property
    def shape(self) -> tuple:
        return self.codes.shape

    @property
    def spacing(self) -> np.ndarray:
        d = self.d
        lo, hi = np.array(self.box[:d]), np.array(self.box[d:])
        return (hi - lo) / np.array(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def centers(self, axis: int) -> np.ndarray:
        return self.box[axis] + (np.arange(self.shape[axis]) + 0.5) * self.spacing[axis]

    def omega_mask(self) -> np.ndarray:
        d = self.d
        masks = []
        for ax in range(d):
            c = self.box[ax] + (np.arange(self.codes.shape[ax]) + 0.5) * self.spacing[ax]
            masks.append((c > self.omega[ax]) & (c < self.omega[d + ax]))
        grids = np.meshgrid(*masks, indexing="ij")
        return np.logical_and.reduce(grids)

    def values(self) -> np.ndarray:
        """f as floats: 1-lam, -lam or 0."""
        c = self.codes
        return np.where(c > 0, 1.0 - self.lam, np.where(c < 0, -self.lam, 0.0))

    def omega_extent(self) -> np.ndarray:
        d = self.d
        return np.array(self.omega[d:]) - np.array(self.omega[:d])

    def padding_factor(self) -> float:
        d = self.d
        box = np.array(self.box[d:]) - np.array(self.box[:d])
        return float(np.min(box / self.omega_extent()))

    def diameter(self) -> float:
        return float(np.linalg.norm(self.omega_extent()))

    def is_empty(self) -> bool:
        return not np.any(self.codes)

    @classmethod
    def from_values(cls, f: np.ndarray, lam: float, box, omega) -> "PhaseField":
        f = np.asarray(f, dtype=float)
        tol = 1e-12
        codes = np.zeros(f.shape, dtype=np.int8)
        codes[np.abs(f - (1.0 - lam)) < tol] = 1
        codes[np.abs(f + lam) < tol] = -1
        if np.any((codes == 0) & (np.abs(f) > tol)):
            raise ValueError("values outside {1-lam, -lam, 0}")
        return cls(codes, lam, box, omega)


def write_phase_field(field: PhaseField, path) -> None:
    d = field.d
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<i", d))
        fh.write(struct.pack(f"<{d}i", *field.shape))
        fh.write(struct.pack("<d", field.lam))
        fh.write(struct.pack(f"<{2 * d}d", *field.box))
        fh.write(struct.pack(f"<{2 * d}d", *field.omega))
        fh.write(np.ascontiguousarray(field.codes).tobytes())


def read_phase_field(path) -> PhaseField:
    raw = Path(path).read_bytes()
    if raw[:8] != MAGIC:
        raise ValueError(f"{path}: not a phase-field file")
    off = 8
    (d,) = struct.unpack_from("<i", raw, off)
    off += 4
    if d not in (2, 3):
        raise ValueError(f"{path}: unsupported dimension {d}")
    shape = struct.unpack_from(f"<{d}i", raw, off)
    off += 4 * d
    (lam,) = struct.unpack_from("<d", raw, off)
    off += 8
    box = struct.unpack_from(f"<{2 * d}d", raw, off)
    off += 16 * d
    omega = struct.unpack_from(f"<{2 * d}d", raw, off)
    off += 16 * d
    n = int(np.prod(shape))
    if len(raw) - off != n:
        raise ValueError(f"{path}: expected {n} cell bytes, found {len(raw) - off}")
    codes = np.frombuffer(raw, dtype=np.int8, count=n, offset=off).reshape(shape)
    return PhaseField(codes.copy(), lam, box, omega)
