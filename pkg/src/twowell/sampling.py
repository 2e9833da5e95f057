"""Deterministic and random point sets on the unit sphere."""
from __future__ import annotations

import numpy as np


def sphere_net(d: int, n: int) -> np.ndarray:
    """Quasi-uniform net of ``n`` points on S^{d-1} (rows)."""
    if d == 1:
        return np.array([[1.0], [-1.0]])
    if d == 2:
        t = (np.arange(n) + 0.5) * (2 * np.pi / n)
        return np.column_stack([np.cos(t), np.sin(t)])
    if d == 3:
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
        phi = i * np.pi * (3.0 - np.sqrt(5.0))
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return random_sphere(d, n, np.random.default_rng(12345))


def random_sphere(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    x = rng.standard_normal((n, d))
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def random_unit_in(basis: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random unit vectors in the column span of an orthonormal ``basis``."""
    c = rng.standard_normal((n, basis.shape[1]))
    c /= np.linalg.norm(c, axis=1, keepdims=True)
    return c @ basis.T
