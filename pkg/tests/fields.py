"""Test phase fields: random checkerboards on the unit cube inside a padded box."""
import numpy as np

from twowell.phasefield import PhaseField


def checkerboard(rng, n=64, k=8, pad=4.0, d=2, lam=0.5) -> PhaseField:
    nb = int(n * pad)
    off = (nb - n) // 2
    blocks = rng.choice([-1, 1], size=(k,) * d)
    inner = np.kron(blocks, np.ones((n // k,) * d, dtype=int))
    codes = np.zeros((nb,) * d, dtype=np.int8)
    codes[(slice(off, off + n),) * d] = inner
    h = 1.0 / n
    lo = -off * h
    return PhaseField(codes, lam, (lo,) * d + (lo + nb * h,) * d, (0.0,) * d + (1.0,) * d)
