"""The multiplier p(xi) = |symbol(xi) M|^2, its zero set and vanishing order.

The maximal vanishing order is the smallest integer ``ell`` for which
``p / dist_V^{2 ell}`` stays bounded below on the unit sphere away from the
zero set ``V``.  It is estimated by sampling: a uniform net plus geometric
layers of points approaching every stratum of ``V`` (each subspace and each
nonzero intersection of subspaces).  The ratio for ``ell = L - 1`` must decay
along the layers, roughly by a factor 4 per halving of the distance.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space, orth

from .operators import CapabilityError, DivergenceM, Element, HomogeneousOperator, SaintVenant
from .sampling import random_unit_in, sphere_net
from .symtensor import SymTensor, VecSymTensor

POSITIVITY_RTOL = 1e-8
DECAY_FACTOR = 2.0


@dataclass(frozen=True)
class MultiplierPoly:
    op: HomogeneousOperator
    M: Element
    gram: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "gram", self.op.symbol_gram(self.M))

    @property
    def d(self) -> int:
        return self.op.d

    @property
    def degree(self) -> int:
        return 2 * self.op.m

    def __call__(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        vals = self.op.symbol_norm_sq(np.atleast_2d(xi), self.M, self.gram)
        return vals[0] if single else vals


@dataclass(frozen=True)
class SubspaceUnion:
    """Finite union of proper subspaces, each given by orthonormal columns."""

    d: int
    bases: tuple[np.ndarray, ...]

    def __post_init__(self):
        clean = []
        for B in self.bases:
            B = np.asarray(B, dtype=float).reshape(self.d, -1)
            if B.shape[1] >= self.d:
                raise ValueError("a subspace equal to R^d is not allowed")
            if np.abs(B.T @ B - np.eye(B.shape[1])).max() > 1e-12:
                B = orth(B)
            clean.append(B)
        if not clean:
            raise ValueError("the union must contain at least one subspace")
        object.__setattr__(self, "bases", tuple(clean))

    @classmethod
    def spans(cls, d: int, vectors_list) -> "SubspaceUnion":
        return cls(d, tuple(orth(np.asarray(v, dtype=float).reshape(-1, d).T) for v in vectors_list))

    def dist(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        single = xi.ndim == 1
        X = np.atleast_2d(xi)
        sq = np.sum(X * X, axis=1)
        best = np.full(X.shape[0], np.inf)
        for B in self.bases:
            proj = X @ B
            best = np.minimum(best, sq - np.sum(proj * proj, axis=1))
        out = np.sqrt(np.maximum(best, 0.0))
        return out[0] if single else out

    def strata(self) -> list[np.ndarray]:
        """Orthonormal bases of the subspaces and their nonzero intersections."""
        found: list[np.ndarray] = []

        def known(B):
            for C in found:
                if C.shape == B.shape and np.linalg.matrix_rank(np.hstack([B, C]), tol=1e-9) == B.shape[1]:
                    return True
            return False

        for r in range(1, len(self.bases) + 1):
            for subset in itertools.combinations(self.bases, r):
                # intersection = null space of the stacked complements
                comps = [null_space(B.T) for B in subset]
                stacked = np.hstack(comps).T
                I = null_space(stacked) if stacked.size else np.eye(self.d)
                if I.shape[1] == 0 or known(I):
                    continue
                found.append(I)
        return found


def dist_V(V: SubspaceUnion, xi) -> np.ndarray:
    return V.dist(xi)


def _basis_exponent(M: Element) -> tuple[int, ...]:
    if not M.is_basis_element():
        raise CapabilityError(
            "zero sets are only derived for basis well differences; "
            "pass a SubspaceUnion to vanishing_order_estimate instead"
        )
    return M.support()[0]


def zero_set(op: HomogeneousOperator, M: Element, check: bool = True) -> SubspaceUnion:
    """Zero set of p for basis wells: coordinate axes (curl) or hyperplanes (divergence)."""
    l = _basis_exponent(M)
    d = op.d
    eye = np.eye(d)
    if isinstance(op, SaintVenant):
        bases = [eye[:, [j]] for j in range(d) if l[j] != 0]
    elif isinstance(op, DivergenceM):
        bases = [np.delete(eye, j, axis=1) for j in range(d) if l[j] != 0]
    else:
        raise CapabilityError(f"no zero-set formula for {type(op).__name__}")
    V = SubspaceUnion(d, tuple(bases))
    if check:
        _validate_zero_set(MultiplierPoly(op, M), V)
    return V


def _validate_zero_set(p: MultiplierPoly, V: SubspaceUnion, seed: int = 7):
    rng = np.random.default_rng(seed)
    scale = float(np.max(p(sphere_net(p.d, 512))))
    for B in V.bases:
        pts = random_unit_in(B, 64, rng)
        if np.max(p(pts)) > 1e-20 * max(scale, 1.0):
            raise AssertionError("multiplier does not vanish on the claimed zero set")
    net = sphere_net(p.d, 2048)
    far = net[V.dist(net) >= 0.3]
    if far.size and np.min(p(far)) <= 0.0:
        raise AssertionError("multiplier vanishes away from the claimed zero set")


# sampling ------------------------------------------------------------------


@dataclass(frozen=True)
class SphereSample:
    base: np.ndarray
    layers: tuple[np.ndarray, ...]
    rhos: tuple[float, ...]


def sphere_sample(
    V: SubspaceUnion,
    n_samples: int = 4096,
    boundary_layers: int = 8,
    per_layer: int = 256,
    seed: int = 0,
) -> SphereSample:
    """Uniform net plus layers xi = (v + rho w)/|v + rho w| near each stratum."""
    rng = np.random.default_rng(seed)
    base = sphere_net(V.d, n_samples)
    strata = V.strata()
    layers, rhos = [], []
    for i in range(1, boundary_layers + 1):
        rho = 2.0 ** (-i)
        chunks = []
        per = max(1, per_layer // len(strata))
        for I in strata:
            comp = null_space(I.T)
            v = random_unit_in(I, per, rng)
            w = random_unit_in(comp, per, rng)
            x = v + rho * w
            chunks.append(x / np.linalg.norm(x, axis=1, keepdims=True))
        layers.append(np.vstack(chunks))
        rhos.append(rho)
    return SphereSample(base, tuple(layers), tuple(rhos))


def _ratio(p: MultiplierPoly, V: SubspaceUnion, pts: np.ndarray, ell: int) -> np.ndarray:
    dist = V.dist(pts)
    keep = dist > 1e-12
    return p(pts[keep]) / dist[keep] ** (2 * ell)


def ratio_layer_minima(p: MultiplierPoly, V: SubspaceUnion, ell: int, sample: SphereSample) -> tuple[float, np.ndarray]:
    base = _ratio(p, V, sample.base, ell)
    layer_min = np.array([np.min(_ratio(p, V, pts, ell)) for pts in sample.layers])
    if base.size == 0 and layer_min.size == 0:
        raise ValueError("empty sample set")
    overall = min(float(base.min()) if base.size else np.inf, float(layer_min.min()) if layer_min.size else np.inf)
    return overall, layer_min


def ratio_inf_sample(
    p: MultiplierPoly,
    V: SubspaceUnion,
    ell: int,
    n_samples: int = 4096,
    boundary_layers: int = 8,
    seed: int = 0,
) -> float:
    """Sampled infimum of p / dist_V^{2 ell} on the sphere minus V."""
    if ell < 0:
        raise ValueError("ell must be nonnegative")
    sample = sphere_sample(V, n_samples, boundary_layers, seed=seed)
    return ratio_layer_minima(p, V, ell, sample)[0]


def decay_factor(layer_minima: np.ndarray, tail: int = 4) -> float:
    """Geometric mean ratio between consecutive layer minima over the last layers."""
    tail_vals = np.asarray(layer_minima[-(tail + 1):], dtype=float)
    if tail_vals.size < 2 or np.any(tail_vals <= 0):
        return np.inf
    steps = tail_vals[:-1] / tail_vals[1:]
    return float(np.exp(np.mean(np.log(steps))))


class OrderExceedsCap(RuntimeError):
    pass


@dataclass(frozen=True)
class VanishingOrderReport:
    L: int
    infimum: float  # sampled infimum of p/dist^{2L}
    threshold: float
    witness_ell: int  # L - 1
    witness: np.ndarray  # layer minima of p/dist^{2(L-1)}
    witness_decay: float  # mean factor per layer halving
    layer_minima: dict = field(default_factory=dict)
    rhos: tuple = ()


def vanishing_order_estimate(
    p: MultiplierPoly,
    V: SubspaceUnion,
    ell_max: int | None = None,
    n_samples: int = 4096,
    boundary_layers: int = 8,
    seed: int = 0,
) -> VanishingOrderReport:
    """Smallest ell with a positive, non-decaying sampled infimum.

    An exponent is accepted when its infimum exceeds 1e-8 times the sphere
    maximum of p and its layer minima do not shrink by a factor 2 or more
    per layer.  The layer minima of ell - 1 are kept as the witness that the
    smaller exponent fails.
    """
    ell_max = p.op.m if ell_max is None else ell_max
    if ell_max < 1:
        raise ValueError("ell_max must be >= 1")
    sample = sphere_sample(V, n_samples, boundary_layers, seed=seed)
    pmax = float(np.max(p(sample.base)))
    threshold = POSITIVITY_RTOL * pmax
    minima = {}
    for ell in range(0, ell_max + 1):
        inf, layer = ratio_layer_minima(p, V, ell, sample)
        minima[ell] = layer
        if ell == 0:
            continue
        if inf > threshold and decay_factor(layer) < DECAY_FACTOR:
            witness = minima[ell - 1]
            return VanishingOrderReport(
                L=ell,
                infimum=inf,
                threshold=threshold,
                witness_ell=ell - 1,
                witness=witness,
                witness_decay=decay_factor(witness),
                layer_minima=minima,
                rhos=sample.rhos,
            )
    raise OrderExceedsCap(f"no exponent up to {ell_max} gives a positive infimum")


def compare_curl_div(l) -> tuple[int, int]:
    """(m - min_j l_j, max_j l_j): divergence and curl orders of a basis well."""
    l = [int(k) for k in l]
    m = sum(l)
    return m - min(l), max(l)


def expected_order(op: HomogeneousOperator, l) -> int:
    L_div, L_curl = compare_curl_div(l)
    return L_curl if isinstance(op, SaintVenant) else L_div


def basis_well(op: HomogeneousOperator, l, v=None) -> Element:
    """Basis well difference e^l (curl) or v (x) e^l (divergence, v = e_1)."""
    S = SymTensor.basis(l)
    if isinstance(op, DivergenceM):
        if v is None:
            v = np.eye(op.k)[0]
        return VecSymTensor.from_product(v, S)
    return S
