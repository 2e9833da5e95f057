"""Constant-coefficient operators of order m: symbols, kernels, wave cones.

Two operators are provided.  :class:`SaintVenant` is the higher-order curl
whose kernel consists of symmetrized m-th derivatives of potentials; its
symbol maps ``Sym(R^d; m)`` into antisymmetric-in-pairs tensors of order 2m.
:class:`DivergenceM` is the m-th order divergence acting on
``R^k (x) Sym(R^d; m)``.

Every operator exposes a *slot tensor* ``K`` with ``m`` leading frequency
slots, so that ``symbol(xi) M`` is ``K`` contracted with ``xi`` in each slot.
This gives vectorized multiplier evaluation on large frequency grids.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import optimize

from .sampling import random_sphere, sphere_net
from .symtensor import (
    SymTensor,
    VecSymTensor,
    class_weights,
    multi_indices,
    n_classes,
    _class_table,
)

Element = Union[SymTensor, VecSymTensor]

NULLSPACE_RTOL = 1e-10


class CapabilityError(RuntimeError):
    """Raised when a request exceeds what the implementation supports."""


def _slot_planes(d: int) -> np.ndarray:
    """W[q, i, j, :] = delta_{jq} e_i - delta_{iq} e_j."""
    W = np.zeros((d, d, d, d))
    for q in range(d):
        for i in range(d):
            W[q, i, q, i] += 1.0
            W[q, q, i, i] -= 1.0
    return W


def contract_slots(K: np.ndarray, xi: np.ndarray, m: int) -> np.ndarray:
    out = K
    for _ in range(m):
        out = np.tensordot(xi, out, axes=([0], [0]))
    return out


def xi_power_rows(xi: np.ndarray, m: int) -> np.ndarray:
    """Rows of xi^{(x) m} flattened, for an array of frequencies (n, d)."""
    xi = np.atleast_2d(xi)
    out = np.ones((xi.shape[0], 1))
    for _ in range(m):
        out = (out[:, :, None] * xi[:, None, :]).reshape(xi.shape[0], -1)
    return out


class HomogeneousOperator:
    """Common interface; subclasses define the slot tensor and coordinates."""

    d: int
    m: int
    name: str = "operator"

    # input space -------------------------------------------------------
    def input_dim(self) -> int:
        raise NotImplementedError

    def element_from_weighted(self, y: np.ndarray) -> Element:
        raise NotImplementedError

    def basis_elements(self) -> list[Element]:
        eye = np.eye(self.input_dim())
        return [self.element_from_weighted(row) for row in eye]

    # symbol ------------------------------------------------------------
    def slot_tensor(self, M: Element) -> np.ndarray:
        """Array of shape (d,)*m + out_shape; see module docstring."""
        raise NotImplementedError

    def apply(self, xi, M: Element) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.d,):
            raise ValueError(f"xi must have shape ({self.d},)")
        return contract_slots(self.slot_tensor(M), xi, self.m)

    def output_coords(self, image: np.ndarray) -> np.ndarray:
        """Coordinates of an image whose Euclidean norm equals its norm."""
        return np.asarray(image, dtype=float).reshape(-1)

    def symbol_gram(self, M: Element) -> np.ndarray:
        """G with |symbol(xi) M|^2 = xi^{(x)m} . G . xi^{(x)m}."""
        K = self.slot_tensor(M).reshape(self.d**self.m, -1)
        return K @ K.T

    def symbol_norm_sq(self, xis: np.ndarray, M: Element, gram: np.ndarray | None = None) -> np.ndarray:
        """Vectorized |symbol(xi) M|^2 over rows of ``xis``."""
        G = self.symbol_gram(M) if gram is None else gram
        P = xi_power_rows(np.asarray(xis, dtype=float), self.m)
        return np.maximum(np.einsum("na,ab,nb->n", P, G, P, optimize=True), 0.0)

    def symbol_matrix(self, xi) -> np.ndarray:
        if self.d > 3 or self.m > 4:
            raise CapabilityError("symbol_matrix supports d <= 3 and m <= 4")
        cols = [self.output_coords(self.apply(xi, e)) for e in self.basis_elements()]
        return np.column_stack(cols)

    def kernel_basis(self, xi, tol: float = NULLSPACE_RTOL) -> list[Element]:
        xi = np.asarray(xi, dtype=float)
        if not np.any(xi):
            raise ValueError("kernel_basis needs xi != 0")
        S = self.symbol_matrix(xi)
        _, sv, vt = np.linalg.svd(S, full_matrices=True)
        smax = sv[0] if sv.size else 0.0
        rank = int(np.sum(sv > tol * smax))
        return [self.element_from_weighted(v) for v in vt[rank:]]

    def kernel_dimension_expected(self) -> int:
        raise NotImplementedError


@dataclass(frozen=True)
class SaintVenant(HomogeneousOperator):
    """Higher-order curl on Sym(R^d; m).

    ``[A(xi) M]_{i1 j1 ... im jm} = 2^{-m} M(xi_{j1} e_{i1} - xi_{i1} e_{j1}, ...)``.
    """

    d: int
    m: int
    name: str = "curl"

    def input_dim(self) -> int:
        return n_classes(self.d, self.m)

    def element_from_weighted(self, y) -> SymTensor:
        return SymTensor.from_weighted(self.d, self.m, y)

    def slot_tensor(self, M: SymTensor) -> np.ndarray:
        if (M.d, M.m) != (self.d, self.m):
            raise ValueError("tensor does not match operator shape")
        d, m = self.d, self.m
        W = _slot_planes(d)
        T = M.to_full()
        # contract each tensor slot of M with one W factor; the new axes
        # (q, i, j) are appended in slot order
        out = T
        for _ in range(m):
            out = np.tensordot(out, W, axes=([0], [3]))
        # axes are now (q1, i1, j1, q2, i2, j2, ...); move the q's first
        perm = [3 * s for s in range(m)] + [a for s in range(m) for a in (3 * s + 1, 3 * s + 2)]
        return out.transpose(perm) * 2.0 ** (-m)

    def output_coords(self, image: np.ndarray) -> np.ndarray:
        if self.d == 2:
            # only the 1212...12 entry is independent; 2^m entries share it
            idx = (0, 1) * self.m
            return np.array([image[idx] * 2.0 ** (self.m / 2)])
        return np.asarray(image, dtype=float).reshape(-1)

    def kernel_dimension_expected(self) -> int:
        return math.comb(self.d + self.m - 2, self.m - 1)


def sv_symbol_apply(d: int, m: int, xi, M: SymTensor) -> np.ndarray:
    """Full order-2m image of ``M`` under the Saint-Venant symbol."""
    return SaintVenant(d, m).apply(xi, M)


def sv_symbol_apply_product(vectors, xi) -> np.ndarray:
    """Fast path for M = a_1 (.) ... (.) a_m: (a_1 (-) xi) (.) ... (.) (a_m (-) xi)."""
    from .symtensor import alt_product, sym_product_full

    return sym_product_full([alt_product(a, xi) for a in vectors])


@dataclass(frozen=True)
class DivergenceM(HomogeneousOperator):
    """m-th order divergence on R^k (x) Sym(R^d; m).

    ``B(xi) M = sum_l xi^l M_{., l}`` in class components, which equals
    ``binom(m,l)^{-1} xi^l v`` on the basis element ``v (x) e^l``.
    """

    d: int
    m: int
    k: int = 1
    name: str = "divergence"

    def input_dim(self) -> int:
        return self.k * n_classes(self.d, self.m)

    def element_from_weighted(self, y) -> VecSymTensor:
        return VecSymTensor.from_weighted(self.k, self.d, self.m, y)

    def slot_tensor(self, M: VecSymTensor) -> np.ndarray:
        if (M.k, M.d, M.m) != (self.k, self.d, self.m):
            raise ValueError("tensor does not match operator shape")
        _, _, ids, weights = _class_table(self.d, self.m)
        K = (M.components[:, ids] / weights[ids]).T
        return K.reshape((self.d,) * self.m + (self.k,))

    def apply(self, xi, M: VecSymTensor) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        mono = np.array([np.prod(xi ** np.array(l)) for l in multi_indices(self.d, self.m)])
        return M.components @ mono

    def kernel_dimension_expected(self) -> int:
        return self.k * n_classes(self.d, self.m) - self.k


def div_symbol_apply(d: int, m: int, k: int, xi, M: VecSymTensor) -> np.ndarray:
    return DivergenceM(d, m, k).apply(xi, M)


# wave cone ---------------------------------------------------------------


@dataclass(frozen=True)
class WaveConeResult:
    status: str  # compatible | supercompatible | incompatible
    min_ratio: float
    max_ratio: float
    xi_min: np.ndarray
    note: str = ""


def wave_cone_check(
    op: HomogeneousOperator,
    M: Element,
    tol: float = 1e-7,
    n_net: int = 1000,
    n_random: int = 1000,
    seed: int = 0,
) -> WaveConeResult:
    """Classify ``M`` by sampling |symbol(xi) M| / |M| over unit xi.

    A zero is searched on a sphere net plus random points and then polished
    by local minimization.  Supercompatibility can only be reported as "no
    counterexample found".
    """
    nM = M.norm()
    if nM == 0:
        raise ValueError("M must be nonzero")
    rng = np.random.default_rng(seed)
    pts = np.vstack([sphere_net(op.d, n_net), random_sphere(op.d, n_random, rng)])
    G = op.symbol_gram(M)
    r = np.sqrt(op.symbol_norm_sq(pts, M, G)) / nM
    rmax = float(r.max())

    def objective(x):
        x = x / np.linalg.norm(x)
        return float(op.symbol_norm_sq(x[None, :], M, G)[0]) / nM**2

    best_val, best_x = np.inf, pts[int(np.argmin(r))]
    for i in np.argsort(r)[:8]:
        res = optimize.minimize(objective, pts[i], method="BFGS", options={"gtol": 1e-14})
        val = np.sqrt(max(res.fun, 0.0))
        if val < best_val:
            best_val, best_x = val, res.x / np.linalg.norm(res.x)
    rmin = float(min(best_val, r.min()))
    if rmax < tol:
        return WaveConeResult("supercompatible", rmin, rmax, best_x, "no counterexample found")
    if rmin < tol:
        return WaveConeResult("compatible", rmin, rmax, best_x)
    return WaveConeResult("incompatible", rmin, rmax, best_x)


@dataclass(frozen=True)
class WellPair:
    A: Element
    B: Element
    lam: float

    def __post_init__(self):
        if not 0.0 < self.lam < 1.0:
            raise ValueError("lambda must lie in (0, 1)")
        if self.M.norm() == 0:
            raise ValueError("wells must differ")

    @property
    def M(self) -> Element:
        return self.A - self.B

    @property
    def F(self) -> Element:
        return self.lam * self.A + (1.0 - self.lam) * self.B

    def compatibility(self, op: HomogeneousOperator) -> WaveConeResult:
        return wave_cone_check(op, self.M)


# discrete residual in d = 2 ---------------------------------------------------


def _fd(f: np.ndarray, axis: int, order: int, h: float) -> np.ndarray:
    """Centered second-order derivative of given order; NaN where undefined."""
    out = f
    steps = [2] * (order // 2) + [1] * (order % 2)
    for s in steps:
        g = np.full(out.shape, np.nan)
        core = [slice(None)] * out.ndim
        plus = [slice(None)] * out.ndim
        minus = [slice(None)] * out.ndim
        core[axis] = slice(1, -1)
        plus[axis] = slice(2, None)
        minus[axis] = slice(None, -2)
        if s == 2:
            mid = [slice(None)] * out.ndim
            mid[axis] = slice(1, -1)
            g[tuple(core)] = (out[tuple(plus)] - 2 * out[tuple(mid)] + out[tuple(minus)]) / h**2
        else:
            g[tuple(core)] = (out[tuple(plus)] - out[tuple(minus)]) / (2 * h)
        out = g
    return out


def fd_reach(order: int) -> int:
    return order // 2 + order % 2


def sv_residual_terms_2d(components, h: float) -> list[np.ndarray]:
    """The m+1 weighted terms (-1)^k 2^{-m} binom(m,k) d1^k d2^{m-k} u_k."""
    comps = [np.asarray(c, dtype=float) for c in components]
    m = len(comps) - 1
    if m < 1:
        raise ValueError("need at least two components")
    shape = comps[0].shape
    if any(c.shape != shape for c in comps):
        raise ValueError("component grids differ in shape")
    margin = fd_reach(m)
    if min(shape) < 2 * margin + 1:
        raise ValueError("insufficient grid margin for the finite-difference stencil")
    return [(-1) ** k * 2.0 ** (-m) * math.comb(m, k) * _fd(_fd(c, 0, k, h), 1, m - k, h) for k, c in enumerate(comps)]


def sv_residual_2d(components, h: float) -> np.ndarray:
    """sum_k (-1)^k 2^{-m} binom(m,k) d1^k d2^{m-k} u_k on a grid.

    ``components[k]`` holds the component with k twos, sampled on a grid
    indexed ``[ix, iy]``.  Points whose stencil leaves the grid are NaN.
    """
    return sum(sv_residual_terms_2d(components, h))


def div_residual_terms_2d(components, h: float) -> list[np.ndarray]:
    comps = [np.asarray(c, dtype=float) for c in components]
    m = len(comps) - 1
    if m < 1:
        raise ValueError("need at least two components")
    return [_fd(_fd(comps[m - j], 0, j, h), 1, m - j, h) for j in range(m + 1)]


def div_residual_2d(components, h: float) -> np.ndarray:
    """sum_j d1^j d2^{m-j} u_{m-j} for a scalar-valued m-th divergence."""
    return sum(div_residual_terms_2d(components, h))
