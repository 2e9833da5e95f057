"""Symmetric and full tensor algebra on R^d.

Symmetric tensors are stored by exponent class: a multi-index ``l`` with
``|l| = m`` stands for every index tuple containing ``l[0]`` ones,
``l[1]`` twos and so on.  The stored *component* of a class is the common
value of the full tensor at each of its ``binom(m, l)`` index tuples, so the
Frobenius norm is ``sum_l binom(m, l) * component_l**2``.

The *coefficient* of a class is its coordinate in the product basis
``e_1^{l_1} (.) ... (.) e_d^{l_d}``; it equals ``binom(m, l)`` times the
component.  ``e1 (.) e2`` therefore has coefficient 1 and entries 1/2.

Full (unsymmetrized) tensors are plain ``numpy`` arrays of shape ``(d,)*r``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

MultiIndex = tuple[int, ...]


def multi_indices(d: int, m: int) -> list[MultiIndex]:
    """All exponent classes of order ``m`` in dimension ``d``.

    The order follows sorted index tuples, e.g. ``(2,0), (1,1), (0,2)``.
    """
    out = []
    for combo in itertools.combinations_with_replacement(range(d), m):
        out.append(tuple(combo.count(i) for i in range(d)))
    return out


def factorial(l: Sequence[int]) -> int:
    return math.prod(math.factorial(int(k)) for k in l)


def multinomial(l: Sequence[int]) -> int:
    """binom(|l|, l) = |l|! / l!."""
    return math.factorial(int(sum(l))) // factorial(l)


def n_classes(d: int, m: int) -> int:
    return math.comb(d + m - 1, m)


def index_class(idx: Sequence[int], d: int) -> MultiIndex:
    """Exponent class of a (0-based) index tuple."""
    return tuple(int(sum(1 for i in idx if i == j)) for j in range(d))


@lru_cache(maxsize=None)
def _class_table(d: int, m: int):
    classes = multi_indices(d, m)
    pos = {l: k for k, l in enumerate(classes)}
    ids = np.empty(d**m, dtype=np.intp)
    for flat, idx in enumerate(itertools.product(range(d), repeat=m)):
        ids[flat] = pos[index_class(idx, d)]
    weights = np.array([multinomial(l) for l in classes], dtype=float)
    ids.setflags(write=False)
    weights.setflags(write=False)
    return tuple(classes), pos, ids, weights


def class_weights(d: int, m: int) -> np.ndarray:
    """Multiplicities binom(m, l) in class order."""
    return _class_table(d, m)[3]


@dataclass(frozen=True, eq=False)
class SymTensor:
    """Symmetric order-``m`` tensor on R^d stored by exponent class."""

    d: int
    m: int
    components: np.ndarray

    def __post_init__(self):
        comps = np.array(self.components, dtype=float).reshape(-1)
        if comps.size != n_classes(self.d, self.m):
            raise ValueError(
                f"expected {n_classes(self.d, self.m)} class components, got {comps.size}"
            )
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    # construction -----------------------------------------------------
    @classmethod
    def zeros(cls, d: int, m: int) -> "SymTensor":
        return cls(d, m, np.zeros(n_classes(d, m)))

    @classmethod
    def from_coefficients(cls, d: int, m: int, coeffs) -> "SymTensor":
        """Build from product-basis coefficients (array in class order or dict)."""
        classes, pos, _, weights = _class_table(d, m)
        if isinstance(coeffs, dict):
            arr = np.zeros(len(classes))
            for l, c in coeffs.items():
                arr[pos[tuple(l)]] = c
        else:
            arr = np.asarray(coeffs, dtype=float)
        return cls(d, m, arr / weights)

    @classmethod
    def basis(cls, l: Sequence[int]) -> "SymTensor":
        """The product basis element e_1^{l_1} (.) ... (.) e_d^{l_d}."""
        l = tuple(int(k) for k in l)
        return cls.from_coefficients(len(l), sum(l), {l: 1.0})

    @classmethod
    def from_weighted(cls, d: int, m: int, y) -> "SymTensor":
        """Inverse of :meth:`weighted_coords`."""
        return cls(d, m, np.asarray(y, dtype=float) / np.sqrt(class_weights(d, m)))

    # views --------------------------------------------------------------
    @property
    def classes(self) -> tuple[MultiIndex, ...]:
        return _class_table(self.d, self.m)[0]

    def component(self, l: Sequence[int]) -> float:
        return float(self.components[_class_table(self.d, self.m)[1][tuple(l)]])

    def coefficient(self, l: Sequence[int]) -> float:
        return self.component(l) * multinomial(l)

    def coefficients(self) -> np.ndarray:
        return self.components * class_weights(self.d, self.m)

    def weighted_coords(self) -> np.ndarray:
        """Coordinates whose Euclidean norm is the Frobenius norm."""
        return self.components * np.sqrt(class_weights(self.d, self.m))

    def to_full(self) -> np.ndarray:
        ids = _class_table(self.d, self.m)[2]
        return self.components[ids].reshape((self.d,) * self.m)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(class_weights(self.d, self.m) * self.components**2)))

    def is_basis_element(self) -> bool:
        return int(np.count_nonzero(self.components)) == 1

    def support(self) -> list[MultiIndex]:
        return [l for l, c in zip(self.classes, self.components) if c != 0.0]

    # arithmetic ---------------------------------------------------------
    def _check(self, other: "SymTensor"):
        if (self.d, self.m) != (other.d, other.m):
            raise ValueError("SymTensor shape mismatch")

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._check(other)
        return SymTensor(self.d, self.m, self.components + other.components)

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        self._check(other)
        return SymTensor(self.d, self.m, self.components - other.components)

    def __neg__(self) -> "SymTensor":
        return SymTensor(self.d, self.m, -self.components)

    def __mul__(self, t: float) -> "SymTensor":
        return SymTensor(self.d, self.m, float(t) * self.components)

    __rmul__ = __mul__

    def allclose(self, other: "SymTensor", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        self._check(other)
        scale = max(self.norm(), other.norm(), 1.0)
        return bool(np.all(np.abs(self.components - other.components) <= atol + rtol * scale))

    def __repr__(self) -> str:
        terms = [f"{c:+.6g}*{l}" for l, c in zip(self.classes, self.coefficients()) if c != 0]
        return f"SymTensor(d={self.d}, m={self.m}, coeffs: {' '.join(terms) or '0'})"


def symmetrize(full: np.ndarray) -> SymTensor:
    """Average a full tensor over index permutations."""
    full = np.asarray(full, dtype=float)
    r = full.ndim
    d = full.shape[0] if r else 1
    if r == 0:
        return SymTensor(d, 0, full.reshape(1))
    if any(s != d for s in full.shape):
        raise ValueError("full tensor must have shape (d,)*r")
    _, _, ids, weights = _class_table(d, r)
    sums = np.bincount(ids, weights=full.reshape(-1), minlength=weights.size)
    return SymTensor(d, r, sums / weights)


Factor = Union[SymTensor, np.ndarray, Sequence[float]]


def _as_full(f: Factor) -> np.ndarray:
    if isinstance(f, SymTensor):
        return f.to_full()
    arr = np.asarray(f, dtype=float)
    if arr.ndim != 1:
        raise ValueError("vector factors must be one-dimensional")
    return arr


def outer(factors: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones(())
    for f in factors:
        out = np.multiply.outer(out, f)
    return out


def sym_product(*factors: Factor) -> SymTensor:
    """Symmetrized tensor product of vectors and symmetric tensors."""
    if not factors:
        raise ValueError("need at least one factor")
    fulls = [_as_full(f) for f in factors]
    dims = {f.shape[0] for f in fulls if f.ndim}
    if len(dims) > 1:
        raise ValueError("dimension mismatch between factors")
    return symmetrize(outer(fulls))


def alt_product(a, b) -> np.ndarray:
    """a (-) b = (a x b - b x a) / 2."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("alt_product expects two vectors of equal length")
    return 0.5 * (np.multiply.outer(a, b) - np.multiply.outer(b, a))


def sym_product_full(factors: Sequence[np.ndarray]) -> np.ndarray:
    """Average over factor orderings of the ordered tensor products.

    Only the order of the factors is permuted; the index order inside each
    factor is kept.
    """
    fulls = [np.asarray(f, dtype=float) for f in factors]
    if not fulls:
        raise ValueError("need at least one factor")
    if len({f.shape[0] for f in fulls}) > 1:
        raise ValueError("dimension mismatch between factors")
    perms = list(itertools.permutations(range(len(fulls))))
    acc = np.zeros(())
    for p in perms:
        acc = acc + outer(fulls[i] for i in p)
    return acc / len(perms)


def full_norm(t: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.square(t))))


def sorted_dot(a: SymTensor, b: SymTensor) -> float:
    """Sum over sorted index tuples of the product of entries."""
    a._check(b)
    return float(np.dot(a.components, b.components))


@dataclass(frozen=True, eq=False)
class VecSymTensor:
    """Element of R^k (x) Sym(R^d; m), stored as ``k`` rows of class components."""

    k: int
    d: int
    m: int
    components: np.ndarray

    def __post_init__(self):
        comps = np.array(self.components, dtype=float).reshape(self.k, n_classes(self.d, self.m))
        comps.setflags(write=False)
        object.__setattr__(self, "components", comps)

    @classmethod
    def from_product(cls, v, s: SymTensor) -> "VecSymTensor":
        v = np.asarray(v, dtype=float).reshape(-1)
        return cls(v.size, s.d, s.m, np.outer(v, s.components))

    @classmethod
    def from_weighted(cls, k: int, d: int, m: int, y) -> "VecSymTensor":
        y = np.asarray(y, dtype=float).reshape(k, -1)
        return cls(k, d, m, y / np.sqrt(class_weights(d, m)))

    @property
    def classes(self) -> tuple[MultiIndex, ...]:
        return _class_table(self.d, self.m)[0]

    def row(self, j: int) -> SymTensor:
        return SymTensor(self.d, self.m, self.components[j])

    def weighted_coords(self) -> np.ndarray:
        return (self.components * np.sqrt(class_weights(self.d, self.m))).reshape(-1)

    def to_full(self) -> np.ndarray:
        return np.stack([self.row(j).to_full() for j in range(self.k)])

    def norm(self) -> float:
        return float(np.linalg.norm(self.weighted_coords()))

    def is_basis_element(self) -> bool:
        """True for v (x) e^l with a single nonzero class."""
        return int(np.count_nonzero(np.any(self.components != 0, axis=0))) == 1

    def support(self) -> list[MultiIndex]:
        nz = np.any(self.components != 0, axis=0)
        return [l for l, flag in zip(self.classes, nz) if flag]

    def __add__(self, other: "VecSymTensor") -> "VecSymTensor":
        return VecSymTensor(self.k, self.d, self.m, self.components + other.components)

    def __sub__(self, other: "VecSymTensor") -> "VecSymTensor":
        return VecSymTensor(self.k, self.d, self.m, self.components - other.components)

    def __mul__(self, t: float) -> "VecSymTensor":
        return VecSymTensor(self.k, self.d, self.m, float(t) * self.components)

    __rmul__ = __mul__


def sym_power(xi, m: int) -> SymTensor:
    """xi (.) ... (.) xi (m factors); its components are the monomials xi^l."""
    xi = np.asarray(xi, dtype=float)
    classes = multi_indices(xi.size, m)
    return SymTensor(xi.size, m, [np.prod(xi ** np.array(l)) for l in classes])
