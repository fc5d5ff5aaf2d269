"""Primal-dual points, dense linear maps and the handful of vector
operations everything else is written against.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError, DimensionMismatch

__all__ = [
    "PrimalDualPoint",
    "LinearMap",
    "as_linear_map",
    "dot",
    "norm",
    "apply_linear",
    "operator_norm",
]

NORM_MAX_ITER = 500
NORM_TOL = 1e-10


def _vector(v) -> np.ndarray:
    arr = np.array(v, dtype=float).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PrimalDualPoint:
    """The pair ``u = (x, y)`` of a primal and a dual vector.

    Supports ``+``, ``-``, unary ``-`` and scaling by a real number so that
    the algorithms can be written in their mathematical form.
    """

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _vector(self.x))
        object.__setattr__(self, "y", _vector(self.y))

    @classmethod
    def zeros(cls, n: int, m: int) -> "PrimalDualPoint":
        return cls(np.zeros(n), np.zeros(m))

    @classmethod
    def from_stacked(cls, v, n: int) -> "PrimalDualPoint":
        v = np.asarray(v, dtype=float)
        return cls(v[:n], v[n:])

    @property
    def n(self) -> int:
        return self.x.size

    @property
    def m(self) -> int:
        return self.y.size

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y)))

    def _check(self, other: "PrimalDualPoint"):
        if self.x.shape != other.x.shape or self.y.shape != other.y.shape:
            raise DimensionMismatch(
                f"points of shape ({self.n},{self.m}) and ({other.n},{other.m})"
            )

    def __add__(self, other: "PrimalDualPoint") -> "PrimalDualPoint":
        self._check(other)
        return PrimalDualPoint(self.x + other.x, self.y + other.y)

    def __sub__(self, other: "PrimalDualPoint") -> "PrimalDualPoint":
        self._check(other)
        return PrimalDualPoint(self.x - other.x, self.y - other.y)

    def __neg__(self) -> "PrimalDualPoint":
        return PrimalDualPoint(-self.x, -self.y)

    def __mul__(self, s) -> "PrimalDualPoint":
        return PrimalDualPoint(s * self.x, s * self.y)

    __rmul__ = __mul__

    def __repr__(self):
        return f"PrimalDualPoint(x={self.x.tolist()}, y={self.y.tolist()})"


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Dense real matrix with a cached operator 2-norm."""

    entries: np.ndarray
    _norm: list = field(default_factory=list, repr=False, compare=False)

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim == 1:
            a = a.reshape(1, -1) if a.size else a.reshape(0, 0)
        if a.ndim != 2:
            raise DimensionMismatch("a linear map needs a 2-d array of entries")
        if not np.all(np.isfinite(a)):
            raise ValueError("linear map entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def identity(cls, n: int) -> "LinearMap":
        return cls(np.eye(n))

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "LinearMap":
        return cls(np.zeros((rows, cols)))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def T(self) -> "LinearMap":
        return LinearMap(self.entries.T)

    def __matmul__(self, v):
        return apply_linear(self, v)

    def __mul__(self, s) -> "LinearMap":
        return LinearMap(s * self.entries)

    __rmul__ = __mul__

    def norm(self) -> float:
        if not self._norm:
            self._norm.append(operator_norm(self))
        return self._norm[0]


def as_linear_map(A) -> LinearMap:
    return A if isinstance(A, LinearMap) else LinearMap(A)


def dot(u: PrimalDualPoint, v: PrimalDualPoint) -> float:
    """Inner product on the product space, ``<u.x, v.x> + <u.y, v.y>``."""
    u._check(v)
    return float(u.x @ v.x + u.y @ v.y)


def norm(u: PrimalDualPoint) -> float:
    return float(np.sqrt(u.x @ u.x + u.y @ u.y))


def apply_linear(A, v) -> np.ndarray:
    A = as_linear_map(A)
    v = np.asarray(v, dtype=float).reshape(-1)
    if A.cols != v.size:
        raise DimensionMismatch(f"map with {A.cols} columns applied to vector of length {v.size}")
    return A.entries @ v


def _power_iteration(a: np.ndarray, v: np.ndarray, max_iter: int, tol: float) -> float:
    v = v / np.linalg.norm(v)
    w = a.T @ (a @ v)
    lam = float(v @ w)
    if lam <= 0.0:
        return 0.0
    for _ in range(max_iter):
        v = w / np.linalg.norm(w)
        w = a.T @ (a @ v)
        lam_new = float(v @ w)
        # a small eigen-residual pins lam_new to an eigenvalue even when the
        # top two are nearly tied and the change test is slow to trigger
        resid = float(np.linalg.norm(w - lam_new * v))
        if abs(lam_new - lam) <= 1e-2 * tol * lam_new or resid <= tol * lam_new:
            return float(np.sqrt(lam_new))
        lam = lam_new
    raise ConvergenceError(
        f"power iteration did not reach relative tolerance {tol} in {max_iter} iterations"
    )


def operator_norm(A, max_iter: int = NORM_MAX_ITER, tol: float = NORM_TOL) -> float:
    """Largest singular value of ``A`` by power iteration on ``A^T A``.

    The primary start vector is the normalised all-ones vector. Because that
    vector can be orthogonal to the top right-singular vector (and the
    iteration would then settle on a smaller singular value), a second run
    from a fixed-seed Gaussian vector is made and the larger estimate kept.
    Both runs are deterministic.

    Raises
    ------
    ConvergenceError
        If the relative change of the estimate is still above ``tol`` after
        ``max_iter`` iterations.
    """
    a = as_linear_map(A).entries
    if a.size == 0 or not np.any(a):
        return 0.0
    n = a.shape[1]
    starts = (np.ones(n), np.random.default_rng(0).standard_normal(n))
    return max(_power_iteration(a, v, max_iter, tol) for v in starts)
