"""Smooth coupling terms ``phi(x, y)`` and the operator ``B``.

Two kinds are supported, both with analytic constants:

* ``bilinear``:  ``phi(x, y) = <Kx, y>``
* ``quadratic``: ``phi(x, y) = <Kx, y> + (a/2)||x||^2 - (b/2)||y||^2``

``a`` and ``b`` may be negative, which makes ``phi`` only weakly convex in
``x`` (resp. weakly concave in ``y``) and ``B`` only weakly monotone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import LinearMap, PrimalDualPoint, as_linear_map
from .exceptions import DimensionMismatch

__all__ = [
    "Coupling",
    "bilinear",
    "quadratic",
    "grad_x",
    "grad_y",
    "apply_B",
    "lipschitz_L",
    "weak_mono_gamma",
    "B_matrix",
    "from_dict",
    "to_dict",
]


@dataclass(frozen=True, eq=False)
class Coupling:
    kind: str
    K: LinearMap
    a: float = 0.0
    b: float = 0.0
    tight_L: float | None = None

    def __post_init__(self):
        if self.kind not in ("bilinear", "quadratic"):
            raise ValueError(f"unknown coupling kind {self.kind!r}")
        object.__setattr__(self, "K", as_linear_map(self.K))
        if self.kind == "bilinear" and (self.a != 0.0 or self.b != 0.0):
            raise ValueError("a bilinear coupling has no quadratic terms")
        if self.tight_L is not None and not self.tight_L > 0:
            raise ValueError("tight_L override must be positive")

    @property
    def n(self) -> int:
        return self.K.cols

    @property
    def m(self) -> int:
        return self.K.rows

    @property
    def L_xx(self) -> float:
        return abs(self.a)

    @property
    def L_yy(self) -> float:
        return abs(self.b)

    @property
    def L_xy(self) -> float:
        return self.K.norm()

    @property
    def L_yx(self) -> float:
        return self.K.norm()

    def value(self, u: PrimalDualPoint) -> float:
        self._check(u)
        kx = self.K.entries @ u.x
        return float(kx @ u.y + 0.5 * self.a * (u.x @ u.x) - 0.5 * self.b * (u.y @ u.y))

    def _check(self, u: PrimalDualPoint):
        if u.n != self.n or u.m != self.m:
            raise DimensionMismatch(
                f"coupling on R^{self.n} x R^{self.m} evaluated at a ({u.n},{u.m}) point"
            )


def bilinear(K, tight_L: float | None = None) -> Coupling:
    return Coupling("bilinear", K, tight_L=tight_L)


def quadratic(K, a: float = 0.0, b: float = 0.0, tight_L: float | None = None) -> Coupling:
    return Coupling("quadratic", K, a=float(a), b=float(b), tight_L=tight_L)


def grad_x(phi: Coupling, u: PrimalDualPoint) -> np.ndarray:
    phi._check(u)
    return phi.K.entries.T @ u.y + phi.a * u.x


def grad_y(phi: Coupling, u: PrimalDualPoint) -> np.ndarray:
    phi._check(u)
    return phi.K.entries @ u.x - phi.b * u.y


def apply_B(phi: Coupling, u: PrimalDualPoint) -> PrimalDualPoint:
    """``B u = (grad_x phi(u), -grad_y phi(u))``."""
    return PrimalDualPoint(grad_x(phi, u), -grad_y(phi, u))


def lipschitz_L(phi: Coupling) -> float:
    """Lipschitz constant of ``B``.

    Defaults to the block bound ``sqrt(Lxx^2 + Lyx^2 + Lxy^2 + Lyy^2)``; a
    ``tight_L`` override on the coupling replaces it.
    """
    if phi.tight_L is not None:
        return float(phi.tight_L)
    return math.sqrt(phi.L_xx**2 + phi.L_yx**2 + phi.L_xy**2 + phi.L_yy**2)


def weak_mono_gamma(phi: Coupling) -> float:
    return max(phi.L_xx, phi.L_yy)


def B_matrix(phi: Coupling) -> np.ndarray:
    """``B`` as a matrix on the stacked space (both kinds are linear)."""
    K = phi.K.entries
    n, m = phi.n, phi.m
    return np.block([[phi.a * np.eye(n), K.T], [-K, phi.b * np.eye(m)]])


def from_dict(spec: dict) -> Coupling:
    kind = spec["kind"]
    tight = spec.get("tight_L")
    if kind == "bilinear":
        return bilinear(spec["K"], tight_L=tight)
    if kind == "quadratic":
        return quadratic(spec["K"], spec.get("a", 0.0), spec.get("b", 0.0), tight_L=tight)
    raise ValueError(f"unknown coupling kind {kind!r}")


def to_dict(phi: Coupling) -> dict:
    out = {"kind": phi.kind, "K": phi.K.entries.tolist()}
    if phi.kind == "quadratic":
        out["a"] = phi.a
        out["b"] = phi.b
    if phi.tight_L is not None:
        out["tight_L"] = phi.tight_L
    return out
