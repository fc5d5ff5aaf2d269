"""Separable convex terms ``f`` and ``g`` and their generalized resolvents.

Every function here is proper, lower semicontinuous and convex, and its
resolvent ``(df + N)^{-1}`` has a closed form when ``N`` is a diagonal map
with positive entries. An optional linear tilt ``<c, .>`` can be added to any
kind; it only shifts the argument of the resolvent.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch

__all__ = [
    "KINDS",
    "ProxFunction",
    "zero",
    "squared_l2",
    "l1",
    "indicator_box",
    "indicator_simplex",
    "evaluate",
    "resolvent",
    "prox",
    "project_simplex",
    "subgradient_residual",
    "from_dict",
    "to_dict",
]

KINDS = ("zero", "squared_l2", "l1", "indicator_box", "indicator_simplex")

MEMBERSHIP_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class ProxFunction:
    """Descriptor of one of the supported convex functions.

    ``squared_l2`` with weight ``w`` is ``(w/2)||v||^2`` and ``l1`` with weight
    ``w`` is ``w||v||_1``. ``tilt`` adds ``<tilt, v>``.
    """

    kind: str
    dimension: int
    weight: float = 1.0
    lo: np.ndarray | None = None
    hi: np.ndarray | None = None
    tilt: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown function kind {self.kind!r}")
        if self.dimension < 0:
            raise ValueError("dimension must be nonnegative")
        if self.kind in ("squared_l2", "l1") and not self.weight > 0:
            raise ValueError(f"{self.kind} weight must be positive, got {self.weight}")
        if self.kind == "indicator_box":
            lo = np.broadcast_to(np.asarray(self.lo, dtype=float), (self.dimension,)).copy()
            hi = np.broadcast_to(np.asarray(self.hi, dtype=float), (self.dimension,)).copy()
            if np.any(lo > hi):
                raise ValueError("box bounds need lo <= hi componentwise")
            lo.setflags(write=False)
            hi.setflags(write=False)
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        if self.kind == "indicator_simplex" and self.dimension == 0:
            raise ValueError("the simplex needs at least one coordinate")
        if self.tilt is not None:
            c = np.array(self.tilt, dtype=float).reshape(-1)
            if c.size != self.dimension:
                raise DimensionMismatch(f"tilt of length {c.size} for dimension {self.dimension}")
            c.setflags(write=False)
            object.__setattr__(self, "tilt", c)

    def __repr__(self):
        extra = ""
        if self.kind in ("squared_l2", "l1"):
            extra = f", weight={self.weight}"
        elif self.kind == "indicator_box":
            extra = f", lo={self.lo.tolist()}, hi={self.hi.tolist()}"
        if self.tilt is not None:
            extra += f", tilt={self.tilt.tolist()}"
        return f"ProxFunction({self.kind}, dimension={self.dimension}{extra})"


def zero(dimension: int, tilt=None) -> ProxFunction:
    return ProxFunction("zero", dimension, tilt=tilt)


def squared_l2(dimension: int, weight: float = 1.0, tilt=None) -> ProxFunction:
    return ProxFunction("squared_l2", dimension, weight=weight, tilt=tilt)


def l1(dimension: int, weight: float = 1.0, tilt=None) -> ProxFunction:
    return ProxFunction("l1", dimension, weight=weight, tilt=tilt)


def indicator_box(dimension: int, lo, hi, tilt=None) -> ProxFunction:
    return ProxFunction("indicator_box", dimension, lo=lo, hi=hi, tilt=tilt)


def indicator_simplex(dimension: int, tilt=None) -> ProxFunction:
    return ProxFunction("indicator_simplex", dimension, tilt=tilt)


def _as_vector(fn: ProxFunction, v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != fn.dimension:
        raise DimensionMismatch(f"vector of length {v.size} for a function on R^{fn.dimension}")
    return v


def evaluate(fn: ProxFunction, v) -> float:
    """Value of ``fn`` at ``v``; ``inf`` outside the domain of an indicator."""
    v = _as_vector(fn, v)
    linear = float(fn.tilt @ v) if fn.tilt is not None else 0.0
    if fn.kind == "zero":
        base = 0.0
    elif fn.kind == "squared_l2":
        base = 0.5 * fn.weight * float(v @ v)
    elif fn.kind == "l1":
        base = fn.weight * float(np.abs(v).sum())
    elif fn.kind == "indicator_box":
        inside = np.all(v >= fn.lo - MEMBERSHIP_TOL) and np.all(v <= fn.hi + MEMBERSHIP_TOL)
        base = 0.0 if inside else np.inf
    else:
        inside = np.all(v >= -MEMBERSHIP_TOL) and abs(v.sum() - 1.0) <= MEMBERSHIP_TOL * max(1, v.size)
        base = 0.0 if inside else np.inf
    return base + linear


def _diagonal(N, dimension: int) -> np.ndarray:
    d = np.broadcast_to(np.asarray(N, dtype=float), (dimension,))
    if d.ndim != 1:
        raise DimensionMismatch("N must be given by its diagonal")
    if not np.all(d > 0):
        raise ValueError("the resolvent needs a diagonal N with strictly positive entries")
    return d


def _weighted_simplex(v: np.ndarray, d: np.ndarray) -> np.ndarray:
    # minimise sum_i d_i/2 (x_i - v_i/d_i)^2 over the simplex; the KKT point is
    # x_i = max(v_i - lam, 0) / d_i with lam fixed by sum x = 1
    order = np.argsort(-v, kind="stable")
    vs, ws = v[order], 1.0 / d[order]
    lam = (np.cumsum(vs * ws) - 1.0) / np.cumsum(ws)
    active = np.nonzero(vs > lam)[0]
    j = active[-1]
    return np.maximum(v - lam[j], 0.0) / d


def resolvent(fn: ProxFunction, N, v) -> np.ndarray:
    """Generalized resolvent ``(dfn + N)^{-1} v`` for a diagonal positive ``N``.

    Returns the unique ``x`` with ``v - N x`` in the subdifferential of ``fn``
    at ``x``. ``N`` is given by its diagonal (array or scalar).
    """
    v = _as_vector(fn, v)
    d = _diagonal(N, fn.dimension)
    if fn.tilt is not None:
        v = v - fn.tilt
    if fn.kind == "zero":
        return v / d
    if fn.kind == "squared_l2":
        return v / (fn.weight + d)
    if fn.kind == "l1":
        return np.sign(v) * np.maximum(np.abs(v) - fn.weight, 0.0) / d
    if fn.kind == "indicator_box":
        return np.clip(v / d, fn.lo, fn.hi)
    return _weighted_simplex(v, d)


def project_simplex(z) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    z = np.asarray(z, dtype=float)
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, z.size + 1)
    rho = ind[u - css / ind > 0][-1]
    return np.maximum(z - css[rho - 1] / rho, 0.0)


def prox(fn: ProxFunction, tau: float, z) -> np.ndarray:
    """Standard proximal map ``argmin_x tau*fn(x) + 1/2||x - z||^2``."""
    z = _as_vector(fn, z)
    if not tau > 0:
        raise ValueError("prox step must be positive")
    if fn.tilt is not None:
        z = z - tau * fn.tilt
    if fn.kind == "zero":
        return z.copy()
    if fn.kind == "squared_l2":
        return z / (1.0 + tau * fn.weight)
    if fn.kind == "l1":
        return np.sign(z) * np.maximum(np.abs(z) - tau * fn.weight, 0.0)
    if fn.kind == "indicator_box":
        return np.minimum(np.maximum(z, fn.lo), fn.hi)
    return project_simplex(z)


def _simplex_normal_residual(x: np.ndarray, s: np.ndarray) -> float:
    # distance from s to {s': s'_i = lam on supp(x), s'_i <= lam off supp(x)}
    # minimised over lam; piecewise quadratic in lam, solved by sorting
    on = x > MEMBERSHIP_TOL
    s_on, s_off = s[on], np.sort(s[~on])[::-1]
    best = np.inf
    for j in range(s_off.size + 1):
        total = s_on.sum() + s_off[:j].sum()
        count = s_on.size + j
        lam = total / count
        if j < s_off.size and s_off[j] > lam:
            continue
        r = np.sum((s_on - lam) ** 2) + np.sum(np.maximum(s_off - lam, 0.0) ** 2)
        best = min(best, r)
    return float(np.sqrt(best))


def subgradient_residual(fn: ProxFunction, x, s) -> float:
    """Distance from ``s`` to the subdifferential of ``fn`` at ``x``.

    Zero exactly when ``s`` is a subgradient; ``inf`` when ``x`` lies outside
    the domain. Coordinates within ``1e-12`` of a kink or a bound are treated
    as sitting on it.
    """
    x = _as_vector(fn, x)
    s = _as_vector(fn, s)
    if not np.isfinite(evaluate(fn, x)):
        return np.inf
    if fn.tilt is not None:
        s = s - fn.tilt
    if fn.kind == "zero":
        return float(np.linalg.norm(s))
    if fn.kind == "squared_l2":
        return float(np.linalg.norm(s - fn.weight * x))
    if fn.kind == "l1":
        w = fn.weight
        at_zero = np.abs(x) <= MEMBERSHIP_TOL
        r = np.where(at_zero, np.maximum(np.abs(s) - w, 0.0), np.abs(s - w * np.sign(x)))
        return float(np.linalg.norm(r))
    if fn.kind == "indicator_box":
        at_lo = x <= fn.lo + MEMBERSHIP_TOL
        at_hi = x >= fn.hi - MEMBERSHIP_TOL
        r = np.where(at_lo & at_hi, 0.0,
                     np.where(at_lo, np.maximum(s, 0.0),
                              np.where(at_hi, np.maximum(-s, 0.0), np.abs(s))))
        return float(np.linalg.norm(r))
    return _simplex_normal_residual(x, s)


def from_dict(spec: dict, dimension: int) -> ProxFunction:
    """Build a function from its config form ``{"kind": ..., "params": {...}}``."""
    kind = spec["kind"]
    params = dict(spec.get("params", {}))
    tilt = params.pop("tilt", None)
    if kind == "indicator_box":
        return indicator_box(dimension, params["lo"], params["hi"], tilt=tilt)
    if kind in ("squared_l2", "l1"):
        return ProxFunction(kind, dimension, weight=float(params.get("weight", 1.0)), tilt=tilt)
    if params:
        raise ValueError(f"{kind} takes no parameters besides tilt, got {sorted(params)}")
    return ProxFunction(kind, dimension, tilt=tilt)


def to_dict(fn: ProxFunction) -> dict:
    params = {}
    if fn.kind in ("squared_l2", "l1"):
        params["weight"] = fn.weight
    if fn.kind == "indicator_box":
        params["lo"] = fn.lo.tolist()
        params["hi"] = fn.hi.tolist()
    if fn.tilt is not None:
        params["tilt"] = fn.tilt.tolist()
    return {"kind": fn.kind, "params": params}
