"""Lower block-triangular preconditioner and the prediction step.

The preconditioner is

    M u = (N1 x - grad_x phi(u),  Q x + N2 y + grad_y phi(u))

with diagonal positive ``N1``, ``N2`` and a dense ``Q`` mapping the primal
space into the dual space. ``C = M + B`` drops the coupling gradients and is
linear even when ``M`` is not.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import coupling as cp
from . import functions as fns
from .core import LinearMap, PrimalDualPoint, as_linear_map
from .exceptions import AssumptionViolation, DimensionMismatch

__all__ = [
    "PreconditionerSpec",
    "ConstantsReport",
    "scaled_identity",
    "apply_M",
    "apply_C",
    "apply_C_inverse",
    "C_matrix",
    "M_matrix",
    "constants",
    "warped_resolvent",
    "from_dict",
]


def _diag(d, size=None) -> np.ndarray:
    d = np.array(d, dtype=float).reshape(-1)
    if size is not None and d.size == 1 and size != 1:
        d = np.full(size, d[0])
    if not np.all(d > 0):
        raise ValueError("N1 and N2 must have strictly positive diagonals")
    d.setflags(write=False)
    return d


@dataclass(frozen=True, eq=False)
class PreconditionerSpec:
    """Blocks ``N1`` (n), ``N2`` (m) given by their diagonals, and ``Q`` (m x n)."""

    N1: np.ndarray
    N2: np.ndarray
    Q: LinearMap

    def __post_init__(self):
        object.__setattr__(self, "N1", _diag(self.N1))
        object.__setattr__(self, "N2", _diag(self.N2))
        Q = as_linear_map(self.Q)
        if Q.rows != self.N2.size or Q.cols != self.N1.size:
            raise DimensionMismatch(
                f"Q must be {self.N2.size}x{self.N1.size}, got {Q.rows}x{Q.cols}"
            )
        object.__setattr__(self, "Q", Q)

    @property
    def n(self) -> int:
        return self.N1.size

    @property
    def m(self) -> int:
        return self.N2.size

    @property
    def mu1(self) -> float:
        return float(self.N1.min())

    @property
    def L1(self) -> float:
        return float(self.N1.max())

    @property
    def mu2(self) -> float:
        return float(self.N2.min())

    @property
    def L2(self) -> float:
        return float(self.N2.max())

    @property
    def norm_Q(self) -> float:
        return self.Q.norm()

    def summary(self) -> dict:
        return {
            "N1": self.N1.tolist(),
            "N2": self.N2.tolist(),
            "Q": self.Q.entries.tolist(),
            "mu1": self.mu1, "L1": self.L1, "mu2": self.mu2, "L2": self.L2,
            "norm_Q": self.norm_Q,
        }


def scaled_identity(n: int, m: int, tau: float, sigma: float, Q=None) -> PreconditionerSpec:
    """``N1 = (1/tau) I``, ``N2 = (1/sigma) I``; ``Q`` defaults to zero."""
    if Q is None:
        Q = np.zeros((m, n))
    return PreconditionerSpec(np.full(n, 1.0 / tau), np.full(m, 1.0 / sigma), Q)


@dataclass(frozen=True)
class ConstantsReport:
    L: float
    gamma: float
    mu: float
    q: float
    t_lower: float
    t_upper: float | None
    theta: float
    t: float
    flag_resolvent_ok: bool
    flag_separation_ok: bool
    flag_D_pd: bool
    flag_G_pd: bool

    @property
    def required_ok(self) -> bool:
        """Hypotheses Algorithm 1 needs: well-posed prediction and strict separation."""
        return self.flag_resolvent_ok and self.flag_separation_ok

    @property
    def rate_ok(self) -> bool:
        return self.flag_D_pd and self.flag_G_pd

    def to_dict(self) -> dict:
        return asdict(self)


def _check(spec: PreconditionerSpec, u: PrimalDualPoint):
    if u.n != spec.n or u.m != spec.m:
        raise DimensionMismatch(f"preconditioner on ({spec.n},{spec.m}) applied to ({u.n},{u.m})")


def apply_C(spec: PreconditionerSpec, u: PrimalDualPoint) -> PrimalDualPoint:
    _check(spec, u)
    return PrimalDualPoint(spec.N1 * u.x, spec.Q.entries @ u.x + spec.N2 * u.y)


def apply_C_inverse(spec: PreconditionerSpec, v: PrimalDualPoint) -> PrimalDualPoint:
    _check(spec, v)
    x = v.x / spec.N1
    return PrimalDualPoint(x, (v.y - spec.Q.entries @ x) / spec.N2)


def apply_M(spec: PreconditionerSpec, phi: cp.Coupling, u: PrimalDualPoint) -> PrimalDualPoint:
    _check(spec, u)
    gx = cp.grad_x(phi, u)
    gy = cp.grad_y(phi, u)
    return PrimalDualPoint(spec.N1 * u.x - gx, spec.Q.entries @ u.x + spec.N2 * u.y + gy)


def C_matrix(spec: PreconditionerSpec) -> np.ndarray:
    n, m = spec.n, spec.m
    return np.block([[np.diag(spec.N1), np.zeros((n, m))], [spec.Q.entries, np.diag(spec.N2)]])


def M_matrix(spec: PreconditionerSpec, phi: cp.Coupling) -> np.ndarray:
    return C_matrix(spec) - cp.B_matrix(phi)


def constants(spec: PreconditionerSpec, phi: cp.Coupling, theta: float = 1.0, t: float = 1.0) -> ConstantsReport:
    """Constants of the method and the flags for each set of hypotheses.

    ``mu`` and ``q`` are the strong-monotonicity and Lipschitz constants of
    ``M``; ``[t_lower, t_upper]`` is the bracket the halfspace stepsize must
    fall in. ``theta`` and ``t`` only enter ``flag_G_pd``.
    """
    if not 0.0 < theta < 2.0:
        raise ValueError("theta must lie in (0, 2)")
    if not t > 0:
        raise ValueError("t must be positive")
    L = cp.lipschitz_L(phi)
    gamma = cp.weak_mono_gamma(phi)
    nq = spec.norm_Q
    mu = min(spec.mu1, spec.mu2) - L - nq / 2.0
    q = gamma + max(spec.L1, spec.L2) + nq / 2.0
    t_lower = (mu - gamma - L / 4.0) / (L + q)
    t_upper = (0.75 * L + q) / (mu - gamma) if mu > gamma else None
    return ConstantsReport(
        L=L, gamma=gamma, mu=mu, q=q, t_lower=t_lower, t_upper=t_upper,
        theta=theta, t=t,
        flag_resolvent_ok=mu > gamma,
        flag_separation_ok=mu > gamma + L / 4.0,
        flag_D_pd=mu > gamma + L,
        flag_G_pd=2.0 * mu > theta * t * (L + q) * q,
    )


def warped_resolvent(spec: PreconditionerSpec, f: fns.ProxFunction, g: fns.ProxFunction,
                     phi: cp.Coupling, u: PrimalDualPoint, allow_unverified: bool = False) -> PrimalDualPoint:
    """Prediction ``r = (M + P)^{-1} M u``.

    The x-block is solved first and fed into the y-block::

        r.x = (df + N1)^{-1}(N1 x - grad_x phi(u))
        r.y = (dg + N2)^{-1}(N2 y + grad_y phi(u) + Q (x - r.x))

    Raises AssumptionViolation when ``mu <= gamma`` unless
    ``allow_unverified`` is set.
    """
    _check(spec, u)
    if not allow_unverified and not constants(spec, phi).flag_resolvent_ok:
        raise AssumptionViolation("warped resolvent needs mu > gamma")
    gx = cp.grad_x(phi, u)
    gy = cp.grad_y(phi, u)
    rx = fns.resolvent(f, spec.N1, spec.N1 * u.x - gx)
    ry = fns.resolvent(g, spec.N2, spec.N2 * u.y + gy + spec.Q.entries @ (u.x - rx))
    return PrimalDualPoint(rx, ry)


def _diag_block(block: dict, size: int) -> np.ndarray:
    kind = block["type"]
    if kind == "scaled_identity":
        return np.full(size, 1.0 / float(block["tau"]))
    if kind == "diagonal":
        d = np.asarray(block["d"], dtype=float)
        if d.size != size:
            raise DimensionMismatch(f"diagonal of length {d.size}, expected {size}")
        return d
    raise ValueError(f"unknown diagonal block type {kind!r}")


def from_dict(block: dict, phi: cp.Coupling) -> PreconditionerSpec:
    """Build from the config form; ``scaled_coupling`` means ``Q = factor * K``."""
    n, m = phi.n, phi.m
    N1 = _diag_block(block["N1"], n)
    N2 = _diag_block(block["N2"], m)
    qb = block.get("Q", {"type": "scaled_coupling", "factor": 0.0})
    if qb["type"] == "matrix":
        Q = np.asarray(qb["entries"], dtype=float).reshape(m, n)
    elif qb["type"] == "scaled_coupling":
        Q = float(qb["factor"]) * phi.K.entries
    else:
        raise ValueError(f"unknown Q type {qb['type']!r}")
    return PreconditionerSpec(N1, N2, Q)

