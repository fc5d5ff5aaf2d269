"""Projected and relaxed preconditioned primal-dual iterations.

Algorithm 1 (``algorithm="projected"``)::

    r_k     = (M + P)^{-1} M u_k
    a_k     = C (u_k - r_k)
    H_k     = {z : <z - r_k, a_k> <= (L/4) ||u_k - r_k||^2}
    u_{k+1} = u_k - theta_k t_k a_k

where ``t_k a_k`` is the step to the projection of ``u_k`` onto ``H_k``.

Algorithm 2 (``algorithm="relaxed"``) replaces the projection by a fixed
correction ``u_{k+1} = u_k - G(u_k - r_k)``.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import coupling as cp
from . import preconditioner as pc
from .core import PrimalDualPoint, dot, norm
from .exceptions import AssumptionViolation, ConfigError, NumericalBreakdown
from .problems import ProblemInstance
from .trace import IterateTrace, TraceRow

__all__ = [
    "Halfspace",
    "SolverConfig",
    "SolverState",
    "make_halfspace",
    "stepsize_t",
    "project_relax",
    "adaptive_theta",
    "predict",
    "iterate_alg1",
    "iterate_alg2",
    "required_flags_ok",
    "solve",
    "STATUSES",
]

log = logging.getLogger(__name__)

STATUSES = ("converged", "not_converged", "assumption_violation", "numerical_breakdown")


@dataclass(frozen=True)
class Halfspace:
    """``{z : <z - r, a> <= margin}``."""

    a: PrimalDualPoint
    r: PrimalDualPoint
    margin: float

    def psi(self, z: PrimalDualPoint) -> float:
        return dot(z - self.r, self.a) - self.margin

    def contains(self, z: PrimalDualPoint) -> bool:
        # a boundary tie counts as inside
        return self.psi(z) <= 0.0


def make_halfspace(u: PrimalDualPoint, r: PrimalDualPoint, spec: pc.PreconditionerSpec, L: float) -> Halfspace:
    d = u - r
    # C is linear, so C(u - r) equals C u - C r and loses less to cancellation
    return Halfspace(a=pc.apply_C(spec, d), r=r, margin=0.25 * L * dot(d, d))


def stepsize_t(u: PrimalDualPoint, r: PrimalDualPoint, hs: Halfspace) -> float:
    """``t = (<u - r, a> - margin) / ||a||^2``."""
    aa = dot(hs.a, hs.a)
    if aa == 0.0:
        if norm(u - r) > 0.0:
            raise NumericalBreakdown("halfspace normal vanished while u != r")
        raise NumericalBreakdown("stepsize requested at a fixed point (u == r)")
    return (dot(u - r, hs.a) - hs.margin) / aa


def project_relax(u: PrimalDualPoint, hs: Halfspace, t: float, theta: float) -> PrimalDualPoint:
    """Relaxed projection ``u - theta t a``; a point already in the halfspace stays put."""
    if t <= 0.0:
        return u
    return u - (theta * t) * hs.a


def adaptive_theta(u: PrimalDualPoint, r: PrimalDualPoint, spec: pc.PreconditionerSpec,
                   phi: cp.Coupling, t: float, eps_theta: float) -> float:
    """Relaxation maximising the guaranteed decrease, clipped to
    ``[eps_theta, 2 - eps_theta]``.

    Valid for monotone linear configurations only, where the identity
    ``C^T D C = C^T M`` lets the metric ``D`` be bypassed::

        theta* = <r - u, M r - M u> / (t <a, M u - M r>)

    A nonpositive denominator falls back to ``theta = 1``.
    """
    if phi.a < 0 or phi.b < 0:
        raise ConfigError("adaptive relaxation needs a monotone (convex-concave) coupling")
    if not 0.0 < eps_theta < 1.0:
        raise ConfigError("eps_theta must lie in (0, 1)")
    a = pc.apply_C(spec, u - r)
    Mu = pc.apply_M(spec, phi, u)
    Mr = pc.apply_M(spec, phi, r)
    num = dot(r - u, Mr - Mu)
    den = t * dot(a, Mu - Mr)
    if not den > 0.0:
        log.warning("adaptive theta: nonpositive denominator %g, using theta = 1", den)
        return 1.0
    return float(np.clip(num / den, eps_theta, 2.0 - eps_theta))


@dataclass(frozen=True)
class SolverConfig:
    """Options of a solve.

    ``stepsize=None`` uses the halfspace stepsize ``t_k``; a number fixes
    ``t_k = t`` (the constant-parameter variant the rate analysis uses).
    ``correction`` applies to the relaxed algorithm only: ``"identity"`` or
    ``"generalized_pd"`` with ``corr_sigma`` and ``corr_theta``.
    """

    algorithm: str = "projected"
    theta_mode: str = "constant"
    theta: float = 1.0
    eps_theta: float = 0.05
    stepsize: float | None = None
    correction: str = "identity"
    corr_sigma: float = 1.0
    corr_theta: float = 1.0
    tol: float = 1e-8
    max_iter: int = 1000
    allow_unverified: bool = False
    clamp_stepsize: bool = False
    keep_history: bool = True

    def __post_init__(self):
        if self.algorithm not in ("projected", "relaxed"):
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.theta_mode not in ("constant", "adaptive"):
            raise ConfigError(f"unknown theta mode {self.theta_mode!r}")
        if not 0.0 < self.theta < 2.0:
            raise ConfigError("constant theta must lie in (0, 2)")
        if not 0.0 < self.eps_theta < 1.0:
            raise ConfigError("eps_theta must lie in (0, 1)")
        if self.stepsize is not None and not self.stepsize > 0:
            raise ConfigError("a fixed stepsize must be positive")
        if self.correction not in ("identity", "generalized_pd"):
            raise ConfigError(f"unknown correction {self.correction!r}")
        if self.max_iter < 0 or self.tol < 0:
            raise ConfigError("max_iter and tol must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SolverState:
    """State after an iteration.

    ``u`` is the current iterate; ``r``, ``residual``, ``t``, ``theta`` and
    ``psi_self`` describe the prediction and step that produced it (or, for a
    terminal state, the last prediction made at ``u``).
    """

    k: int
    u: PrimalDualPoint
    r: PrimalDualPoint | None = None
    residual: float = float("nan")
    t: float | None = None
    theta: float | None = None
    psi_self: float | None = None
    status: str = "running"
    message: str = ""


def _check_finite(p: PrimalDualPoint, what: str):
    if not p.is_finite():
        raise NumericalBreakdown(f"non-finite entries in {what}")


def predict(problem: ProblemInstance, spec: pc.PreconditionerSpec, u: PrimalDualPoint):
    """Warped resolvent step and its residual ``||u - r||``."""
    r = pc.warped_resolvent(spec, problem.f, problem.g, problem.phi, u, allow_unverified=True)
    _check_finite(r, "prediction")
    return r, norm(u - r)


def _constants_for(problem, spec, config) -> pc.ConstantsReport:
    theta = config.theta
    if config.stepsize is not None:
        return pc.constants(spec, problem.phi, theta, config.stepsize)
    c = pc.constants(spec, problem.phi, theta, 1.0)
    # the halfspace stepsize can be as large as t_upper; use it for the G flag
    t = c.t_upper if c.t_upper is not None and c.t_upper > 0 else 1.0
    return pc.constants(spec, problem.phi, theta, t)


def required_flags_ok(consts: pc.ConstantsReport, config: SolverConfig) -> bool:
    """Flags a run must satisfy unless ``allow_unverified`` is set."""
    if config.algorithm == "projected":
        return consts.required_ok
    return consts.flag_resolvent_ok


def _alg1_step(state: SolverState, r: PrimalDualPoint, residual: float, problem, spec, config,
               consts: pc.ConstantsReport) -> SolverState:
    u = state.u
    hs = make_halfspace(u, r, spec, consts.L)
    psi_self = hs.psi(u)
    if config.stepsize is not None:
        t = config.stepsize
    else:
        t = stepsize_t(u, r, hs)
        if t <= 0.0:
            flags = consts.required_ok
            if flags:
                return replace(state, r=r, residual=residual, t=t, psi_self=psi_self,
                               status="stalled",
                               message=f"iterate already inside the separating halfspace (t={t:.3e})")
            if config.clamp_stepsize and consts.t_lower > 0:
                t = consts.t_lower
            else:
                raise NumericalBreakdown(f"nonpositive stepsize t={t:.3e} with unverified hypotheses")
    if config.theta_mode == "adaptive":
        theta = adaptive_theta(u, r, spec, problem.phi, t, config.eps_theta)
    else:
        theta = config.theta
    u_next = u - (theta * t) * hs.a
    _check_finite(u_next, "iterate")
    return SolverState(k=state.k + 1, u=u_next, r=r, residual=residual, t=t, theta=theta,
                       psi_self=psi_self)


def _corrector(problem: ProblemInstance, config: SolverConfig):
    if config.correction == "identity":
        return lambda d: d
    if problem.phi.kind != "bilinear":
        raise ConfigError("the generalized primal-dual corrector needs a bilinear coupling")
    K = problem.phi.K.entries
    s = (1.0 - config.corr_theta) * config.corr_sigma

    def W(d: PrimalDualPoint) -> PrimalDualPoint:
        return PrimalDualPoint(d.x, s * (K @ d.x) + d.y)

    return W


def _alg2_step(state: SolverState, r, residual, problem, spec, config, consts) -> SolverState:
    hs = make_halfspace(state.u, r, spec, consts.L)
    u_next = state.u - _corrector(problem, config)(state.u - r)
    _check_finite(u_next, "iterate")
    return SolverState(k=state.k + 1, u=u_next, r=r, residual=residual, psi_self=hs.psi(state.u))


def iterate_alg1(state: SolverState, problem: ProblemInstance, spec: pc.PreconditionerSpec,
                 config: SolverConfig, consts: pc.ConstantsReport | None = None) -> SolverState:
    """One predict / separate / project cycle from ``state.u``."""
    consts = consts or _constants_for(problem, spec, config)
    if not config.allow_unverified and not consts.required_ok:
        raise AssumptionViolation("projection method needs mu > gamma + L/4")
    r, res = predict(problem, spec, state.u)
    if res <= config.tol:
        return replace(state, r=r, residual=res, t=None, theta=None, status="converged")
    return _alg1_step(state, r, res, problem, spec, config, consts)


def iterate_alg2(state: SolverState, problem: ProblemInstance, spec: pc.PreconditionerSpec,
                 config: SolverConfig, consts: pc.ConstantsReport | None = None) -> SolverState:
    """One predict / correct cycle from ``state.u``."""
    consts = consts or _constants_for(problem, spec, config)
    if not config.allow_unverified and not consts.flag_resolvent_ok:
        raise AssumptionViolation("warped resolvent needs mu > gamma")
    r, res = predict(problem, spec, state.u)
    if res <= config.tol:
        return replace(state, r=r, residual=res, t=None, theta=None, status="converged")
    return _alg2_step(state, r, res, problem, spec, config, consts)


def _default_start(problem: ProblemInstance) -> PrimalDualPoint:
    return PrimalDualPoint(np.ones(problem.n), np.ones(problem.m))


def solve(problem: ProblemInstance, spec: pc.PreconditionerSpec, config: SolverConfig = SolverConfig(),
          u0: PrimalDualPoint | None = None, header: dict | None = None):
    """Run until ``||u_k - r_k|| <= tol`` or ``max_iter`` updates.

    Returns the final :class:`SolverState` and an :class:`IterateTrace` with
    one row per prediction (``k = 0`` included). Failures of the hypotheses or
    of the arithmetic end the run with a distinguished status instead of
    raising.
    """
    u = _default_start(problem) if u0 is None else u0
    consts = _constants_for(problem, spec, config)
    z_star = problem.known_solution
    trace = IterateTrace(header={
        "instance": problem.header(),
        "spec": spec.summary(),
        "constants": consts.to_dict(),
        "config": config.to_dict(),
        **(header or {}),
    })
    state = SolverState(k=0, u=u)
    if not config.allow_unverified and not required_flags_ok(consts, config):
        msg = "hypotheses not satisfied: " + ", ".join(
            k for k, v in consts.to_dict().items() if k.startswith("flag_") and not v)
        trace.messages.append(msg)
        return replace(state, status="assumption_violation", message=msg), trace
    if not problem.monotone and config.theta_mode == "adaptive":
        raise ConfigError("adaptive relaxation is defined for monotone problems only")
    step = _alg1_step if config.algorithm == "projected" else _alg2_step

    while True:
        try:
            _check_finite(state.u, "iterate")
            r, res = predict(problem, spec, state.u)
        except NumericalBreakdown as exc:
            trace.messages.append(str(exc))
            state = replace(state, status="numerical_breakdown", message=str(exc))
            break
        dist = norm(state.u - z_star) if z_star is not None else None
        if config.keep_history:
            trace.history.append((state.u, r))
        done = res <= config.tol or state.k >= config.max_iter
        if done:
            psi = make_halfspace(state.u, r, spec, consts.L).psi(state.u)
            trace.rows.append(TraceRow(state.k, res, psi_self=psi, dist_to_solution=dist))
            status = "converged" if res <= config.tol else "not_converged"
            state = replace(state, r=r, residual=res, t=None, theta=None, psi_self=psi, status=status)
            break
        try:
            nxt = step(state, r, res, problem, spec, config, consts)
        except NumericalBreakdown as exc:
            trace.rows.append(TraceRow(state.k, res, dist_to_solution=dist))
            trace.messages.append(str(exc))
            state = replace(state, r=r, residual=res, status="numerical_breakdown", message=str(exc))
            break
        trace.rows.append(TraceRow(state.k, res, nxt.t, nxt.theta, nxt.psi_self, dist))
        if nxt.status == "stalled":
            trace.messages.append(nxt.message)
            state = replace(nxt, status="not_converged")
            break
        state = nxt
    trace.header["status"] = state.status
    return state, trace
