"""Certificates, metric matrices, rate fitting and trace export.

The checks here recompute everything they assert from the stored iterates
``(u_k, r_k)`` rather than trusting the columns the solver wrote.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import coupling as cp
from . import preconditioner as pc
from .core import PrimalDualPoint, norm
from .solver import make_halfspace
from .trace import COLUMNS, IterateTrace, TraceRow

__all__ = [
    "Certificate",
    "MetricMatrices",
    "build_matrices",
    "metric_eigen_bounds",
    "annotate_h_seminorm",
    "check_fejer",
    "check_separation",
    "check_stepsize_bracket",
    "check_contraction",
    "check_h_seminorm_decay",
    "fit_rate",
    "export_trace",
    "read_trace",
    "summary",
]

SLACK = 1e-10
MAX_MATRIX_DIM = 200


@dataclass
class Certificate:
    """Outcome of one check.

    ``passed`` is ``None`` when the check was skipped (``reason`` says why).
    ``worst`` is the largest violation margin seen (negative means slack).
    """

    name: str
    passed: bool | None
    checked: int = 0
    first_violation: int | None = None
    worst: float = -math.inf
    reason: str = ""
    details: dict = field(default_factory=dict)

    @classmethod
    def skipped(cls, name: str, reason: str) -> "Certificate":
        return cls(name, None, reason=reason)

    def label(self) -> str:
        if self.passed is None:
            return f"skipped: {self.reason}"
        return "pass" if self.passed else f"fail at k={self.first_violation}"

    def _record(self, k: int, excess: float, tol: float):
        self.checked += 1
        self.worst = max(self.worst, excess)
        if excess > tol and self.first_violation is None:
            self.first_violation = k

    def _finish(self) -> "Certificate":
        self.passed = self.first_violation is None
        return self


@dataclass(frozen=True)
class MetricMatrices:
    """Matrices of the analysis on the stacked ``(n + m)`` space."""

    M_mat: np.ndarray
    C_mat: np.ndarray
    D_mat: np.ndarray
    H_mat: np.ndarray
    N_mat: np.ndarray
    Gmetric_mat: np.ndarray
    theta_t: float

    def h_norm2(self, v) -> float:
        v = np.asarray(v)
        return float(v @ self.H_mat @ v)

    def g_norm2(self, v) -> float:
        v = np.asarray(v)
        return float(v @ self.Gmetric_mat @ v)


def _sym_min_eig(A: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(0.5 * (A + A.T)).min())


def build_matrices(spec: pc.PreconditionerSpec, phi: cp.Coupling, theta: float, t: float) -> MetricMatrices:
    """Assemble ``M, C, D = I - B C^{-1}, H = D/(theta t), N = theta t C`` and
    ``G = M + M^T - N^T H N``.

    ``C^{-1}`` uses the explicit block-triangular inverse.
    """
    n, m = spec.n, spec.m
    if n + m > MAX_MATRIX_DIM:
        raise ValueError(f"metric matrices are limited to {MAX_MATRIX_DIM} unknowns")
    N1i = np.diag(1.0 / spec.N1)
    N2i = np.diag(1.0 / spec.N2)
    C_inv = np.block([[N1i, np.zeros((n, m))], [-N2i @ spec.Q.entries @ N1i, N2i]])
    C = pc.C_matrix(spec)
    M = pc.M_matrix(spec, phi)
    D = np.eye(n + m) - cp.B_matrix(phi) @ C_inv
    tt = theta * t
    H = D / tt
    N = tt * C
    G = M + M.T - N.T @ H @ N
    return MetricMatrices(M, C, D, H, N, G, tt)


def metric_eigen_bounds(mats: MetricMatrices, consts: pc.ConstantsReport) -> dict:
    """Smallest eigenvalues (symmetric parts) of ``D`` and ``G`` next to their
    guaranteed lower bounds."""
    mu, gamma, L, q = consts.mu, consts.gamma, consts.L, consts.q
    return {
        "D_min_eig": _sym_min_eig(mats.D_mat),
        "D_bound": 1.0 - L / (mu - gamma) if mu > gamma else -math.inf,
        "G_min_eig": _sym_min_eig(mats.Gmetric_mat),
        "G_bound": 2.0 * mu - mats.theta_t * (L + q) * q,
    }


def annotate_h_seminorm(trace: IterateTrace, mats: MetricMatrices) -> IterateTrace:
    """Fill the ``h_seminorm`` column with ``||N (u_k - r_k)||_H``."""
    for row, (u, r) in zip(trace.rows, trace.history):
        v = mats.N_mat @ (u - r).stacked()
        row.h_seminorm = math.sqrt(max(mats.h_norm2(v), 0.0))
    return trace


def check_fejer(trace: IterateTrace, z_star: PrimalDualPoint, spec: pc.PreconditionerSpec,
                u_history=None, tol: float = SLACK) -> Certificate:
    """``||u_{k+1} - z*||^2 <= ||u_k - z*||^2 - theta_k (2 - theta_k) ||P u_k - u_k||^2``.

    ``P u_k - u_k = -t_k a_k`` with ``a_k = C (u_k - r_k)`` rebuilt from the
    stored predictions. ``u_history`` overrides the iterates, which is how a
    corrupted sequence is fed in.
    """
    cert = Certificate("fejer", None)
    us = [u for u, _ in trace.history] if u_history is None else list(u_history)
    for k in range(len(us) - 1):
        row = trace.rows[k]
        if row.t is None or row.theta is None:
            continue
        u, r = trace.history[k]
        proj = max(row.t, 0.0) * norm(pc.apply_C(spec, u - r))
        lhs = norm(us[k + 1] - z_star) ** 2
        rhs = norm(us[k] - z_star) ** 2 - row.theta * (2 - row.theta) * proj**2
        cert._record(k, lhs - rhs, tol)
    return cert._finish()


def check_separation(trace: IterateTrace, spec: pc.PreconditionerSpec, consts: pc.ConstantsReport,
                     z_star: PrimalDualPoint | None = None, tol: float = SLACK) -> Certificate:
    """Strict separation at every recorded prediction.

    ``psi_k(u_k) >= (mu - gamma - L/4) ||u_k - r_k||^2`` and, when a solution
    is known, ``psi_k(z*) <= 0``.
    """
    if not consts.required_ok:
        return Certificate.skipped("separation", "flag_separation_ok false")
    cert = Certificate("separation", None)
    c = consts.mu - consts.gamma - consts.L / 4.0
    worst_star = -math.inf
    for k, (u, r) in enumerate(trace.history):
        hs = make_halfspace(u, r, spec, consts.L)
        excess = c * norm(u - r) ** 2 - hs.psi(u)
        if z_star is not None:
            s = hs.psi(z_star)
            worst_star = max(worst_star, s)
            excess = max(excess, s)
        cert._record(k, excess, tol)
    cert.details["worst_psi_at_solution"] = worst_star
    return cert._finish()


def check_stepsize_bracket(trace: IterateTrace, consts: pc.ConstantsReport, tol: float = 0.0) -> Certificate:
    """Every halfspace stepsize lies in ``[t_lower, t_upper]``."""
    if not consts.required_ok or consts.t_upper is None:
        return Certificate.skipped("stepsize_bracket", "flag_separation_ok false")
    if trace.header.get("config", {}).get("stepsize") is not None:
        return Certificate.skipped("stepsize_bracket", "fixed stepsize run")
    cert = Certificate("stepsize_bracket", None)
    lo, hi = consts.t_lower, consts.t_upper
    for row in trace.rows:
        if row.t is None:
            continue
        cert._record(row.k, max(lo - row.t, row.t - hi), tol)
    cert.details.update(t_lower=lo, t_upper=hi)
    return cert._finish()


def check_contraction(trace: IterateTrace, mats: MetricMatrices, z_star: PrimalDualPoint,
                      tol: float = SLACK) -> Certificate:
    """``||u_{k+1} - u*||_H^2 <= ||u_k - u*||_H^2 - ||u_k - r_k||_G^2`` for every k."""
    cert = Certificate("contraction", None)
    zs = z_star.stacked()
    for k in range(len(trace.history) - 1):
        u, r = trace.history[k]
        u1 = trace.history[k + 1][0].stacked()
        lhs = mats.h_norm2(u1 - zs)
        rhs = mats.h_norm2(u.stacked() - zs) - mats.g_norm2((u - r).stacked())
        cert._record(k, lhs - rhs, tol)
    return cert._finish()


def check_h_seminorm_decay(trace: IterateTrace, mats: MetricMatrices | None = None,
                           consts: pc.ConstantsReport | None = None,
                           z_star: PrimalDualPoint | None = None, slack: float = 1e-12) -> Certificate:
    """Monotone decay of ``h_k = ||N(u_k - r_k)||_H`` and the ``O(1/k)`` certificate.

    Reports ``sup_k (k+1) h_k^2`` and the fitted constant
    ``c_fit = ||u_0 - u*||_H^2 / sup_k (k+1) h_k^2``. When the metric matrices
    are available, ``c_fit`` is compared with the constant the contraction
    argument guarantees, ``c = lambda_min(G) / lambda_max(N^T H N)`` (symmetric
    parts).
    """
    if consts is not None and not (consts.flag_D_pd and consts.flag_G_pd):
        reason = "flag_D_pd false" if not consts.flag_D_pd else "flag_G_pd false"
        return Certificate.skipped("h_decay", reason)
    h = trace.column("h_seminorm")
    if not h or any(v is None for v in h):
        return Certificate.skipped("h_decay", "h_seminorm column not available")
    cert = Certificate("h_decay", None)
    for k in range(len(h) - 1):
        cert._record(k + 1, h[k + 1] - h[k] if h[k] > 0 else h[k + 1], slack)
    cert._finish()
    scaled = [(k + 1) * v * v for k, v in enumerate(h)]
    sup = max(scaled)
    cert.details["sup_scaled"] = sup
    if mats is not None and z_star is not None:
        u0 = trace.history[0][0].stacked()
        r0 = mats.h_norm2(u0 - z_star.stacked())
        cert.details["h_dist0"] = r0
        cert.details["c_fit"] = r0 / sup if sup > 0 else math.inf
        NHN = mats.N_mat.T @ mats.H_mat @ mats.N_mat
        lam_top = float(np.linalg.eigvalsh(0.5 * (NHN + NHN.T)).max())
        c_theory = _sym_min_eig(mats.Gmetric_mat) / lam_top
        cert.details["c_theory"] = c_theory
        if not (cert.details["c_fit"] > 0 and sup <= r0 / c_theory + SLACK):
            cert.passed = False
    return cert


def _r_squared(x: np.ndarray, y: np.ndarray) -> float:
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_res = float(np.sum((y - A @ coef) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0


def fit_rate(trace_or_residuals, r2_min: float = 0.95) -> dict:
    """Empirical rate of the residual sequence.

    ``linear_factor`` is the geometric mean of successive residual ratios over
    the last half of the trace. It is reported only when it is below one,
    ``log(residual)`` is fitted by a line in ``k`` with R^2 above ``r2_min``,
    and that semi-log fit is at least as good as a power-law (log-log) fit
    over the same window; otherwise it is ``None``. ``sublinear_const`` is
    ``max_k (k+1) residual_k^2`` over the whole trace.
    """
    if isinstance(trace_or_residuals, IterateTrace):
        res = np.array(trace_or_residuals.column("residual"), dtype=float)
    else:
        res = np.asarray(trace_or_residuals, dtype=float)
    if res.size < 20:
        raise ValueError("rate fitting needs at least 20 rows")
    k = np.arange(res.size, dtype=float)
    sublinear = float(np.max((k + 1) * res**2))
    start = res.size // 2
    win, kw = res[start:], k[start:]
    out = {"linear_factor": None, "sublinear_const": sublinear, "r2_linear": None, "r2_power": None}
    if np.any(win <= 0):
        return out
    logs = np.log(win)
    factor = float(np.exp((logs[-1] - logs[0]) / (win.size - 1)))
    r2_lin = _r_squared(kw, logs)
    r2_pow = _r_squared(np.log(kw + 1), logs)
    out.update(r2_linear=r2_lin, r2_power=r2_pow, window_factor=factor)
    if factor < 1.0 and r2_lin > r2_min and r2_lin >= r2_pow:
        out["linear_factor"] = factor
    return out


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def export_trace(trace: IterateTrace, path) -> None:
    """Write the trace as CSV: ``#``-prefixed JSON header lines, then one row
    per prediction with 17 significant digits; unavailable cells are empty."""
    header = {k: v for k, v in trace.header.items() if not k.startswith("_")}
    buf = io.StringIO()
    for line in json.dumps(header, indent=1, sort_keys=True, default=_json_default).splitlines():
        buf.write("# " + line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for row in trace.rows:
        w.writerow([_fmt(v) for v in row.values()])
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def read_trace(path) -> IterateTrace:
    """Parse a file written by :func:`export_trace` (iterates are not stored)."""
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    head = [ln[2:] for ln in lines if ln.startswith("#")]
    body = [ln for ln in lines if not ln.startswith("#")]
    trace = IterateTrace(header=json.loads("\n".join(head)))
    reader = csv.reader(body)
    cols = next(reader)
    if tuple(cols) != COLUMNS:
        raise ValueError(f"unexpected columns {cols}")
    for rec in reader:
        vals = [None if c == "" else float(c) for c in rec]
        vals[0] = int(vals[0])
        trace.rows.append(TraceRow(*vals))
    return trace


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def summary(state, trace: IterateTrace, certificates: dict[str, Certificate], extra: dict | None = None) -> dict:
    try:
        rate = fit_rate(trace)
    except ValueError:
        rate = {"linear_factor": None, "sublinear_const": None}
    out = {
        "status": state.status,
        "final_residual": state.residual,
        "iterations": state.k,
        "linear_factor": rate["linear_factor"],
        "sublinear_const": rate["sublinear_const"],
        "certificates": {name: c.label() for name, c in certificates.items()},
    }
    if extra:
        out.update(extra)
    return out
