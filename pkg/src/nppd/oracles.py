"""Reference computations used to check the solver from the outside.

None of these reuse the code paths they validate: gradients are checked by
central differences of ``phi`` itself, projections through the KKT
multiplier of a single halfspace constraint, the recovered primal-dual
schemes by their textbook three-line updates, and game solutions by exact
rational support enumeration.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import functions as fns
from .core import PrimalDualPoint, as_linear_map

__all__ = [
    "OracleConfig",
    "fd_gradient",
    "brute_projection",
    "reference_pdhg",
    "reference_generalized_pd",
    "solve_matrix_game_exact",
    "saddle_gap",
]


@dataclass(frozen=True)
class OracleConfig:
    fd_step: float = 1e-6
    game_enum_max: int = 6

    def __post_init__(self):
        if not self.fd_step > 0:
            raise ValueError("fd_step must be positive")


DEFAULT = OracleConfig()


def fd_gradient(phi, u: PrimalDualPoint, step: float = DEFAULT.fd_step):
    """Central-difference partial gradients of ``phi.value`` at ``u``."""
    if not step > 0:
        raise ValueError("step must be positive")
    x, y = np.array(u.x), np.array(u.y)
    gx = np.empty_like(x)
    gy = np.empty_like(y)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = step
        gx[i] = (phi.value(PrimalDualPoint(x + e, y)) - phi.value(PrimalDualPoint(x - e, y))) / (2 * step)
    for j in range(y.size):
        e = np.zeros_like(y)
        e[j] = step
        gy[j] = (phi.value(PrimalDualPoint(x, y + e)) - phi.value(PrimalDualPoint(x, y - e))) / (2 * step)
    return gx, gy


def brute_projection(u: PrimalDualPoint, hs) -> PrimalDualPoint:
    """Projection of ``u`` onto ``{z : <z - hs.r, hs.a> <= hs.margin}``.

    Solved from the KKT system of ``min ||z - u||^2`` under the one linear
    constraint; the multiplier is clipped at zero so points already inside
    are returned unchanged.
    """
    a = np.concatenate([hs.a.x, hs.a.y])
    r = np.concatenate([hs.r.x, hs.r.y])
    z = np.concatenate([u.x, u.y])
    aa = float(a @ a)
    if aa == 0.0:
        raise ZeroDivisionError("halfspace with zero normal")
    lam = max(0.0, (float((z - r) @ a) - hs.margin) / aa)
    return PrimalDualPoint.from_stacked(z - lam * a, u.n)


def reference_pdhg(K, f, g, tau: float, sigma: float, theta_pd: float, u0: PrimalDualPoint, iters: int):
    """Chambolle-Pock iterates with extrapolation ``theta_pd``.

    Returns the list ``[u0, u1, ..., u_iters]``.
    """
    if not (tau > 0 and sigma > 0):
        raise ValueError("tau and sigma must be positive")
    K = as_linear_map(K).entries
    x, y = np.array(u0.x), np.array(u0.y)
    out = [PrimalDualPoint(x, y)]
    for _ in range(iters):
        x_new = fns.prox(f, tau, x - tau * (K.T @ y))
        x_bar = x_new + theta_pd * (x_new - x)
        y = fns.prox(g, sigma, y + sigma * (K @ x_bar))
        x = x_new
        out.append(PrimalDualPoint(x, y))
    return out


def reference_generalized_pd(K, f, g, tau: float, sigma: float, theta_pd: float, u0: PrimalDualPoint, iters: int):
    """Prediction-correction form of the generalized primal-dual method.

    Prediction::

        xt = prox_{tau f}(x - tau K^T y)
        yt = prox_{sigma g}(y + sigma (1 + theta) K xt - sigma theta K x)

    Correction ``u+ = u - W (u - ut)`` with
    ``W = [[I, 0], [(1 - theta) sigma K, I]]``.
    """
    K = as_linear_map(K).entries
    x, y = np.array(u0.x), np.array(u0.y)
    out = [PrimalDualPoint(x, y)]
    for _ in range(iters):
        xt = fns.prox(f, tau, x - tau * (K.T @ y))
        yt = fns.prox(g, sigma, y + sigma * (1 + theta_pd) * (K @ xt) - sigma * theta_pd * (K @ x))
        dx, dy = x - xt, y - yt
        x = x - dx
        y = y - ((1 - theta_pd) * sigma * (K @ dx) + dy)
        out.append(PrimalDualPoint(x, y))
    return out


def _solve_exact(A: list[list[Fraction]], rhs: list[Fraction]):
    """Gauss-Jordan elimination over the rationals; ``None`` if singular."""
    n = len(A)
    M = [row[:] + [b] for row, b in zip(A, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        p = M[col][col]
        M[col] = [v / p for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                fac = M[r][col]
                M[r] = [a - fac * b for a, b in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _kernel_strategy(A, rows, cols, transpose: bool):
    # mix over `cols` that equalises the payoff on `rows`, plus the value
    s = len(rows)
    if transpose:
        sub = [[A[i][j] for i in rows] for j in cols]
    else:
        sub = [[A[i][j] for j in cols] for i in rows]
    system = [r + [Fraction(-1)] for r in sub] + [[Fraction(1)] * s + [Fraction(0)]]
    rhs = [Fraction(0)] * s + [Fraction(1)]
    sol = _solve_exact(system, rhs)
    if sol is None:
        return None
    return sol[:s], sol[s]


def solve_matrix_game_exact(payoff, config: OracleConfig = DEFAULT):
    """Exact equilibrium of ``min_x max_y <payoff x, y>`` over two simplices.

    ``x`` mixes the columns (minimiser), ``y`` the rows (maximiser). Square
    supports are enumerated by increasing size and then lexicographically
    (rows before columns); the first pair of equalising strategies that is
    nonnegative and passes both best-response tests is returned. Arithmetic
    is over ``Fraction`` so the saddle inequalities hold exactly for the
    rational game; the float output satisfies them to rounding.

    Returns
    -------
    x_star, y_star : ndarray
    value : float
    """
    P = np.asarray(payoff, dtype=float)
    m, n = P.shape
    if max(m, n) > config.game_enum_max:
        raise ValueError(f"support enumeration limited to {config.game_enum_max} strategies per player")
    A = [[Fraction(float(v)) for v in row] for row in P]
    for s in range(1, min(m, n) + 1):
        for rows in itertools.combinations(range(m), s):
            for cols in itertools.combinations(range(n), s):
                xs = _kernel_strategy(A, rows, cols, transpose=False)
                ys = _kernel_strategy(A, rows, cols, transpose=True)
                if xs is None or ys is None:
                    continue
                (xw, v), (yw, v2) = xs, ys
                if v != v2 or min(xw) < 0 or min(yw) < 0:
                    continue
                x = [Fraction(0)] * n
                y = [Fraction(0)] * m
                for j, w in zip(cols, xw):
                    x[j] = w
                for i, w in zip(rows, yw):
                    y[i] = w
                # y maximises against x, x minimises against y
                if any(sum(A[i][j] * x[j] for j in range(n)) > v for i in range(m)):
                    continue
                if any(sum(A[i][j] * y[i] for i in range(m)) < v for j in range(n)):
                    continue
                return (np.array([float(w) for w in x]), np.array([float(w) for w in y]), float(v))
    raise RuntimeError("support enumeration exhausted without an equilibrium")


def saddle_gap(payoff, x, y) -> float:
    """Duality gap ``max_i (P x)_i - min_j (P^T y)_j`` of a simplex pair."""
    P = np.asarray(payoff, dtype=float)
    return float(np.max(P @ x) - np.min(P.T @ y))
