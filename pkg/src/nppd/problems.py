"""Catalog of saddle-point instances with analytic constants.

Each instance bundles ``f``, ``g`` and ``phi`` for

    min_x max_y  f(x) + phi(x, y) - g(y)

and, where a closed form or an exact oracle exists, a known solution
``u*`` with ``0 in P(u*)``. Known solutions are checked against the
subgradient conditions when the instance is built.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import coupling as cp
from . import functions as fns
from .core import PrimalDualPoint, as_linear_map
from .exceptions import DimensionMismatch
from .oracles import solve_matrix_game_exact

__all__ = [
    "ProblemInstance",
    "inclusion_residual",
    "make_matrix_game",
    "make_quadratic_saddle",
    "make_l1_bilinear",
    "random_matrix_game",
    "random_orthogonal",
    "CATALOG",
    "from_dict",
]

INCLUSION_TOL = 1e-10


def inclusion_residual(f: fns.ProxFunction, g: fns.ProxFunction, phi: cp.Coupling, u: PrimalDualPoint) -> float:
    """Distance of ``0`` from ``P(u)``, blockwise.

    ``0 in P(u)`` means ``-grad_x phi(u)`` is a subgradient of ``f`` at ``x``
    and ``grad_y phi(u)`` is a subgradient of ``g`` at ``y``.
    """
    rx = fns.subgradient_residual(f, u.x, -cp.grad_x(phi, u))
    ry = fns.subgradient_residual(g, u.y, cp.grad_y(phi, u))
    return float(np.hypot(rx, ry))


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    name: str
    f: fns.ProxFunction
    g: fns.ProxFunction
    phi: cp.Coupling
    known_solution: PrimalDualPoint | None = None
    monotone: bool = True
    seed: int | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.f.dimension != self.phi.n or self.g.dimension != self.phi.m:
            raise DimensionMismatch(
                f"f on R^{self.f.dimension}, g on R^{self.g.dimension}, "
                f"coupling on R^{self.phi.n} x R^{self.phi.m}"
            )
        if self.known_solution is not None:
            res = self.residual(self.known_solution)
            if not res <= INCLUSION_TOL:
                raise ValueError(f"attached solution violates 0 in P(u*): residual {res:.3e}")

    @property
    def n(self) -> int:
        return self.phi.n

    @property
    def m(self) -> int:
        return self.phi.m

    def residual(self, u: PrimalDualPoint) -> float:
        return inclusion_residual(self.f, self.g, self.phi, u)

    def header(self) -> dict:
        return {"name": self.name, "seed": self.seed, "n": self.n, "m": self.m,
                "monotone": self.monotone, "params": self.params}


def make_matrix_game(payoff, name: str = "matrix_game", seed: int | None = None) -> ProblemInstance:
    """Zero-sum game ``min_x max_y <payoff x, y>`` over two simplices.

    ``payoff`` is m x n; ``x`` (length n) mixes columns and is the minimiser.
    The attached solution comes from exact support enumeration, except for
    the all-zero game where every pair is optimal and the barycenter is used.
    """
    K = as_linear_map(payoff)
    m, n = K.rows, K.cols
    if not np.any(K.entries):
        sol = PrimalDualPoint(np.full(n, 1.0 / n), np.full(m, 1.0 / m))
    else:
        xs, ys, _ = solve_matrix_game_exact(K.entries)
        sol = PrimalDualPoint(xs, ys)
    return ProblemInstance(
        name, fns.indicator_simplex(n), fns.indicator_simplex(m), cp.bilinear(K),
        known_solution=sol, monotone=True, seed=seed,
        params={"payoff": K.entries.tolist()},
    )


def make_quadratic_saddle(K, a: float = 0.0, b: float = 0.0, fw: float = 1.0, gw: float = 1.0,
                          name: str = "quadratic_saddle") -> ProblemInstance:
    """``f = (fw/2)||x||^2``, ``g = (gw/2)||y||^2`` and a quadratic coupling.

    When ``fw + a > 0`` and ``gw + b > 0`` the origin is the unique saddle
    point. ``fw`` or ``gw`` equal to zero means the corresponding term is
    absent.
    """
    if fw < 0 or gw < 0:
        raise ValueError("fw and gw must be nonnegative")
    K = as_linear_map(K)
    n, m = K.cols, K.rows
    f = fns.squared_l2(n, fw) if fw > 0 else fns.zero(n)
    g = fns.squared_l2(m, gw) if gw > 0 else fns.zero(m)
    sol = PrimalDualPoint.zeros(n, m) if (fw + a > 0 and gw + b > 0) else None
    return ProblemInstance(
        name, f, g, cp.quadratic(K, a, b), known_solution=sol,
        monotone=a >= 0 and b >= 0,
        params={"K": K.entries.tolist(), "a": a, "b": b, "fw": fw, "gw": gw},
    )


def _soft_threshold(v, lam):
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def make_l1_bilinear(K, b, lam: float, name: str = "l1_bilinear", seed: int | None = None) -> ProblemInstance:
    """Saddle form of ``min_x lam||x||_1 + (1/2)||Kx - b||^2``.

    ``g(y) = (1/2)||y||^2 + <b, y>`` so that maximising over ``y`` restores
    the least-squares term with ``y* = K x* - b``. A solution is attached in
    the two closed-form cases: ``||K^T b||_inf <= lam`` (then ``x* = 0``) and
    ``K^T K = I`` (then ``x*`` soft-thresholds ``K^T b`` at ``lam``).
    """
    if not lam > 0:
        raise ValueError("lam must be positive")
    K = as_linear_map(K)
    b = np.asarray(b, dtype=float).reshape(-1)
    n, m = K.cols, K.rows
    if b.size != m:
        raise DimensionMismatch(f"b of length {b.size} for a {m}x{n} design")
    Kt_b = K.entries.T @ b
    sol = None
    if np.max(np.abs(Kt_b), initial=0.0) <= lam:
        sol = PrimalDualPoint(np.zeros(n), -b)
    elif np.allclose(K.entries.T @ K.entries, np.eye(n), rtol=0.0, atol=1e-12):
        x = _soft_threshold(Kt_b, lam)
        sol = PrimalDualPoint(x, K.entries @ x - b)
    return ProblemInstance(
        name, fns.l1(n, lam), fns.squared_l2(m, 1.0, tilt=b), cp.bilinear(K),
        known_solution=sol, monotone=True, seed=seed,
        params={"K": K.entries.tolist(), "b": b.tolist(), "lam": lam},
    )


def random_matrix_game(m: int, n: int, seed: int, name: str = "matrix_game") -> ProblemInstance:
    """Game with payoffs drawn uniformly from [-1, 1] and rounded to 1/64.

    Rounding to a dyadic grid keeps the exact oracle's rationals short.
    """
    rng = np.random.default_rng(seed)
    payoff = np.round(rng.uniform(-1.0, 1.0, size=(m, n)) * 64.0) / 64.0
    return make_matrix_game(payoff, name=name, seed=seed)


def random_orthogonal(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def _lasso_small(seed: int = 0, n: int = 4, lam: float = 0.5) -> ProblemInstance:
    K = random_orthogonal(n, seed)
    b = np.random.default_rng(seed + 1).standard_normal(n)
    return make_l1_bilinear(K, b, lam, name="l1_bilinear", seed=seed)


CATALOG = ("matrix_game", "quadratic_saddle", "l1_bilinear")


def from_dict(block: dict) -> ProblemInstance:
    """Build a catalog instance from ``{"name": ..., "params": {...}, "seed": ...}``.

    ``matrix_game`` takes either ``payoff`` or random dimensions ``m``, ``n``
    (with ``seed``); ``l1_bilinear`` takes ``K``, ``b``, ``lam`` or, with
    ``random_orthogonal: n``, a seeded orthogonal design.
    """
    name = block["name"]
    params = dict(block.get("params", {}))
    seed = block.get("seed")
    if name == "matrix_game":
        if "payoff" in params:
            return make_matrix_game(params["payoff"], seed=seed)
        return random_matrix_game(int(params["m"]), int(params["n"]), seed=int(seed or 0))
    if name == "quadratic_saddle":
        return make_quadratic_saddle(params["K"], params.get("a", 0.0), params.get("b", 0.0),
                                     params.get("fw", 1.0), params.get("gw", 1.0))
    if name == "l1_bilinear":
        if "random_orthogonal" in params:
            return _lasso_small(int(seed or 0), int(params["random_orthogonal"]), float(params["lam"]))
        if "random_gaussian" in params:
            rng = np.random.default_rng(int(seed or 0))
            mm, nn = params["random_gaussian"]
            K = rng.standard_normal((mm, nn))
            b = rng.standard_normal(mm)
            return make_l1_bilinear(K, b, float(params["lam"]), seed=seed)
        return make_l1_bilinear(params["K"], params["b"], float(params["lam"]), seed=seed)
    raise ValueError(f"unknown catalog instance {name!r}; known: {', '.join(CATALOG)}")
