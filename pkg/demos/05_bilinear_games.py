"""Where the separating halfspace breaks: bilinear couplings.

The inequality that puts every solution inside the halfspace uses
<Bz - Bu, z - u> >= |Bz - Bu|^2 / L. A bilinear coupling gives a skew B, for
which the left side is zero. With f = g = 0, N = cI and Q = 0 one gets
psi_u(0) = |Bu|^2 (1/c - L/(4c^2)) > 0, so the cut removes the solution, and
the iterates spiral outwards. On a 5x5 matrix game the same effect shows up
as violated separation and Fejér certificates and a stalled residual, while
the relaxed PDHG configuration converges.
"""
import numpy as np

from nppd import coupling as cp
from nppd import diagnostics as dg
from nppd import functions as fns
from nppd import preconditioner as pc
from nppd import problems as pb
from nppd.core import PrimalDualPoint
from nppd.oracles import saddle_gap
from nppd.solver import SolverConfig, _constants_for, solve

free = pb.ProblemInstance("free", fns.zero(1), fns.zero(1), cp.bilinear([[1.0]]),
                          known_solution=PrimalDualPoint([0.0], [0.0]))
_, tr = solve(free, pc.scaled_identity(1, 1, 0.5, 0.5), SolverConfig(max_iter=20))
print("unconstrained bilinear, distance to solution:", [round(d, 3) for d in tr.column("dist_to_solution")[::5]])

game = pb.random_matrix_game(5, 5, seed=0)
payoff = np.array(game.params["payoff"])
L = cp.lipschitz_L(game.phi)
u0 = PrimalDualPoint(np.full(5, 0.2), np.full(5, 0.2))

spec = pc.scaled_identity(5, 5, 1 / (1.875 * L), 1 / (1.875 * L))
config = SolverConfig(tol=1e-6, max_iter=3000)
state, trace = solve(game, spec, config, u0=u0)
consts = _constants_for(game, spec, config)
print("projection method:", state.status, f"residual {state.residual:.2e}",
      "| separation", dg.check_separation(trace, spec, consts, game.known_solution).label(),
      "| Fejér", dg.check_fejer(trace, game.known_solution, spec).label())

nK = np.linalg.norm(payoff, 2)
tau = 0.9 / nK
pdhg = pc.PreconditionerSpec(np.full(5, 1 / tau), np.full(5, 1 / tau), -2 * payoff)
state, trace = solve(game, pdhg, SolverConfig(algorithm="relaxed", allow_unverified=True, tol=1e-6,
                                              max_iter=20000), u0=u0)
print("relaxed PDHG configuration:", state.status, "after", state.k, "iterations;",
      f"duality gap of the prediction {saddle_gap(payoff, state.r.x, state.r.y):.2e}")
