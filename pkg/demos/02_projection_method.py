"""The projection method on a convex-concave and a weakly convex-concave problem.

Each iteration predicts r_k, cuts with the halfspace {z : <z - r_k, a_k> <= (L/4)|u_k - r_k|^2}
and projects onto it. The weakly monotone instance has a = -0.2, b = -0.1 in
phi(x, y) = xy + (a/2)x^2 - (b/2)y^2, so the saddle function is not convex-concave.
"""
from nppd import diagnostics as dg
from nppd import preconditioner as pc
from nppd import problems as pb
from nppd.solver import SolverConfig, solve

for a, b, tau in [(0.0, 0.0, 0.5), (-0.2, -0.1, 1 / 3)]:
    inst = pb.make_quadratic_saddle([[1.0]], a, b)
    spec = pc.scaled_identity(1, 1, tau, tau)
    state, trace = solve(inst, spec, SolverConfig(tol=1e-10, max_iter=5000))
    fit = dg.fit_rate(trace)
    print(f"a={a:+.1f} b={b:+.1f}: {state.status} after {state.k} iterations, "
          f"residual {state.residual:.2e}, final point {state.u.stacked()}, linear factor {fit['linear_factor']}")
