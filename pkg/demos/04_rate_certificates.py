"""Matrix-level certificates for a linear instance.

With a constant stepsize t and relaxation theta, the analysis uses
D = I - B C^{-1}, H = D/(theta t), N = theta t C and G = M + M^T - N^T H N.
When D and G are positive definite, |u_k - u*|_H^2 contracts by |u_k - r_k|_G^2
per step and |N(u_k - r_k)|_H^2 decays like 1/k.
"""
from nppd import diagnostics as dg
from nppd import preconditioner as pc
from nppd import problems as pb
from nppd.solver import SolverConfig, _constants_for, solve

inst = pb.make_quadratic_saddle([[1.0]])
spec = pc.scaled_identity(1, 1, 0.25, 0.25)
t = pc.constants(spec, inst.phi).t_lower
config = SolverConfig(theta=0.5, stepsize=t, tol=0.0, max_iter=500)
state, trace = solve(inst, spec, config)
consts = _constants_for(inst, spec, config)

mats = dg.build_matrices(spec, inst.phi, config.theta, t)
print("eigenvalue bounds:", dg.metric_eigen_bounds(mats, consts))
dg.annotate_h_seminorm(trace, mats)
decay = dg.check_h_seminorm_decay(trace, mats, consts, inst.known_solution)
print("h decay:", decay.label(), decay.details)
print("contraction:", dg.check_contraction(trace, mats, inst.known_solution).label())

strong = pb.make_quadratic_saddle([[1.0]], 1.0, 1.0)
_, tr = solve(strong, pc.scaled_identity(1, 1, 0.2, 0.2), SolverConfig(theta=0.5, tol=0.0, max_iter=200))
print("strongly monotone rate fit:", dg.fit_rate(tr))
