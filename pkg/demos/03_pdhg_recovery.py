"""The relaxed variant recovers PDHG and the generalized primal-dual method.

With N1 = I/tau, N2 = I/sigma, Q = -(theta_pd + 1) K and the identity
correction, the prediction is exactly one Chambolle-Pock step. With the
triangular corrector W = [[I, 0], [(1 - theta_pd) sigma K, I]] it becomes the
generalized primal-dual method. Both are compared against direct
implementations on a small lasso problem.
"""
import numpy as np

from nppd import problems as pb
from nppd import preconditioner as pc
from nppd.core import PrimalDualPoint
from nppd.oracles import reference_generalized_pd, reference_pdhg
from nppd.solver import SolverConfig, solve

rng = np.random.default_rng(0)
K = rng.standard_normal((6, 4))
inst = pb.make_l1_bilinear(K, rng.standard_normal(6), lam=0.1)
step = 0.9 / np.linalg.norm(K, 2)
u0 = PrimalDualPoint(np.zeros(4), np.zeros(6))

for theta_pd, generalized in [(1.0, False), (0.5, True)]:
    spec = pc.PreconditionerSpec(np.full(4, 1 / step), np.full(6, 1 / step), -(theta_pd + 1) * K)
    config = SolverConfig(algorithm="relaxed", allow_unverified=True, tol=0.0, max_iter=100,
                          correction="generalized_pd" if generalized else "identity",
                          corr_sigma=step, corr_theta=theta_pd)
    _, trace = solve(inst, spec, config, u0=u0)
    ours = [u for u, _ in trace.history]
    ref_fn = reference_generalized_pd if generalized else reference_pdhg
    ref = ref_fn(K, inst.f, inst.g, step, step, theta_pd, u0, 100)
    dev = max(np.max(np.abs((a - b).stacked())) for a, b in zip(ours, ref))
    print(f"theta_pd={theta_pd} ({'generalized' if generalized else 'PDHG'}): max deviation {dev:.2e}, "
          f"final residual {trace.rows[-1].residual:.2e}")
