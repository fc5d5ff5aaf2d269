"""Constants of a preconditioner and one prediction step.

For the bilinear coupling phi(x, y) = x*y with f = g = (1/2)|.|^2 and the
scaled-identity preconditioner N1 = N2 = 2I, we compute the Lipschitz and
monotonicity constants, check which hypotheses hold, and take a single
warped-resolvent step from u = (1, 1).
"""
import numpy as np

from nppd import preconditioner as pc
from nppd import problems as pb
from nppd.core import PrimalDualPoint

inst = pb.make_quadratic_saddle([[1.0]])
spec = pc.scaled_identity(1, 1, tau=0.5, sigma=0.5)

consts = pc.constants(spec, inst.phi)
for key, value in consts.to_dict().items():
    print(f"{key:>20}: {value}")

u = PrimalDualPoint([1.0], [1.0])
r = pc.warped_resolvent(spec, inst.f, inst.g, inst.phi, u)
print("prediction r =", r.x, r.y, " (expected 1/3 and 1)")
print("residual |u - r| =", np.linalg.norm((u - r).stacked()))
