import numpy as np
import pytest

from nppd import coupling as cp
from nppd import functions as fns
from nppd import preconditioner as pc
from nppd import problems as pb
from nppd.core import PrimalDualPoint
from nppd.exceptions import AssumptionViolation, DimensionMismatch

SQ2 = np.sqrt(2.0)


def P(x, y):
    return PrimalDualPoint(x, y)


def spec_I(Q=None, n=1, m=1, d=1.0):
    return pc.PreconditionerSpec(np.full(n, d), np.full(m, d), np.zeros((m, n)) if Q is None else Q)


def test_apply_M_examples():
    K = [[1.0]]
    assert pc.apply_M(spec_I(Q=[[-2.0]]), cp.bilinear(K), P([1], [2])).stacked().tolist() == [-1, 1]
    zero = cp.bilinear(np.zeros((2, 2)))
    u = P([1.5, -2], [3, 4])
    assert np.array_equal(pc.apply_M(spec_I(n=2, m=2), zero, u).stacked(), u.stacked())
    assert pc.apply_M(spec_I(d=2.0), cp.bilinear(K), P([1], [1])).stacked().tolist() == [1, 3]


def test_apply_C_examples():
    assert pc.apply_C(spec_I(Q=[[-2.0]]), P([1], [2])).stacked().tolist() == [1, 0]
    assert pc.apply_C(spec_I(d=2.0), P([2 / 3], [0])).stacked() == pytest.approx([4 / 3, 0], abs=1e-15)
    assert pc.apply_C(spec_I(d=2.0), P([0], [0])).stacked().tolist() == [0, 0]


def test_apply_C_inverse_round_trip():
    rng = np.random.default_rng(0)
    spec = pc.PreconditionerSpec(rng.uniform(1, 3, 3), rng.uniform(1, 3, 2), rng.standard_normal((2, 3)))
    u = P(rng.standard_normal(3), rng.standard_normal(2))
    assert np.allclose(pc.apply_C_inverse(spec, pc.apply_C(spec, u)).stacked(), u.stacked(), atol=1e-13)


def test_constants_examples():
    phi = cp.bilinear([[1.0]])
    c = pc.constants(spec_I(d=2.0), phi)
    assert c.L == pytest.approx(SQ2) and c.gamma == 0.0
    assert c.mu == pytest.approx(2 - SQ2, abs=1e-12) and c.q == 2.0
    assert c.flag_resolvent_ok and c.flag_separation_ok
    assert not c.flag_D_pd  # mu = 0.586 is below gamma + L
    z = pc.constants(spec_I(), cp.bilinear([[0.0]]))
    assert (z.mu, z.q, z.t_lower, z.t_upper) == (1.0, 1.0, 1.0, 1.0)


def test_constants_formulas_and_bracket_order():
    rng = np.random.default_rng(2)
    for _ in range(200):
        phi = cp.quadratic(rng.standard_normal((2, 3)), rng.uniform(-1, 1), rng.uniform(-1, 1))
        spec = pc.PreconditionerSpec(rng.uniform(0.5, 8, 3), rng.uniform(0.5, 8, 2), rng.standard_normal((2, 3)))
        c = pc.constants(spec, phi, theta=1.0, t=0.5)
        L, g = cp.lipschitz_L(phi), cp.weak_mono_gamma(phi)
        assert c.mu == min(spec.mu1, spec.mu2) - L - spec.norm_Q / 2
        assert c.q == g + max(spec.L1, spec.L2) + spec.norm_Q / 2
        assert c.flag_resolvent_ok == (c.mu > g)
        if c.flag_separation_ok:
            assert c.t_lower <= c.t_upper
        if not c.flag_resolvent_ok:
            assert c.t_upper is None


def test_constants_rejects_bad_theta_and_t():
    with pytest.raises(ValueError):
        pc.constants(spec_I(), cp.bilinear([[1.0]]), theta=2.0)
    with pytest.raises(ValueError):
        pc.constants(spec_I(), cp.bilinear([[1.0]]), t=0.0)


def test_spec_rejects_nonpositive_diagonals_and_bad_shapes():
    with pytest.raises(ValueError):
        pc.PreconditionerSpec([1.0, 0.0], [1.0], np.zeros((1, 2)))
    with pytest.raises(DimensionMismatch):
        pc.PreconditionerSpec([1.0, 1.0], [1.0], np.zeros((2, 1)))


def test_warped_resolvent_examples():
    zero = cp.bilinear(np.zeros((2, 2)))
    u = P([0.3, -1], [2, 5])
    r = pc.warped_resolvent(spec_I(n=2, m=2), fns.zero(2), fns.zero(2), zero, u)
    assert np.array_equal(r.stacked(), u.stacked())
    phi = cp.bilinear([[1.0]])
    r = pc.warped_resolvent(spec_I(d=2.0), fns.squared_l2(1), fns.squared_l2(1), phi, P([1], [1]))
    assert r.stacked() == pytest.approx([1 / 3, 1], abs=1e-15)
    r0 = pc.warped_resolvent(spec_I(d=2.0), fns.squared_l2(1), fns.squared_l2(1), phi, P([0], [0]))
    assert r0.stacked().tolist() == [0, 0]


def test_warped_resolvent_refuses_when_mu_below_gamma():
    phi = cp.bilinear([[1.0]])
    with pytest.raises(AssumptionViolation):
        pc.warped_resolvent(spec_I(d=1.0), fns.zero(1), fns.zero(1), phi, P([1], [1]))
    r = pc.warped_resolvent(spec_I(d=1.0), fns.zero(1), fns.zero(1), phi, P([1], [1]), allow_unverified=True)
    assert r.is_finite()


def _random_setup(rng, n=3, m=2):
    phi = cp.quadratic(rng.standard_normal((m, n)), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5))
    Q = rng.standard_normal((m, n))
    L = cp.lipschitz_L(phi)
    base = L + np.linalg.norm(Q, 2) / 2 + 0.5
    spec = pc.PreconditionerSpec(rng.uniform(base, base + 3, n), rng.uniform(base, base + 3, m), Q)
    return phi, spec


def test_C_identity_and_monotonicity_certificates():
    rng = np.random.default_rng(4)
    for _ in range(10):
        phi, spec = _random_setup(rng)
        c = pc.constants(spec, phi)
        for _ in range(100):
            u = P(rng.standard_normal(3), rng.standard_normal(2))
            v = P(rng.standard_normal(3), rng.standard_normal(2))
            lhs = (pc.apply_C(spec, u) - pc.apply_C(spec, v)).stacked()
            rhs = ((pc.apply_M(spec, phi, u) + cp.apply_B(phi, u)) - (pc.apply_M(spec, phi, v) + cp.apply_B(phi, v))).stacked()
            assert np.allclose(lhs, rhs, rtol=0, atol=1e-12)
            d = (u - v).stacked()
            dM = (pc.apply_M(spec, phi, u) - pc.apply_M(spec, phi, v)).stacked()
            assert dM @ d >= c.mu * (d @ d) - 1e-12
            # what the argument for q actually establishes: an upper bound on the quadratic form
            assert dM @ d <= c.q * (d @ d) + 1e-12


def test_q_bounds_quadratic_form_but_not_lipschitz_for_skew_coupling():
    # M = [[2, -1], [1, 2]] has norm sqrt(5) while q = 2: q is not a Lipschitz constant of M
    spec, phi = spec_I(d=2.0), cp.bilinear([[1.0]])
    c = pc.constants(spec, phi)
    M = pc.M_matrix(spec, phi)
    assert np.allclose(M, [[2, -1], [1, 2]])
    assert np.linalg.norm(M, 2) == pytest.approx(np.sqrt(5))
    assert np.linalg.norm(M, 2) > c.q


def test_prediction_optimality_residual():
    # M u - M r in P r, checked with the per-kind subgradient conditions
    rng = np.random.default_rng(8)
    for inst in [pb.random_matrix_game(3, 4, seed=1), pb._lasso_small(0),
                 pb.make_quadratic_saddle([[1.0, 0.5]], 0.2, 0.1)]:
        phi = inst.phi
        L = cp.lipschitz_L(phi)
        spec = pc.scaled_identity(inst.n, inst.m, 1 / (2 * L + 1), 1 / (2 * L + 1))
        for _ in range(50):
            u = P(rng.standard_normal(inst.n), rng.standard_normal(inst.m))
            r = pc.warped_resolvent(spec, inst.f, inst.g, phi, u)
            w = pc.apply_M(spec, phi, u) - pc.apply_M(spec, phi, r)
            # w - B r must be a subgradient of (f, g) at r
            Br = cp.apply_B(phi, r)
            sx = w.x - Br.x
            sy = w.y - Br.y
            assert fns.subgradient_residual(inst.f, r.x, sx) <= 1e-10
            assert fns.subgradient_residual(inst.g, r.y, sy) <= 1e-10


def test_from_dict_blocks():
    phi = cp.bilinear([[1.0, 2.0]])
    spec = pc.from_dict({"N1": {"type": "scaled_identity", "tau": 0.5}, "N2": {"type": "diagonal", "d": [3.0]},
                         "Q": {"type": "scaled_coupling", "factor": -2.0}}, phi)
    assert spec.N1.tolist() == [2.0, 2.0] and spec.N2.tolist() == [3.0]
    assert spec.Q.entries.tolist() == [[-2.0, -4.0]]
    spec = pc.from_dict({"N1": {"type": "scaled_identity", "tau": 1}, "N2": {"type": "scaled_identity", "tau": 1},
                         "Q": {"type": "matrix", "entries": [[0.5, 0.0]]}}, phi)
    assert spec.norm_Q == pytest.approx(0.5)
    with pytest.raises(DimensionMismatch):
        pc.from_dict({"N1": {"type": "diagonal", "d": [1.0]}, "N2": {"type": "diagonal", "d": [1.0]}}, phi)
