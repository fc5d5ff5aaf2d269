import numpy as np
import pytest

from nppd import coupling as cp
from nppd import diagnostics as dg
from nppd import functions as fns
from nppd import preconditioner as pc
from nppd import problems as pb
from nppd.core import PrimalDualPoint
from nppd.solver import SolverConfig, _constants_for, solve


def P(x, y):
    return PrimalDualPoint(x, y)


def test_build_matrices_examples():
    spec, phi = pc.scaled_identity(1, 1, 0.5, 0.5), cp.bilinear([[1.0]])
    mats = dg.build_matrices(spec, phi, 1.0, 0.4)
    assert np.allclose(mats.D_mat, [[1, -0.5], [0.5, 1]])
    assert np.allclose(mats.M_mat, [[2, -1], [1, 2]])
    assert np.allclose(mats.M_mat + mats.M_mat.T, 4 * np.eye(2))
    C = mats.C_mat
    assert np.allclose(mats.Gmetric_mat, mats.M_mat + mats.M_mat.T - 0.4 * C.T @ mats.D_mat @ C)
    z = dg.build_matrices(pc.scaled_identity(1, 1, 1.0, 1.0), cp.bilinear([[0.0]]), 0.5, 0.8)
    assert np.allclose(z.D_mat, np.eye(2)) and np.allclose(z.H_mat, np.eye(2) / 0.4)
    assert np.allclose(z.Gmetric_mat, (2 - 0.4) * np.eye(2))


def _random_linear(rng):
    n, m = rng.integers(1, 4, size=2)
    if rng.random() < 0.5:
        phi = cp.bilinear(rng.standard_normal((m, n)))
    else:
        phi = cp.quadratic(rng.standard_normal((m, n)), rng.uniform(0, 0.5), rng.uniform(0, 0.5))
    Q = rng.standard_normal((m, n)) * rng.uniform(0, 1)
    d = rng.uniform(0.5, 4) * (cp.lipschitz_L(phi) + np.linalg.norm(Q, 2) / 2 + cp.weak_mono_gamma(phi)) + 0.1
    return phi, pc.PreconditionerSpec(rng.uniform(d, d + 1, n), rng.uniform(d, d + 1, m), Q)


def test_metric_identities_and_eigen_bounds():
    rng = np.random.default_rng(0)
    checked = 0
    for _ in range(500):
        phi, spec = _random_linear(rng)
        c0 = pc.constants(spec, phi)
        if not c0.flag_resolvent_ok:
            continue
        theta, t = rng.uniform(0.1, 1.9), rng.uniform(0.1, 1.0) * c0.t_upper
        c = pc.constants(spec, phi, theta, t)
        mats = dg.build_matrices(spec, phi, theta, t)
        C = mats.C_mat
        assert np.linalg.norm(C.T @ mats.D_mat @ C - C.T @ mats.M_mat) <= 1e-10
        b = dg.metric_eigen_bounds(mats, c)
        assert b["D_min_eig"] >= b["D_bound"] - 1e-10
        assert b["G_min_eig"] >= b["G_bound"] - 1e-10
        if c.flag_D_pd and c.flag_G_pd:
            assert b["D_min_eig"] > 0 and b["G_min_eig"] > 0
        checked += 1
    assert checked > 300


def test_fejer_at_solution_and_corrupted_history():
    inst = pb.make_quadratic_saddle([[1.0]])
    spec = pc.scaled_identity(1, 1, 0.5, 0.5)
    st, tr = solve(inst, spec, SolverConfig(), u0=P([0.0], [0.0]))
    cert = dg.check_fejer(tr, inst.known_solution, spec)
    assert cert.passed
    st, tr = solve(inst, spec, SolverConfig(tol=1e-12))
    z = inst.known_solution
    assert dg.check_fejer(tr, z, spec).passed
    us = [u for u, _ in tr.history]
    us[6] = us[6] + P([1.0], [1.0])
    cert = dg.check_fejer(tr, z, spec, u_history=us)
    assert not cert.passed and cert.first_violation == 5


def test_separation_fails_on_bilinear_game():
    # the solution-side cut inequality needs a cocoercive coupling; a bilinear game is a counterexample
    inst = pb.random_matrix_game(5, 5, seed=0)
    L = cp.lipschitz_L(inst.phi)
    spec = pc.scaled_identity(5, 5, 1 / (1.5 * 1.25 * L), 1 / (1.5 * 1.25 * L))
    cfg = SolverConfig(tol=1e-6, max_iter=300)
    st, tr = solve(inst, spec, cfg, u0=P([0.2] * 5, [0.2] * 5))
    consts = _constants_for(inst, spec, cfg)
    sep = dg.check_separation(tr, spec, consts, inst.known_solution)
    assert consts.required_ok and not sep.passed and sep.details["worst_psi_at_solution"] > 0
    assert not dg.check_fejer(tr, inst.known_solution, spec).passed


def test_separation_closed_form_counterexample():
    # f = g = 0, phi = <x, y>, N = cI, Q = 0: psi_u(0) = |Bu|^2 (1/c - L/(4c^2)) > 0
    inst = pb.ProblemInstance("free", fns.zero(1), fns.zero(1), cp.bilinear([[1.0]]),
                              known_solution=P([0.0], [0.0]))
    c = 2.0
    spec = pc.scaled_identity(1, 1, 1 / c, 1 / c)
    cfg = SolverConfig(max_iter=3)
    st, tr = solve(inst, spec, cfg)
    u, r = tr.history[0]
    from nppd.solver import make_halfspace
    L = np.sqrt(2)
    psi = make_halfspace(u, r, spec, L).psi(inst.known_solution)
    Bu = cp.apply_B(inst.phi, u).stacked()
    assert psi == pytest.approx(Bu @ Bu * (1 / c - L / (4 * c * c)), rel=1e-12)
    assert psi > 0


def _quad_constant_step(iters=500):
    inst = pb.make_quadratic_saddle([[1.0]])
    spec = pc.scaled_identity(1, 1, 0.25, 0.25)
    c = pc.constants(spec, inst.phi)
    cfg = SolverConfig(theta=0.5, stepsize=c.t_lower, tol=0.0, max_iter=iters)
    return inst, spec, cfg


def test_h_seminorm_decay_and_contraction():
    inst, spec, cfg = _quad_constant_step()
    st, tr = solve(inst, spec, cfg)
    consts = _constants_for(inst, spec, cfg)
    assert consts.flag_D_pd and consts.flag_G_pd
    mats = dg.build_matrices(spec, inst.phi, cfg.theta, cfg.stepsize)
    dg.annotate_h_seminorm(tr, mats)
    cert = dg.check_h_seminorm_decay(tr, mats, consts, inst.known_solution)
    assert cert.passed and cert.details["c_fit"] > 0
    assert cert.details["sup_scaled"] <= cert.details["h_dist0"] / cert.details["c_theory"]
    assert dg.check_contraction(tr, mats, inst.known_solution).passed


def test_h_seminorm_at_solution_and_gating():
    inst, spec, cfg = _quad_constant_step(10)
    st, tr = solve(inst, spec, cfg, u0=P([0.0], [0.0]))
    consts = _constants_for(inst, spec, cfg)
    mats = dg.build_matrices(spec, inst.phi, cfg.theta, cfg.stepsize)
    dg.annotate_h_seminorm(tr, mats)
    assert all(v == 0 for v in tr.column("h_seminorm"))
    assert dg.check_h_seminorm_decay(tr, mats, consts, inst.known_solution).passed
    big = pc.constants(pc.scaled_identity(1, 1, 0.2, 0.2), inst.phi, 1.9, 50.0)
    assert big.flag_D_pd and not big.flag_G_pd
    assert dg.check_h_seminorm_decay(tr, mats, big).reason == "flag_G_pd false"


def test_fit_rate_examples():
    k = np.arange(40)
    assert dg.fit_rate(0.5 ** k)["linear_factor"] == pytest.approx(0.5)
    out = dg.fit_rate(1.0 / (k + 1))
    assert out["linear_factor"] is None and out["sublinear_const"] == pytest.approx(1.0)
    inst = pb.make_quadratic_saddle([[1.0]], 1.0, 1.0)
    st, tr = solve(inst, pc.scaled_identity(1, 1, 0.2, 0.2), SolverConfig(theta=0.5, tol=0.0, max_iter=200))
    assert dg.fit_rate(tr)["linear_factor"] < 1
    with pytest.raises(ValueError):
        dg.fit_rate([1.0] * 5)


def test_export_trace_row_counts_and_round_trip(tmp_path):
    inst = pb.make_quadratic_saddle([[1.0]])
    spec = pc.scaled_identity(1, 1, 0.5, 0.5)
    _, tr0 = solve(inst, spec, SolverConfig(max_iter=0))
    dg.export_trace(tr0, tmp_path / "a.csv")
    assert len(dg.read_trace(tmp_path / "a.csv")) == 1
    _, tr = solve(inst, spec, SolverConfig(tol=0.0, max_iter=100))
    dg.export_trace(tr, tmp_path / "b.csv")
    back = dg.read_trace(tmp_path / "b.csv")
    assert len(back) == 101
    assert [r.values() for r in back.rows] == [r.values() for r in tr.rows]
    assert back.header["constants"]["L"] == pytest.approx(np.sqrt(2))
    text = (tmp_path / "b.csv").read_text()
    assert text.startswith("# ") and "k,residual,t,theta,psi_self,dist_to_solution,h_seminorm" in text


def test_export_trace_reports_path_on_failure(tmp_path):
    inst = pb.make_quadratic_saddle([[1.0]])
    _, tr = solve(inst, pc.scaled_identity(1, 1, 0.5, 0.5), SolverConfig(max_iter=0))
    with pytest.raises(OSError, match="missing"):
        dg.export_trace(tr, tmp_path / "missing" / "x.csv")
