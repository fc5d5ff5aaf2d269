import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nppd import functions as fns


def test_evaluate_examples():
    assert fns.evaluate(fns.l1(2, 1.0), [1, -2]) == 3.0
    assert fns.evaluate(fns.indicator_box(2, 0, 1), [0.5, 2]) == np.inf
    assert fns.evaluate(fns.squared_l2(2, 2.0), [1, 1]) == 2.0
    assert fns.evaluate(fns.indicator_simplex(2), [0.5, 0.5 + 1e-13]) == 0.0


def test_resolvent_examples():
    assert fns.resolvent(fns.zero(1), [0.5], [3.0]).tolist() == [6.0]
    assert fns.resolvent(fns.l1(2, 1.0), [1, 1], [2, -0.5]).tolist() == [1.0, 0.0]
    assert fns.resolvent(fns.indicator_box(1, 0, 1), [1], [2.0]).tolist() == [1.0]
    out = fns.resolvent(fns.indicator_simplex(2), [1, 1], [0.5, 0.5])
    assert np.allclose(out, fns.project_simplex([0.5, 0.5])) and np.allclose(out, [0.5, 0.5])


def test_resolvent_rejects_nonpositive_diagonal():
    with pytest.raises(ValueError):
        fns.resolvent(fns.zero(2), [1.0, 0.0], [1.0, 1.0])


def _random_fn(kind, n, rng, tilt):
    c = rng.standard_normal(n) if tilt else None
    if kind == "zero":
        return fns.zero(n, tilt=c)
    if kind == "squared_l2":
        return fns.squared_l2(n, rng.uniform(0.1, 3), tilt=c)
    if kind == "l1":
        return fns.l1(n, rng.uniform(0.1, 3), tilt=c)
    if kind == "indicator_box":
        lo = rng.uniform(-2, 0, n)
        return fns.indicator_box(n, lo, lo + rng.uniform(0, 2, n), tilt=c)
    return fns.indicator_simplex(n, tilt=c)


@pytest.mark.parametrize("kind", fns.KINDS)
@pytest.mark.parametrize("tilt", [False, True])
def test_resolvent_optimality_residual(kind, tilt):
    rng = np.random.default_rng(hash((kind, tilt)) % 2**32)
    for _ in range(200):
        n = int(rng.integers(1, 7))
        fn = _random_fn(kind, n, rng, tilt)
        d = rng.uniform(0.2, 5.0, n)
        v = 3 * rng.standard_normal(n)
        x = fns.resolvent(fn, d, v)
        assert fns.subgradient_residual(fn, x, v - d * x) <= 1e-10


@pytest.mark.parametrize("kind", fns.KINDS)
def test_resolvent_nonexpansive_in_weighted_norm(kind):
    rng = np.random.default_rng(3)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        fn = _random_fn(kind, n, rng, False)
        d = rng.uniform(0.2, 5.0, n)
        v1, v2 = 3 * rng.standard_normal(n), 3 * rng.standard_normal(n)
        diff = fns.resolvent(fn, d, v1) - fns.resolvent(fn, d, v2)
        ref = (v1 - v2) / d
        assert np.sqrt(diff @ (d * diff)) <= np.sqrt(ref @ (d * ref)) + 1e-12


@pytest.mark.parametrize("kind", fns.KINDS)
def test_scaled_identity_matches_prox(kind):
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(1, 6))
        fn = _random_fn(kind, n, rng, True)
        tau = rng.uniform(0.1, 3.0)
        v = 3 * rng.standard_normal(n)
        assert np.allclose(fns.resolvent(fn, np.full(n, 1 / tau), v), fns.prox(fn, tau, tau * v), rtol=0, atol=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-50, 50), min_size=1, max_size=8))
def test_simplex_projection_is_feasible_and_optimal(z):
    z = np.array(z)
    p = fns.project_simplex(z)
    assert np.all(p >= 0) and abs(p.sum() - 1) <= 1e-12
    # projection characterisation: z - p lies in the normal cone at p
    assert fns.subgradient_residual(fns.indicator_simplex(z.size), p, z - p) <= 1e-9


def test_subgradient_residual_outside_domain():
    assert fns.subgradient_residual(fns.indicator_box(1, 0, 1), [2.0], [0.0]) == np.inf


def test_invalid_parameters():
    with pytest.raises(ValueError):
        fns.l1(2, -1.0)
    with pytest.raises(ValueError):
        fns.indicator_box(2, [0, 1], [1, 0])


@pytest.mark.parametrize("fn", [fns.zero(2), fns.squared_l2(2, 2.0, tilt=[1, -1]), fns.l1(2, 0.5),
                                fns.indicator_box(2, [0, -1], [1, 1]), fns.indicator_simplex(3)])
def test_dict_round_trip(fn):
    back = fns.from_dict(fns.to_dict(fn), fn.dimension)
    v = np.linspace(-1, 1, fn.dimension)
    assert np.array_equal(fns.resolvent(back, np.ones(fn.dimension), v), fns.resolvent(fn, np.ones(fn.dimension), v))
