import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from levelrate.errors import DimensionError, NumericalError, ParameterError
from levelrate.landscape import quadratic, rosenbrock
from levelrate.optimizer import (
    DEFAULT_BETAS,
    Method,
    Sgd,
    TunerConfig,
    adaptive_gd_step,
    gd_step,
    run_training,
    tuner_init,
    tuner_step,
)
from levelrate.schedule import ConstantSchedule
from oracles import tuner_scalar_trace


def test_gd_step_examples():
    x = np.array([1.5, -2.0])
    assert np.array_equal(gd_step(x, np.zeros(2), 0.3), x)
    assert np.array_equal(gd_step([1.0, 1.0], [1.0, 1.0], 1.0), [0.0, 0.0])
    with pytest.raises(DimensionError):
        gd_step([1.0, 1.0], [1.0], 0.1)
    with pytest.raises(ParameterError):
        gd_step([1.0], [1.0], 0.0)


def test_gd_closed_form_contraction():
    x = np.array([10.0])
    for _ in range(100):
        x = gd_step(x, x, 0.1)
    assert abs(abs(x[0]) - 10.0 * 0.9**100) < 1e-9


@given(
    arrays(np.float64, 3, elements=st.floats(-10, 10)),
    arrays(np.float64, 3, elements=st.floats(-10, 10)),
    arrays(np.float64, 3, elements=st.floats(-10, 10)),
    st.floats(1e-3, 2.0),
)
def test_gd_step_split_gradient(x, g1, g2, alpha):
    one = gd_step(x, g1 + g2, alpha)
    two = gd_step(gd_step(x, g1, alpha), g2, alpha)
    np.testing.assert_allclose(one, two, atol=1e-12)


def test_adaptive_step_examples():
    q = quadratic()
    assert np.array_equal(adaptive_gd_step([0.0, 0.0], q), [0.0, 0.0])
    np.testing.assert_allclose(adaptive_gd_step([3.0, 4.0], q), [2.5, 10 / 3], rtol=1e-15)
    x = np.array([-4.0, 5.5])
    while np.any(x):
        nxt = adaptive_gd_step(x, q)
        assert np.linalg.norm(nxt) < np.linalg.norm(x)
        assert q(nxt) < q(x)
        x = nxt


# --- tuner ---


def test_tuner_init():
    x0 = np.array([0.1, -3.0, 7.0])
    st0 = tuner_init(x0)
    for vec in (st0.m, st0.v, st0.r, st0.s):
        assert np.array_equal(vec, np.zeros(6))
    assert np.array_equal(st0.x_ref, x0) and st0.x_ref is not x0
    assert np.array_equal(st0.delta, np.zeros(3))
    # first iterate equals x0: the scale sum times the zero displacement vanishes
    assert st0.scale * st0.delta @ st0.delta == 0.0


def test_tuner_first_step_moments_nonnegative():
    st0 = tuner_init([2.0, -1.0])
    g = np.array([0.5, 0.25])
    st1, _ = tuner_step(st0, g, -0.1 * g)
    assert np.all(st1.m >= 0)
    h = 0.01 * np.linalg.norm(g) / np.linalg.norm([2.0, -1.0])
    np.testing.assert_allclose(st1.m, np.full(6, h), rtol=1e-15)


def test_tuner_zero_correlation_stays_at_reference():
    cfg = TunerConfig(lam=0.0)
    state = tuner_init([1.0, 2.0], cfg)
    for _ in range(20):
        # gradients orthogonal to the displacement keep h = 0
        state, x = tuner_step(state, np.zeros(2), np.array([0.3, -0.1]), cfg)
        assert np.array_equal(x, [1.0, 2.0])
        assert np.array_equal(state.s, np.zeros(6))


def test_tuner_one_step_hand_trace():
    state = tuner_init([1.0])
    g = np.array([1.0])
    state, x1 = tuner_step(state, g, -0.1 * g)
    xs, _ = tuner_scalar_trace(1.0, lambda x: x, lambda g, t: -0.1 * g, 1, DEFAULT_BETAS)
    assert abs(x1[0] - xs[0]) <= 1e-12
    # by hand: h = 0.01, s_i = 1e-8 * 0.01 / 6 / (0.01 + 1e-8), delta = -0.1
    expected = 1.0 - 0.1 * (1e-8 * 0.01 / (0.01 + 1e-8))
    assert abs(x1[0] - expected) <= 1e-15


def test_tuner_five_step_hand_trace():
    base = Sgd(ConstantSchedule(0.1))
    state = tuner_init([1.0])
    xs = []
    x = np.array([1.0])
    for t in range(5):
        g = x.copy()
        state, x = tuner_step(state, g, base.update(g, t))
        xs.append(x[0])
    ref, final = tuner_scalar_trace(1.0, lambda x: x, lambda g, t: -0.1 * g, 5, DEFAULT_BETAS)
    np.testing.assert_allclose(xs, ref, rtol=0, atol=1e-12)
    for key in ("m", "v", "r", "s"):
        np.testing.assert_allclose(getattr(state, key), final[key], rtol=1e-12, atol=1e-300)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_tuner_state_stays_nonnegative(seed):
    rng = np.random.default_rng(seed)
    state = tuner_init(rng.standard_normal(3))
    for _ in range(200):
        g = rng.standard_normal(3) * rng.uniform(0.01, 10)
        state, _ = tuner_step(state, g, -0.05 * g)
        for vec in (state.m, state.v, state.r, state.s):
            assert np.all(vec >= 0)
        assert np.isfinite(state.scale)


def test_tuner_dimension_and_numerical_errors():
    state = tuner_init([1.0, 1.0])
    with pytest.raises(DimensionError):
        tuner_step(state, np.ones(3), np.ones(2))
    with pytest.raises(NumericalError, match="non-finite"):
        tuner_step(state, np.array([np.inf, 0.0]), np.zeros(2))


def test_tuner_config_validation():
    with pytest.raises(ParameterError):
        TunerConfig(betas=(0.9, 1.1))
    with pytest.raises(ParameterError):
        TunerConfig(s_init=0.0)
    with pytest.raises(ParameterError):
        TunerConfig(eps=-1.0)


# --- run_training ---


def test_run_training_length_and_validation():
    with pytest.raises(ParameterError):
        run_training(quadratic(), Method(), 0, [1.0, 1.0])
    traj = run_training(quadratic(), Method(), 1, [1.0, 1.0])
    assert len(traj) == 2
    assert [r.t for r in traj.records] == [0, 1]


def test_exp_decay_descent_on_quadratic():
    traj = run_training(quadratic(), Method("exp_decay", 0.5, 0.01), 200, [4.0, -3.0])
    assert traj.status == "completed"
    assert len(traj) == 201
    assert traj[-1].loss < traj[0].loss


@pytest.mark.parametrize("kind", ["fixed", "exp_decay", "adaptive", "tuner"])
def test_run_training_deterministic(kind):
    a = run_training(rosenbrock(), Method(kind, 1e-3, 0.01), 100, [-1.2, 1.0])
    b = run_training(rosenbrock(), Method(kind, 1e-3, 0.01), 100, [-1.2, 1.0])
    assert a.to_csv() == b.to_csv()


def test_recorded_rates():
    traj = run_training(quadratic(), Method("exp_decay", 0.2, 0.1), 5, [1.0, 1.0])
    for r in traj.records:
        assert r.rate == pytest.approx(0.2 * np.exp(-0.1 * r.t), rel=1e-15)
        assert r.lyapunov_rate == pytest.approx(-r.rate * r.grad_norm**2, rel=1e-12)
    traj = run_training(quadratic(), Method("adaptive"), 5, [3.0, 4.0])
    assert traj[0].rate == pytest.approx(1 / 6)


def test_divergence_keeps_partial_trajectory():
    traj = run_training(rosenbrock(), Method("fixed", 10.0), 50, [-1.2, 1.0])
    assert traj.status == "diverged"
    assert 1 < len(traj) < 51
    assert not traj[-1].loss <= 1e12
    assert all(r.loss <= 1e12 for r in traj.records[:-1])


def test_tuner_smoke_on_quadratic():
    traj = run_training(quadratic(), Method("tuner"), 2000, [5.0, 5.0])
    assert traj.status == "completed"
    assert traj[-1].loss < 1e-2 * traj[0].loss
