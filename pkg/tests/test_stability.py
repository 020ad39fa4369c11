import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from levelrate.errors import DataError, ParameterError
from levelrate.landscape import quadratic
from levelrate.optimizer import Method, adaptive_gd_step, gd_step, run_training
from levelrate.schedule import grad_adaptive_rate
from levelrate.stability import (
    boundedness_check,
    check_monotone,
    lyapunov_rate,
    predicted_descent,
    stability_report,
)
from levelrate.trajectory import StepRecord, Trajectory


def synthetic(losses, xs=None):
    traj = Trajectory()
    for t, loss in enumerate(losses):
        x = None if xs is None else np.asarray(xs[t], dtype=float)
        traj.append(StepRecord(t, float(loss), 0.0, 0.1, 0.0, x))
    return traj


def test_lyapunov_rate_examples():
    assert lyapunov_rate(0.5, [0.0, 0.0]) == 0.0
    assert lyapunov_rate(0.1, [2.0, 0.0]) == pytest.approx(-0.4, rel=1e-15)
    with pytest.raises(ParameterError):
        lyapunov_rate(0.0, [1.0])


@given(st.floats(1e-12, 1e6), arrays(np.float64, st.integers(1, 5), elements=st.floats(-1e5, 1e5)))
def test_lyapunov_rate_sign(alpha, g):
    rate = lyapunov_rate(alpha, g)
    assert rate <= 0.0
    assert (rate == 0.0) == (not np.any(g)) or alpha * float(g @ g) == 0.0


def test_predicted_descent_examples():
    assert predicted_descent(5.0, [1.0, 0.0]) == 4.5
    assert predicted_descent(5.0, [0.0, 0.0]) == 5.0


@given(st.floats(-1e3, 1e3), arrays(np.float64, 3, elements=st.floats(-1e3, 1e3)))
def test_predicted_descent_never_exceeds_loss(loss, g):
    assert predicted_descent(loss, g) <= loss


def test_taylor_prediction_with_second_order_term():
    q = quadratic()
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.uniform(-6, 6, 2)
        loss, g = q.value_and_grad(x)
        eta = grad_adaptive_rate(g)
        exact = q(adaptive_gd_step(x, q))
        bound = predicted_descent(loss, g) + 0.5 * eta**2 * float(g @ g)
        assert exact <= bound + 1e-12 * loss


def test_gd_descent_matches_exact_quadratic_algebra():
    q = quadratic()
    rng = np.random.default_rng(1)
    for alpha in (0.05, 0.5, 1.0):
        x = rng.uniform(-6, 6, 2)
        for _ in range(20):
            loss, g = q.value_and_grad(x)
            nxt = gd_step(x, g, alpha)
            change = q(nxt) - loss
            gg = float(g @ g)
            assert change <= 0.0
            assert change == pytest.approx(-alpha * (1 - alpha / 2) * gg, rel=1e-9, abs=1e-300)
            # within [1, 1/(1 - alpha/2)] of the continuous-time rate
            ratio = -alpha * gg / change if change else 1.0
            assert 1.0 - 1e-9 <= ratio <= 1.0 / (1 - alpha / 2) + 1e-9
            x = nxt


def test_check_monotone():
    flat = check_monotone(synthetic([3.0] * 5), tol=0.0)
    assert flat.monotone and not flat.violations and flat.steps_checked == 4
    rising = check_monotone(synthetic([1.0, 2.0, 3.5, 4.0]), tol=0.0)
    assert not rising.monotone
    assert [v.t for v in rising.violations] == [1, 2, 3]
    assert rising.max_violation == 1.5
    with pytest.raises(DataError):
        check_monotone(synthetic([1.0]))


def test_check_monotone_flags_nan():
    report = check_monotone(synthetic([1.0, float("nan")]), tol=0.0)
    assert not report.monotone


def test_adaptive_run_is_monotone():
    traj = run_training(quadratic(), Method("adaptive"), 100, [4.0, -5.0])
    assert check_monotone(traj, tol=0.0).monotone


def test_boundedness():
    still = synthetic([1.0] * 4, [[0.5, 0.0]] * 4)
    assert boundedness_check(still, [0.0, 0.0], 1.0, 0.6)
    assert not boundedness_check(still, [0.0, 0.0], 1.0, 0.4)
    far = synthetic([1.0] * 2, [[5.0, 0.0], [50.0, 0.0]])
    assert boundedness_check(far, [0.0, 0.0], 1.0, 0.1)
    traj = run_training(quadratic(), Method("adaptive"), 100, [0.6, -0.7])
    assert boundedness_check(traj, [0.0, 0.0], 1.0, 1.01)
    with pytest.raises(DataError):
        boundedness_check(synthetic([1.0, 0.5]), [0.0], 1.0, 1.0)
    with pytest.raises(ParameterError):
        boundedness_check(still, [0.0, 0.0], 0.0, 1.0)


def test_stability_report_invariants():
    traj = run_training(quadratic(), Method("adaptive"), 30, [1.0, 2.0])
    report = stability_report(traj, 1e-12, np.zeros(2), 5.0, 5.0)
    assert report.monotone and report.violations == [] and report.max_violation == 0.0
    assert report.bounded is True and report.bound_pair == (5.0, 5.0)
    assert report.to_dict()["steps_checked"] == 30
