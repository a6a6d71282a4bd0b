import json
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from simo_lqr import AffineSystem, ConfigurationError, LinearModel, controllability, linearize
from simo_lqr.linearize import DEFAULT_EPSILON, correction_term
from simo_lqr.model import drift_jacobian


def random_mechanical(rng, q):
    W1 = rng.normal(size=(q, 2 * q))
    W2 = rng.normal(size=(q, 2 * q))
    b = rng.normal(size=q)
    return AffineSystem.from_mechanical(
        q,
        lambda x: W1 @ np.tanh(x) + np.sin(W2 @ x) * x[:q],
        lambda x: b * (1.0 + 0.1 * np.cos(x[:q])),
    )


def test_zero_point_gets_epsilon_shift(robot):
    model = linearize(robot, np.zeros(4))
    assert model.epsilon_applied
    np.testing.assert_array_equal(model.epsilon, np.full(4, DEFAULT_EPSILON))
    np.testing.assert_array_equal(model.x_e, np.full(4, 1e-4))
    assert model.u_e == 0.0


def test_nonzero_point_not_shifted(robot):
    model = linearize(robot, np.array([0.0, 0.5, 0.0, 0.0]))
    assert not model.epsilon_applied and model.epsilon is None


def test_epsilon_determinism(robot):
    a, b = linearize(robot, np.zeros(4)), linearize(robot, np.zeros(4))
    assert a.A.tobytes() == b.A.tobytes() and a.B.tobytes() == b.B.tobytes()


def test_matches_plain_jacobian_at_equilibrium(robot):
    model = linearize(robot, np.zeros(4))
    J = drift_jacobian(robot, model.x_e)
    assert np.linalg.norm(model.A - J) / np.linalg.norm(J) < 1e-3
    np.testing.assert_allclose(model.B.ravel(), robot.input_field(model.x_e))


def test_robot_input_column(robot_model):
    # B of the reference design to 1e-3 relative
    np.testing.assert_allclose(robot_model.B.ravel()[2:], [-628.4856, 124.4993], rtol=1e-3)
    assert robot_model.B[0, 0] == 0.0 and robot_model.B[1, 0] == 0.0


def test_linear_field_reproduced():
    rng = np.random.default_rng(5)
    for _ in range(20):
        n = 2 * int(rng.integers(1, 4))
        A0 = rng.normal(size=(n, n))
        sys = AffineSystem.linear(A0, rng.normal(size=n))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            model = linearize(sys, rng.normal(size=n))
        np.testing.assert_allclose(model.A, A0, rtol=0, atol=1e-14 * np.abs(A0).max() * n)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3), st.integers(0, 2**32 - 1))
def test_block_structure_is_exact(q, seed):
    rng = np.random.default_rng(seed)
    sys = random_mechanical(rng, q)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        model = linearize(sys, rng.normal(size=2 * q))
    np.testing.assert_array_equal(model.A[:q, :q], np.zeros((q, q)))
    np.testing.assert_array_equal(model.A[:q, q:], np.eye(q))
    np.testing.assert_array_equal(model.B[:q], np.zeros((q, 1)))


def test_correction_term_closes_the_gap():
    rng = np.random.default_rng(7)
    grad, x_e = rng.normal(size=4), rng.normal(size=4)
    F = 0.37
    row = grad + correction_term(F, grad, x_e)
    assert row @ x_e == pytest.approx(F, rel=1e-12)


def test_warns_away_from_equilibrium(robot):
    with pytest.warns(RuntimeWarning, match="not an equilibrium"):
        linearize(robot, np.array([0.2, 0.0, 0.0, 0.0]))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        linearize(robot, np.zeros(4))


def test_zero_epsilon_is_configuration_error(robot):
    with pytest.raises(ConfigurationError):
        linearize(robot, np.zeros(4), epsilon=0.0)


def test_controllability_examples():
    zero = LinearModel(np.zeros((2, 2)), np.array([[1.0], [0.0]]), np.array([[1.0, 0.0]]), np.ones(2))
    rep = controllability(zero)
    assert rep.rank == 1 and not rep.controllable

    dbl = LinearModel(np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0], [1.0]]),
                      np.array([[1.0, 0.0]]), np.ones(2))
    rep = controllability(dbl)
    np.testing.assert_array_equal(rep.Mc, [[0.0, 1.0], [1.0, 0.0]])
    assert rep.determinant == pytest.approx(-1.0)
    assert rep.controllable


def test_controllability_columns(robot_model):
    rep = controllability(robot_model)
    A, B = robot_model.A, robot_model.B.ravel()
    np.testing.assert_allclose(rep.Mc[:, 2], A @ A @ B, rtol=1e-12)
    assert rep.controllable and rep.rank == 4


def test_json_round_trip_is_exact(robot_model):
    again = LinearModel.from_dict(json.loads(json.dumps(robot_model.to_dict())))
    for name in ("A", "B", "E", "x_e", "epsilon"):
        assert getattr(again, name).tobytes() == getattr(robot_model, name).tobytes()
    assert again.epsilon_applied and again.u_e == 0.0


def test_physical_convention_linearizes_too():
    from simo_lqr import RobotParams, robot_system

    model = linearize(robot_system(RobotParams(convention="radians")), np.zeros(4))
    # gravity column scales by 180/pi relative to the default convention
    default = linearize(robot_system(), np.zeros(4))
    assert model.A[2, 0] / default.A[2, 0] == pytest.approx(180 / math.pi, rel=1e-6)
