import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coop_tpik.algebra import RegularizationParams
from coop_tpik.errors import ContractViolation
from coop_tpik.kinematics import Pose, SystemConfiguration, integrate_configuration
from coop_tpik.objectives import (
    ObjectiveConfig,
    Wrench,
    force_torque_task,
    horizontal_attitude_task,
    joint_limits_task,
    preferred_shape_task,
    tilt,
    tool_position_task,
)
from coop_tpik.solver import ActionList, icat_solve

LIMITS = [(-1.0, 1.0), (0.0, 2.0), (-2.0, 0.0)]


def test_joint_limits_centred_is_inert():
    t = joint_limits_task([0.0, 1.0, -1.0], LIMITS, 0.1, 0.5)
    assert np.array_equal(t.activation, np.zeros(3))
    assert t.jacobian.shape == (3, 9)


def test_joint_below_minimum():
    t = joint_limits_task([0.0, -0.2, -1.0], LIMITS, 0.1, 0.5)
    assert t.activation[1] == 1.0
    assert t.reference[1] > 0
    assert t.activation[0] == 0 and t.activation[2] == 0


def test_joint_above_maximum():
    t = joint_limits_task([0.0, 1.0, 0.1], LIMITS, 0.1, 0.5)
    assert t.activation[2] == 1.0
    assert t.reference[2] < 0


def test_joint_limit_midpoint():
    t = joint_limits_task([0.0, 0.05, -1.0], LIMITS, 0.1, 0.5)
    assert t.activation[1] == pytest.approx(0.5)


def test_joint_limits_contract():
    with pytest.raises(ContractViolation):
        joint_limits_task([0.0], [(1.0, 0.0)], 0.1, 0.5)
    with pytest.raises(ContractViolation):
        joint_limits_task([0.0, 0.0], [(-1.0, 1.0)], 0.1, 0.5)


def test_attitude_level_is_inert():
    t = horizontal_attitude_task([0, 0, 0.3], 0.2, 0.05, 0.5, 10)
    assert t.activation[0] == 0.0
    assert np.array_equal(t.jacobian, np.zeros((1, 10)))


def test_attitude_beyond_max():
    t = horizontal_attitude_task([0, 0.3, 0.0], 0.2, 0.05, 0.5, 10)
    assert t.activation[0] == 1.0
    assert t.reference[0] < 0
    assert np.array_equal(t.jacobian[0, :7], np.zeros(7))


def test_attitude_jacobian_finite_difference():
    rng = np.random.default_rng(4)
    h = 1e-6
    for _ in range(30):
        eta2 = np.array([rng.uniform(-0.4, 0.4), rng.uniform(-0.4, 0.4), rng.uniform(-3, 3)])
        c = SystemConfiguration([0.0], [0, 0, 0], eta2)
        row = horizontal_attitude_task(eta2, 0.2, 0.05, 0.5, 7).jacobian[0]
        for k in range(3):
            y = np.zeros(7)
            y[4 + k] = 1.0
            plus = tilt(integrate_configuration(c, y, h).eta2)
            minus = tilt(integrate_configuration(c, -y, h).eta2)
            fd = (plus - minus) / (2 * h)
            assert row[4 + k] == pytest.approx(fd, rel=1e-5, abs=1e-8)


def test_tool_position_examples():
    J = np.eye(6)
    p = Pose.from_xyz_rpy((1, 2, 3))
    assert np.array_equal(tool_position_task(p, p, J, 0.2).reference, np.zeros(6))
    goal = Pose(p.rotation, p.translation + [0.441, 0, 0])
    ref = tool_position_task(p, goal, J, 0.2).reference
    assert np.allclose(ref, [0.2 * 0.441, 0, 0, 0, 0, 0])
    yaw = Pose.from_xyz_rpy((1, 2, 3), (0, 0, np.radians(1.942)))
    ref = tool_position_task(p, yaw, J, 0.2).reference
    assert np.allclose(ref[:5], 0) and ref[5] > 0


def test_preferred_shape():
    t = preferred_shape_task([0.1, 0.2], [0.1, 0.2], 0.3, 0.1, 0.5)
    assert np.array_equal(t.activation, [0, 0])
    t = preferred_shape_task([0.1, 0.7], [0.1, 0.2], 0.3, 0.1, 0.5)
    assert t.activation[0] == 0 and t.activation[1] == 1
    t = preferred_shape_task([0.1, 0.45], [0.1, 0.2], 0.3, 0.1, 0.5)
    assert t.activation[1] == pytest.approx(0.5)
    assert t.reference[1] == pytest.approx(0.5 * -0.25)


def test_force_torque_zero_is_inert():
    t = force_torque_task(Wrench(), np.eye(6), 0.1, 0.1)
    assert np.array_equal(t.activation, [0, 0])
    assert np.array_equal(t.jacobian, np.zeros((2, 6)))


def test_force_reference_and_row():
    t = force_torque_task(Wrench([0, 1, 0], [0, 0, 0]), np.eye(6), 0.1, 0.1)
    assert t.reference[0] == pytest.approx(-0.1)
    assert np.allclose(t.jacobian[0], [0, -1, 0, 0, 0, 0])
    assert t.activation[0] == 1.0 and t.activation[1] == 0.0


def test_force_torque_gain_contract():
    with pytest.raises(ContractViolation):
        force_torque_task(Wrench(), np.eye(6), 1.0, 0.1)
    with pytest.raises(ContractViolation):
        ObjectiveConfig(force_gain=0.0)


def test_wrench_rotation_used():
    R = Pose.from_xyz_rpy(rpy=(0, 0, np.pi / 2)).rotation
    t = force_torque_task(Wrench([1, 0, 0]), np.eye(6), 0.1, 0.1, rotation=R)
    assert np.allclose(t.jacobian[0], [0, -1, 0, 0, 0, 0])


vec3 = st.lists(st.floats(-20, 20), min_size=3, max_size=3)


@settings(max_examples=100, deadline=None)
@given(vec3, vec3)
def test_force_torque_rank_at_most_two(f, m):
    J = np.random.default_rng(0).standard_normal((6, 10))
    t = force_torque_task(Wrench(f, m), J, 0.1, 0.1)
    assert np.linalg.matrix_rank(t.jacobian) <= 2


@settings(max_examples=100, deadline=None)
@given(vec3)
def test_motion_relieves_contact(f):
    # f is the wall's push on the peg; relieving the contact means moving along it
    f = np.array(f)
    if np.linalg.norm(f) < 1.0:
        return
    J = np.random.default_rng(1).standard_normal((6, 10))
    t = force_torque_task(Wrench(f, [0, 0, 0]), J, 0.1, 0.1)
    y, _ = icat_solve(ActionList([t], 10), RegularizationParams(damping_max=0.0))
    assert np.dot(J[:3] @ y, f) > 0
    assert np.dot(J[:3] @ y, f / np.linalg.norm(f)) == pytest.approx(0.1 * np.linalg.norm(f))


def test_builders_deterministic():
    J = np.random.default_rng(2).standard_normal((6, 10))
    w = Wrench([0.3, -1.2, 0.7], [0.1, 0.0, -0.2])
    a = force_torque_task(w, J, 0.1, 0.2)
    b = force_torque_task(w, J, 0.1, 0.2)
    for field in ("reference", "jacobian", "activation"):
        assert np.array_equal(getattr(a, field), getattr(b, field))


def test_wrench_validation():
    with pytest.raises(ContractViolation):
        Wrench([np.nan, 0, 0])
