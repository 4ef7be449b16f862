import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coop_tpik.errors import ContractViolation, SingularityError
from coop_tpik.kinematics import (
    ChainModel,
    Pose,
    SystemConfiguration,
    SystemVelocity,
    default_chain,
    exp_rotation,
    forward_kinematics,
    integrate_configuration,
    pose_error,
    rpy_to_matrix,
    tool_jacobian,
)

from oracles import naive_fk, rotvec_of

EMPTY = ChainModel(np.zeros((0, 4)))


def random_config(rng, l=4, tilt=0.4):
    return SystemConfiguration(
        rng.uniform(-1.5, 1.5, l),
        rng.uniform(-2, 2, 3),
        [rng.uniform(-tilt, tilt), rng.uniform(-tilt, tilt), rng.uniform(-np.pi, np.pi)],
    )


def fd_jacobian(chain, c, h=1e-6):
    """Central differences: joints directly, vehicle columns through a body-twist step."""
    l = c.n_joints
    base = forward_kinematics(chain, c)
    J = np.zeros((6, l + 6))
    for i in range(l + 6):
        cols = []
        for sign in (1.0, -1.0):
            if i < l:
                dq = np.zeros(l)
                dq[i] = sign * h
                ci = SystemConfiguration(c.q + dq, c.eta1, c.eta2)
            else:
                y = np.zeros(l + 6)
                y[i] = sign
                ci = integrate_configuration(c, y, h)
            cols.append(forward_kinematics(chain, ci))
        plus, minus = cols
        J[:3, i] = (plus.translation - minus.translation) / (2 * h)
        J[3:, i] = rotvec_of(plus.rotation @ minus.rotation.T) / (2 * h)
    return J


def test_single_zero_joint_at_origin():
    chain = ChainModel([[0, 0, 0, 0]])
    pose = forward_kinematics(chain, SystemConfiguration([0.0]))
    assert np.allclose(pose.translation, 0)
    assert np.allclose(pose.rotation, np.eye(3))


def test_zero_length_chain_base_offset():
    pose = forward_kinematics(EMPTY, SystemConfiguration([], [1, 2, 3]))
    assert np.allclose(pose.translation, [1, 2, 3])


def test_default_chain_matches_naive_product_frozen():
    # values from an mpmath homogeneous-matrix product at 30 digits
    chain = default_chain()
    pose = forward_kinematics(chain, SystemConfiguration([0.3, -0.5, 0.2, 0.1]))
    expected = np.array(
        [
            [0.93629336358419924, 0.18979606097868742, -0.29552020666133958, 1.5036423058566739],
            [0.28962947762551558, 0.058710801693826525, 0.95533648912560602, 0.27952932188229557],
            [0.19866933079506122, -0.98006657784124163, 0.0, 0.57221758973867502],
        ]
    )
    assert np.allclose(pose.as_matrix()[:3], expected, atol=1e-9)


def test_fk_matches_naive_product_random():
    rng = np.random.default_rng(0)
    tool = Pose.from_xyz_rpy((0.1, 0.2, -0.3), (0.2, -0.1, 0.4))
    chain = default_chain(tool)
    for _ in range(50):
        c = random_config(rng)
        ref = naive_fk(chain.dh_rows, (0.6, 0, 0.3), (0, 0, 0), c.q, c.eta1, c.eta2, tool.as_matrix())
        assert np.allclose(forward_kinematics(chain, c).as_matrix(), ref, atol=1e-9)


def test_fk_dimension_mismatch():
    with pytest.raises(ContractViolation):
        forward_kinematics(default_chain(), SystemConfiguration([0.0, 0.0]))


def test_zero_length_chain_jacobian_identity():
    J = tool_jacobian(EMPTY, SystemConfiguration([]))
    assert J.shape == (6, 6)
    assert np.allclose(J, np.eye(6))


def test_vehicle_surge_moves_tool():
    chain = ChainModel([[0, 0, 0, 0]], Pose(), Pose(np.eye(3), [1, 0, 0]))
    J = tool_jacobian(chain, SystemConfiguration([0.0]))
    y = SystemVelocity([0.0], [1, 0, 0], [0, 0, 0]).as_array()
    assert np.allclose(J @ y, [1, 0, 0, 0, 0, 0])


def test_jacobian_finite_difference():
    rng = np.random.default_rng(1)
    chain = default_chain(Pose.from_xyz_rpy((0.3, 0.0, 0.1), (0.0, 0.2, 0.0)))
    for _ in range(20):
        c = random_config(rng)
        J = tool_jacobian(chain, c)
        Jfd = fd_jacobian(chain, c)
        err = np.linalg.norm(J - Jfd, axis=0) / np.maximum(np.linalg.norm(Jfd, axis=0), 1e-12)
        assert err.max() < 1e-5


def test_pose_error_zero_and_translation():
    p = Pose.from_xyz_rpy((1, 2, 3), (0.1, 0.2, 0.3))
    assert np.array_equal(pose_error(p, p), np.zeros(6))
    goal = Pose(p.rotation, p.translation + [0.441, -0.008, -0.018])
    e = pose_error(p, goal)
    assert np.allclose(e[:3], [0.441, -0.008, -0.018], atol=1e-15)
    assert np.allclose(e[3:], 0, atol=1e-15)


def test_pose_error_yaw_frozen():
    goal = Pose.from_xyz_rpy((0, 0, 0), (0, 0, np.radians(1.942)))
    e = pose_error(Pose(), goal)
    assert np.allclose(e[:3], 0)
    assert np.allclose(e[3:], [0, 0, 0.033894294073729880], atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-5, 5), min_size=6, max_size=6),
    st.lists(st.floats(-5, 5), min_size=6, max_size=6),
)
def test_pose_error_linear_antisymmetric(u, v):
    a = Pose.from_xyz_rpy(u[:3], np.array(u[3:]) * 0.3)
    b = Pose.from_xyz_rpy(v[:3], np.array(v[3:]) * 0.3)
    assert np.array_equal(pose_error(a, b)[:3], -pose_error(b, a)[:3])
    assert np.array_equal(pose_error(a, a), np.zeros(6))


def test_integrate_zero_velocity_is_identity():
    c = SystemConfiguration([0.1, 0.2], [1, 2, 3], [0.1, -0.2, 0.3])
    out = integrate_configuration(c, np.zeros(8), 0.1)
    assert np.array_equal(out.as_array(), c.as_array())


def test_integrate_surge():
    c = SystemConfiguration([0.0])
    out = integrate_configuration(c, SystemVelocity([0.0], [1, 0, 0]), 0.1)
    assert np.allclose(out.eta1, [0.1, 0, 0])
    assert np.allclose(out.eta2, 0)


def test_integrate_small_steps_match_screw_oracle():
    c = SystemConfiguration([], [0.5, -0.2, 0.1], [0.05, -0.1, 0.4])
    v1 = np.array([0.3, -0.1, 0.2])
    v2 = np.array([0.2, 0.1, -0.3])
    T = 2.0
    # oracle: matrix exponential of the constant twist in se(3)
    from scipy.linalg import expm

    xi = np.zeros((4, 4))
    xi[:3, :3] = np.array([[0, -v2[2], v2[1]], [v2[2], 0, -v2[0]], [-v2[1], v2[0], 0]])
    xi[:3, 3] = v1
    ref = c.vehicle_pose().as_matrix() @ expm(xi * T)
    out = c
    y = np.concatenate([v1, v2])
    for _ in range(100):
        out = integrate_configuration(out, y, T / 100)
    assert np.allclose(out.eta1, ref[:3, 3], atol=1e-3)
    assert np.allclose(rotvec_of(out.vehicle_pose().rotation @ ref[:3, :3].T), 0, atol=1e-3)


def test_integrate_preserves_rotation_validity():
    rng = np.random.default_rng(2)
    c = SystemConfiguration([0.0, 0.0], [0, 0, 0], [0.1, 0.1, 0.1])
    for _ in range(500):
        y = np.concatenate([rng.standard_normal(2), rng.standard_normal(3), 0.3 * rng.standard_normal(3)])
        c = integrate_configuration(c, y, 0.05, pitch_margin=0.05) if abs(c.eta2[1]) < 1.2 else c
        assert c.vehicle_pose().is_valid(1e-9)


def test_pitch_guard():
    c = SystemConfiguration([], [0, 0, 0], [0, np.pi / 2 - 0.15, 0])
    with pytest.raises(SingularityError):
        integrate_configuration(c, [0, 0, 0, 0, 1.0, 0], 0.1)


def test_integrate_rejects_bad_dt_and_size():
    c = SystemConfiguration([0.0])
    with pytest.raises(ContractViolation):
        integrate_configuration(c, np.zeros(7), 0.0)
    with pytest.raises(ContractViolation):
        integrate_configuration(c, np.zeros(6), 0.1)


def test_pose_helpers():
    a = Pose.from_xyz_rpy((1, 0, 0), (0.1, 0.2, 0.3))
    assert np.allclose((a @ a.inverse()).as_matrix(), np.eye(4))
    assert np.allclose(a.rpy, [0.1, 0.2, 0.3])
    assert np.allclose(rpy_to_matrix([0, 0, 0.3]), exp_rotation([0, 0, 0.3]))
