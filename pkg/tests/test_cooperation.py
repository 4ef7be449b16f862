import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import null_space

from coop_tpik.cooperation import (
    CooperationPacket,
    CoordinatorState,
    MessageChannel,
    ProjectorWarning,
    constraint_matrix,
    cooperative_velocity,
    coordination_round,
    feasible_velocity,
    noncoop_tool_velocity,
    tool_projector,
)
from coop_tpik.errors import ContractViolation
from coop_tpik.kinematics import Pose, SystemVelocity, pose_error

I6 = np.eye(6)


def test_noncoop_examples():
    J = np.hstack([np.zeros((6, 4)), I6])
    assert np.array_equal(noncoop_tool_velocity(J, np.zeros(10)), np.zeros(6))
    y = SystemVelocity(np.zeros(4), [0.1, 0, 0])
    assert np.allclose(noncoop_tool_velocity(J, y), [0.1, 0, 0, 0, 0, 0])
    rng = np.random.default_rng(0)
    J, y = rng.standard_normal((6, 10)), rng.standard_normal(10)
    assert np.array_equal(noncoop_tool_velocity(J, y), J @ y)


def test_cooperative_equal_inputs():
    x = np.arange(6.0)
    assert np.allclose(cooperative_velocity(x, x, np.ones(6), 0.3), x)


def test_struggling_agent_gets_more_weight():
    ideal = np.array([1.0, 0, 0, 0, 0, 0])
    xb = np.array([0.0, 0.5, 0, 0, 0, 0])
    out = cooperative_velocity(ideal, xb, ideal, 0.1)
    mean = 0.5 * (ideal + xb)
    assert np.linalg.norm(out - xb) < np.linalg.norm(mean - xb)


def test_cooperative_hand_example():
    xa = np.array([1.0, 0, 0, 0, 0, 0])
    out = cooperative_velocity(xa, np.zeros(6), xa, 0.1)
    assert np.allclose(out, [0.0833333333333333333, 0, 0, 0, 0, 0], atol=1e-15)


def test_mu0_must_be_positive():
    with pytest.raises(ContractViolation):
        cooperative_velocity(np.zeros(6), np.zeros(6), np.zeros(6), 0.0)
    with pytest.raises(ContractViolation):
        CoordinatorState(0.0, Pose(), 0.1)


def test_constraint_examples():
    assert np.array_equal(constraint_matrix(I6, I6), np.zeros((6, 6)))
    Pb = np.diag([1, 1, 1, 1, 1, 0.0])
    assert np.array_equal(constraint_matrix(I6, Pb), np.diag([0, 0, 0, 0, 0, 1.0]))


def test_constraint_warns_on_non_projector():
    with pytest.warns(ProjectorWarning):
        constraint_matrix(2 * I6, I6)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        constraint_matrix(I6, I6)


def test_constraint_vanishes_on_range_intersection():
    rng = np.random.default_rng(1)
    for _ in range(50):
        Ja = rng.standard_normal((6, 4))
        Jb = rng.standard_normal((6, 4))
        C = constraint_matrix(tool_projector(Ja), tool_projector(Jb))
        # intersection of ranges: Ja u = Jb v  <=>  [Ja, -Jb] (u, v) = 0
        basis = null_space(np.hstack([Ja, -Jb]))
        assert basis.shape[1] == 2
        for k in range(basis.shape[1]):
            x = Ja @ basis[:4, k]
            assert np.linalg.norm(C @ x) <= 1e-9 * max(1.0, np.linalg.norm(x))


def test_feasible_examples():
    x = np.ones(6)
    assert np.array_equal(feasible_velocity(x, np.zeros((6, 6))), x)
    out = feasible_velocity(x, np.diag([0, 0, 0, 0, 0, 1.0]))
    assert np.allclose(out, [1, 1, 1, 1, 1, 0])


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(-3, 3)), arrays(np.float64, 6, elements=st.floats(-3, 3)))
def test_feasible_residual_and_idempotence(C, x):
    out = feasible_velocity(x, C)
    assert np.linalg.norm(C @ out) <= 1e-9 * max(1.0, np.abs(C).max() * np.linalg.norm(x))
    assert np.allclose(feasible_velocity(out, C), out, atol=1e-9)


def test_round_tracking_ideal():
    goal = Pose.from_xyz_rpy((1, 0.2, 0), (0, 0, 0.1))
    tool = Pose()
    ideal = 0.3 * pose_error(tool, goal)
    pa = CooperationPacket(ideal, I6)
    pb = CooperationPacket(ideal, I6)
    out = coordination_round(pa, pb, CoordinatorState(0.1, goal, 0.3), tool)
    assert np.allclose(out, ideal, atol=1e-15)


def test_round_at_goal_is_non_expansive():
    rng = np.random.default_rng(2)
    Pa = tool_projector(rng.standard_normal((6, 5)))
    Pb = tool_projector(rng.standard_normal((6, 5)))
    xa, xb = rng.standard_normal(6), rng.standard_normal(6)
    tool = Pose.from_xyz_rpy((0.3, 0, 0))
    r = coordination_round(CooperationPacket(xa, Pa), CooperationPacket(xb, Pb), CoordinatorState(0.1, tool, 0.2), tool, True)
    assert np.array_equal(r.ideal, np.zeros(6))
    assert np.linalg.norm(r.constraint @ r.feasible) < 1e-9
    assert np.linalg.norm(r.feasible) <= max(np.linalg.norm(xa), np.linalg.norm(xb)) + 1e-12


def test_round_composed_oracle():
    # weighted mean of the hand example, then a rank-5 constraint kills the last component
    xa = np.array([1.0, 0, 0, 0, 0, 1.0])
    xb = np.zeros(6)
    tool = Pose()
    goal = Pose(np.eye(3), [1.0 / 0.5, 0, 0])  # ideal = 0.5 * (2, 0, ...) = (1, 0, ...)
    Pb = np.diag([1, 1, 1, 1, 1, 0.0])
    r = coordination_round(CooperationPacket(xa, I6), CooperationPacket(xb, Pb), CoordinatorState(0.1, goal, 0.5), tool, True)
    mu_a = 0.1 + 1.0
    mu_b = 0.1 + 1.0
    blended = (mu_a * xa + mu_b * xb) / (mu_a + mu_b)
    assert np.allclose(r.blended, blended)
    assert np.allclose(r.feasible, [0.5, 0, 0, 0, 0, 0])


def test_packet_record_budget():
    p = CooperationPacket(np.arange(6.0), np.eye(6))
    rec = p.to_record()
    assert len(rec) == 42
    back = CooperationPacket.from_record(rec)
    assert np.array_equal(back.projector, p.projector)
    with pytest.raises(ContractViolation):
        CooperationPacket.from_record(rec[:-1])


def test_projector_is_idempotent():
    J = np.random.default_rng(3).standard_normal((6, 10))
    P = tool_projector(J)
    assert np.allclose(P @ P, P, atol=1e-6)


def test_channel_latency():
    ch = MessageChannel(0)
    ch.send(1)
    assert ch.receive() == 1
    ch = MessageChannel(2)
    out = []
    for k in range(5):
        ch.send(k)
        out.append(ch.receive())
    assert out == [None, None, 0, 1, 2]
