"""
Kinematic world for the two-agent peg-in-hole mission.

Velocities are realized instantaneously. Contact is a penalty model sampled
along the inserted part of the peg axis; its wrench is fed back to agent A as
a velocity disturbance, while agent B is pulled back onto agent A's peg pose
to emulate the rigid grasp of a single shared peg.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ContractViolation, SingularityError
from .kinematics import (
    Pose,
    SystemConfiguration,
    SystemVelocity,
    as_velocity_array,
    exp_rotation,
    forward_kinematics,
    integrate_configuration,
    pose_error,
    tool_jacobian,
)
from .objectives import Wrench

STATUS_OK = "ok"
STATUS_EXTERNAL_CONTACT = "external-contact"
STATUS_SINGULARITY = "singularity"


@dataclass(frozen=True)
class HoleModel:
    """Cylindrical cavity. The frame's x axis points into the cavity, origin at the mouth."""

    pose: Pose = field(default_factory=Pose)
    radius: float = 0.07
    depth: float = 0.3
    face_halfwidth: float = 0.5

    def __post_init__(self):
        if not self.radius > 0:
            raise ContractViolation("hole radius must be > 0")
        if not self.depth > 0:
            raise ContractViolation("hole depth must be > 0")
        if not self.face_halfwidth > self.radius:
            raise ContractViolation("hole face must be wider than the hole")


@dataclass(frozen=True)
class PegModel:
    """Cylinder whose tip is the tool frame; the body extends along the tool's -x."""

    length: float = 6.0
    radius: float = 0.05
    tip_frame: Pose = field(default_factory=Pose)

    def __post_init__(self):
        if not self.length > 0 or not self.radius > 0:
            raise ContractViolation("peg length and radius must be > 0")


def check_fit(peg, hole):
    if not peg.radius < hole.radius:
        raise ContractViolation(
            f"peg radius {peg.radius} must be smaller than hole radius {hole.radius}"
        )


@dataclass(frozen=True)
class GoalFrame:
    """Estimated hole mouth (origin and orientation) plus the target insertion depth."""

    origin: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    insertion_depth: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "origin", np.array(self.origin, dtype=float).reshape(3))
        object.__setattr__(self, "rotation", np.array(self.rotation, dtype=float).reshape(3, 3))
        if not self.insertion_depth >= 0:
            raise ContractViolation("insertion depth must be >= 0")

    @classmethod
    def from_pose(cls, pose, insertion_depth):
        return cls(pose.translation, pose.rotation, insertion_depth)

    def mouth_pose(self):
        return Pose(self.rotation, self.origin)

    def target_pose(self):
        """Tool pose with the tip at the requested depth along the cavity axis."""
        return Pose(self.rotation, self.origin + self.rotation[:, 0] * self.insertion_depth)


def _open_unit(name, value):
    if not 0 < value < 1:
        raise ContractViolation(f"{name} must lie in (0, 1), got {value}")


@dataclass(frozen=True)
class ContactParams:
    """Penalty contact and disturbance settings.

    ``margin`` makes the wall penalty start ``margin`` metres before the peg
    surface geometrically touches the cavity wall, the way a collision margin
    does in a physics engine. It does not change whether the peg clears the
    mouth.
    """

    stiffness: float = 100.0
    sample_count: int = 16
    k_q: float = 0.05
    k_v1: float = 0.05
    k_v2: float = 0.05
    grasp_gain: float = 1.0
    change_goal_gain: float = 0.002
    margin: float = 0.0

    def __post_init__(self):
        if not self.stiffness > 0:
            raise ContractViolation("stiffness must be > 0")
        if int(self.sample_count) != self.sample_count or self.sample_count < 2:
            raise ContractViolation("sample_count must be an integer >= 2")
        for name in ("k_q", "k_v1", "k_v2", "change_goal_gain"):
            _open_unit(name, getattr(self, name))
        if not self.grasp_gain > 0:
            raise ContractViolation("grasp_gain must be > 0")
        if not self.margin >= 0:
            raise ContractViolation("margin must be >= 0")


def peg_in_hole_frame(peg_pose, hole):
    """Tip position and peg axis (tip-to-tail is ``-axis``) in hole coordinates."""
    rel = hole.pose.inverse() @ peg_pose
    return rel.translation, rel.rotation[:, 0]


def inserted_length(tip, axis, peg):
    """Length of peg axis lying beyond the mouth plane."""
    if tip[0] <= 0:
        return 0.0
    if axis[0] <= 1e-12:
        # peg parallel to or pointing out of the mouth plane: only the tip is in
        return 0.0
    return float(min(tip[0] / axis[0], peg.length))


def peg_hole_wrench(peg_pose, peg, hole, params, samples=None):
    """Penalty wrench on the peg from the cavity wall, in the tool frame.

    ``samples`` overrides ``params.sample_count`` (used for dense checks).
    Torque is taken about the tip.
    """
    count = params.sample_count if samples is None else int(samples)
    tip, axis = peg_in_hole_frame(peg_pose, hole)
    length = inserted_length(tip, axis, peg)
    if length <= 0:
        return Wrench()
    s = (np.arange(count) + 0.5) * (length / count)
    points = tip[None, :] - s[:, None] * axis[None, :]
    radial = np.hypot(points[:, 1], points[:, 2])
    depth = np.maximum(radial + peg.radius - hole.radius + params.margin, 0.0)
    f_hole = np.zeros((count, 3))
    touching = (depth > 0) & (radial > 0)
    f_hole[touching, 1] = -params.stiffness * depth[touching] * points[touching, 1] / radial[touching]
    f_hole[touching, 2] = -params.stiffness * depth[touching] * points[touching, 2] / radial[touching]
    lever = points - tip[None, :]
    force = f_hole.sum(axis=0)
    torque = np.cross(lever, f_hole).sum(axis=0)
    to_tool = peg_pose.rotation.T @ hole.pose.rotation
    return Wrench(to_tool @ force, to_tool @ torque)


def mouth_crossing_offset(prev_pose, pose, hole):
    """Radial offset of the tip where it crossed the mouth plane, or ``None``."""
    a, _ = peg_in_hole_frame(prev_pose, hole)
    b, _ = peg_in_hole_frame(pose, hole)
    if not (a[0] < 0 <= b[0]):
        return None
    t = -a[0] / (b[0] - a[0])
    p = a + t * (b - a)
    return float(np.hypot(p[1], p[2]))


def propagate_collision(wrench, J_t, params, rotation=None):
    """System-velocity disturbance produced by a contact wrench.

    ``rotation`` re-expresses the tool-frame wrench in the Jacobian's frame.
    """
    J_t = np.asarray(J_t, dtype=float)
    w = wrench if rotation is None else wrench.rotated(rotation)
    base = J_t[:3].T @ w.f + J_t[3:].T @ w.m
    l = J_t.shape[1] - 6
    gains = np.concatenate([np.full(l, params.k_q), np.full(3, params.k_v1), np.full(3, params.k_v2)])
    return SystemVelocity.from_array(gains * base, l)


def firm_grasp_correction(pose_peg_a, pose_peg_b, gain):
    """Tool velocity for agent B closing the gap to agent A's peg pose."""
    if not gain > 0:
        raise ContractViolation("grasp gain must be > 0")
    return gain * pose_error(pose_peg_b, pose_peg_a)


def tool_to_system_velocity(J_t, tool_velocity):
    """Minimum-norm system velocity realizing ``tool_velocity``."""
    return np.linalg.pinv(np.asarray(J_t, dtype=float)) @ np.asarray(tool_velocity, dtype=float)


def change_goal(goal, wrench, R_t, k):
    """Shift the goal origin along the lateral contact force.

    The force component along the tool x axis (the insertion direction) is
    dropped so the shift never alters the insertion depth.
    """
    _open_unit("k", k)
    shift = k * np.array([0.0, wrench.f[1], wrench.f[2]])
    return replace(goal, origin=goal.origin + np.asarray(R_t, dtype=float) @ shift)


def _random_direction(rng):
    v = rng.standard_normal(3)
    norm = np.linalg.norm(v)
    return v / norm if norm > 0 else np.array([1.0, 0.0, 0.0])


def inject_pose_error(true_pose, seed, lin_norm_max, ang_norm_max):
    """Perturb a pose by a seeded random offset of bounded size.

    The linear offset norm is uniform in [0, lin_norm_max], the rotation
    angle uniform in [0, ang_norm_max]; directions are uniform on the sphere.
    """
    if lin_norm_max < 0 or ang_norm_max < 0:
        raise ContractViolation("error bounds must be >= 0")
    if lin_norm_max == 0 and ang_norm_max == 0:
        return true_pose
    rng = np.random.default_rng(seed)
    lin = _random_direction(rng) * rng.uniform(0.0, lin_norm_max)
    ang = _random_direction(rng) * rng.uniform(0.0, ang_norm_max)
    return Pose(exp_rotation(ang) @ true_pose.rotation, true_pose.translation + lin)


@dataclass(frozen=True)
class WorldModel:
    """Static part of the world."""

    chain_a: object
    chain_b: object
    hole: HoleModel
    peg: PegModel
    contact: ContactParams
    pitch_margin: float = 0.1


@dataclass(frozen=True)
class WorldState:
    model: WorldModel
    time: float
    config_a: SystemConfiguration
    config_b: SystemConfiguration
    wrench: Wrench = field(default_factory=Wrench)
    status: str = STATUS_OK
    message: str = ""

    @classmethod
    def initial(cls, model, config_a, config_b, time=0.0):
        state = cls(model, time, config_a, config_b)
        tip = state.tool_pose_a()
        return replace(state, wrench=peg_hole_wrench(tip, model.peg, model.hole, model.contact))

    def tool_pose_a(self):
        return forward_kinematics(self.model.chain_a, self.config_a)

    def tool_pose_b(self):
        return forward_kinematics(self.model.chain_b, self.config_b)


@dataclass(frozen=True)
class StepOutcome:
    """Velocities actually applied during a step and the disturbances added."""

    realized_a: np.ndarray
    realized_b: np.ndarray
    disturbance_a: np.ndarray
    disturbance_b: np.ndarray


def step_world(state, command_a, command_b, dt):
    """Apply one step of commanded velocities plus disturbances.

    Returns the new state and a :class:`StepOutcome`. A singularity or an
    impact on the hole face yields a state whose ``status`` names the failure;
    configurations are then left at their pre-step values.
    """
    if not dt > 0:
        raise ContractViolation("dt must be > 0")
    model = state.model
    ya = as_velocity_array(command_a, state.config_a.n_joints)
    yb = as_velocity_array(command_b, state.config_b.n_joints)
    tip_a = state.tool_pose_a()
    tip_b = state.tool_pose_b()
    J_a = tool_jacobian(model.chain_a, state.config_a)
    J_b = tool_jacobian(model.chain_b, state.config_b)
    dist_a = propagate_collision(state.wrench, J_a, model.contact, tip_a.rotation).as_array()
    grasp = firm_grasp_correction(tip_a, tip_b, model.contact.grasp_gain)
    dist_b = tool_to_system_velocity(J_b, grasp)
    realized_a = ya + dist_a
    realized_b = yb + dist_b
    # log the difference actually applied so realized - commanded is exact in floating point
    dist_a = realized_a - ya
    dist_b = realized_b - yb
    outcome = StepOutcome(realized_a, realized_b, dist_a, dist_b)
    try:
        ca = integrate_configuration(state.config_a, realized_a, dt, model.pitch_margin)
        cb = integrate_configuration(state.config_b, realized_b, dt, model.pitch_margin)
    except SingularityError as exc:
        return replace(state, status=STATUS_SINGULARITY, message=str(exc)), outcome
    new_tip = forward_kinematics(model.chain_a, ca)
    offset = mouth_crossing_offset(tip_a, new_tip, model.hole)
    if offset is not None:
        clearance = model.hole.radius - model.peg.radius
        if clearance < offset < model.hole.face_halfwidth + model.peg.radius:
            msg = f"peg hit the hole face at radial offset {offset:.4f} m"
            return replace(state, status=STATUS_EXTERNAL_CONTACT, message=msg), outcome
    wrench = peg_hole_wrench(new_tip, model.peg, model.hole, model.contact)
    return WorldState(model, state.time + dt, ca, cb, wrench), outcome


def insertion_depth(peg_pose, hole):
    """Depth of the tip along the cavity axis (negative while outside)."""
    tip, _ = peg_in_hole_frame(peg_pose, hole)
    return float(tip[0])
