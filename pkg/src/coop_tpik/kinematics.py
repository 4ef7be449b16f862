"""
Floating-base serial-chain kinematics.

A system is a 6-DOF vehicle carrying an ``l``-joint arm. Its configuration is
``c = [q, eta1, eta2]`` (joint angles, world position, roll-pitch-yaw) and its
velocity is ``ydot = [qdot, v1, v2]`` with the vehicle twist in body axes.
Cartesian tool velocities and pose errors are expressed in world axes.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.transform import Rotation

from .errors import ContractViolation, SingularityError


def rpy_to_matrix(rpy):
    """Rotation from roll, pitch, yaw applied in the yaw-pitch-roll sequence (Rz Ry Rx)."""
    roll, pitch, yaw = rpy
    return Rotation.from_euler("ZYX", [yaw, pitch, roll]).as_matrix()


def matrix_to_rpy(R):
    yaw, pitch, roll = Rotation.from_matrix(R).as_euler("ZYX")
    return np.array([roll, pitch, yaw])


def rotation_vector(R):
    """Axis-angle vector of a rotation matrix."""
    return Rotation.from_matrix(R).as_rotvec()


def exp_rotation(w):
    return Rotation.from_rotvec(np.asarray(w, dtype=float)).as_matrix()


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


@dataclass(frozen=True)
class Pose:
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        p = np.array(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", p)

    @classmethod
    def from_xyz_rpy(cls, xyz=(0.0, 0.0, 0.0), rpy=(0.0, 0.0, 0.0)):
        return cls(rpy_to_matrix(rpy), xyz)

    @classmethod
    def from_matrix(cls, T):
        T = np.asarray(T, dtype=float)
        return cls(T[:3, :3], T[:3, 3])

    def as_matrix(self):
        T = np.eye(4)
        T[:3, :3] = self.rotation
        T[:3, 3] = self.translation
        return T

    def __matmul__(self, other):
        return Pose(
            self.rotation @ other.rotation,
            self.rotation @ other.translation + self.translation,
        )

    def inverse(self):
        Rt = self.rotation.T
        return Pose(Rt, -Rt @ self.translation)

    def transform_point(self, p):
        return self.rotation @ np.asarray(p, dtype=float) + self.translation

    @property
    def rpy(self):
        return matrix_to_rpy(self.rotation)

    def is_valid(self, tol=1e-9):
        R = self.rotation
        return (
            np.allclose(R.T @ R, np.eye(3), atol=tol)
            and abs(np.linalg.det(R) - 1.0) < tol
        )


@dataclass(frozen=True)
class SystemConfiguration:
    q: np.ndarray
    eta1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    eta2: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "q", np.array(self.q, dtype=float).reshape(-1))
        object.__setattr__(self, "eta1", np.array(self.eta1, dtype=float).reshape(3))
        object.__setattr__(self, "eta2", np.array(self.eta2, dtype=float).reshape(3))

    @property
    def n_joints(self):
        return self.q.size

    @property
    def n(self):
        return self.q.size + 6

    def as_array(self):
        return np.concatenate([self.q, self.eta1, self.eta2])

    @classmethod
    def from_array(cls, c, n_joints):
        c = np.asarray(c, dtype=float)
        return cls(c[:n_joints], c[n_joints : n_joints + 3], c[n_joints + 3 : n_joints + 6])

    def vehicle_pose(self):
        return Pose(rpy_to_matrix(self.eta2), self.eta1)


@dataclass(frozen=True)
class SystemVelocity:
    qdot: np.ndarray
    v1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    v2: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "qdot", np.array(self.qdot, dtype=float).reshape(-1))
        object.__setattr__(self, "v1", np.array(self.v1, dtype=float).reshape(3))
        object.__setattr__(self, "v2", np.array(self.v2, dtype=float).reshape(3))

    @property
    def n_joints(self):
        return self.qdot.size

    def as_array(self):
        return np.concatenate([self.qdot, self.v1, self.v2])

    @classmethod
    def from_array(cls, y, n_joints):
        y = np.asarray(y, dtype=float)
        if y.size != n_joints + 6:
            raise ContractViolation(f"expected {n_joints + 6} components, got {y.size}")
        return cls(y[:n_joints], y[n_joints : n_joints + 3], y[n_joints + 3 :])

    @classmethod
    def zeros(cls, n_joints):
        return cls(np.zeros(n_joints))


def as_velocity_array(ydot, n_joints):
    if isinstance(ydot, SystemVelocity):
        ydot = ydot.as_array()
    ydot = np.asarray(ydot, dtype=float).reshape(-1)
    if ydot.size != n_joints + 6:
        raise ContractViolation(f"expected {n_joints + 6} velocity components, got {ydot.size}")
    return ydot


@dataclass(frozen=True)
class ChainModel:
    """Standard Denavit-Hartenberg arm mounted on a vehicle.

    ``dh_rows`` holds one ``(a, alpha, d, theta_offset)`` row per revolute
    joint. ``base_to_arm`` places the arm base in the vehicle frame and
    ``ee_to_tool`` places the tool frame (peg tip) in the end-effector frame.
    """

    dh_rows: np.ndarray
    base_to_arm: Pose = field(default_factory=Pose)
    ee_to_tool: Pose = field(default_factory=Pose)

    def __post_init__(self):
        rows = np.array(self.dh_rows, dtype=float).reshape(-1, 4)
        object.__setattr__(self, "dh_rows", rows)

    @property
    def n_joints(self):
        return self.dh_rows.shape[0]

    @property
    def n(self):
        return self.n_joints + 6

    def with_tool(self, ee_to_tool):
        return ChainModel(self.dh_rows, self.base_to_arm, ee_to_tool)


DEFAULT_LINK_LENGTHS = (0.2, 0.3, 0.3, 0.2)


def default_chain(ee_to_tool=None):
    """4-joint test arm: a base yaw joint followed by three pitch joints."""
    a1, a2, a3, a4 = DEFAULT_LINK_LENGTHS
    rows = [
        (a1, -np.pi / 2, 0.0, 0.0),
        (a2, 0.0, 0.0, 0.0),
        (a3, 0.0, 0.0, 0.0),
        (a4, 0.0, 0.0, 0.0),
    ]
    mount = Pose.from_xyz_rpy((0.6, 0.0, 0.3), (0.0, 0.0, 0.0))
    return ChainModel(rows, mount, ee_to_tool if ee_to_tool is not None else Pose())


def dh_transform(a, alpha, d, theta):
    ct, st = np.cos(theta), np.sin(theta)
    ca, sa = np.cos(alpha), np.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def _check_dims(chain, c):
    if c.n_joints != chain.n_joints:
        raise ContractViolation(
            f"configuration has {c.n_joints} joints, chain has {chain.n_joints}"
        )


def _joint_frames(chain, c):
    """World transforms of the arm base and of every DH frame, plus the tool."""
    T = c.vehicle_pose().as_matrix() @ chain.base_to_arm.as_matrix()
    frames = [T]
    for (a, alpha, d, offset), qi in zip(chain.dh_rows, c.q):
        T = T @ dh_transform(a, alpha, d, qi + offset)
        frames.append(T)
    tool = T @ chain.ee_to_tool.as_matrix()
    return frames, tool


def forward_kinematics(chain, c):
    """World pose of the tool frame."""
    _check_dims(chain, c)
    _, tool = _joint_frames(chain, c)
    return Pose.from_matrix(tool)


def vehicle_to_tool(chain, q):
    """Pose of the tool in the vehicle frame for joint angles ``q``."""
    c = SystemConfiguration(q)
    return forward_kinematics(chain, c)


def tool_jacobian(chain, c):
    """6 x n Jacobian mapping ``[qdot, v1, v2]`` to the tool's world-frame twist.

    Rows 0-2 give the linear velocity of the tool origin, rows 3-5 the angular
    velocity, both in world axes.
    """
    _check_dims(chain, c)
    frames, tool = _joint_frames(chain, c)
    p_tool = tool[:3, 3]
    l = chain.n_joints
    J = np.zeros((6, l + 6))
    for i in range(l):
        z = frames[i][:3, 2]
        o = frames[i][:3, 3]
        J[:3, i] = np.cross(z, p_tool - o)
        J[3:, i] = z
    Rv = rpy_to_matrix(c.eta2)
    lever = p_tool - c.eta1
    J[:3, l : l + 3] = Rv
    J[:3, l + 3 :] = -skew(lever) @ Rv
    J[3:, l + 3 :] = Rv
    return J


def pose_error(current, goal):
    """6-vector from ``current`` to ``goal``: translation difference and
    axis-angle of ``R_goal R_current^T``, both in world axes."""
    lin = goal.translation - current.translation
    ang = rotation_vector(goal.rotation @ current.rotation.T)
    return np.concatenate([lin, ang])


def rpy_rate_matrix(eta2):
    """Matrix mapping the body angular velocity to roll-pitch-yaw rates."""
    roll, pitch, _ = eta2
    sr, cr = np.sin(roll), np.cos(roll)
    cp, tp = np.cos(pitch), np.tan(pitch)
    return np.array(
        [
            [1.0, sr * tp, cr * tp],
            [0.0, cr, -sr],
            [0.0, sr / cp, cr / cp],
        ]
    )


def _se3_left_jacobian(w):
    theta = np.linalg.norm(w)
    K = skew(w)
    if theta < 1e-9:
        return np.eye(3) + 0.5 * K + K @ K / 6.0
    return (
        np.eye(3)
        + (1.0 - np.cos(theta)) / theta**2 * K
        + (theta - np.sin(theta)) / theta**3 * K @ K
    )


def integrate_configuration(c, ydot, dt, pitch_margin=0.1):
    """Advance ``c`` by a constant system velocity held for ``dt`` seconds.

    Joints integrate linearly. The vehicle follows the exact screw motion of
    its constant body twist, so repeated small steps and one long step agree.

    Raises
    ------
    SingularityError
        If the resulting pitch is within ``pitch_margin`` of +-pi/2.
    """
    if not dt > 0:
        raise ContractViolation("dt must be > 0")
    y = as_velocity_array(ydot, c.n_joints)
    l = c.n_joints
    v1, v2 = y[l : l + 3], y[l + 3 :]
    q = c.q + y[:l] * dt
    Rv = rpy_to_matrix(c.eta2)
    w = v2 * dt
    eta1 = c.eta1 + Rv @ _se3_left_jacobian(w) @ (v1 * dt)
    if np.any(w):
        eta2 = matrix_to_rpy(Rv @ exp_rotation(w))
    else:
        eta2 = c.eta2.copy()
    if abs(eta2[1]) > np.pi / 2 - pitch_margin:
        raise SingularityError(f"vehicle pitch {eta2[1]:.4f} rad too close to +-pi/2")
    return SystemConfiguration(q, eta1, eta2)
