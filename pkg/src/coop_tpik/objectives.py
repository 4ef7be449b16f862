"""
Control objectives rebuilt every control step.

Each builder returns a :class:`~coop_tpik.solver.TaskSpec`. Default priority
order: joint limits, horizontal attitude, force-torque, tool position,
preferred arm shape, then the minimum-velocity task added by the action list.
"""

from dataclasses import dataclass, field

import numpy as np

from .algebra import ActivationBand, activation_scalar
from .errors import ContractViolation
from .kinematics import pose_error, rpy_rate_matrix
from .solver import EQUALITY, INEQUALITY, TaskSpec

NORM_EPSILON = 1e-6

PRIORITY_JOINT_LIMITS = 1
PRIORITY_ATTITUDE = 2
PRIORITY_FORCE_TORQUE = 3
PRIORITY_TOOL = 4
PRIORITY_SHAPE = 5


@dataclass(frozen=True)
class Wrench:
    """Force (N) and torque (N m) on the peg, expressed in the tool frame."""

    f: np.ndarray = field(default_factory=lambda: np.zeros(3))
    m: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        f = np.array(self.f, dtype=float).reshape(3)
        m = np.array(self.m, dtype=float).reshape(3)
        if not (np.all(np.isfinite(f)) and np.all(np.isfinite(m))):
            raise ContractViolation("wrench components must be finite")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "m", m)

    @property
    def norm(self):
        return float(np.linalg.norm(np.concatenate([self.f, self.m])))

    def rotated(self, R):
        """Same wrench with both vectors re-expressed through rotation ``R``."""
        return Wrench(R @ self.f, R @ self.m)

    def as_array(self):
        return np.concatenate([self.f, self.m])


@dataclass(frozen=True)
class ObjectiveConfig:
    """Gains, bands and priorities of the objective list."""

    tool_gain: float = 0.2
    joint_gain: float = 0.5
    joint_delta: float = 0.1
    attitude_gain: float = 0.5
    max_tilt: float = 0.2
    tilt_delta: float = 0.05
    shape_gain: float = 0.1
    shape_tolerance: float = 0.3
    shape_delta: float = 0.1
    force_gain: float = 0.003
    torque_gain: float = 0.003
    force_delta: float = 0.5
    torque_delta: float = 0.5
    priority_joint_limits: int = PRIORITY_JOINT_LIMITS
    priority_attitude: int = PRIORITY_ATTITUDE
    priority_force_torque: int = PRIORITY_FORCE_TORQUE
    priority_tool: int = PRIORITY_TOOL
    priority_shape: int = PRIORITY_SHAPE

    def __post_init__(self):
        for name in ("tool_gain", "joint_gain", "attitude_gain", "shape_gain"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be > 0")
        for name in ("force_gain", "torque_gain"):
            if not 0 < getattr(self, name) < 1:
                raise ContractViolation(f"{name} must lie in (0, 1)")
        if not 0 < self.max_tilt < np.pi / 2:
            raise ContractViolation("max_tilt must lie in (0, pi/2)")
        for name in ("joint_delta", "tilt_delta", "shape_delta", "force_delta", "torque_delta"):
            if not getattr(self, name) > 0:
                raise ContractViolation(f"{name} must be > 0")


def _selector(indices, n):
    J = np.zeros((len(indices), n))
    for row, col in enumerate(indices):
        J[row, col] = 1.0
    return J


def joint_limits_task(q, limits, band_delta, gamma, priority=PRIORITY_JOINT_LIMITS, n=None):
    """Keep every joint inside its ``(min, max)`` range.

    The activation of row ``i`` rises to 1 as joint ``i`` enters the outer
    ``band_delta`` of its range; the reference drives it back to the edge of
    that band.
    """
    q = np.asarray(q, dtype=float)
    limits = np.asarray(limits, dtype=float).reshape(-1, 2)
    if limits.shape[0] != q.size:
        raise ContractViolation("one (min, max) pair per joint is required")
    if np.any(limits[:, 0] >= limits[:, 1]):
        raise ContractViolation("joint limits need min < max")
    if n is None:
        n = q.size + 6
    act = np.zeros(q.size)
    ref = np.zeros(q.size)
    for i, (qi, (lo, hi)) in enumerate(zip(q, limits)):
        band = ActivationBand(lower=lo, upper=hi, delta=band_delta)
        act[i] = activation_scalar(qi, band)
        if qi < lo + band_delta:
            ref[i] = gamma * (lo + band_delta - qi)
        elif qi > hi - band_delta:
            ref[i] = gamma * (hi - band_delta - qi)
    return TaskSpec(priority, ref, _selector(range(q.size), n), act, INEQUALITY, "joint-limits")


def tilt(eta2):
    """Euclidean norm of roll and pitch."""
    return float(np.hypot(eta2[0], eta2[1]))


def horizontal_attitude_task(eta2, max_tilt, band_delta, gamma, n, priority=PRIORITY_ATTITUDE):
    """Scalar inequality objective keeping the vehicle close to horizontal."""
    if not 0 < max_tilt < np.pi / 2:
        raise ContractViolation("max_tilt must lie in (0, pi/2)")
    eta2 = np.asarray(eta2, dtype=float)
    value = tilt(eta2)
    band = ActivationBand(upper=max_tilt, delta=band_delta, epsilon=NORM_EPSILON)
    act = activation_scalar(value, band)
    J = np.zeros((1, n))
    if value > NORM_EPSILON:
        grad = np.array([eta2[0], eta2[1], 0.0]) / value
        J[0, n - 3 :] = grad @ rpy_rate_matrix(eta2)
    return TaskSpec(priority, [-gamma * value], J, [act], INEQUALITY, "attitude")


def tool_position_task(current, goal, jacobian, gamma, priority=PRIORITY_TOOL):
    """Six-dimensional equality objective steering the tool frame onto ``goal``."""
    ref = gamma * pose_error(current, goal)
    return TaskSpec(priority, ref, jacobian, kind=EQUALITY, name="tool")


def preferred_shape_task(q, q_pref, tolerance, band_delta, gamma, priority=PRIORITY_SHAPE, n=None):
    """Per-joint objective active when a joint strays from its preferred angle."""
    q = np.asarray(q, dtype=float)
    q_pref = np.asarray(q_pref, dtype=float)
    if q_pref.shape != q.shape:
        raise ContractViolation("q_pref must have one entry per joint")
    if n is None:
        n = q.size + 6
    band = ActivationBand(upper=tolerance, delta=band_delta)
    act = np.array([activation_scalar(abs(d), band) for d in q - q_pref])
    ref = gamma * (q_pref - q)
    return TaskSpec(priority, ref, _selector(range(q.size), n), act, INEQUALITY, "shape")


def force_torque_task(
    wrench,
    jacobian,
    force_gain,
    torque_gain,
    force_delta=0.5,
    torque_delta=0.5,
    priority=PRIORITY_FORCE_TORQUE,
    rotation=None,
    epsilon=NORM_EPSILON,
):
    """Two-row objective driving the force and torque norms to zero.

    Only the norms are constrained, so the objective uses two degrees of
    freedom whatever the wrench direction. ``rotation`` re-expresses the
    wrench in the frame of ``jacobian`` (tool-to-world for a world-frame
    Jacobian); identity when omitted.
    """
    if not (0 < force_gain < 1 and 0 < torque_gain < 1):
        raise ContractViolation("force and torque gains must lie in (0, 1)")
    J_t = np.asarray(jacobian, dtype=float)
    if J_t.shape[0] != 6:
        raise ContractViolation("force-torque objective needs a 6-row tool Jacobian")
    w = wrench if rotation is None else wrench.rotated(rotation)
    J = np.zeros((2, J_t.shape[1]))
    ref = np.zeros(2)
    act = np.zeros(2)
    rows = ((w.f, J_t[:3], force_gain, force_delta), (w.m, J_t[3:], torque_gain, torque_delta))
    for i, (vec, block, gain, delta) in enumerate(rows):
        size = float(np.linalg.norm(vec))
        if size <= epsilon:
            continue
        J[i] = -(vec / size) @ block
        ref[i] = -gain * size
        act[i] = activation_scalar(size, ActivationBand.increasing(delta, epsilon))
    return TaskSpec(priority, ref, J, act, INEQUALITY, "force-torque")
