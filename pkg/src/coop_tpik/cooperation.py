"""
Fusion of two agents' tool velocities into one velocity both can realize.

Each agent solves its own hierarchy as if alone and sends a packet with the
resulting tool velocity and its tool-velocity projector ``J_t J_t^+``. The
coordinator blends the two velocities, favouring the agent that is further
from the ideal one, and projects the blend onto the set of tool velocities
both agents can produce.
"""

import warnings
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation
from .kinematics import as_velocity_array, pose_error

IDEMPOTENCE_TOL = 1e-6


class ProjectorWarning(UserWarning):
    """A matrix passed as a projector is not idempotent."""


def tool_projector(J_t):
    """Orthogonal projector onto the range of ``J_t`` (plain pseudoinverse, no damping)."""
    J_t = np.asarray(J_t, dtype=float)
    return J_t @ np.linalg.pinv(J_t)


def is_idempotent(P, tol=IDEMPOTENCE_TOL):
    P = np.asarray(P, dtype=float)
    return bool(np.max(np.abs(P @ P - P)) <= tol)


@dataclass(frozen=True)
class CooperationPacket:
    """Data one agent sends to the coordinator each round."""

    noncoop_tool_velocity: np.ndarray
    projector: np.ndarray

    FIELDS = 6 + 36

    def __post_init__(self):
        x = np.array(self.noncoop_tool_velocity, dtype=float).reshape(6)
        P = np.array(self.projector, dtype=float).reshape(6, 6)
        object.__setattr__(self, "noncoop_tool_velocity", x)
        object.__setattr__(self, "projector", P)

    @classmethod
    def from_solution(cls, J_t, ydot):
        return cls(noncoop_tool_velocity(J_t, ydot), tool_projector(J_t))

    def to_record(self):
        """Flat list of the 42 numbers exchanged."""
        return list(self.noncoop_tool_velocity) + list(self.projector.reshape(-1))

    @classmethod
    def from_record(cls, record):
        record = np.asarray(record, dtype=float)
        if record.size != cls.FIELDS:
            raise ContractViolation(f"packet record needs {cls.FIELDS} fields, got {record.size}")
        return cls(record[:6], record[6:].reshape(6, 6))


@dataclass(frozen=True)
class CoordinatorState:
    """Coordinator settings: weight floor, target tool pose and ideal-velocity gain."""

    mu0: float
    goal: object
    ideal_gain: float

    def __post_init__(self):
        if not self.mu0 > 0:
            raise ContractViolation("mu0 must be > 0")
        if not self.ideal_gain > 0:
            raise ContractViolation("ideal_gain must be > 0")


def noncoop_tool_velocity(J_t, ydot):
    J_t = np.asarray(J_t, dtype=float)
    y = as_velocity_array(ydot, J_t.shape[1] - 6)
    return J_t @ y


def blend_weights(xa, xb, ideal, mu0):
    if not mu0 > 0:
        raise ContractViolation("mu0 must be > 0")
    ideal = np.asarray(ideal, dtype=float)
    mu_a = mu0 + float(np.linalg.norm(ideal - np.asarray(xa, dtype=float)))
    mu_b = mu0 + float(np.linalg.norm(ideal - np.asarray(xb, dtype=float)))
    return mu_a, mu_b


def cooperative_velocity(xa, xb, ideal, mu0):
    """Weighted mean of the two tool velocities.

    Each weight grows with that agent's distance from ``ideal``, so an agent
    hampered by its own constraints pulls the compromise towards itself.
    """
    mu_a, mu_b = blend_weights(xa, xb, ideal, mu0)
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    return (mu_a * xa + mu_b * xb) / (mu_a + mu_b)


def constraint_matrix(Pa, Pb, tol=IDEMPOTENCE_TOL):
    """Difference of the two projectors. Warns if either is not idempotent."""
    Pa = np.asarray(Pa, dtype=float)
    Pb = np.asarray(Pb, dtype=float)
    if Pa.shape != Pb.shape or Pa.shape[0] != Pa.shape[1]:
        raise ContractViolation("projectors must be square and of equal size")
    for label, P in (("a", Pa), ("b", Pb)):
        if not is_idempotent(P, tol):
            warnings.warn(f"projector {label} is not idempotent", ProjectorWarning, stacklevel=2)
    return Pa - Pb


RANK_TOL = 1e-9


def kernel_projector(C, tol=RANK_TOL):
    """``I - C^+ C`` with singular values of ``C`` below ``tol`` treated as zero.

    ``C`` is a difference of projectors, so its entries are O(1) and an
    absolute cutoff is the meaningful one: rounding noise in ``Pa - Pb``
    must not be inverted as if it were a real constraint.
    """
    C = np.asarray(C, dtype=float)
    _, s, Vt = np.linalg.svd(C)
    rows = Vt[: int(np.sum(s > tol))]
    return np.eye(C.shape[1]) - rows.T @ rows


def feasible_velocity(xhat, C, tol=RANK_TOL):
    """Component of ``xhat`` in the kernel of ``C``."""
    return kernel_projector(C, tol) @ np.asarray(xhat, dtype=float)


@dataclass
class RoundResult:
    ideal: np.ndarray
    blended: np.ndarray
    constraint: np.ndarray
    feasible: np.ndarray
    mu_a: float
    mu_b: float


def coordination_round(packet_a, packet_b, state, tool_pose, detailed=False):
    """One coordinator round returning the tool velocity broadcast to both agents.

    ``state.goal`` is the target tool pose. With ``detailed`` the intermediate
    quantities are returned as a :class:`RoundResult`.
    """
    ideal = state.ideal_gain * pose_error(tool_pose, state.goal)
    xa = packet_a.noncoop_tool_velocity
    xb = packet_b.noncoop_tool_velocity
    mu_a, mu_b = blend_weights(xa, xb, ideal, state.mu0)
    blended = (mu_a * xa + mu_b * xb) / (mu_a + mu_b)
    C = constraint_matrix(packet_a.projector, packet_b.projector)
    out = feasible_velocity(blended, C)
    if detailed:
        return RoundResult(ideal, blended, C, out, mu_a, mu_b)
    return out


class MessageChannel:
    """In-process FIFO link with a fixed delay counted in control steps.

    ``receive`` returns the message sent ``latency`` sends ago, or ``None``
    while the pipe is still filling.
    """

    def __init__(self, latency=0):
        if latency < 0:
            raise ContractViolation("latency must be >= 0")
        self.latency = int(latency)
        self._queue = deque()

    def send(self, message):
        self._queue.append(message)

    def receive(self):
        if len(self._queue) > self.latency:
            return self._queue.popleft()
        return None
