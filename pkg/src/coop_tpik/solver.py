"""
Prioritized inverse kinematics with smooth task activation.

Tasks are solved in priority order; each level only acts in the space left
free by the levels above it, through a recursively updated projector ``Q``.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .algebra import RegularizationParams, regularized_pinv, saturate
from .errors import ContractViolation, NumericalError

EQUALITY = "equality"
INEQUALITY = "inequality"
NON_REACTIVE = "non-reactive"
KINDS = (EQUALITY, INEQUALITY, NON_REACTIVE)


@dataclass(frozen=True)
class TaskSpec:
    """One priority level: reference rate, Jacobian and activation diagonal."""

    priority: int
    reference: np.ndarray
    jacobian: np.ndarray
    activation: np.ndarray = None
    kind: str = EQUALITY
    name: str = ""

    def __post_init__(self):
        ref = np.array(self.reference, dtype=float).reshape(-1)
        J = np.atleast_2d(np.array(self.jacobian, dtype=float))
        if self.activation is None:
            act = np.ones(ref.size)
        else:
            act = np.array(self.activation, dtype=float)
            if act.ndim == 2:
                act = np.diag(act).copy()
            act = act.reshape(-1)
        if self.kind not in KINDS:
            raise ContractViolation(f"unknown task kind {self.kind!r}")
        if J.shape[0] != ref.size or act.size != ref.size:
            raise ContractViolation(
                f"task {self.name or self.priority}: reference {ref.size}, "
                f"jacobian rows {J.shape[0]}, activation {act.size} disagree"
            )
        if np.any(act < 0) or np.any(act > 1):
            raise ContractViolation("activations must lie in [0, 1]")
        if self.kind != INEQUALITY and not np.all(act == 1.0):
            raise ContractViolation(f"{self.kind} tasks must have identity activation")
        object.__setattr__(self, "reference", ref)
        object.__setattr__(self, "jacobian", J)
        object.__setattr__(self, "activation", act)

    @property
    def dimension(self):
        return self.reference.size


def stack_tasks(tasks):
    """Merge tasks sharing one priority into a single task."""
    if len(tasks) == 1:
        return tasks[0]
    kinds = {t.kind for t in tasks}
    if INEQUALITY in kinds:
        kind = INEQUALITY
    elif len(kinds) == 1:
        kind = kinds.pop()
    else:
        kind = EQUALITY
    return TaskSpec(
        tasks[0].priority,
        np.concatenate([t.reference for t in tasks]),
        np.vstack([t.jacobian for t in tasks]),
        np.concatenate([t.activation for t in tasks]),
        kind,
        "+".join(t.name for t in tasks),
    )


def last_task(n, priority):
    """Minimum-velocity task placed at the bottom of every hierarchy.

    It soaks up whatever freedom is left after all objectives, so partially
    active tasks above it cannot leave arbitrary motion behind.
    """
    return TaskSpec(priority, np.zeros(n), np.eye(n), kind=EQUALITY, name="last")


@dataclass
class ActionList:
    """Tasks ordered by ascending priority index, same-priority tasks stacked."""

    tasks: List[TaskSpec]
    n: int

    def __post_init__(self):
        groups = {}
        for t in self.tasks:
            if t.jacobian.shape[1] != self.n:
                raise ContractViolation(
                    f"task {t.name or t.priority} has {t.jacobian.shape[1]} columns, expected {self.n}"
                )
            groups.setdefault(t.priority, []).append(t)
        self.tasks = [stack_tasks(groups[k]) for k in sorted(groups)]

    @classmethod
    def build(cls, tasks, n, with_last_task=True):
        tasks = list(tasks)
        if with_last_task:
            bottom = max((t.priority for t in tasks), default=0) + 1
            tasks.append(last_task(n, bottom))
        return cls(tasks, n)

    def prepend(self, task):
        """New action with ``task`` placed above every existing level."""
        top = min((t.priority for t in self.tasks), default=1) - 1
        moved = TaskSpec(top, task.reference, task.jacobian, task.activation, task.kind, task.name)
        return ActionList([moved] + list(self.tasks), self.n)

    def without(self, name):
        return ActionList([t for t in self.tasks if t.name != name], self.n)

    def __len__(self):
        return len(self.tasks)


@dataclass
class SolverDiagnostics:
    residuals: list = field(default_factory=list)
    ranks: list = field(default_factory=list)
    names: list = field(default_factory=list)


def make_nonreactive_task(reference, jacobian, priority, name="non-reactive"):
    """Task tracking an externally supplied rate with identity activation."""
    return TaskSpec(priority, reference, jacobian, kind=NON_REACTIVE, name=name)


def vehicle_lock_task(vehicle_velocity, n, priority=0):
    """Non-reactive task pinning the 6 vehicle components of ``ydot``."""
    J = np.zeros((6, n))
    J[:, n - 6 :] = np.eye(6)
    return make_nonreactive_task(vehicle_velocity, J, priority, name="vehicle-lock")


def icat_solve(action, params=None, limits=None):
    """Solve the prioritized hierarchy ``action``.

    Returns
    -------
    ydot : (n,) array
        System velocity ``[qdot, v1, v2]``.
    diagnostics : SolverDiagnostics
    """
    if params is None:
        params = RegularizationParams()
    n = action.n
    if limits is not None and limits.bounds.size != n:
        raise ContractViolation(f"limits cover {limits.bounds.size} components, system has {n}")
    rho = np.zeros(n)
    Q = np.eye(n)
    I = np.eye(n)
    diag = SolverDiagnostics()
    for k, task in enumerate(action.tasks, start=1):
        J = task.jacobian
        a = task.activation
        JQ = J @ Q
        pinv_I = regularized_pinv(JQ, a, I, params)
        # the stand-in operator does not depend on its Q argument, so X^{#,A,Q} == X^{#,A,I}
        W = JQ @ pinv_I
        step = Q @ pinv_I @ W @ (task.reference - J @ rho)
        Q = Q @ (I - pinv_I @ JQ)
        if limits is not None:
            step = saturate(step, limits, offset=rho)
        rho = rho + step
        if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(Q))):
            raise NumericalError(f"non-finite value at level {k} ({task.name})", level=k)
        diag.names.append(task.name)
        diag.residuals.append(float(np.linalg.norm(a * (task.reference - J @ rho))))
        sv = np.linalg.svd(a[:, None] * JQ, compute_uv=False)
        diag.ranks.append(int(np.sum(sv > params.sv_threshold)))
    return rho, diag


def coordinate_arm_vehicle(action, measured_vehicle_velocity=None, params=None, limits=None):
    """Arm-vehicle coordination through two solver passes.

    The first pass treats vehicle and arm as one controllable system and
    contributes only the vehicle twist. The second pass pins the vehicle to
    ``measured_vehicle_velocity`` with a top-priority non-reactive task and
    contributes only the joint rates, so the arm compensates for whatever the
    vehicle actually does. When no measurement is given the vehicle is assumed
    to realize the first pass exactly.

    Returns
    -------
    ydot : (n,) array
    diagnostics : tuple of SolverDiagnostics, one per pass
    """
    n = action.n
    first, diag1 = icat_solve(action, params, limits)
    vehicle = first[n - 6 :]
    if measured_vehicle_velocity is None:
        measured = vehicle
    else:
        measured = np.asarray(measured_vehicle_velocity, dtype=float).reshape(6)
    if n == 6:
        return first.copy(), (diag1, None)
    locked = action.prepend(vehicle_lock_task(measured, n))
    second, diag2 = icat_solve(locked, params, limits)
    merged = np.concatenate([second[: n - 6], vehicle])
    return merged, (diag1, diag2)
