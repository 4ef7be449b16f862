"""
The two-agent control loop and its telemetry.

Per step: read the world, optionally shift the goal from the measured force,
let each agent solve its own hierarchy, fuse the two tool velocities in the
coordinator, re-solve each hierarchy under the fused tool velocity, split
arm and vehicle commands, and step the world.
"""

import csv
import json
import os
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .cooperation import CooperationPacket, CoordinatorState, MessageChannel, coordination_round
from .errors import NumericalError
from .kinematics import Pose, forward_kinematics, pose_error, rpy_to_matrix, tool_jacobian
from .objectives import (
    force_torque_task,
    horizontal_attitude_task,
    joint_limits_task,
    preferred_shape_task,
    tool_position_task,
)
from .scenario import agent_initial_setup
from .simulation import (
    STATUS_OK,
    GoalFrame,
    WorldModel,
    WorldState,
    change_goal,
    inject_pose_error,
    insertion_depth,
    step_world,
)
from .solver import ActionList, coordinate_arm_vehicle, icat_solve, make_nonreactive_task

SUCCESS = "success"
TIMEOUT = "timeout"
NUMERICAL = "numerical-error"


def build_action(scenario, agent, config, tool_pose, J_t, target, wrench):
    """Objective list of one agent for the current step."""
    obj = scenario.objectives
    n = config.n
    tasks = [
        joint_limits_task(config.q, agent.joint_limits, obj.joint_delta, obj.joint_gain, obj.priority_joint_limits, n),
        horizontal_attitude_task(config.eta2, obj.max_tilt, obj.tilt_delta, obj.attitude_gain, n, obj.priority_attitude),
    ]
    if scenario.force_torque_objective:
        tasks.append(
            force_torque_task(
                wrench, J_t, obj.force_gain, obj.torque_gain, obj.force_delta,
                obj.torque_delta, obj.priority_force_torque, rotation=tool_pose.rotation,
            )
        )
    tasks.append(tool_position_task(tool_pose, target, J_t, obj.tool_gain, obj.priority_tool))
    tasks.append(
        preferred_shape_task(config.q, agent.q_pref, obj.shape_tolerance, obj.shape_delta, obj.shape_gain, obj.priority_shape, n)
    )
    return ActionList.build(tasks, n)


def initial_world(scenario):
    """World state at t = 0 and the controller's (possibly erroneous) goal."""
    hole = scenario.hole
    hole_in_tip = Pose(rpy_to_matrix(scenario.start_rpy), scenario.start_offset)
    tip = hole.pose @ hole_in_tip.inverse()
    chain_a, config_a = agent_initial_setup(scenario.agents[0], tip)
    chain_b, config_b = agent_initial_setup(scenario.agents[1], tip)
    model = WorldModel(chain_a, chain_b, hole, scenario.peg, scenario.contact, scenario.pitch_margin)
    state = WorldState.initial(model, config_a, config_b)
    estimate = Pose(hole.pose.rotation, hole.pose.translation + scenario.goal_error)
    estimate = inject_pose_error(estimate, scenario.seed, scenario.vision_linear, scenario.vision_angular)
    goal = GoalFrame.from_pose(estimate, scenario.insertion_depth)
    return state, goal


@dataclass
class StepRecord:
    time: float
    config_a: np.ndarray
    config_b: np.ndarray
    tool_a: np.ndarray
    tool_b: np.ndarray
    wrench: np.ndarray
    goal_origin: np.ndarray
    residuals_a: list
    residuals_b: list
    packet_a: list
    packet_b: list
    ideal: np.ndarray
    blended: np.ndarray
    feasible: np.ndarray
    mu_a: float
    mu_b: float
    constraint_residual: float
    command_a: np.ndarray
    command_b: np.ndarray
    realized_a: np.ndarray
    realized_b: np.ndarray
    disturbance_a: np.ndarray
    disturbance_b: np.ndarray
    tool_velocity_a: np.ndarray
    tool_velocity_b: np.ndarray
    depth: float


@dataclass
class MissionReport:
    scenario: str
    n_joints: int
    level_names: list
    records: List[StepRecord] = field(default_factory=list)
    status: str = TIMEOUT
    message: str = ""
    insertion_depth: float = float("nan")
    final_error_linear: float = float("nan")
    final_error_angular: float = float("nan")
    final_goal_error_linear: float = float("nan")
    final_wrench_norm: float = float("nan")
    peak_wrench_norm: float = 0.0
    first_contact_time: float = None
    goal_shift: np.ndarray = field(default_factory=lambda: np.zeros(3))
    goal_residual: np.ndarray = field(default_factory=lambda: np.zeros(3))
    initial_goal: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def summary(self):
        return {
            "scenario": self.scenario,
            "status": self.status,
            "message": self.message,
            "steps": len(self.records),
            "insertion_depth": self.insertion_depth,
            "final_error_linear": self.final_error_linear,
            "final_error_angular": self.final_error_angular,
            "final_goal_error_linear": self.final_goal_error_linear,
            "final_wrench_norm": self.final_wrench_norm,
            "peak_wrench_norm": self.peak_wrench_norm,
            "first_contact_time": self.first_contact_time,
            "goal_shift": [float(v) for v in self.goal_shift],
            "goal_residual": [float(v) for v in self.goal_residual],
        }


def _pose_row(pose):
    return np.concatenate([pose.translation, pose.rpy])


def _finish(report, scenario, state, goal, true_goal):
    tip = state.tool_pose_a()
    target = true_goal.target_pose()
    err = pose_error(tip, target)
    report.insertion_depth = insertion_depth(tip, scenario.hole)
    report.final_error_linear = float(np.linalg.norm(err[:3]))
    report.final_error_angular = float(np.linalg.norm(err[3:]))
    report.final_goal_error_linear = float(np.linalg.norm(pose_error(tip, goal.target_pose())[:3]))
    report.final_wrench_norm = state.wrench.norm
    report.goal_shift = goal.origin - report.initial_goal
    report.goal_residual = goal.origin - true_goal.origin


def success_reached(report, scenario):
    return (
        abs(report.insertion_depth - scenario.insertion_depth) <= scenario.depth_tolerance
        and report.final_error_linear < scenario.error_tolerance
    )


def run_mission(scenario):
    """Run a scenario to completion and return its :class:`MissionReport`.

    Failures (singularity, impact on the hole face, non-finite solver values)
    end the run early with the corresponding status; the report always covers
    every executed step. Unless ``stop_on_success`` is set the mission runs
    for the full duration and success is judged on the final state against
    the true hole.
    """
    state, goal = initial_world(scenario)
    true_goal = GoalFrame.from_pose(scenario.hole.pose, scenario.insertion_depth)
    agents = scenario.agents
    model = state.model
    chains = (model.chain_a, model.chain_b)
    params = scenario.regularization
    limits = scenario.limits
    uplink = (MessageChannel(scenario.latency), MessageChannel(scenario.latency))
    downlink = MessageChannel(scenario.latency)

    report = MissionReport(scenario.name, agents[0].chain.n_joints, [], initial_goal=goal.origin.copy())
    dt = scenario.dt
    for step in range(scenario.steps):
        time = step * dt
        configs = (state.config_a, state.config_b)
        tools = (state.tool_pose_a(), state.tool_pose_b())
        jacobians = [tool_jacobian(ch, c) for ch, c in zip(chains, configs)]
        if scenario.change_goal:
            goal = change_goal(goal, state.wrench, tools[0].rotation, scenario.contact.change_goal_gain)
        target = goal.target_pose()

        try:
            actions = []
            packets = []
            for i in range(2):
                action = build_action(scenario, agents[i], configs[i], tools[i], jacobians[i], target, state.wrench)
                ydot, _ = icat_solve(action, params, limits)
                actions.append(action)
                packets.append(CooperationPacket.from_solution(jacobians[i], ydot))
            if not report.level_names:
                report.level_names = ["cooperative"] + [t.name for t in actions[0].tasks]
            for i in range(2):
                uplink[i].send(packets[i])
            received = [uplink[0].receive(), uplink[1].receive()]
            coordinator = CoordinatorState(scenario.mu0, target, scenario.objectives.tool_gain)
            if received[0] is None or received[1] is None:
                result = None
                downlink.send(np.zeros(6))
            else:
                result = coordination_round(received[0], received[1], coordinator, tools[0], detailed=True)
                downlink.send(result.feasible)
            shared = downlink.receive()
            if shared is None:
                shared = np.zeros(6)

            commands = []
            residuals = []
            for i in range(2):
                top = make_nonreactive_task(shared, jacobians[i], 0, name="cooperative")
                final = actions[i].prepend(top)
                ydot, (diag, _) = coordinate_arm_vehicle(final, None, params, limits)
                commands.append(ydot)
                residuals.append(diag.residuals)
        except NumericalError as exc:
            report.status = NUMERICAL
            report.message = str(exc)
            break

        new_state, outcome = step_world(state, commands[0], commands[1], dt)
        if result is None:
            ideal = blended = feasible = np.zeros(6)
            mu_a = mu_b = float("nan")
            c_res = 0.0
        else:
            ideal, blended, feasible = result.ideal, result.blended, result.feasible
            mu_a, mu_b = result.mu_a, result.mu_b
            c_res = float(np.linalg.norm(result.constraint @ result.feasible))
        wrench = state.wrench
        report.records.append(
            StepRecord(
                time=time,
                config_a=configs[0].as_array(),
                config_b=configs[1].as_array(),
                tool_a=_pose_row(tools[0]),
                tool_b=_pose_row(tools[1]),
                wrench=wrench.as_array(),
                goal_origin=goal.origin.copy(),
                residuals_a=residuals[0],
                residuals_b=residuals[1],
                packet_a=packets[0].to_record(),
                packet_b=packets[1].to_record(),
                ideal=ideal,
                blended=blended,
                feasible=feasible,
                mu_a=mu_a,
                mu_b=mu_b,
                constraint_residual=c_res,
                command_a=commands[0],
                command_b=commands[1],
                realized_a=outcome.realized_a,
                realized_b=outcome.realized_b,
                disturbance_a=outcome.disturbance_a,
                disturbance_b=outcome.disturbance_b,
                tool_velocity_a=jacobians[0] @ commands[0],
                tool_velocity_b=jacobians[1] @ commands[1],
                depth=insertion_depth(tools[0], scenario.hole),
            )
        )
        norm = wrench.norm
        report.peak_wrench_norm = max(report.peak_wrench_norm, norm)
        if norm > 0 and report.first_contact_time is None:
            report.first_contact_time = time
        if new_state.status != STATUS_OK:
            report.status = new_state.status
            report.message = new_state.message
            state = new_state
            break
        state = new_state
        if scenario.stop_on_success:
            _finish(report, scenario, state, goal, true_goal)
            if success_reached(report, scenario):
                report.status = SUCCESS
                break

    _finish(report, scenario, state, goal, true_goal)
    if report.status in (TIMEOUT, SUCCESS):
        report.status = SUCCESS if success_reached(report, scenario) else TIMEOUT
    report.peak_wrench_norm = max(report.peak_wrench_norm, report.final_wrench_norm)
    return report


def _fmt(value):
    return "%.9g" % value


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _labels(prefix, names):
    return [f"{prefix}{name}" for name in names]


def write_telemetry(report, out_dir):
    """Write one CSV per record family plus ``summary.json`` into ``out_dir``.

    Returns the list of written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    l = report.n_joints
    cfg = [f"q{i + 1}" for i in range(l)] + ["x", "y", "z", "roll", "pitch", "yaw"]
    vel = [f"qdot{i + 1}" for i in range(l)] + ["u", "v", "w", "p", "q", "r"]
    pose = ["x", "y", "z", "roll", "pitch", "yaw"]
    twist = ["vx", "vy", "vz", "wx", "wy", "wz"]
    recs = report.records
    files = {}

    files["poses.csv"] = (
        ["time"] + _labels("a_", cfg) + _labels("b_", cfg) + _labels("tool_a_", pose) + _labels("tool_b_", pose) + ["depth"],
        [[r.time, *r.config_a, *r.config_b, *r.tool_a, *r.tool_b, r.depth] for r in recs],
    )
    files["wrench.csv"] = (
        ["time", "fx", "fy", "fz", "mx", "my", "mz", "norm"],
        [[r.time, *r.wrench, np.linalg.norm(r.wrench)] for r in recs],
    )
    files["goal.csv"] = (
        ["time", "gx", "gy", "gz"],
        [[r.time, *r.goal_origin] for r in recs],
    )
    levels = report.level_names
    files["solver.csv"] = (
        ["time"] + _labels("a_", levels) + _labels("b_", levels),
        [[r.time, *r.residuals_a, *r.residuals_b] for r in recs],
    )
    packet = _labels("xt_", twist) + [f"P{i}{j}" for i in range(6) for j in range(6)]
    files["cooperation.csv"] = (
        ["time"] + _labels("a_", packet) + _labels("b_", packet) + _labels("ideal_", twist)
        + _labels("blended_", twist) + _labels("feasible_", twist) + ["mu_a", "mu_b", "constraint_residual"],
        [
            [r.time, *r.packet_a, *r.packet_b, *r.ideal, *r.blended, *r.feasible, r.mu_a, r.mu_b, r.constraint_residual]
            for r in recs
        ],
    )
    families = ("command", "realized", "disturbance")
    header = ["time"]
    for agent in ("a", "b"):
        for fam in families:
            header += _labels(f"{agent}_{fam}_", vel)
        header += _labels(f"{agent}_tool_", twist)
    files["velocities.csv"] = (
        header,
        [
            [r.time, *r.command_a, *r.realized_a, *r.disturbance_a, *r.tool_velocity_a,
             *r.command_b, *r.realized_b, *r.disturbance_b, *r.tool_velocity_b]
            for r in recs
        ],
    )
    written = []
    for name, (head, rows) in files.items():
        path = os.path.join(out_dir, name)
        _write_csv(path, head, rows)
        written.append(path)
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(report.summary()), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)
    return written


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, float):
        return None if not np.isfinite(obj) else float(_fmt(obj))
    return obj
