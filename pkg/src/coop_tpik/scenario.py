"""
Scenario files.

A scenario is plain text made of ``[section]`` headers followed by
``key = value`` lines. ``#`` starts a comment. Vectors are comma separated;
matrices separate rows with ``;``. The ``[agent]`` section appears once per
agent (exactly two). Every key is optional and falls back to the defaults
documented in ``scenarios/README.txt``.

Errors carry the file name and line number of the offending entry.
"""

import os
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import List

import numpy as np

from .algebra import RegularizationParams, VelocityLimits
from .errors import ContractViolation, ScenarioError
from .kinematics import ChainModel, Pose, SystemConfiguration, default_chain, vehicle_to_tool
from .objectives import ObjectiveConfig
from .simulation import ContactParams, HoleModel, PegModel

BUNDLED = ("scenario_1_perfect", "scenario_2_goal_error", "scenario_3_vision")


@dataclass
class Entry:
    value: str
    line: int


@dataclass
class Section:
    name: str
    line: int
    entries: dict = field(default_factory=dict)


def parse_text(text, path=None):
    """Split scenario text into sections, keeping line numbers."""
    sections = []
    current = None
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ScenarioError(f"malformed section header {raw.strip()!r}", number, path)
            current = Section(line[1:-1].strip().lower(), number)
            sections.append(current)
            continue
        if "=" not in line:
            raise ScenarioError(f"expected 'key = value', got {raw.strip()!r}", number, path)
        if current is None:
            raise ScenarioError("entry before any [section] header", number, path)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ScenarioError("empty key", number, path)
        if key in current.entries:
            raise ScenarioError(f"duplicate key {key!r} in [{current.name}]", number, path)
        current.entries[key] = Entry(value, number)
    return sections


class _Reader:
    """Typed access to one section that remembers which keys were consumed."""

    def __init__(self, section, path):
        self.section = section
        self.path = path
        self.used = set()

    def _get(self, key):
        self.used.add(key)
        return self.section.entries.get(key) if self.section else None

    def fail(self, key, message):
        entry = self.section.entries.get(key) if self.section else None
        line = entry.line if entry else (self.section.line if self.section else None)
        raise ScenarioError(message, line, self.path)

    def float(self, key, default):
        entry = self._get(key)
        if entry is None:
            return default
        try:
            return float(entry.value)
        except ValueError:
            raise ScenarioError(f"{key}: expected a number, got {entry.value!r}", entry.line, self.path)

    def int(self, key, default):
        entry = self._get(key)
        if entry is None:
            return default
        try:
            return int(entry.value)
        except ValueError:
            raise ScenarioError(f"{key}: expected an integer, got {entry.value!r}", entry.line, self.path)

    def bool(self, key, default):
        entry = self._get(key)
        if entry is None:
            return default
        text = entry.value.lower()
        if text in ("true", "yes", "on", "1"):
            return True
        if text in ("false", "no", "off", "0"):
            return False
        raise ScenarioError(f"{key}: expected true/false, got {entry.value!r}", entry.line, self.path)

    def str(self, key, default):
        entry = self._get(key)
        return default if entry is None else entry.value

    def vector(self, key, default, size=None):
        entry = self._get(key)
        if entry is None:
            return None if default is None else np.array(default, dtype=float)
        try:
            vec = np.array([float(v) for v in entry.value.replace(",", " ").split()])
        except ValueError:
            raise ScenarioError(f"{key}: expected numbers, got {entry.value!r}", entry.line, self.path)
        if size is not None and vec.size != size:
            raise ScenarioError(f"{key}: expected {size} values, got {vec.size}", entry.line, self.path)
        return vec

    def matrix(self, key, default, cols):
        entry = self._get(key)
        if entry is None:
            return None if default is None else np.array(default, dtype=float)
        rows = []
        for chunk in entry.value.split(";"):
            if not chunk.strip():
                continue
            try:
                row = [float(v) for v in chunk.replace(",", " ").split()]
            except ValueError:
                raise ScenarioError(f"{key}: expected numbers, got {chunk.strip()!r}", entry.line, self.path)
            if len(row) != cols:
                raise ScenarioError(f"{key}: each row needs {cols} values", entry.line, self.path)
            rows.append(row)
        if not rows:
            raise ScenarioError(f"{key}: empty matrix", entry.line, self.path)
        return np.array(rows)

    def check_unused(self):
        if self.section is None:
            return
        for key, entry in self.section.entries.items():
            if key not in self.used:
                raise ScenarioError(f"unknown key {key!r} in [{self.section.name}]", entry.line, self.path)


@dataclass
class AgentSpec:
    name: str
    chain: ChainModel
    q_init: np.ndarray
    joint_limits: np.ndarray
    q_pref: np.ndarray
    grasp_distance: float


@dataclass
class Scenario:
    name: str
    agents: List[AgentSpec]
    hole: HoleModel
    peg: PegModel
    insertion_depth: float = 0.2
    goal_error: np.ndarray = field(default_factory=lambda: np.zeros(3))
    vision_linear: float = 0.0
    vision_angular: float = 0.0
    start_offset: np.ndarray = field(default_factory=lambda: np.array([0.441, -0.008, -0.018]))
    start_rpy: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, np.radians(1.942)]))
    change_goal: bool = False
    force_torque_objective: bool = False
    objectives: ObjectiveConfig = field(default_factory=ObjectiveConfig)
    limits: VelocityLimits = None
    contact: ContactParams = field(default_factory=ContactParams)
    regularization: RegularizationParams = field(default_factory=RegularizationParams)
    duration: float = 60.0
    dt: float = 0.1
    seed: int = 0
    mu0: float = 0.1
    latency: int = 0
    pitch_margin: float = 0.1
    depth_tolerance: float = 0.01
    error_tolerance: float = 0.01
    stop_on_success: bool = False
    path: str = None

    @property
    def steps(self):
        return int(round(self.duration / self.dt))

    def with_overrides(self, **kwargs):
        return replace(self, **kwargs)


DEFAULT_Q_INIT = (0.0, 0.5, -1.0, 0.5)
DEFAULT_JOINT_LIMITS = ((-1.5, 1.5), (-0.5, 1.5), (-2.2, 0.2), (-0.8, 1.8))


def _agent(reader, default_name):
    dh = reader.matrix("dh", None, 4)
    mount_xyz = reader.vector("mount_xyz", (0.6, 0.0, 0.3), 3)
    mount_rpy = reader.vector("mount_rpy", (0.0, 0.0, 0.0), 3)
    base = default_chain()
    rows = base.dh_rows if dh is None else dh
    chain = ChainModel(rows, Pose.from_xyz_rpy(mount_xyz, mount_rpy))
    l = chain.n_joints
    q_default = DEFAULT_Q_INIT if l == 4 else np.zeros(l)
    q_init = reader.vector("q_init", q_default, l)
    limits_default = DEFAULT_JOINT_LIMITS if l == 4 else [(-np.pi, np.pi)] * l
    limits = reader.matrix("joint_limits", limits_default, 2)
    if limits.shape[0] != l:
        reader.fail("joint_limits", f"joint_limits needs {l} rows, got {limits.shape[0]}")
    if np.any(limits[:, 0] >= limits[:, 1]):
        reader.fail("joint_limits", "joint_limits rows need min < max")
    q_pref = reader.vector("q_pref", q_init, l)
    grasp = reader.float("grasp_distance", 2.0)
    if not grasp > 0:
        reader.fail("grasp_distance", "grasp_distance must be > 0")
    name = reader.str("name", default_name)
    reader.check_unused()
    return AgentSpec(name, chain, q_init, limits, q_pref, grasp)


def _wrap(reader, key, build):
    """Run a dataclass constructor, mapping its contract errors onto ``key``'s line."""
    try:
        return build()
    except ContractViolation as exc:
        reader.fail(key, str(exc))


def scenario_from_text(text, path=None):
    sections = parse_text(text, path)
    known = {
        "mission", "flags", "hole", "peg", "goal", "start", "contact",
        "limits", "regularization", "objectives", "agent",
    }
    by_name = {}
    agents = []
    for sec in sections:
        if sec.name not in known:
            raise ScenarioError(f"unknown section [{sec.name}]", sec.line, path)
        if sec.name == "agent":
            agents.append(sec)
        elif sec.name in by_name:
            raise ScenarioError(f"section [{sec.name}] repeated", sec.line, path)
        else:
            by_name[sec.name] = sec

    def reader(name):
        return _Reader(by_name.get(name), path)

    r = reader("mission")
    name = r.str("name", os.path.splitext(os.path.basename(path))[0] if path else "scenario")
    duration = r.float("duration", 60.0)
    dt = r.float("dt", 0.1)
    if not dt > 0:
        r.fail("dt", "dt must be > 0")
    if not duration >= dt:
        r.fail("duration", "duration must be at least one step")
    seed = r.int("seed", 0)
    mu0 = r.float("mu0", 0.1)
    if not mu0 > 0:
        r.fail("mu0", "mu0 must be > 0")
    latency = r.int("latency", 0)
    if latency < 0:
        r.fail("latency", "latency must be >= 0")
    pitch_margin = r.float("pitch_margin", 0.1)
    depth_tol = r.float("depth_tolerance", 0.01)
    error_tol = r.float("error_tolerance", 0.01)
    stop = r.bool("stop_on_success", False)
    r.check_unused()

    r = reader("flags")
    change = r.bool("change_goal", False)
    ft = r.bool("force_torque_objective", False)
    r.check_unused()

    r = reader("hole")
    hole_pose = Pose.from_xyz_rpy(
        r.vector("position", (0.0, 0.0, 0.0), 3),
        np.radians(r.vector("rpy_deg", (0.0, 0.0, 90.0), 3)),
    )
    radius = r.float("radius", 0.07)
    depth = r.float("depth", 0.3)
    half = r.float("face_halfwidth", 0.5)
    hole = _wrap(r, "radius", lambda: HoleModel(hole_pose, radius, depth, half))
    r.check_unused()

    r = reader("peg")
    peg = _wrap(r, "radius", lambda: PegModel(r.float("length", 6.0), r.float("radius", 0.05)))
    if not peg.radius < hole.radius:
        r.fail("radius", f"peg radius {peg.radius} must be smaller than hole radius {hole.radius}")
    r.check_unused()

    r = reader("goal")
    insertion = r.float("insertion_depth", 0.2)
    if not 0 <= insertion <= hole.depth:
        r.fail("insertion_depth", f"insertion_depth must lie in [0, hole depth {hole.depth}]")
    goal_error = r.vector("error", (0.0, 0.0, 0.0), 3)
    vision_lin = r.float("vision_linear", 0.0)
    vision_ang = r.float("vision_angular", 0.0)
    if vision_lin < 0 or vision_ang < 0:
        r.fail("vision_linear" if vision_lin < 0 else "vision_angular", "vision error bounds must be >= 0")
    r.check_unused()

    r = reader("start")
    start_offset = r.vector("hole_in_tip", (0.441, -0.008, -0.018), 3)
    start_rpy = np.radians(r.vector("hole_in_tip_rpy_deg", (0.0, 0.0, 1.942), 3))
    r.check_unused()

    r = reader("contact")
    defaults = ContactParams()
    values = {
        key: r.float(key, getattr(defaults, key))
        for key in ("stiffness", "k_q", "k_v1", "k_v2", "grasp_gain", "change_goal_gain", "margin")
    }
    values["sample_count"] = r.int("sample_count", defaults.sample_count)
    contact = _wrap(r, "stiffness", lambda: ContactParams(**values))
    r.check_unused()

    r = reader("regularization")
    reg = _wrap(
        r,
        "sv_threshold",
        lambda: RegularizationParams(r.float("sv_threshold", 0.01), r.float("damping_max", 0.01)),
    )
    r.check_unused()

    r = reader("objectives")
    base = ObjectiveConfig()
    obj_values = {}
    for key, value in vars(base).items():
        if isinstance(value, int) and not isinstance(value, bool) and key.startswith("priority"):
            obj_values[key] = r.int(key, value)
        else:
            obj_values[key] = r.float(key, value)
    objectives = _wrap(r, "tool_gain", lambda: ObjectiveConfig(**obj_values))
    r.check_unused()

    if len(agents) != 2:
        line = agents[-1].line if agents else None
        raise ScenarioError(f"exactly two [agent] sections are required, found {len(agents)}", line, path)
    agent_specs = []
    for sec, default_name in zip(agents, ("a", "b")):
        agent_specs.append(_agent(_Reader(sec, path), default_name))

    r = reader("limits")
    l = agent_specs[0].chain.n_joints
    if agent_specs[1].chain.n_joints != l:
        raise ScenarioError("both agents must have the same number of joints", agents[1].line, path)
    limits = _wrap(
        r,
        "joint_max",
        lambda: VelocityLimits(
            tuple(r.vector("joint_max", [1.0] * l, None) * np.ones(l)),
            r.float("linear_max", 1.0),
            r.float("angular_max", 1.0),
        ),
    )
    r.check_unused()

    return Scenario(
        name=name,
        agents=agent_specs,
        hole=hole,
        peg=peg,
        insertion_depth=insertion,
        goal_error=goal_error,
        vision_linear=vision_lin,
        vision_angular=vision_ang,
        start_offset=start_offset,
        start_rpy=start_rpy,
        change_goal=change,
        force_torque_objective=ft,
        objectives=objectives,
        limits=limits,
        contact=contact,
        regularization=reg,
        duration=duration,
        dt=dt,
        seed=seed,
        mu0=mu0,
        latency=latency,
        pitch_margin=pitch_margin,
        depth_tolerance=depth_tol,
        error_tolerance=error_tol,
        stop_on_success=stop,
        path=path,
    )


def bundled_path(name):
    """Filesystem path of a scenario shipped with the package."""
    ref = resources.files("coop_tpik") / "scenarios" / f"{name}.cfg"
    return str(ref)


def resolve_path(path_or_name):
    path = os.fspath(path_or_name)
    if os.path.exists(path):
        return path
    stem = os.path.splitext(os.path.basename(path))[0]
    if stem in BUNDLED and not os.path.dirname(path):
        return bundled_path(stem)
    return path


def load_scenario(path_or_name):
    """Read and validate a scenario file (or the name of a bundled one)."""
    path = resolve_path(path_or_name)
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", None, path) from exc
    return scenario_from_text(text, path)


def agent_initial_setup(agent, tip_pose):
    """Tool mount and initial configuration placing the tip at ``tip_pose``.

    The grasp point is the end-effector at ``q_init``; the tip lies
    ``grasp_distance`` ahead of it along the vehicle's x axis, with the tool
    frame aligned to the vehicle frame. Returns ``(chain, configuration)``.
    """
    ee = vehicle_to_tool(agent.chain.with_tool(Pose()), agent.q_init)
    tool_in_vehicle = Pose(np.eye(3), ee.translation + np.array([agent.grasp_distance, 0.0, 0.0]))
    chain = agent.chain.with_tool(ee.inverse() @ tool_in_vehicle)
    vehicle = tip_pose @ tool_in_vehicle.inverse()
    config = SystemConfiguration(agent.q_init, vehicle.translation, vehicle.rpy)
    return chain, config
