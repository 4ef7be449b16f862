"""
Task-priority inverse kinematics for two cooperating vehicle-manipulator
systems, with a kinematic peg-in-hole simulator.
"""

from .algebra import ActivationBand, RegularizationParams, VelocityLimits, activation_scalar, regularized_pinv, saturate
from .errors import ContractViolation, InputError, NumericalError, ScenarioError, SingularityError
from .kinematics import (
    ChainModel,
    Pose,
    SystemConfiguration,
    SystemVelocity,
    default_chain,
    forward_kinematics,
    integrate_configuration,
    pose_error,
    tool_jacobian,
)
from .solver import ActionList, TaskSpec, coordinate_arm_vehicle, icat_solve, make_nonreactive_task

from .cooperation import CooperationPacket, CoordinatorState, MessageChannel, coordination_round
from .mission import MissionReport, run_mission, write_telemetry
from .objectives import ObjectiveConfig, Wrench
from .scenario import Scenario, load_scenario
from .simulation import ContactParams, GoalFrame, HoleModel, PegModel, WorldState, step_world

__version__ = "0.1.0"
