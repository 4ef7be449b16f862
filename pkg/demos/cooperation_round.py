"""Two agents with different reachable tool-velocity sets agree on one velocity.

Agent b cannot produce any tool yaw rate, so the coordinator's output has
no yaw component even though agent a asks for one.
"""

import numpy as np

from coop_tpik import CooperationPacket, CoordinatorState, Pose, coordination_round

goal = Pose.from_xyz_rpy((0.5, 0.0, 0.0), (0.0, 0.0, 0.3))
tool = Pose()

J_a = np.eye(6)
J_b = np.eye(6)[:, :5]  # no yaw column

x_a = np.array([0.1, 0.0, 0.0, 0.0, 0.0, 0.06])
x_b = np.array([0.05, 0.0, 0.0, 0.0, 0.0, 0.0])

packet_a = CooperationPacket(x_a, J_a @ np.linalg.pinv(J_a))
packet_b = CooperationPacket(x_b, J_b @ np.linalg.pinv(J_b))
state = CoordinatorState(mu0=0.1, goal=goal, ideal_gain=0.2)

r = coordination_round(packet_a, packet_b, state, tool, detailed=True)
np.set_printoptions(precision=4, suppress=True)
print("ideal     ", r.ideal)
print("weights    a %.3f  b %.3f" % (r.mu_a, r.mu_b))
print("blended   ", r.blended)
print("feasible  ", r.feasible)
print("|C x|      %.2e" % np.linalg.norm(r.constraint @ r.feasible))
