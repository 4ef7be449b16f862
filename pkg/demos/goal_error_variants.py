"""Compare the three insertion-aid settings on the displaced-goal scenario."""

from coop_tpik import load_scenario, run_mission

base = load_scenario("scenario_2_goal_error")
variants = [
    ("vanilla", dict(change_goal=False, force_torque_objective=False)),
    ("change goal", dict(change_goal=True, force_torque_objective=False)),
    ("change goal + ft", dict(change_goal=True, force_torque_objective=True)),
]

print("%-18s %-8s %8s %8s %8s %9s" % ("variant", "status", "err", "f_end", "f_peak", "goal dx"))
for label, flags in variants:
    r = run_mission(base.with_overrides(**flags))
    print("%-18s %-8s %8.4f %8.4f %8.4f %+9.4f" % (
        label, r.status, r.final_error_linear, r.final_wrench_norm, r.peak_wrench_norm, r.goal_shift[0]))
