"""Run the perfect-pose insertion and print the contact force over time."""

import sys

import numpy as np

from coop_tpik import load_scenario, run_mission

name = sys.argv[1] if len(sys.argv) > 1 else "scenario_1_perfect"
report = run_mission(load_scenario(name))
print(report.status, "depth %.4f m  error %.4f m" % (report.insertion_depth, report.final_error_linear))
print("first contact at %.1f s, peak |wrench| %.3f" % (report.first_contact_time, report.peak_wrench_norm))

for r in report.records[:150:5]:
    f = np.linalg.norm(r.wrench[:3])
    bar = "#" * int(round(4 * f))
    print("%6.1f s  depth %+.3f  |f| %6.3f  %s" % (r.time, r.depth, f, bar))
