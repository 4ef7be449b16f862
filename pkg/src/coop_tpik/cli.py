"""
Command line entry point: ``coop-tpik run | validate | sweep``.

Exit codes: 0 success, 2 invalid scenario or arguments, 3 timeout,
4 external contact, 5 singularity, 6 numerical error.
"""

import argparse
import sys

import numpy as np

from .errors import ScenarioError
from .mission import NUMERICAL, SUCCESS, TIMEOUT, run_mission, write_telemetry
from .scenario import load_scenario
from .simulation import STATUS_EXTERNAL_CONTACT, STATUS_SINGULARITY

EXIT_CODES = {
    SUCCESS: 0,
    TIMEOUT: 3,
    STATUS_EXTERNAL_CONTACT: 4,
    STATUS_SINGULARITY: 5,
    NUMERICAL: 6,
}
EXIT_INVALID = 2


def _add_mission_flags(p):
    p.add_argument("--scenario", required=True, help="scenario file or bundled scenario name")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--duration", type=float, help="override the duration in seconds")
    p.add_argument("--dt", type=float, help="override the control step in seconds")
    p.add_argument("--enable-change-goal", dest="change_goal", action="store_const", const=True)
    p.add_argument("--disable-change-goal", dest="change_goal", action="store_const", const=False)
    p.add_argument("--enable-ft-objective", dest="ft_objective", action="store_const", const=True)
    p.add_argument("--disable-ft-objective", dest="ft_objective", action="store_const", const=False)


def build_parser():
    parser = argparse.ArgumentParser(prog="coop-tpik", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one mission and write telemetry")
    _add_mission_flags(run)
    run.add_argument("--out", help="telemetry directory (omit to skip writing)")

    val = sub.add_parser("validate", help="parse and check a scenario file")
    val.add_argument("--scenario", required=True)

    sweep = sub.add_parser("sweep", help="run a scenario for several goal x errors")
    _add_mission_flags(sweep)
    sweep.add_argument(
        "--errors", required=True, help="comma separated goal x errors in metres, e.g. 0,0.005,0.015"
    )
    sweep.add_argument("--out", help="write one telemetry directory per run below this path")
    return parser


def _apply_overrides(scenario, args):
    changes = {}
    for key in ("seed", "duration", "dt"):
        value = getattr(args, key, None)
        if value is not None:
            changes[key] = value
    if args.change_goal is not None:
        changes["change_goal"] = args.change_goal
    if args.ft_objective is not None:
        changes["force_torque_objective"] = args.ft_objective
    if "dt" in changes and not changes["dt"] > 0:
        raise ScenarioError("--dt must be > 0")
    if "duration" in changes and not changes["duration"] >= changes.get("dt", scenario.dt):
        raise ScenarioError("--duration must cover at least one step")
    return scenario.with_overrides(**changes)


def _print_summary(report, out=sys.stdout):
    s = report.summary()
    print(f"scenario   {s['scenario']}", file=out)
    print(f"status     {s['status']}" + (f" ({s['message']})" if s["message"] else ""), file=out)
    print(f"steps      {s['steps']}", file=out)
    print(f"depth      {s['insertion_depth']:.4f} m", file=out)
    print(f"error      {s['final_error_linear']:.4f} m  {s['final_error_angular']:.4f} rad", file=out)
    print(f"wrench     final {s['final_wrench_norm']:.4f}  peak {s['peak_wrench_norm']:.4f}", file=out)


def cmd_run(args):
    scenario = _apply_overrides(load_scenario(args.scenario), args)
    report = run_mission(scenario)
    _print_summary(report)
    if args.out:
        write_telemetry(report, args.out)
        print(f"telemetry  {args.out}")
    return EXIT_CODES.get(report.status, 1)


def cmd_validate(args):
    scenario = load_scenario(args.scenario)
    print(f"{scenario.path}: ok ({scenario.name}, {scenario.steps} steps of {scenario.dt} s)")
    return 0


def cmd_sweep(args):
    try:
        errors = [float(v) for v in args.errors.split(",") if v.strip()]
    except ValueError:
        raise ScenarioError(f"--errors: expected comma separated numbers, got {args.errors!r}")
    base = _apply_overrides(load_scenario(args.scenario), args)
    print(f"{'error_x':>9} {'status':>17} {'depth':>8} {'lin_err':>8} {'f_final':>8} {'f_peak':>8}")
    worst = 0
    for ex in errors:
        goal_error = np.array(base.goal_error, dtype=float)
        goal_error[0] = ex
        report = run_mission(base.with_overrides(goal_error=goal_error))
        s = report.summary()
        print(
            f"{ex:9.4f} {s['status']:>17} {s['insertion_depth']:8.4f} "
            f"{s['final_error_linear']:8.4f} {s['final_wrench_norm']:8.4f} {s['peak_wrench_norm']:8.4f}"
        )
        if args.out:
            write_telemetry(report, f"{args.out}/error_{ex:+.4f}")
        worst = max(worst, EXIT_CODES.get(report.status, 1))
    return worst


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "validate": cmd_validate, "sweep": cmd_sweep}
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
