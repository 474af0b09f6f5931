"""Command-line front end.

Subcommands::

    monoride simulate CONFIG --current A [--input-csv F] [--out DIR]
    monoride bangride CONFIG [--out DIR]
    monoride check-monotone CONFIG [--u-min A --u-max A]
    monoride necessity CONFIG TRAJECTORY_CSV
    monoride oracle CONFIG [--out DIR]
    monoride plot TRAJECTORY_CSV --config CONFIG [--out FILE]

Exit codes: 0 success (including "reporting" outcomes such as a
non-monotone verdict), 2 configuration problem, 3 infeasible problem,
4 numerical blow-up, 5 improvement-certificate failure.

The environment variable ``MONORIDE_LOG`` sets the log level
(error/warn/info/debug).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .chart import emit_chart, panels_from_trajectory, render_chart
from .config import Problem, build_problem, load_config
from .constraints import verify_nonincreasing_in_u
from .dynamics import ecm_voltage
from .errors import (AllInadmissibleError, CertificationError, ConfigError,
                     IntegrationBlowupError, MonorideError, ParameterError,
                     RideInfeasibleError)
from .bangride import engaged_profile, simulate_bang_ride
from .optimality import brute_force_best, necessity_check, oracle_gap
from .ordering import check_excitability, check_kamke_muller
from .simulate import Trajectory, cost, integrate, max_violation, zero_order_hold

log = logging.getLogger("monoride")

EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_BLOWUP = 4
EXIT_CERTIFICATE = 5


def _setup_logging() -> None:
    level = {"error": logging.ERROR, "warn": logging.WARNING,
             "info": logging.INFO, "debug": logging.DEBUG}.get(
        os.environ.get("MONORIDE_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _load_problem(config_path: str) -> Problem:
    cfg = load_config(config_path)
    return build_problem(cfg, base_dir=Path(config_path).parent)


def _write_trajectory(traj: Trajectory, problem: Problem, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    traj.to_csv(out_dir / "trajectory.csv")

    names = problem.constraint_set.names
    profile = engaged_profile(traj, problem.constraint_set)
    with open(out_dir / "engaged.csv", "w", newline="\n") as fh:
        fh.write("t,engaged\n")
        for t, idx in zip(traj.times, profile):
            fh.write(f"{t:.17g},{'|'.join(names[k] for k in idx)}\n")

    voltage = None
    if problem.ecm_params is not None:
        voltage = ecm_voltage(problem.ecm_params,
                              traj.states[:, :problem.ecm_params.n_states],
                              traj.inputs[:, 0])
    panels = panels_from_trajectory(traj, problem.system.labels, voltage)
    with open(out_dir / "chart.svg", "w", newline="\n") as fh:
        fh.write(render_chart(traj.times, panels))
    print(f"wrote {out_dir / 'trajectory.csv'}, engaged.csv and chart.svg")


def _cmd_simulate(args) -> int:
    problem = _load_problem(args.config)
    if args.input_csv:
        source = Trajectory.from_csv(args.input_csv)
        control = zero_order_hold(source)
    elif args.current is not None:
        level = float(args.current)
        control = lambda t: np.array([level])  # noqa: E731
    else:
        raise ConfigError("simulate needs --current or --input-csv")
    traj = integrate(problem.system, problem.x0, control, problem.t_f, problem.dt)
    worst, t_worst, k_worst = max_violation(traj, problem.constraint_set)
    j = cost(traj, problem.running_cost)
    print(f"cost = {j:.10g}")
    print(f"worst residual = {worst:.6g} ('{problem.constraint_set.names[k_worst]}' at t = {t_worst:.6g})")
    _write_trajectory(traj, problem, Path(args.out))
    return 0


def _cmd_bangride(args) -> int:
    problem = _load_problem(args.config)
    traj = simulate_bang_ride(problem.system, problem.x0, problem.policy,
                              problem.t_f, problem.dt)
    j = cost(traj, problem.running_cost)
    worst, t_worst, k_worst = max_violation(traj, problem.constraint_set)
    print(f"cost = {j:.10g}")
    print(f"worst residual = {worst:.6g} ('{problem.constraint_set.names[k_worst]}' at t = {t_worst:.6g})")
    _write_trajectory(traj, problem, Path(args.out))
    return 0


def _cmd_check_monotone(args) -> int:
    problem = _load_problem(args.config)
    n = problem.system.n_states
    u_lo = problem.policy.u_min if args.u_min is None else float(args.u_min)
    u_hi = problem.input_bound if args.u_max is None else float(args.u_max)

    state_box = [(0.0, 1.0)] * n
    cfg = load_config(args.config)
    for spec in cfg.constraints:
        if spec.kind == "state_upper":
            state_box[spec.state - 1] = (0.0, spec.bound)
        if spec.kind == "temperature_upper":
            state_box[n - 1] = (0.0, spec.bound)
    box = state_box + [(u_lo, u_hi)]

    report = check_kamke_muller(problem.system, box, seed=problem.seed)
    print(f"monotonicity ({report.method}, box u in [{u_lo:g}, {u_hi:g}]): {report.verdict}")
    for w in report.witnesses[:5]:
        print(f"  witness: d f[{w.to_index}] / d {w.wrt}[{w.from_index}] "
              f"= {w.estimate:.4g} at x={w.at_state} u={w.at_input}")

    exc = check_excitability(problem.system, box, seed=problem.seed)
    print(f"excitability ({exc.method}): {'yes' if exc.excitable else 'no'}")
    for i, j in exc.unreachable[:5]:
        print(f"  input {i} cannot reach state {j}")

    reports = verify_nonincreasing_in_u(problem.constraint_set, box,
                                        n_states=n, seed=problem.seed)
    for rep in reports:
        status = "non-increasing in u" if rep.nonincreasing else "INCREASES with u"
        print(f"constraint '{rep.name}': {status} (max sampled derivative {rep.max_derivative:.3g})")
    return 0


def _cmd_necessity(args) -> int:
    problem = _load_problem(args.config)
    traj = Trajectory.from_csv(args.trajectory)
    verdict = necessity_check(problem.system, traj, problem.constraint_set,
                              problem.running_cost, tol_engaged=args.tol_engaged)
    if verdict.not_optimal:
        t0, margin = verdict.interior_tail
        imp = verdict.improvement
        print(f"not optimal: every constraint stays slack (> {args.tol_engaged:g}) "
              f"from t = {t0:.6g} to the end (min residual {margin:.6g})")
        print(f"improvement: bump height {imp.bump_height:g} on "
              f"[{imp.bump_start:.6g}, {imp.bump_start + imp.bump_width:.6g}] "
              f"raises the cost by {imp.delta_cost:.6g}")
    else:
        print("passes the necessity test: no strictly slack terminal window "
              "(necessary for optimality, not sufficient)")
    return 0


def _cmd_oracle(args) -> int:
    problem = _load_problem(args.config)
    if problem.oracle is None:
        raise ConfigError("config has no 'oracle' block")
    result = oracle_gap(problem.system, problem.x0, problem.constraint_set,
                        problem.running_cost, problem.t_f,
                        problem.oracle.n_steps, problem.oracle.levels,
                        problem.policy, problem.dt)
    print(f"bang-and-ride cost = {result.cost_bang_ride:.10g}")
    print(f"oracle best cost   = {result.cost_oracle:.10g} "
          f"({result.oracle.n_admissible}/{result.oracle.n_evaluated} admissible)")
    print(f"gap (oracle - bang-and-ride) = {result.gap:.6g}")
    print(f"oracle best sequence: {[round(v, 6) for v in result.oracle.best_sequence]}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    result.oracle.to_csv(out_dir / "oracle.csv")
    print(f"wrote {out_dir / 'oracle.csv'}")
    return 0


def _cmd_plot(args) -> int:
    voltage = None
    labels: tuple[str, ...] = ()
    if args.config:
        problem = _load_problem(args.config)
        labels = problem.system.labels
        traj = Trajectory.from_csv(args.trajectory)
        if problem.ecm_params is not None:
            voltage = ecm_voltage(problem.ecm_params,
                                  traj.states[:, :problem.ecm_params.n_states],
                                  traj.inputs[:, 0])
    emit_chart(args.trajectory, None, args.out, state_labels=labels, voltage=voltage)
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monoride",
        description="Constrained charging of monotone battery models")
    parser.add_argument("--version", action="version", version=f"monoride {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="open-loop run with a given input profile")
    p.add_argument("config")
    p.add_argument("--current", type=float, default=None, help="constant current [A]")
    p.add_argument("--input-csv", default=None, help="trajectory CSV whose input column is replayed")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("bangride", help="closed-loop bang-and-ride run")
    p.add_argument("config")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=_cmd_bangride)

    p = sub.add_parser("check-monotone", help="monotonicity / excitability / constraint-direction report")
    p.add_argument("config")
    p.add_argument("--u-min", type=float, default=None)
    p.add_argument("--u-max", type=float, default=None)
    p.set_defaults(func=_cmd_check_monotone)

    p = sub.add_parser("necessity", help="interior-tail necessity verdict on a trajectory CSV")
    p.add_argument("config")
    p.add_argument("trajectory")
    p.add_argument("--tol-engaged", type=float, default=1e-4)
    p.set_defaults(func=_cmd_necessity)

    p = sub.add_parser("oracle", help="brute-force oracle and gap versus bang-and-ride")
    p.add_argument("config")
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=_cmd_oracle)

    p = sub.add_parser("plot", help="render a trajectory CSV to an SVG chart")
    p.add_argument("trajectory")
    p.add_argument("--config", default=None, help="config for labels and the derived voltage panel")
    p.add_argument("--out", default="chart.svg")
    p.set_defaults(func=_cmd_plot)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        log.error("%s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RideInfeasibleError, AllInadmissibleError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except IntegrationBlowupError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except CertificationError as exc:
        print(f"certificate failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATE
    except MonorideError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
