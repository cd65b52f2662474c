"""Command-line entry point exposing every solver and the sweep harness.

All diagnostics go to standard error; data goes to files (via --out) or to
standard output. Exit codes: 0 success, 2 validation/input error, 1 internal
error. Scenario and trajectory files use the JSON schemas of the model
module; dB/dBm fields are converted to linear units at this boundary only.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .gridopt import PowerGrid
from .harness import emit_outputs, run_sweep, sweep_spec_from_json
from .hoverfly import build_hover_fly
from .minmax import HoverSet, solve_minmax_ideal, time_sharing_lp
from .model import (
    DomainError,
    ValidationError,
    energy_along,
    power_profile,
    report_to_json,
    scenario_from_json,
    trajectory_from_json,
    trajectory_to_json,
)
from .scp import default_slots, discretize, scp_optimize
from .simplex import LpError
from .sumenergy import solve_sum_energy
from .harness import discrete_to_trajectory

log = logging.getLogger("uavwpt")


class CliError(Exception):
    """Input or validation failure that should exit with status 2."""


def _load_json(path: str) -> dict:
    p = Path(path)
    try:
        text = p.read_text()
    except FileNotFoundError:
        raise CliError(f"file not found: {p}") from None
    except OSError as exc:
        raise CliError(f"cannot read {p}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(
            f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def _emit(data: dict, out: str | None) -> None:
    text = json.dumps(data, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)
        log.info("wrote %s", out)


def _sidecar(out: str | None, suffix: str) -> Path | None:
    if out is None:
        return None
    p = Path(out)
    return p.with_name(p.stem + suffix)


def _cmd_sum_energy(args: argparse.Namespace) -> int:
    scn = scenario_from_json(_load_json(args.scenario))
    sol = solve_sum_energy(scn, args.grid_step)
    payload = {
        "version": __version__,
        "hover": {
            "xy": list(sol.hover.xy),
            "power_profile_w": [float(q) for q in sol.hover.power_profile],
            "objective_w": sol.hover.objective,
        },
        "co_optima": [
            {"xy": list(h.xy), "objective_w": h.objective} for h in sol.co_optima
        ],
        "trajectory": trajectory_to_json(sol.trajectory),
        "report": report_to_json(sol.report),
    }
    _emit(payload, args.out)
    grid_csv = _sidecar(args.out, "_grid.csv")
    if grid_csv is not None:
        grid = PowerGrid.build(scn, args.grid_step)
        field = grid.weighted_field(np.ones(scn.num_ers))
        with grid_csv.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["x_m", "y_m", "sum_power_w"])
            for iy, y in enumerate(grid.ys):
                for ix, x in enumerate(grid.xs):
                    writer.writerow([repr(float(x)), repr(float(y)), repr(float(field[iy, ix]))])
        log.info("wrote %s", grid_csv)
    return 0


def _cmd_minmax_ideal(args: argparse.Namespace) -> int:
    scn = scenario_from_json(_load_json(args.scenario))
    sol = solve_minmax_ideal(scn, tol=args.tol)
    report = energy_along(scn, sol.trajectory)
    payload = {
        "version": __version__,
        "hover_set": {
            "locations": [[float(x), float(y)] for x, y in sol.hover_set.locations],
            "powers_w": [[float(q) for q in row] for row in sol.hover_set.powers],
            "durations_s": [float(t) for t in sol.hover_set.durations],
            "min_energy_j": sol.hover_set.min_energy,
        },
        "dual_certificate": {
            "upper_bound_j": sol.upper_bound_certificate,
            "lambda": [float(v) for v in sol.dual.lam],
            "dual_value_j": sol.dual.dual_value,
            "iterations": sol.dual.iteration,
            "converged": sol.dual.converged,
            "relative_gap": (sol.upper_bound_certificate - sol.hover_set.min_energy)
            / max(sol.upper_bound_certificate, 1e-300),
        },
        "trajectory": trajectory_to_json(sol.trajectory),
        "report": report_to_json(report),
        "flags": list(sol.flags),
    }
    _emit(payload, args.out)
    energy_csv = _sidecar(args.out, "_energies.csv")
    if energy_csv is not None:
        with energy_csv.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["er_index", "energy_j", "avg_power_w"])
            for k in range(scn.num_ers):
                writer.writerow(
                    [
                        k,
                        repr(float(report.per_er_energy[k])),
                        repr(float(report.avg_power[k])),
                    ]
                )
        log.info("wrote %s", energy_csv)
    return 0


def _cmd_hover_fly(args: argparse.Namespace) -> int:
    scn = scenario_from_json(_load_json(args.scenario))
    if args.hover_set is not None:
        data = _load_json(args.hover_set)
        try:
            locations = np.asarray(data["locations"], dtype=float)
        except KeyError as exc:
            raise CliError(f"hover-set JSON missing field {exc}") from exc
        hover_set = HoverSet(
            locations=locations,
            powers=np.array([power_profile(scn, p) for p in locations]),
            durations=np.asarray(
                data.get("durations_s", np.zeros(len(locations))), dtype=float
            ),
            min_energy=float(data.get("min_energy_j", 0.0)),
        )
    else:
        hover_set = solve_minmax_ideal(scn).hover_set
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    sol = build_hover_fly(scn, hover_set, args.grid_step, rng=rng)
    log.info(
        "regime=%s min_energy=%.6e J flags=%s", sol.regime, sol.min_energy, sol.flags
    )
    _emit(trajectory_to_json(sol.trajectory), args.out)
    return 0


def _cmd_scp(args: argparse.Namespace) -> int:
    scn = scenario_from_json(_load_json(args.scenario))
    init_traj = trajectory_from_json(_load_json(args.init))
    slots = args.slots if args.slots is not None else default_slots(scn)
    init = discretize(init_traj, slots)
    state = scp_optimize(
        scn, init, max_iters=args.max_iters, rel_tol=args.rel_tol
    )
    log.info(
        "iterations=%d objective=%.6e J flags=%s",
        state.iteration,
        state.objective,
        state.flags,
    )
    _emit(trajectory_to_json(discrete_to_trajectory(state.iterate)), args.out)
    history_csv = _sidecar(args.out, "_history.csv")
    if history_csv is not None:
        with history_csv.open("w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["iteration", "min_energy_j"])
            for i, obj in enumerate(state.history):
                writer.writerow([i, repr(float(obj))])
        log.info("wrote %s", history_csv)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    scn = scenario_from_json(_load_json(args.scenario))
    traj = trajectory_from_json(_load_json(args.traj))
    report = energy_along(scn, traj)
    _emit(report_to_json(report), args.out)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    spec = sweep_spec_from_json(_load_json(args.spec))
    result = run_sweep(spec)
    manifest = emit_outputs(result, args.out)
    sys.stdout.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uavwpt",
        description="UAV wireless-power-transfer trajectory optimization",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--seed", type=int, default=None,
                        help="seed for heuristic path-planner restarts")
    parser.add_argument("--threads", type=int, default=1,
                        help="worker hint; solvers are vectorized and deterministic")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sum-energy", help="best single hover for total energy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_sum_energy)

    p = sub.add_parser("minmax-ideal", help="max-min hovering, speed limit ignored")
    p.add_argument("--scenario", required=True)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_minmax_ideal)

    p = sub.add_parser("hover-fly", help="speed-feasible hover-and-fly trajectory")
    p.add_argument("--scenario", required=True)
    p.add_argument("--hover-set", default=None)
    p.add_argument("--grid-step", type=float, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_hover_fly)

    p = sub.add_parser("scp", help="refine a trajectory by successive convex steps")
    p.add_argument("--scenario", required=True)
    p.add_argument("--init", required=True)
    p.add_argument("--slots", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=30)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_scp)

    p = sub.add_parser("eval", help="per-ER energy of a trajectory")
    p.add_argument("--scenario", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", help="benchmark sweep to CSV + manifest")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:   # argparse exits 2 on bad flags, 0 on --help
        return int(exc.code or 0)
    logging.basicConfig(
        stream=sys.stderr,
        level=getattr(logging, args.log_level.upper()),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (CliError, ValidationError, DomainError, LpError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:   # internal failure
        import traceback

        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
