"""Benchmark sweeps over scenario families, with deterministic CSV emission.

Runs any subset of the solvers over a swept scenario parameter (two-ER
separation, horizon, or speed cap), records per-ER average received power for
each (method, value) cell, and writes a long-format CSV, per-cell trajectory
JSONs, a matplotlib plot script that reads only the CSV, and a hashed file
manifest. Two runs of the same spec produce byte-identical CSVs.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .hoverfly import HoverFlySolution, build_hover_fly, solve_fixed_point
from .minmax import HoverSet, solve_minmax_ideal
from .model import (
    DomainError,
    EnergyReport,
    Fly,
    Hover,
    Scenario,
    Trajectory,
    energy_along,
    energy_along_discrete,
    hover_trajectory,
    power_profile,
    scenario_from_json,
    scenario_to_json,
    trajectory_to_json,
)
from .scp import default_slots, discretize, scp_optimize
from .sumenergy import solve_sum_energy

SWEEP_VARIABLES = ("D", "T", "V")
SWEEP_METHODS = ("p1", "p3", "hover_fly", "scp", "fixed_point", "hover_all_ers")
DEFAULT_SCP_SLOT_CAP = 1000


@dataclass(frozen=True)
class SweepSpec:
    """What to sweep, over which values, with which methods."""

    variable: str
    values: tuple[float, ...]
    base: Scenario
    methods: tuple[str, ...]
    scp_slots: int | None = None
    grid_step: float | None = None

    def __post_init__(self) -> None:
        if self.variable not in SWEEP_VARIABLES:
            raise DomainError(
                f"variable must be one of {SWEEP_VARIABLES}, got {self.variable!r}"
            )
        values = tuple(float(v) for v in self.values)
        if not values:
            raise DomainError("values must be non-empty")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise DomainError("values must be strictly increasing")
        object.__setattr__(self, "values", values)
        methods = tuple(self.methods)
        if not methods:
            raise DomainError("methods must be non-empty")
        unknown = [m for m in methods if m not in SWEEP_METHODS]
        if unknown:
            raise DomainError(f"unknown methods {unknown}; valid: {SWEEP_METHODS}")
        object.__setattr__(self, "methods", methods)


@dataclass(frozen=True)
class CellResult:
    method: str
    value: float
    report: EnergyReport | None
    trajectory: Trajectory | None
    wall_time: float
    error: str | None = None


@dataclass(frozen=True)
class BenchmarkResult:
    spec: SweepSpec
    cells: tuple[CellResult, ...]


def sweep_spec_from_json(data: dict) -> SweepSpec:
    return SweepSpec(
        variable=data["variable"],
        values=tuple(data["values"]),
        base=scenario_from_json(data["base"]),
        methods=tuple(data["methods"]),
        scp_slots=data.get("scp_slots"),
        grid_step=data.get("grid_step"),
    )


def scenario_for_value(spec: SweepSpec, value: float) -> Scenario:
    if spec.variable == "D":
        return spec.base.replace(
            ers=np.array([[-value / 2.0, 0.0], [value / 2.0, 0.0]])
        )
    if spec.variable == "T":
        return spec.base.replace(horizon=value)
    return spec.base.replace(max_speed=value)


def clustered_ten_scenario(
    *,
    horizon: float = 20.0,
    max_speed: float = 5.0,
    altitude: float = 5.0,
    tx_power: float = 10.0,
    ref_gain: float = 1e-3,
) -> Scenario:
    """Synthetic 10-ER layout in four clusters (sizes 2/1/3/4).

    The clusters are mutually far apart but internally tight, so the fair
    hovering solution serves each cluster from one location; used for
    qualitative benchmark reproduction where no published layout exists.
    """
    ers = np.array(
        [
            [-1.0, 0.5],
            [1.0, -0.5],
            [20.0, 2.0],
            [1.0, 17.0],
            [3.0, 18.5],
            [2.0, 19.5],
            [17.0, 17.0],
            [19.0, 17.5],
            [18.0, 19.0],
            [19.5, 19.0],
        ]
    )
    return Scenario(
        ers=ers,
        altitude=altitude,
        tx_power=tx_power,
        ref_gain=ref_gain,
        max_speed=max_speed,
        horizon=horizon,
    )


class _ValueContext:
    """Lazily shares the fair-hovering solve among methods of one sweep cell."""

    def __init__(self, scn: Scenario, spec: SweepSpec):
        self.scn = scn
        self.spec = spec
        self._ideal = None
        self._hover_fly = None

    def ideal(self):
        if self._ideal is None:
            self._ideal = solve_minmax_ideal(self.scn, grid_step=self.spec.grid_step)
        return self._ideal

    def hover_fly(self) -> HoverFlySolution:
        if self._hover_fly is None:
            self._hover_fly = build_hover_fly(
                self.scn, self.ideal().hover_set, self.spec.grid_step
            )
        return self._hover_fly


def _run_method(ctx: _ValueContext, method: str) -> tuple[EnergyReport, Trajectory]:
    scn = ctx.scn
    if method == "p1":
        sol = solve_sum_energy(scn, ctx.spec.grid_step)
        return sol.report, sol.trajectory
    if method == "p3":
        sol = ctx.ideal()
        return energy_along(scn, sol.trajectory), sol.trajectory
    if method == "fixed_point":
        fix = solve_fixed_point(scn, ctx.spec.grid_step)
        traj = hover_trajectory(fix.xy, scn.horizon)
        return energy_along(scn, traj), traj
    if method == "hover_fly":
        sol = ctx.hover_fly()
        return sol.report, sol.trajectory
    if method == "hover_all_ers":
        hover_set = HoverSet(
            locations=scn.ers.copy(),
            powers=np.array([power_profile(scn, p) for p in scn.ers]),
            durations=np.zeros(scn.num_ers),
            min_energy=0.0,
        )
        sol = build_hover_fly(scn, hover_set, ctx.spec.grid_step)
        return sol.report, sol.trajectory
    if method == "scp":
        seed = ctx.hover_fly()
        slots = ctx.spec.scp_slots or min(default_slots(scn), DEFAULT_SCP_SLOT_CAP)
        init = discretize(seed.trajectory, slots)
        state = scp_optimize(scn, init)
        report = energy_along_discrete(scn, state.iterate)
        return report, discrete_to_trajectory(state.iterate)
    raise DomainError(f"unknown method {method!r}")


def discrete_to_trajectory(dt) -> Trajectory:
    """Continuous polyline equivalent of a discretized path.

    Half-slot dwells at both ends plus straight legs between consecutive slot
    positions reproduce the slot timing exactly (total duration is preserved)
    while keeping every implied speed within the original reach constraint.
    """
    pts = dt.points
    slot = dt.slot_duration
    segments = [Hover(xy=(pts[0, 0], pts[0, 1]), duration=slot / 2.0)]
    for i in range(pts.shape[0] - 1):
        p, q = pts[i], pts[i + 1]
        dist = float(np.hypot(q[0] - p[0], q[1] - p[1]))
        if dist > 1e-12:
            segments.append(
                Fly(start=(p[0], p[1]), end=(q[0], q[1]), speed=dist / slot)
            )
        else:
            segments.append(Hover(xy=(p[0], p[1]), duration=slot))
    segments.append(
        Hover(xy=(pts[-1, 0], pts[-1, 1]), duration=slot / 2.0)
    )
    return Trajectory(segments=tuple(segments))


def run_sweep(spec: SweepSpec) -> BenchmarkResult:
    """Evaluate every (value, method) cell; failures are recorded, not raised."""
    cells: list[CellResult] = []
    for value in spec.values:
        scn = scenario_for_value(spec, value)
        ctx = _ValueContext(scn, spec)
        for method in spec.methods:
            start = time.perf_counter()
            try:
                report, traj = _run_method(ctx, method)
                cells.append(
                    CellResult(
                        method=method,
                        value=value,
                        report=report,
                        trajectory=traj,
                        wall_time=time.perf_counter() - start,
                    )
                )
            except Exception as exc:   # cell failure must not kill the sweep
                cells.append(
                    CellResult(
                        method=method,
                        value=value,
                        report=None,
                        trajectory=None,
                        wall_time=time.perf_counter() - start,
                        error=f"{type(exc).__name__}: {exc}",
                    )
                )
    return BenchmarkResult(spec=spec, cells=tuple(cells))


_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot the sweep CSV emitted alongside this script (reads only the CSV).\"\"\"
import csv
from collections import defaultdict
from pathlib import Path

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

csv_path = Path(__file__).with_name("sweep.csv")
series = defaultdict(dict)
variable = "value"
with csv_path.open() as fh:
    for row in csv.DictReader(fh):
        variable = row["variable"]
        series[row["method"]][float(row["value"])] = float(row["min_avg_power_w"])

fig, ax = plt.subplots(figsize=(7, 4.5))
for method in sorted(series):
    xs = sorted(series[method])
    ax.plot(xs, [series[method][x] for x in xs], marker="o", label=method)
ax.set_xlabel(variable)
ax.set_ylabel("min average received power (W)")
ax.legend()
ax.grid(True, alpha=0.3)
fig.tight_layout()
fig.savefig(csv_path.with_name("sweep.png"), dpi=150)
print("wrote", csv_path.with_name("sweep.png"))
"""


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_outputs(result: BenchmarkResult, out_dir: str | Path) -> dict:
    """Write sweep.csv, trajectory JSONs, a plot script, and a hashed manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj_dir = out / "trajectories"
    traj_dir.mkdir(exist_ok=True)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["method", "variable", "value", "er_index", "avg_power_w", "min_avg_power_w"]
    )
    for cell in result.cells:
        if cell.report is None:
            continue
        min_avg = float(np.min(cell.report.avg_power))
        for k, avg in enumerate(cell.report.avg_power):
            writer.writerow(
                [
                    cell.method,
                    result.spec.variable,
                    _fmt(cell.value),
                    k,
                    _fmt(avg),
                    _fmt(min_avg),
                ]
            )
    csv_text = buf.getvalue()
    (out / "sweep.csv").write_text(csv_text)

    files: list[Path] = [out / "sweep.csv"]
    errors: list[dict] = []
    for idx, cell in enumerate(result.cells):
        if cell.error is not None:
            errors.append(
                {"method": cell.method, "value": cell.value, "error": cell.error}
            )
            continue
        name = f"{cell.method}_{idx:03d}.json"
        path = traj_dir / name
        payload = {
            "method": cell.method,
            "variable": result.spec.variable,
            "value": cell.value,
            "trajectory": trajectory_to_json(cell.trajectory),
        }
        path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")
        files.append(path)

    script_path = out / "plot_sweep.py"
    script_path.write_text(_PLOT_SCRIPT)
    files.append(script_path)

    manifest = {
        "version": __version__,
        "variable": result.spec.variable,
        "methods": list(result.spec.methods),
        "base_scenario": scenario_to_json(result.spec.base),
        "files": [
            {
                "path": str(p.relative_to(out)),
                "sha256": hashlib.sha256(p.read_bytes()).hexdigest(),
            }
            for p in files
        ],
        "errors": errors,
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    )
    return manifest
