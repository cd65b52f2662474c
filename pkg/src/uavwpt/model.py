"""Physical model for UAV wireless power transfer.

Free-space line-of-sight channel at fixed altitude: the received RF power at a
ground energy receiver (ER) falls off with the squared 3D distance to the UAV.
This module holds the problem instance (`Scenario`), the two trajectory
representations (`Trajectory` with hover/fly segments, `DiscreteTrajectory`
with per-slot positions), and the energy integrators used by every solver.

All quantities are linear SI units (watts, meters, seconds). dB/dBm conversion
happens only at the JSON boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

# Default tolerances; every operation taking them accepts overrides.
CONTINUITY_TOL = 1e-9   # m, segment chaining
DURATION_TOL = 1e-9     # s, duration bookkeeping
SPEED_REL_TOL = 1e-9    # relative slack on the speed cap
DEGENERATE_LEG_A = 1e-15  # below this, a fly leg is integrated as a hover


class DomainError(ValueError):
    """An argument is outside the operation's domain."""


class ValidationError(ValueError):
    """A constructed object violates its structural invariants."""


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(watts: float) -> float:
    return 10.0 * math.log10(watts) + 30.0


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(linear: float) -> float:
    return 10.0 * math.log10(linear)


@dataclass(frozen=True)
class Scenario:
    """Immutable problem instance: ER layout, channel, and flight limits.

    Attributes:
        ers: (K, 2) ground coordinates of the energy receivers, meters.
        altitude: UAV altitude H > 0, meters.
        tx_power: transmit power P > 0, watts.
        ref_gain: linear channel power gain at 1 m reference distance, > 0.
        max_speed: speed cap V >= 0, m/s.
        horizon: charging duration T > 0, seconds.
    """

    ers: np.ndarray
    altitude: float
    tx_power: float
    ref_gain: float
    max_speed: float
    horizon: float

    def __post_init__(self) -> None:
        ers = np.atleast_2d(np.asarray(self.ers, dtype=float))
        if ers.ndim != 2 or ers.shape[1] != 2 or ers.shape[0] < 1:
            raise ValidationError("ers must be a non-empty (K, 2) array")
        if not np.all(np.isfinite(ers)):
            raise ValidationError("ER coordinates must be finite")
        ers.setflags(write=False)
        object.__setattr__(self, "ers", ers)
        if not (self.altitude > 0):
            raise ValidationError(f"altitude must be > 0, got {self.altitude}")
        if not (self.tx_power > 0):
            raise ValidationError(f"tx_power must be > 0, got {self.tx_power}")
        if not (self.ref_gain > 0):
            raise ValidationError(f"ref_gain must be > 0, got {self.ref_gain}")
        if not (self.max_speed >= 0):
            raise ValidationError(f"max_speed must be >= 0, got {self.max_speed}")
        if not (self.horizon > 0):
            raise ValidationError(f"horizon must be > 0, got {self.horizon}")

    @property
    def num_ers(self) -> int:
        return self.ers.shape[0]

    @property
    def beta0_p(self) -> float:
        """Channel gain times transmit power: the numerator of the power law."""
        return self.ref_gain * self.tx_power

    def bounding_box(self) -> tuple[float, float, float, float]:
        """(xmin, xmax, ymin, ymax) of the ER layout.

        Every hovering optimum lies in this box: a point outside it can be
        moved onto the box while reducing all ER distances simultaneously.
        """
        return (
            float(self.ers[:, 0].min()),
            float(self.ers[:, 0].max()),
            float(self.ers[:, 1].min()),
            float(self.ers[:, 1].max()),
        )

    def replace(self, **kwargs) -> "Scenario":
        data = {
            "ers": self.ers,
            "altitude": self.altitude,
            "tx_power": self.tx_power,
            "ref_gain": self.ref_gain,
            "max_speed": self.max_speed,
            "horizon": self.horizon,
        }
        data.update(kwargs)
        return Scenario(**data)


# --------------------------------------------------------------------------
# Received power
# --------------------------------------------------------------------------

def received_power(scn: Scenario, p: Sequence[float], k: int) -> float:
    """RF power (watts) at ER k when the UAV hovers over horizontal point p."""
    if not 0 <= k < scn.num_ers:
        raise DomainError(f"ER index {k} out of range for K={scn.num_ers}")
    dx = p[0] - scn.ers[k, 0]
    dy = p[1] - scn.ers[k, 1]
    return scn.beta0_p / (dx * dx + dy * dy + scn.altitude**2)


def power_profile(scn: Scenario, p: Sequence[float]) -> np.ndarray:
    """Received power at every ER for UAV point p, shape (K,)."""
    d = np.asarray(p, dtype=float) - scn.ers
    return scn.beta0_p / ((d * d).sum(axis=1) + scn.altitude**2)


def sum_power(scn: Scenario, p: Sequence[float]) -> float:
    """Total received power over all ERs at UAV point p."""
    return float(power_profile(scn, p).sum())


# --------------------------------------------------------------------------
# Trajectories
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Hover:
    """Dwell at a fixed horizontal point for a nonnegative duration."""

    xy: tuple[float, float]
    duration: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "xy", (float(self.xy[0]), float(self.xy[1])))
        if not (self.duration >= 0):
            raise ValidationError(f"hover duration must be >= 0, got {self.duration}")

    @property
    def start(self) -> tuple[float, float]:
        return self.xy

    @property
    def end(self) -> tuple[float, float]:
        return self.xy


@dataclass(frozen=True)
class Fly:
    """Straight constant-speed leg between two horizontal points."""

    start: tuple[float, float]
    end: tuple[float, float]
    speed: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "start", (float(self.start[0]), float(self.start[1])))
        object.__setattr__(self, "end", (float(self.end[0]), float(self.end[1])))
        if not (self.speed > 0):
            raise ValidationError(f"fly speed must be > 0, got {self.speed}")

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    @property
    def duration(self) -> float:
        return self.length / self.speed


Segment = Hover | Fly


@dataclass(frozen=True)
class Trajectory:
    """Piecewise hover/fly path in the horizontal plane.

    `ideal` marks multi-location hovering plans whose location changes take
    zero time (the speed-unlimited relaxation); continuity between segments
    is not enforced for those.
    """

    segments: tuple[Segment, ...]
    ideal: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def total_duration(self) -> float:
        return float(sum(seg.duration for seg in self.segments))

    @property
    def total_length(self) -> float:
        return float(sum(seg.length for seg in self.segments if isinstance(seg, Fly)))

    def validate(
        self,
        scn: Scenario | None = None,
        *,
        continuity_tol: float = CONTINUITY_TOL,
    ) -> None:
        """Check chaining continuity and, when a scenario is given, the speed cap."""
        if not self.ideal:
            for prev, cur in zip(self.segments, self.segments[1:]):
                gap = math.hypot(
                    cur.start[0] - prev.end[0], cur.start[1] - prev.end[1]
                )
                if gap > continuity_tol:
                    raise ValidationError(
                        f"discontinuous segments: gap {gap:.3e} m exceeds "
                        f"{continuity_tol:.1e} m"
                    )
        if scn is not None:
            cap = scn.max_speed * (1.0 + SPEED_REL_TOL) + 1e-12
            for seg in self.segments:
                if isinstance(seg, Fly) and seg.speed > cap:
                    raise ValidationError(
                        f"fly speed {seg.speed} exceeds cap {scn.max_speed}"
                    )

    def position_at(self, t: float) -> tuple[float, float]:
        """Horizontal position at time t, clamped to the path's time span."""
        if t <= 0:
            first = self.segments[0]
            return first.start
        remaining = t
        for seg in self.segments:
            dur = seg.duration
            if remaining <= dur:
                if isinstance(seg, Hover) or dur == 0:
                    return seg.end
                frac = remaining / dur
                return (
                    seg.start[0] + frac * (seg.end[0] - seg.start[0]),
                    seg.start[1] + frac * (seg.end[1] - seg.start[1]),
                )
            remaining -= dur
        return self.segments[-1].end


def hover_trajectory(xy: Sequence[float], duration: float) -> Trajectory:
    return Trajectory(segments=(Hover(xy=(xy[0], xy[1]), duration=duration),))


@dataclass(frozen=True)
class DiscreteTrajectory:
    """Per-slot UAV positions: N points, each held for `slot_duration` seconds."""

    points: np.ndarray
    slot_duration: float

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 1:
            raise ValidationError("points must be a non-empty (N, 2) array")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if not (self.slot_duration > 0):
            raise ValidationError(
                f"slot_duration must be > 0, got {self.slot_duration}"
            )

    @property
    def num_slots(self) -> int:
        return self.points.shape[0]

    @property
    def total_duration(self) -> float:
        return self.num_slots * self.slot_duration

    def step_lengths(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.points, axis=0), axis=1)

    def validate(
        self,
        scn: Scenario,
        *,
        duration_tol: float = DURATION_TOL,
        check_horizon: bool = True,
    ) -> None:
        """Check per-slot displacement against V*slot and the horizon match."""
        if check_horizon and abs(self.total_duration - scn.horizon) > duration_tol:
            raise ValidationError(
                f"N*slot_duration = {self.total_duration} does not match "
                f"horizon {scn.horizon}"
            )
        reach = scn.max_speed * self.slot_duration
        cap = reach * (1.0 + SPEED_REL_TOL) + 1e-12
        steps = self.step_lengths()
        if steps.size and steps.max() > cap:
            raise ValidationError(
                f"slot step {steps.max():.6e} m exceeds V*slot = {reach:.6e} m"
            )


# --------------------------------------------------------------------------
# Energy evaluation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class EnergyReport:
    """Per-ER received energy over a trajectory, with min/sum and average power."""

    per_er_energy: np.ndarray
    min_energy: float
    sum_energy: float
    avg_power: np.ndarray

    @classmethod
    def from_energies(cls, energies: np.ndarray, horizon: float) -> "EnergyReport":
        energies = np.asarray(energies, dtype=float)
        energies.setflags(write=False)
        avg = energies / horizon
        avg.setflags(write=False)
        return cls(
            per_er_energy=energies,
            min_energy=float(energies.min()),
            sum_energy=float(energies.sum()),
            avg_power=avg,
        )


def fly_leg_energies(
    scn: Scenario,
    start: Sequence[float],
    end: Sequence[float],
    speed: float,
) -> np.ndarray:
    """Exact per-ER energy of a straight constant-speed leg, shape (K,).

    The integrand along the leg is 1/(a t^2 + b t + c) per ER with
    4ac - b^2 >= 4 a H^2 > 0, so the antiderivative is an arctangent. The
    difference of arctangents is evaluated through atan2 of the tangent
    subtraction identity, which stays accurate when both arguments are large.
    """
    p0 = np.asarray(start, dtype=float)
    p1 = np.asarray(end, dtype=float)
    leg = p1 - p0
    length = float(np.hypot(leg[0], leg[1]))
    if speed <= 0:
        raise DomainError(f"leg speed must be > 0, got {speed}")
    tau = length / speed
    a = speed * speed
    if length == 0.0 or a * tau < DEGENERATE_LEG_A:
        return tau * power_profile(scn, p0)
    vel = leg * (speed / length)
    w = p0 - scn.ers                        # (K, 2)
    b = 2.0 * (w @ vel)                     # (K,)
    c = (w * w).sum(axis=1) + scn.altitude**2
    s = np.sqrt(4.0 * a * c - b * b)        # >= 2*speed*H
    lo = b / s
    hi = (2.0 * a * tau + b) / s
    angle = np.arctan2(2.0 * a * tau / s, 1.0 + lo * hi)
    return scn.beta0_p * (2.0 / s) * angle


def energy_along(
    scn: Scenario,
    traj: Trajectory,
    *,
    continuity_tol: float = CONTINUITY_TOL,
) -> EnergyReport:
    """Per-ER energy delivered along a hover/fly trajectory.

    Hover segments contribute duration times the local power; fly segments are
    integrated in closed form. Raises ValidationError on a malformed
    trajectory (discontinuity or overspeed).
    """
    traj.validate(scn, continuity_tol=continuity_tol)
    energies = np.zeros(scn.num_ers)
    for seg in traj.segments:
        if isinstance(seg, Hover):
            if seg.duration > 0:
                energies += seg.duration * power_profile(scn, seg.xy)
        else:
            energies += fly_leg_energies(scn, seg.start, seg.end, seg.speed)
    return EnergyReport.from_energies(energies, scn.horizon)


def energy_along_discrete(
    scn: Scenario,
    dt: DiscreteTrajectory,
    *,
    check_horizon: bool = True,
) -> EnergyReport:
    """Per-ER energy of a discretized trajectory: slot duration times power, summed."""
    dt.validate(scn, check_horizon=check_horizon)
    d = dt.points[:, None, :] - scn.ers[None, :, :]        # (N, K, 2)
    q = scn.beta0_p / ((d * d).sum(axis=2) + scn.altitude**2)
    energies = dt.slot_duration * q.sum(axis=0)
    return EnergyReport.from_energies(energies, scn.horizon)


# --------------------------------------------------------------------------
# JSON boundary (dB/dBm live only here)
# --------------------------------------------------------------------------

def scenario_to_json(scn: Scenario) -> dict:
    return {
        "ers": [[float(x), float(y)] for x, y in scn.ers],
        "altitude_m": scn.altitude,
        "tx_power_dbm": watts_to_dbm(scn.tx_power),
        "ref_gain_db": linear_to_db(scn.ref_gain),
        "max_speed_mps": scn.max_speed,
        "horizon_s": scn.horizon,
    }


def scenario_from_json(data: dict) -> Scenario:
    try:
        return Scenario(
            ers=np.asarray(data["ers"], dtype=float),
            altitude=float(data["altitude_m"]),
            tx_power=dbm_to_watts(float(data["tx_power_dbm"])),
            ref_gain=db_to_linear(float(data["ref_gain_db"])),
            max_speed=float(data["max_speed_mps"]),
            horizon=float(data["horizon_s"]),
        )
    except KeyError as exc:
        raise ValidationError(f"scenario JSON missing field {exc}") from exc


def trajectory_to_json(traj: Trajectory) -> dict:
    segments = []
    for seg in traj.segments:
        if isinstance(seg, Hover):
            segments.append({"hover": {"xy": list(seg.xy), "dur_s": seg.duration}})
        else:
            segments.append(
                {
                    "fly": {
                        "from": list(seg.start),
                        "to": list(seg.end),
                        "speed_mps": seg.speed,
                    }
                }
            )
    out: dict = {"segments": segments}
    if traj.ideal:
        out["ideal"] = True
    return out


def trajectory_from_json(data: dict) -> Trajectory:
    segments: list[Segment] = []
    try:
        for entry in data["segments"]:
            if "hover" in entry:
                h = entry["hover"]
                segments.append(Hover(xy=tuple(h["xy"]), duration=float(h["dur_s"])))
            elif "fly" in entry:
                f = entry["fly"]
                segments.append(
                    Fly(
                        start=tuple(f["from"]),
                        end=tuple(f["to"]),
                        speed=float(f["speed_mps"]),
                    )
                )
            else:
                raise ValidationError(f"unknown segment kind: {sorted(entry)}")
    except KeyError as exc:
        raise ValidationError(f"trajectory JSON missing field {exc}") from exc
    return Trajectory(segments=tuple(segments), ideal=bool(data.get("ideal", False)))


def report_to_json(report: EnergyReport) -> dict:
    return {
        "per_er_energy_j": [float(e) for e in report.per_er_energy],
        "min_energy_j": report.min_energy,
        "sum_energy_j": report.sum_energy,
        "avg_power_w": [float(p) for p in report.avg_power],
    }
