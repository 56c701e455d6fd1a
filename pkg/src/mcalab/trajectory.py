"""Vehicle reference signals for lateral maneuvers.

A lane change is modelled as a quintic minimum-jerk lateral displacement.
The driver feels ``f_v = -y''`` and the body rolls with a lagged roll
gradient, from which the roll rate ``omega_v`` is obtained by finite
differences.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .kinematics import DT

# max |d2/dtau2 (10 tau^3 - 15 tau^4 + 6 tau^5)| = 10 / sqrt(3)
QUINTIC_PEAK = 10.0 / np.sqrt(3.0)

K_ROLL = 0.0104  # rad per m/s^2
TAU_ROLL = 0.2  # s
SETTLE_TAIL = 3.0  # s appended after a maneuver so the roll lag decays

SECTION_LEN = 20.004
T_START_RANGE = (0.5, 14.0)
DISPLACEMENT_RANGE = (1.0, 4.0)
PEAK_FORCE_RANGE = (0.6, 2.2)

# ISO 3888-1 double lane change, longitudinal section lengths (m) and lateral offset
ISO_SECTIONS = (15.0, 30.0, 25.0, 25.0, 15.0, 15.0)
ISO_OFFSET = 3.5


class TrajectoryError(ValueError):
    pass


@dataclass(frozen=True)
class LaneChangeSpec:
    t_start: float
    direction: int
    displacement: float
    duration: float
    speed: float = 10.0

    def __post_init__(self):
        if self.direction not in (-1, 1):
            raise TrajectoryError(f"direction must be +1 or -1, got {self.direction}")
        if not self.displacement > 0 or not self.duration > 0:
            raise TrajectoryError("displacement and duration must be positive")
        if self.t_start < 0:
            raise TrajectoryError("t_start must be non-negative")

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration

    @property
    def peak_accel(self) -> float:
        return QUINTIC_PEAK * self.displacement / self.duration**2


@dataclass
class ReferenceTrajectory:
    dt: float
    f_v: np.ndarray
    omega_v: np.ndarray

    def __post_init__(self):
        self.f_v = np.asarray(self.f_v, dtype=float)
        self.omega_v = np.asarray(self.omega_v, dtype=float)
        if self.f_v.shape != self.omega_v.shape or self.f_v.ndim != 1:
            raise TrajectoryError("f_v and omega_v must be 1-D and of equal length")
        if not (np.all(np.isfinite(self.f_v)) and np.all(np.isfinite(self.omega_v))):
            raise TrajectoryError("reference contains non-finite values")

    def __len__(self):
        return len(self.f_v)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt

    @property
    def duration(self) -> float:
        return (len(self) - 1) * self.dt

    @classmethod
    def zeros(cls, n: int, dt: float = DT) -> "ReferenceTrajectory":
        return cls(dt, np.zeros(n), np.zeros(n))

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "f_v", "omega_v"])
            for t, f, om in zip(self.t, self.f_v, self.omega_v):
                w.writerow([f"{t:.17g}", f"{f:.17g}", f"{om:.17g}"])

    @classmethod
    def from_csv(cls, path) -> "ReferenceTrajectory":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if not rows or [h.strip() for h in rows[0]] != ["t", "f_v", "omega_v"]:
            raise TrajectoryError(f"{path}: expected header 't,f_v,omega_v'")
        data = np.array([[float(c) for c in r] for r in rows[1:] if r], dtype=float)
        if len(data) < 2:
            raise TrajectoryError(f"{path}: need at least two samples")
        steps = np.diff(data[:, 0])
        dt = float(np.mean(steps))
        if not np.allclose(steps, dt, rtol=1e-6, atol=1e-9):
            raise TrajectoryError(f"{path}: time column is not uniformly sampled")
        return cls(round(dt, 12), data[:, 1], data[:, 2])


def quintic_accel(t, spec: LaneChangeSpec) -> np.ndarray:
    """Lateral acceleration y''(t) of a single lane change (zero outside the maneuver)."""
    t = np.asarray(t, dtype=float)
    tau = (t - spec.t_start) / spec.duration
    inside = (tau >= 0.0) & (tau <= 1.0)
    tau = np.clip(tau, 0.0, 1.0)
    ydd = spec.direction * spec.displacement / spec.duration**2 * (60 * tau - 180 * tau**2 + 120 * tau**3)
    return np.where(inside, ydd, 0.0)


def vehicle_signals(ydd, dt: float = DT, k_roll: float = K_ROLL, tau_roll: float = TAU_ROLL) -> ReferenceTrajectory:
    """Driver specific force and roll rate from a lateral acceleration history.

    The body rolls outward, i.e. with the sign of the felt force, through a
    first-order lag sampled exactly (zero-order hold).
    """
    ydd = np.asarray(ydd, dtype=float)
    f_v = -ydd
    pole = np.exp(-dt / tau_roll)
    phi_v = signal.lfilter([0.0, 1.0 - pole], [1.0, -pole], k_roll * f_v)
    omega_v = np.zeros_like(phi_v)
    omega_v[1:] = np.diff(phi_v) / dt
    return ReferenceTrajectory(dt, f_v, omega_v)


def lane_change_profile(spec: LaneChangeSpec, dt: float = DT, length: float | None = None, **roll) -> ReferenceTrajectory:
    """Reference for one lane change, sampled from t=0 to ``length`` (default: maneuver end + settle tail)."""
    if length is None:
        length = spec.t_end + SETTLE_TAIL
    if spec.t_end > length + 1e-9:
        raise TrajectoryError(f"maneuver ends at {spec.t_end:.3f} s, after the section end {length:.3f} s")
    n = int(round(length / dt)) + 1
    return vehicle_signals(quintic_accel(np.arange(n) * dt, spec), dt, **roll)


def duration_for_peak(displacement: float, peak: float) -> float:
    return float(np.sqrt(QUINTIC_PEAK * displacement / peak))


def sample_lane_change(rng: np.random.Generator, section_len: float = SECTION_LEN,
                       t_start_range=T_START_RANGE, displacement_range=DISPLACEMENT_RANGE,
                       peak_range=PEAK_FORCE_RANGE, tail: float = 1.0) -> LaneChangeSpec:
    """Draw one lane change uniformly; the start time is capped so the maneuver ends ``tail`` s before the section end."""
    direction = int(rng.choice([-1, 1]))
    displacement = float(rng.uniform(*displacement_range))
    peak = float(rng.uniform(*peak_range))
    duration = duration_for_peak(displacement, peak)
    lo, hi = t_start_range
    hi = min(hi, section_len - duration - tail)
    if hi < lo:
        raise TrajectoryError(f"section of {section_len} s too short for a {duration:.2f} s maneuver")
    t_start = float(rng.uniform(lo, hi))
    return LaneChangeSpec(t_start, direction, displacement, duration)


def sample_training_section(rng_seed, section_len: float = SECTION_LEN, dt: float = DT, **ranges) -> ReferenceTrajectory:
    rng = np.random.default_rng(rng_seed)
    spec = sample_lane_change(rng, section_len, **ranges)
    return lane_change_profile(spec, dt, length=section_len)


def sample_episode(rng_seed, n_sections: int = 5, steps_per_section: int = 1667, dt: float = DT,
                   k_roll: float = K_ROLL, tau_roll: float = TAU_ROLL, **ranges):
    """Concatenate ``n_sections`` independently drawn lane changes into one episode reference.

    Returns the reference (``n_sections * steps_per_section + 1`` samples, index 0
    being the reset instant) and the drawn specs.  The roll lag runs across
    section boundaries so the roll signal stays continuous.
    """
    rng = np.random.default_rng(rng_seed)
    section_len = steps_per_section * dt
    n = n_sections * steps_per_section + 1
    t = np.arange(n) * dt
    ydd = np.zeros(n)
    specs = []
    for k in range(n_sections):
        spec = sample_lane_change(rng, section_len, **ranges)
        offset = k * steps_per_section * dt
        spec = LaneChangeSpec(spec.t_start + offset, spec.direction, spec.displacement, spec.duration)
        ydd += quintic_accel(t, spec)
        specs.append(spec)
    return vehicle_signals(ydd, dt, k_roll, tau_roll), specs


def iso_double_lane_change(speed: float = 10.0, dt: float = DT, offset: float = ISO_OFFSET,
                           sections=ISO_SECTIONS, **roll) -> ReferenceTrajectory:
    """ISO 3888-1 double lane change driven at constant ``speed``.

    The car moves left by ``offset`` while crossing the second section and
    back while crossing the fourth; the trace covers the whole track plus a
    settle tail.
    """
    if not speed > 0:
        raise TrajectoryError("speed must be positive")
    bounds = np.cumsum((0.0,) + tuple(sections)) / speed
    first = LaneChangeSpec(bounds[1], +1, offset, bounds[2] - bounds[1], speed)
    second = LaneChangeSpec(bounds[3], -1, offset, bounds[4] - bounds[3], speed)
    n = int(round((bounds[-1] + SETTLE_TAIL) / dt)) + 1
    t = np.arange(n) * dt
    return vehicle_signals(quintic_accel(t, first) + quintic_accel(t, second), dt, **roll)
