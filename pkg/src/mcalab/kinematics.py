"""Two-DOF (sway + roll) motion platform model.

The platform end effector is driven by rate-of-change actions: every step the
agent nudges the lateral acceleration and the roll rate, and the model
integrates down to velocity/position and roll angle with a semi-implicit
Euler scheme.  The pilot feels the lateral component of gravity minus the
platform acceleration, expressed in the tilted cabin frame.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

G = 9.81
DT = 0.012

# per-step action bounds: ~10 m/s^3 jerk and ~20 deg/s^2 roll acceleration at 12 ms
DA_MAX = 0.12
DOMEGA_MAX = 4.2e-3


class StateCorruptionError(ValueError):
    """Raised when a non-finite value enters the platform model."""


def specific_force(a, phi):
    """Lateral specific force in the pilot frame for acceleration ``a`` and roll ``phi``.

    Works elementwise on arrays.
    """
    return G * np.sin(phi) - a * np.cos(phi)


@dataclass(frozen=True)
class PlatformState:
    x: float = 0.0
    v: float = 0.0
    a: float = 0.0
    phi: float = 0.0
    omega: float = 0.0
    f: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.as_array())):
            raise StateCorruptionError(f"non-finite platform state: {self}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.v, self.a, self.phi, self.omega, self.f, self.t])


@dataclass(frozen=True)
class RateAction:
    delta_a: float = 0.0
    delta_omega: float = 0.0

    def clamped(self, da_max: float = DA_MAX, domega_max: float = DOMEGA_MAX) -> "RateAction":
        return RateAction(
            float(np.clip(self.delta_a, -da_max, da_max)),
            float(np.clip(self.delta_omega, -domega_max, domega_max)),
        )


def step(state: PlatformState, action: RateAction, dt: float = DT) -> PlatformState:
    """Advance the platform by one step.

    Update order is acceleration first, then velocity, then position (and the
    same for roll), so results are reproducible to the last bit.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not (np.isfinite(action.delta_a) and np.isfinite(action.delta_omega)):
        raise StateCorruptionError(f"non-finite action: {action}")
    a = state.a + action.delta_a
    v = state.v + a * dt
    x = state.x + v * dt
    omega = state.omega + action.delta_omega
    phi = state.phi + omega * dt
    return PlatformState(x, v, a, phi, omega, float(specific_force(a, phi)), state.t + dt)


def step_arrays(x, v, a, phi, omega, delta_a, delta_omega, dt=DT):
    """Vectorised :func:`step` over a batch of platforms. Returns ``(x, v, a, phi, omega, f)``."""
    a = a + delta_a
    v = v + a * dt
    x = x + v * dt
    omega = omega + delta_omega
    phi = phi + omega * dt
    return x, v, a, phi, omega, specific_force(a, phi)


@dataclass
class PlatformTrajectory:
    """Time series of platform states, as produced by an MCA on a reference."""

    dt: float
    x: np.ndarray
    v: np.ndarray
    a: np.ndarray
    phi: np.ndarray
    omega: np.ndarray
    f: np.ndarray = field(default=None)

    def __post_init__(self):
        for name in ("x", "v", "a", "phi", "omega"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        if self.f is None:
            self.f = specific_force(self.a, self.phi)
        else:
            self.f = np.asarray(self.f, dtype=float)
        n = len(self.x)
        if any(len(getattr(self, k)) != n for k in ("v", "a", "phi", "omega", "f")):
            raise ValueError("platform trajectory channels must have equal length")

    def __len__(self):
        return len(self.x)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt

    @classmethod
    def motionless(cls, n: int, dt: float = DT) -> "PlatformTrajectory":
        z = np.zeros(n)
        return cls(dt, z, z, z, z, z)
