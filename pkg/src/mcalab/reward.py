"""Per-step reward for the motion cueing MDP.

Seven penalty terms are subtracted from a maximum of 1: specific force
error, roll rate error outside the perception band, distance from the
neutral position, action magnitudes, and the two workspace limits.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

OMEGA_PT = np.deg2rad(3.0)


@dataclass(frozen=True)
class RewardWeights:
    w_f: float = 0.25
    w_omega: float = 2.0
    w_x: float = 0.1
    w_da: float = 0.5
    w_domega: float = 0.5
    r_limit: float = 100.0
    x_max: float = 1.0
    phi_L: float = np.pi / 2
    omega_PT: float = OMEGA_PT

    def __post_init__(self):
        if min(self.w_f, self.w_omega, self.w_x, self.w_da, self.w_domega, self.omega_PT) < 0:
            raise ValueError("reward weights must be non-negative")
        if not self.r_limit > 0 or not self.x_max > 0:
            raise ValueError("r_limit and x_max must be positive")
        if not 0 < self.phi_L <= np.pi / 2:
            raise ValueError("phi_L must lie in (0, pi/2]")

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class RewardBreakdown:
    total: float
    r_f: float
    r_omega: float
    r_x: float
    r_da: float
    r_domega: float
    r_ws_x: float
    r_ws_phi: float
    terminated: bool


def reward_terms(x, phi, omega, f, delta_a, delta_omega, ref_f, ref_omega, w: RewardWeights):
    """Vectorised reward. Returns ``(total, terms, terminated)`` with ``terms`` of shape (7, ...).

    Action terms take the physical (already scaled) increments.
    """
    r_f = w.w_f * np.abs(f - ref_f)
    omega_err = np.abs(omega - ref_omega)
    r_omega = np.where(omega_err <= w.omega_PT, 0.0, w.w_omega * omega_err)
    r_x = w.w_x * np.abs(x)
    r_da = w.w_da * np.abs(delta_a)
    r_domega = w.w_domega * np.abs(delta_omega)
    out_x = np.abs(x) >= w.x_max
    out_phi = np.abs(phi) >= w.phi_L
    r_ws_x = np.where(out_x, w.r_limit, 0.0)
    r_ws_phi = np.where(out_phi, w.r_limit, 0.0)
    terms = np.stack(np.broadcast_arrays(r_f, r_omega, r_x, r_da, r_domega, r_ws_x, r_ws_phi))
    total = 1.0 - r_f - r_omega - r_x - r_da - r_domega - r_ws_x - r_ws_phi
    return total, terms, out_x | out_phi


def compute_reward(state, action, ref_f: float, ref_omega: float, w: RewardWeights = RewardWeights()) -> RewardBreakdown:
    """Reward for a post-step ``state`` (PlatformState) reached with ``action`` (RateAction)."""
    total, terms, terminated = reward_terms(
        state.x, state.phi, state.omega, state.f, action.delta_a, action.delta_omega, ref_f, ref_omega, w
    )
    return RewardBreakdown(float(total), *(float(v) for v in terms), bool(terminated))
