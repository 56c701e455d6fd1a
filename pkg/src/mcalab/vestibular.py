"""Linear vestibular perception models.

Otoliths (specific force) and semicircular canals (roll rate) are
second-order transfer functions with real, distinct poles.  They are run as
diagonal state-space systems, one first-order mode per pole, which keeps the
80 s canal time constant well conditioned at an 83 Hz sample rate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .kinematics import DT


@dataclass(frozen=True)
class VestibularCoefficients:
    K_oto: float = 0.4
    tau1: float = 5.0
    tau2: float = 0.016
    tau3: float = 10.0
    tau4: float = 5.73
    tau5: float = 80.0

    def __post_init__(self):
        if min(self.tau1, self.tau2, self.tau3, self.tau4, self.tau5) <= 0:
            raise ValueError("time constants must be positive")

    def otolith_tf(self):
        """(num, den) of K (tau1 s + 1) / ((tau2 s + 1)(tau3 s + 1))."""
        return (np.array([self.K_oto * self.tau1, self.K_oto]),
                np.polymul([self.tau2, 1.0], [self.tau3, 1.0]))

    def canal_tf(self):
        """(num, den) of tau4 tau5 s / ((tau4 s + 1)(tau5 s + 1))."""
        return (np.array([self.tau4 * self.tau5, 0.0]),
                np.polymul([self.tau4, 1.0], [self.tau5, 1.0]))


class ModalFilter:
    """Discrete diagonal state-space realisation of a strictly proper TF with distinct real poles.

    ``method`` is ``"zoh"`` (exact for inputs held between samples) or
    ``"bilinear"`` (trapezoidal).  The filter is stateful: :meth:`process`
    continues from where the previous call ended, :meth:`reset` zeroes it.
    """

    def __init__(self, num, den, dt: float = DT, method: str = "zoh"):
        if not dt > 0:
            raise ValueError("dt must be positive")
        num = np.trim_zeros(np.atleast_1d(np.asarray(num, dtype=float)), "f")
        den = np.asarray(den, dtype=float)
        if len(num) >= len(den):
            raise ValueError("transfer function must be strictly proper")
        poles = np.roots(den)
        if np.any(np.abs(poles.imag) > 0) or len(np.unique(poles.real)) != len(poles):
            raise ValueError("poles must be real and distinct")
        poles = np.sort(poles.real)
        dden = np.polyder(den)
        self.poles = poles
        self.residues = np.polyval(num, poles) / np.polyval(dden, poles)
        self.dt = dt
        self.method = method
        if method == "zoh":
            self.ad = np.exp(poles * dt)
            self.bd = np.expm1(poles * dt) / poles
            self.cd = self.residues.copy()
            self.dd = 0.0
        elif method == "bilinear":
            ima = 1.0 - 0.5 * dt * poles
            self.ad = (1.0 + 0.5 * dt * poles) / ima
            self.bd = dt / ima
            self.cd = self.residues / ima
            self.dd = float(0.5 * np.sum(self.residues * self.bd))
        else:
            raise ValueError(f"unknown discretisation {method!r}")
        self.reset()

    def reset(self):
        self.state = np.zeros(len(self.poles))

    @property
    def dc_gain(self) -> float:
        return float(np.sum(self.cd * self.bd / (1.0 - self.ad)) + self.dd)

    def process(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        y = self.dd * u
        if len(u) == 0:
            return y
        for i in range(len(self.poles)):
            # nxt[k] = x[k+1] = ad x[k] + bd u[k]
            nxt, _ = signal.lfilter([self.bd[i]], [1.0, -self.ad[i]], u, zi=[self.ad[i] * self.state[i]])
            xs = np.concatenate(([self.state[i]], nxt[:-1]))
            y = y + self.cd[i] * xs
            self.state[i] = nxt[-1]
        return y


def otolith_filter(dt: float = DT, coeffs: VestibularCoefficients = VestibularCoefficients(), method="zoh"):
    return ModalFilter(*coeffs.otolith_tf(), dt, method)


def canal_filter(dt: float = DT, coeffs: VestibularCoefficients = VestibularCoefficients(), method="zoh"):
    return ModalFilter(*coeffs.canal_tf(), dt, method)


def sense_translation(f, dt: float = DT, coeffs: VestibularCoefficients = VestibularCoefficients(),
                      method: str = "zoh") -> np.ndarray:
    """Sensed specific force, starting from a zero filter state."""
    return otolith_filter(dt, coeffs, method).process(f)


def sense_rotation(omega, dt: float = DT, coeffs: VestibularCoefficients = VestibularCoefficients(),
                   method: str = "zoh") -> np.ndarray:
    """Sensed roll rate, starting from a zero filter state."""
    return canal_filter(dt, coeffs, method).process(omega)
