"""Classical washout baseline for sway + roll and its per-trajectory tuning.

Translational channel: the scaled reference acceleration goes through a
third-order high-pass (second-order high-pass times a first-order washout)
and is integrated to velocity and position.  Tilt channel: a first-order
low-pass of the scaled specific force is turned into a roll angle via
``asin(f / g)`` and rate limited to the roll perception threshold.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields

import numpy as np
from scipy import optimize, signal
from scipy.stats import qmc

from .kinematics import DT, G, PlatformTrajectory, specific_force
from .trajectory import ReferenceTrajectory
from .vestibular import VestibularCoefficients, canal_filter, otolith_filter

TILT_RATE_LIMIT = np.deg2rad(3.0)


class InfeasibleError(RuntimeError):
    """No parameter set satisfying the workspace constraint was found."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


@dataclass(frozen=True)
class WashoutParams:
    k_t: float = 0.5
    w_hp: float = 1.0
    zeta_hp: float = 1.0
    w_wo: float = 0.3
    w_lp: float = 1.0
    k_tilt: float = 0.5

    def __post_init__(self):
        if min(self.w_hp, self.w_wo, self.w_lp) <= 0:
            raise ValueError("filter frequencies must be positive")
        if not (0 < self.k_t <= 1 and 0 < self.k_tilt <= 1):
            raise ValueError("scales must lie in (0, 1]")
        if not 0 < self.zeta_hp <= 2:
            raise ValueError("damping must lie in (0, 2]")

    def to_dict(self):
        return asdict(self)


NAMES = tuple(f.name for f in fields(WashoutParams))
LOG_SCALED = {"w_hp", "w_wo", "w_lp"}
DEFAULT_BOUNDS = {
    "k_t": (0.05, 1.0),
    "w_hp": (1.0, 5.0),
    "zeta_hp": (0.5, 2.0),
    "w_wo": (0.1, 2.0),
    "w_lp": (0.5, 10.0),
    "k_tilt": (0.05, 1.0),
}


def from_unit(u, bounds=DEFAULT_BOUNDS) -> WashoutParams:
    """Map a point of the unit cube to parameters (log-uniform for frequencies)."""
    vals = {}
    for name, ui in zip(NAMES, np.clip(u, 0.0, 1.0)):
        lo, hi = bounds[name]
        if name in LOG_SCALED:
            vals[name] = float(np.exp(np.log(lo) + ui * (np.log(hi) - np.log(lo))))
        else:
            vals[name] = float(lo + ui * (hi - lo))
    return WashoutParams(**vals)


def translational_system(p: WashoutParams, dt: float = DT):
    """Discrete (ZOH) state-space of reference acceleration -> platform (x, v, a)."""
    den = np.polymul([1.0, 2.0 * p.zeta_hp * p.w_hp, p.w_hp**2], [1.0, p.w_wo])
    d2, d1, d0 = den[1:]
    A = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-d0, -d1, -d2]])
    B = np.array([[0.0], [0.0], [1.0]])
    C = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [-d0, -d1, -d2]])
    D = np.array([[0.0], [0.0], [1.0]])
    return signal.cont2discrete((A, B, C, D), dt, method="zoh")[:4]


def highpass_tf(p: WashoutParams):
    """(num, den) of the continuous third-order high-pass on acceleration."""
    den = np.polymul([1.0, 2.0 * p.zeta_hp * p.w_hp, p.w_hp**2], [1.0, p.w_wo])
    return np.array([1.0, 0.0, 0.0, 0.0]), den


def _run_ss(Ad, Bd, C, D, u):
    # one shared denominator; per-output numerators through lfilter
    out = []
    for row in range(C.shape[0]):
        num, den = signal.ss2tf(Ad, Bd, C[row:row + 1], D[row:row + 1])
        out.append(signal.lfilter(num[0], den, u))
    return out


def rate_limited_tilt(target, dt: float = DT, rate: float = TILT_RATE_LIMIT):
    """Follow ``target`` with |d phi/dt| <= rate. Returns ``(phi, omega)``."""
    phi = np.empty_like(target)
    omega = np.empty_like(target)
    prev = 0.0
    for k, tgt in enumerate(target.tolist()):
        w = (tgt - prev) / dt
        w = rate if w > rate else (-rate if w < -rate else w)
        prev = prev + w * dt
        phi[k] = prev
        omega[k] = w
    return phi, omega


def cw_run(params: WashoutParams, ref: ReferenceTrajectory, dt: float | None = None,
           tilt_rate: float = TILT_RATE_LIMIT) -> PlatformTrajectory:
    dt = ref.dt if dt is None else dt
    f_ref = ref.f_v
    # f = g sin(phi) - a cos(phi): the translational channel reproduces f with a = -f
    Ad, Bd, C, D = translational_system(params, dt)
    x, v, a = _run_ss(Ad, Bd, C, D, -params.k_t * f_ref)
    pole = np.exp(-params.w_lp * dt)
    lp = signal.lfilter([0.0, 1.0 - pole], [1.0, -pole], params.k_tilt * f_ref)
    target = np.arcsin(np.clip(lp / G, -1.0, 1.0))
    phi, omega = rate_limited_tilt(target, dt, tilt_rate)
    return PlatformTrajectory(dt, x, v, a, phi, omega, specific_force(a, phi))


@dataclass
class CwObjective:
    """Perception-error cost of a washout parameter set on one reference."""

    ref: ReferenceTrajectory
    w1: float = 1.0
    w2: float = 1.0
    x_max: float = 1.0
    coeffs: VestibularCoefficients = VestibularCoefficients()
    tilt_rate: float = TILT_RATE_LIMIT

    def evaluate(self, params: WashoutParams):
        """Returns ``(cost, platform)``; cost is +inf when the workspace bound is violated."""
        plat = cw_run(params, self.ref, tilt_rate=self.tilt_rate)
        if not np.max(np.abs(plat.x), initial=0.0) < self.x_max:
            return np.inf, plat
        dt = self.ref.dt
        e_f = otolith_filter(dt, self.coeffs).process(plat.f - self.ref.f_v)
        e_w = canal_filter(dt, self.coeffs).process(plat.omega - self.ref.omega_v)
        return float(self.w1 * np.mean(e_f**2) + self.w2 * np.mean(e_w**2)), plat

    def __call__(self, params: WashoutParams) -> float:
        return self.evaluate(params)[0]


@dataclass
class CwOptResult:
    params: WashoutParams
    cost: float
    max_abs_x: float
    x_max: float
    max_tilt_rate: float
    n_starts: int
    n_feasible_starts: int
    n_evals: int
    seed: int

    @property
    def margin(self) -> float:
        return self.x_max - self.max_abs_x

    def to_dict(self):
        d = asdict(self)
        d["params"] = self.params.to_dict()
        d["margin"] = self.margin
        d["max_tilt_rate_deg"] = float(np.rad2deg(self.max_tilt_rate))
        return d

    def to_json(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_json(cls, path) -> "CwOptResult":
        with open(path) as fh:
            d = json.load(fh)
        d = {k: v for k, v in d.items() if k not in ("margin", "max_tilt_rate_deg")}
        d["params"] = WashoutParams(**d["params"])
        return cls(**d)


def cw_optimize(ref: ReferenceTrajectory, bounds=DEFAULT_BOUNDS, w1: float = 1.0, w2: float = 1.0,
                x_max: float = 1.0, n_starts: int = 64, seed: int = 0, maxfev: int = 400,
                coeffs: VestibularCoefficients = VestibularCoefficients()) -> CwOptResult:
    """Tune washout parameters for ``ref`` subject to ``max|x| < x_max``.

    Latin-hypercube starts in the (partly log-scaled) parameter box, each
    feasible one refined by bounded Nelder-Mead.  The winner is the lowest
    cost, ties broken by start index.
    """
    objective = CwObjective(ref, w1, w2, x_max, coeffs)
    n_evals = 0

    def cost_unit(u):
        nonlocal n_evals
        n_evals += 1
        return objective(from_unit(u, bounds))

    starts = qmc.LatinHypercube(d=len(NAMES), seed=np.random.default_rng(seed)).random(n_starts)
    start_costs = [cost_unit(u) for u in starts]
    feasible = [i for i, c in enumerate(start_costs) if np.isfinite(c)]
    if not feasible:
        raise InfeasibleError(
            f"none of {n_starts} starts keeps |x| < {x_max} m",
            {"n_starts": n_starts, "x_max": x_max, "seed": seed},
        )
    best = None
    for i in feasible:
        u, c = starts[i], start_costs[i]
        if c > 0.0:
            res = optimize.minimize(cost_unit, u, method="Nelder-Mead", bounds=[(0.0, 1.0)] * len(NAMES),
                                    options={"maxfev": maxfev, "xatol": 1e-4, "fatol": 1e-12})
            if res.fun < c:
                u, c = res.x, float(res.fun)
        if best is None or c < best[0]:
            best = (c, i, u)
    cost, _, u = best
    params = from_unit(u, bounds)
    _, plat = objective.evaluate(params)
    return CwOptResult(params, float(cost), float(np.max(np.abs(plat.x))), x_max,
                       float(np.max(np.abs(plat.omega))), n_starts, len(feasible), n_evals, seed)
