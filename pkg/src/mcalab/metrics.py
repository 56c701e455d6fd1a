"""Comparison metrics for motion cueing results (sensed-signal errors,
correlations, threshold exceedances and workspace usage)."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .kinematics import PlatformTrajectory
from .trajectory import ReferenceTrajectory
from .vestibular import VestibularCoefficients, canal_filter, otolith_filter, sense_rotation, sense_translation

F_THRESHOLD = 0.17  # m/s^2, lateral
OMEGA_THRESHOLD = np.deg2rad(3.0)  # rad/s, roll


class UndefinedCorrelationError(ValueError):
    pass


class ReportSchemaError(ValueError):
    pass


def pearson(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValueError("pearson needs two 1-D sequences of equal length >= 2")
    da = a - a.mean()
    db = b - b.mean()
    sa = math.sqrt(float(np.dot(da, da)))
    sb = math.sqrt(float(np.dot(db, db)))
    if sa == 0.0 or sb == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a constant sequence")
    return float(np.clip(np.dot(da, db) / (sa * sb), -1.0, 1.0))


def rms_error(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("rms_error needs equally shaped inputs")
    return float(np.sqrt(np.mean((a - b) ** 2)))


@dataclass(frozen=True)
class ComparisonReport:
    trans_rms: float
    rot_rms: float
    rot_rms_deg: float
    trans_pearson: float
    rot_pearson: float
    trans_exceed_fraction: float
    rot_exceed_fraction: float
    max_x: float
    max_v: float
    max_a: float
    max_phi: float
    max_omega: float

    def to_dict(self):
        return asdict(self)

    def to_text(self) -> str:
        return "".join(f"{k} = {_num(v)}\n" for k, v in self.to_dict().items())

    def write(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def from_text(cls, text: str) -> "ComparisonReport":
        values = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ReportSchemaError(f"malformed report line: {line!r}")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key] = float(val)
        names = [f.name for f in fields(cls)]
        missing = [n for n in names if n not in values]
        if missing:
            raise ReportSchemaError(f"report is missing fields: {', '.join(missing)}")
        unknown = sorted(set(values) - set(names))
        if unknown:
            raise ReportSchemaError(f"report has unknown fields: {', '.join(unknown)}")
        return cls(**{n: values[n] for n in names})

    @classmethod
    def read(cls, path) -> "ComparisonReport":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def csv_row(self, label: str = "", header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        names = list(self.to_dict())
        if header:
            w.writerow(["label"] + names)
        w.writerow([label] + [_num(v) for v in self.to_dict().values()])
        return buf.getvalue()


def _num(v) -> str:
    return f"{float(v):.10g}"


def _safe_pearson(a, b) -> float:
    try:
        return pearson(a, b)
    except UndefinedCorrelationError:
        return float("nan")


@dataclass
class SensedSignals:
    f_platform: np.ndarray
    f_vehicle: np.ndarray
    omega_platform: np.ndarray
    omega_vehicle: np.ndarray


def sensed_signals(platform: PlatformTrajectory, ref: ReferenceTrajectory,
                   coeffs: VestibularCoefficients = VestibularCoefficients()) -> SensedSignals:
    if len(platform) != len(ref):
        raise ValueError(f"platform ({len(platform)}) and reference ({len(ref)}) lengths differ")
    dt = ref.dt
    return SensedSignals(
        sense_translation(platform.f, dt, coeffs), sense_translation(ref.f_v, dt, coeffs),
        sense_rotation(platform.omega, dt, coeffs), sense_rotation(ref.omega_v, dt, coeffs),
    )


def evaluate_mca(platform: PlatformTrajectory, ref: ReferenceTrajectory,
                 coeffs: VestibularCoefficients = VestibularCoefficients()) -> ComparisonReport:
    """Compare what the simulator user and the vehicle driver perceive.

    Correlations of a constant sensed signal are reported as NaN.
    """
    s = sensed_signals(platform, ref, coeffs)
    err_f = s.f_platform - s.f_vehicle
    err_w = s.omega_platform - s.omega_vehicle
    rot_rms = rms_error(s.omega_platform, s.omega_vehicle)
    return ComparisonReport(
        trans_rms=rms_error(s.f_platform, s.f_vehicle),
        rot_rms=rot_rms,
        rot_rms_deg=float(np.rad2deg(rot_rms)),
        trans_pearson=_safe_pearson(s.f_platform, s.f_vehicle),
        rot_pearson=_safe_pearson(s.omega_platform, s.omega_vehicle),
        trans_exceed_fraction=float(np.mean(np.abs(err_f) > F_THRESHOLD)),
        rot_exceed_fraction=float(np.mean(np.abs(err_w) > OMEGA_THRESHOLD)),
        max_x=float(np.max(np.abs(platform.x))),
        max_v=float(np.max(np.abs(platform.v))),
        max_a=float(np.max(np.abs(platform.a))),
        max_phi=float(np.max(np.abs(platform.phi))),
        max_omega=float(np.max(np.abs(platform.omega))),
    )


class _Moments:
    """Chunk-mergeable first and second (co-)moments of a pair of sequences."""

    def __init__(self):
        self.n = 0
        self.ma = self.mb = 0.0
        self.saa = self.sbb = self.sab = self.sdd = 0.0

    def push(self, a, b):
        n2 = len(a)
        if n2 == 0:
            return
        ma2, mb2 = float(a.mean()), float(b.mean())
        da, db = a - ma2, b - mb2
        n1, n = self.n, self.n + n2
        xa, xb = ma2 - self.ma, mb2 - self.mb
        w = n1 * n2 / n
        self.saa += float(np.dot(da, da)) + xa * xa * w
        self.sbb += float(np.dot(db, db)) + xb * xb * w
        self.sab += float(np.dot(da, db)) + xa * xb * w
        self.sdd += float(np.dot(a - b, a - b))
        self.ma += xa * n2 / n
        self.mb += xb * n2 / n
        self.n = n

    def rms(self) -> float:
        return math.sqrt(self.sdd / self.n)

    def pearson(self) -> float:
        if self.saa == 0.0 or self.sbb == 0.0:
            return float("nan")
        return float(np.clip(self.sab / math.sqrt(self.saa * self.sbb), -1.0, 1.0))


class StreamingEvaluator:
    """Chunk-by-chunk equivalent of :func:`evaluate_mca` for long or live runs."""

    _MAX = ("x", "v", "a", "phi", "omega")

    def __init__(self, dt: float, coeffs: VestibularCoefficients = VestibularCoefficients()):
        self.dt = dt
        self._filters = [otolith_filter(dt, coeffs), otolith_filter(dt, coeffs),
                         canal_filter(dt, coeffs), canal_filter(dt, coeffs)]
        self._trans = _Moments()
        self._rot = _Moments()
        self._exceed = [0, 0]
        self._max = dict.fromkeys(self._MAX, 0.0)

    def push(self, platform: PlatformTrajectory, ref: ReferenceTrajectory) -> None:
        if len(platform) != len(ref):
            raise ValueError(f"platform ({len(platform)}) and reference ({len(ref)}) chunk lengths differ")
        fp, fv, wp, wv = (flt.process(u) for flt, u in
                          zip(self._filters, (platform.f, ref.f_v, platform.omega, ref.omega_v)))
        self._trans.push(fp, fv)
        self._rot.push(wp, wv)
        self._exceed[0] += int(np.sum(np.abs(fp - fv) > F_THRESHOLD))
        self._exceed[1] += int(np.sum(np.abs(wp - wv) > OMEGA_THRESHOLD))
        for k in self._MAX:
            self._max[k] = max(self._max[k], float(np.max(np.abs(getattr(platform, k)), initial=0.0)))

    def report(self) -> ComparisonReport:
        n = self._trans.n
        if n == 0:
            raise ValueError("no samples pushed")
        rot_rms = self._rot.rms()
        return ComparisonReport(
            trans_rms=self._trans.rms(), rot_rms=rot_rms, rot_rms_deg=float(np.rad2deg(rot_rms)),
            trans_pearson=self._trans.pearson(), rot_pearson=self._rot.pearson(),
            trans_exceed_fraction=self._exceed[0] / n, rot_exceed_fraction=self._exceed[1] / n,
            **{f"max_{k}": self._max[k] for k in self._MAX},
        )


def compare_reports(a: ComparisonReport, b: ComparisonReport, labels=("A", "B")) -> str:
    """Side-by-side table of two reports; ``delta`` is first minus second."""
    rows = [("metric", labels[0], labels[1], "delta")]
    for name in a.to_dict():
        va, vb = getattr(a, name), getattr(b, name)
        rows.append((name, _num(va), _num(vb), _num(va - vb)))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in rows)
