"""Static SVG figures for an evaluated run.

Output is byte-reproducible: the SVG id salt is fixed and no date metadata
is written.
"""
from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .kinematics import PlatformTrajectory  # noqa: E402
from .metrics import F_THRESHOLD, OMEGA_THRESHOLD, SensedSignals  # noqa: E402
from .trajectory import ReferenceTrajectory  # noqa: E402

_RC = {"svg.hashsalt": "mcalab", "svg.fonttype": "path", "figure.dpi": 100, "font.size": 9}
_META = {"Date": None, "Creator": None}


def _save(fig, path):
    with plt.rc_context(_RC):
        fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def _figure(nrows):
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(nrows, 1, figsize=(7.0, 2.2 * nrows), sharex=True, squeeze=False)
    return fig, axes[:, 0]


def sensed_overlay(t, s: SensedSignals, path, label="platform"):
    fig, (ax1, ax2) = _figure(2)
    ax1.plot(t, s.f_vehicle, "k-", lw=1.0, label="vehicle")
    ax1.plot(t, s.f_platform, "C0-", lw=1.0, label=label)
    ax1.set_ylabel("sensed f [m/s$^2$]")
    ax1.legend(loc="upper right")
    ax2.plot(t, np.rad2deg(s.omega_vehicle), "k-", lw=1.0)
    ax2.plot(t, np.rad2deg(s.omega_platform), "C0-", lw=1.0)
    ax2.set_ylabel("sensed $\\omega$ [deg/s]")
    ax2.set_xlabel("t [s]")
    return _save(fig, path)


def error_vs_threshold(t, s: SensedSignals, path):
    fig, (ax1, ax2) = _figure(2)
    ax1.plot(t, s.f_platform - s.f_vehicle, "C3-", lw=1.0)
    for sign in (-1, 1):
        ax1.axhline(sign * F_THRESHOLD, color="k", ls="--", lw=0.8)
        ax2.axhline(sign * np.rad2deg(OMEGA_THRESHOLD), color="k", ls="--", lw=0.8)
    ax1.set_ylabel("f error [m/s$^2$]")
    ax2.plot(t, np.rad2deg(s.omega_platform - s.omega_vehicle), "C3-", lw=1.0)
    ax2.set_ylabel("$\\omega$ error [deg/s]")
    ax2.set_xlabel("t [s]")
    return _save(fig, path)


def platform_states(plat: PlatformTrajectory, path, x_max: float | None = None):
    fig, axes = _figure(4)
    t = plat.t
    rows = [(plat.x, "x [m]"), (plat.v, "v [m/s]"), (plat.a, "a [m/s$^2$]"), (np.rad2deg(plat.phi), "$\\varphi$ [deg]")]
    for ax, (y, name) in zip(axes, rows):
        ax.plot(t, y, "C0-", lw=1.0)
        ax.set_ylabel(name)
    if x_max is not None:
        for sign in (-1, 1):
            axes[0].axhline(sign * x_max, color="k", ls="--", lw=0.8)
    axes[-1].set_xlabel("t [s]")
    return _save(fig, path)


def evaluation_figures(plat: PlatformTrajectory, ref: ReferenceTrajectory, s: SensedSignals, out_dir,
                       prefix: str = "", x_max: float | None = None) -> list[str]:
    """Write the three standard panels; returns the file paths."""
    os.makedirs(out_dir, exist_ok=True)
    t = ref.t
    return [
        sensed_overlay(t, s, os.path.join(out_dir, f"{prefix}sensed.svg")),
        error_vs_threshold(t, s, os.path.join(out_dir, f"{prefix}error.svg")),
        platform_states(plat, os.path.join(out_dir, f"{prefix}platform.svg"), x_max),
    ]
