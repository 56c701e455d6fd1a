"""Reference signals and what a driver perceives of them.

Builds the ISO double lane change and one stochastic training episode,
prints their peak specific force and roll rate, and shows how much of each
survives the otolith and canal filters.

    python demos/01_references_and_perception.py
"""
import numpy as np

from mcalab.env import EpisodeConfig
from mcalab.trajectory import iso_double_lane_change
from mcalab.vestibular import sense_rotation, sense_translation


def describe(name, ref):
    f_s = sense_translation(ref.f_v, ref.dt)
    w_s = sense_rotation(ref.omega_v, ref.dt)
    print(f"{name:>10}: {ref.duration:6.1f} s, peak f_v {np.max(np.abs(ref.f_v)):.3f} m/s^2 "
          f"(sensed {np.max(np.abs(f_s)):.3f}), peak omega_v {np.rad2deg(np.max(np.abs(ref.omega_v))):.2f} deg/s "
          f"(sensed {np.rad2deg(np.max(np.abs(w_s))):.2f})")


iso = iso_double_lane_change(10.0)
describe("ISO 10 m/s", iso)
describe("episode 0", EpisodeConfig().sample_reference(np.random.SeedSequence([0])))
# the otolith passes low frequencies at gain 0.4; the canal is a band-pass with mid-band gain tau4
for w in (0.01, 0.05, 0.5, 5.0):
    t = np.arange(int(3000 / 0.012)) * 0.012
    y = sense_rotation(np.sin(w * t))
    print(f"canal gain at {w:5.2f} rad/s: {np.max(np.abs(y[len(y) // 2:])):.3f}")
