"""Fifty (state, action, reference) cases and a plain scalar reward oracle.

The oracle is written out branch by branch without numpy so it shares no
code with the library implementation.
"""
import math

OMEGA_PT = 3.0 * math.pi / 180.0

W = dict(w_f=0.25, w_omega=2.0, w_x=0.1, w_da=0.5, w_domega=0.5, r_limit=100.0, x_max=1.0,
         phi_L=math.pi / 2, omega_PT=OMEGA_PT)


def oracle(x, phi, omega, f, da, dw, ref_f, ref_w, w=W):
    """Returns (total, [seven terms], terminated)."""
    r1 = w["w_f"] * abs(f - ref_f)
    err = abs(omega - ref_w)
    if err <= w["omega_PT"]:
        r2 = 0.0
    else:
        r2 = w["w_omega"] * err
    r3 = w["w_x"] * abs(x)
    r4 = w["w_da"] * abs(da)
    r5 = w["w_domega"] * abs(dw)
    r6 = w["r_limit"] if abs(x) >= w["x_max"] else 0.0
    r7 = w["r_limit"] if abs(phi) >= w["phi_L"] else 0.0
    total = 1.0 - r1 - r2 - r3 - r4 - r5 - r6 - r7
    return total, [r1, r2, r3, r4, r5, r6, r7], (r6 > 0 or r7 > 0)


def _row(x=0.0, phi=0.0, omega=0.0, f=0.0, da=0.0, dw=0.0, ref_f=0.0, ref_w=0.0):
    return (x, phi, omega, f, da, dw, ref_f, ref_w)


d3 = OMEGA_PT
CASES = [
    _row(),                                             # perfect tracking at rest
    _row(omega=math.radians(2.0)),                      # inside the perception band
    _row(omega=d3),                                     # exactly on the threshold
    _row(omega=d3 + 1e-9),                              # just above it
    _row(omega=-d3),
    _row(omega=-d3 - 1e-9),
    _row(omega=0.1, ref_w=0.1 - d3),                    # error exactly at threshold with offset reference
    _row(omega=0.1, ref_w=0.1 + d3 + 1e-6),
    _row(x=1.0),                                        # workspace edge: terminates
    _row(x=-1.0),
    _row(x=1.01),
    _row(x=0.999999),
    _row(phi=math.pi / 2),                              # roll limit
    _row(phi=-math.pi / 2),
    _row(phi=math.pi / 2 - 1e-9),
    _row(x=1.5, phi=1.6),                               # both limits
    _row(f=1.0),
    _row(f=-1.0, ref_f=1.0),
    _row(f=2.5, ref_f=2.5),
    _row(da=0.12),
    _row(da=-0.12),
    _row(dw=4.2e-3),
    _row(dw=-4.2e-3),
    _row(x=0.5, da=0.05, dw=1e-3, f=0.3, ref_f=0.4, omega=0.2, ref_w=0.0),
    _row(x=-0.3, phi=0.1, omega=-0.07, f=0.98, ref_f=-0.5, ref_w=0.01, da=-0.1, dw=2e-3),
]
# a reproducible grid for the rest
for i in range(50 - len(CASES)):
    s = (i + 1) / 25.0
    CASES.append(_row(
        x=((-1) ** i) * 0.04 * i,
        phi=0.03 * ((i % 7) - 3),
        omega=0.01 * ((i % 11) - 5),
        f=-2.0 + 0.16 * i,
        da=0.12 * math.sin(i),
        dw=4.2e-3 * math.cos(i),
        ref_f=1.5 * math.sin(s * 3.0),
        ref_w=0.02 * math.cos(s * 2.0),
    ))
assert len(CASES) == 50
