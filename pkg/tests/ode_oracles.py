"""Dense fixed-step integration of continuous LTI systems (the discretisation oracle)."""
import numpy as np
from scipy import signal


def rk4_propagators(A, B, h):
    """One classical RK4 step of x' = A x + B u with u held: x+ = R x + Q u."""
    n = A.shape[0]
    I = np.eye(n)
    hA = h * A
    R = I + hA + hA @ hA / 2 + hA @ hA @ hA / 6 + hA @ hA @ hA @ hA / 24
    Q = h * (I + hA / 2 + hA @ hA / 6 + hA @ hA @ hA / 24) @ B
    return R, Q


def dense_step_response(num, den, dt, n, sub=100, amplitude=1.0):
    """Output of TF num/den at t = k dt (k < n) for a step applied at t = 0, integrated with step dt/sub."""
    A, B, C, D = signal.tf2ss(num, den)
    R, Q = rk4_propagators(A, B, dt / sub)
    Rs = np.eye(A.shape[0])
    Qs = np.zeros_like(Q)
    for _ in range(sub):
        Qs = R @ Qs + Q
        Rs = R @ Rs
    x = np.zeros((A.shape[0], 1))
    y = np.empty(n)
    for k in range(n):
        y[k] = (C @ x)[0, 0] + D[0, 0] * amplitude
        x = Rs @ x + Qs * amplitude
    return y


def dense_state_response(A, B, C, D, u_of_t, dt, n, sub=100):
    """Outputs at t = k dt of x' = A x + B u(t), u evaluated at each fine step start (piecewise constant)."""
    h = dt / sub
    R, Q = rk4_propagators(A, B, h)
    x = np.zeros((A.shape[0], 1))
    ys = np.empty((n, C.shape[0]))
    for k in range(n):
        u = u_of_t(k * dt)
        ys[k] = (C @ x)[:, 0] + D[:, 0] * u
        for j in range(sub):
            x = R @ x + Q * u_of_t(k * dt + j * h)
    return ys
