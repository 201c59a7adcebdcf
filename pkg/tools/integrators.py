"""
Fixed-step integrators
"""

import numpy as np


def rk4_step(f, t: float, x: np.ndarray, h: float) -> np.ndarray:
    """One classical Runge-Kutta step of x' = f(t, x)"""
    k1 = f(t, x)
    k2 = f(t + 0.5 * h, x + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, x + 0.5 * h * k2)
    k4 = f(t + h, x + h * k3)
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate(f, x0: np.ndarray, h: float, steps: int, t0: float = 0.0) -> np.ndarray:
    """Open-loop RK4 rollout; returns the (steps+1, dim) state history"""
    states = np.empty((steps + 1, np.size(x0)))
    states[0] = x0
    x = np.asarray(x0, dtype=float)
    for k in range(steps):
        x = rk4_step(f, t0 + k * h, x, h)
        states[k + 1] = x
    return states
