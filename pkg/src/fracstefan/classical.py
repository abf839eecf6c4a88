"""Finite-difference solver for the classical one-phase Stefan problem.

    u_t = u_xx on (0, s(t)),  u_x(0, t) = 0,  u(s, t) = 0,  sdot = -u_x(s, t)

Used as an independent reference for runs with ``alpha`` close to 1.  It
shares no code with the fractional operators: the Landau-transformed
equation ``v_t = p (sdot/s) v_p + v_pp / s^2`` is discretised with a
three-point Laplacian, a ghost-node Neumann condition and an upwind drift,
giving a tridiagonal backward-Euler system solved with ``solve_banded``.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded

from .errors import ValidationError

__all__ = ["classical_stefan_front"]


def classical_stefan_front(
    u0, b: float, T: float, n_nodes: int, n_steps: int
) -> tuple[np.ndarray, np.ndarray]:
    """March the classical problem; returns ``(times, s)``.

    ``u0`` is a callable on ``[0, b]`` or an array of values at the
    ``n_nodes`` equispaced nodes.
    """
    if n_nodes < 4 or n_steps < 1 or not (b > 0 and T > 0):
        raise ValidationError("need n_nodes >= 4, n_steps >= 1, b > 0, T > 0")
    p = np.linspace(0.0, 1.0, n_nodes)
    h = p[1]
    dt = T / n_steps
    v = np.asarray(u0(b * p) if callable(u0) else u0, dtype=float).copy()
    v[-1] = 0.0

    s = float(b)
    out = [s]
    for _ in range(n_steps):
        speed = -(3.0 * v[-1] - 4.0 * v[-2] + v[-3]) / (2.0 * h) / s
        s += dt * speed
        diff = dt / (s * h) ** 2
        drift = dt * speed / s * p / h

        # banded storage: row 0 super, row 1 main, row 2 sub
        ab = np.zeros((3, n_nodes))
        ab[1] = 1.0 + 2.0 * diff + drift
        ab[0, 1:] = -diff - drift[:-1]
        ab[2, :-1] = -diff
        ab[0, 1] = -2.0 * diff  # ghost node v_{-1} = v_1
        ab[1, -1] = 1.0
        ab[2, -2] = 0.0
        rhs = v.copy()
        rhs[-1] = 0.0
        v = solve_banded((1, 1), ab, rhs)
        out.append(s)
    return np.arange(n_steps + 1) * dt, np.array(out)
