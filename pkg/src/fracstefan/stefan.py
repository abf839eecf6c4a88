"""Free-boundary construction.

Two independent routes to the front:

* Picard iteration of the front map ``(P s)(t) = b + int_0^t g``, where
  ``g = -(D^alpha u)(s(tau), tau)`` is read off the fixed-front solution for
  the current iterate, with damping and clamping of ``g`` into ``(0, M]``;
* coupled marching, which advances ``s`` explicitly with the current flux and
  then takes one implicit field step.

``mass_balance_residual`` checks the integrated form
``s(t) + int_0^s u = b + int_0^b u0`` on either result.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from .errors import ConvergenceError, SolverError, ValidationError
from .frac_ops import Field
from .given_front import (
    Trajectory,
    admit_initial_condition,
    build_assembly,
    is_trivial,
    solve_given_front,
    step_fixed_front,
)
from .transform import FrontPath, ProblemSpec, stefan_speed_from_cylindrical

log = logging.getLogger(__name__)

__all__ = [
    "FixedPointConfig",
    "PImage",
    "apply_P",
    "solve_stefan_picard",
    "solve_stefan_marching",
    "mass_balance_residual",
]


@dataclass(frozen=True)
class FixedPointConfig:
    max_iters: int = 50
    tol_sup: float = 1e-9
    relaxation: float = 0.5
    sdot_min: float = 1e-12

    def __post_init__(self):
        problems = []
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            problems.append(f"max_iters must be a positive integer, got {self.max_iters}")
        if not self.tol_sup > 0:
            problems.append(f"tol_sup must be positive, got {self.tol_sup}")
        if not 0.0 < self.relaxation <= 1.0:
            problems.append(f"relaxation must lie in (0,1], got {self.relaxation}")
        if not self.sdot_min > 0:
            problems.append(f"sdot_min must be positive, got {self.sdot_min}")
        if problems:
            raise ValidationError(problems)


@dataclass
class PImage:
    """Result of one application of the front map."""

    front: FrontPath
    raw_speed: np.ndarray
    clamp_count: int
    trajectory: Trajectory = field(repr=False)


def apply_P(
    front: FrontPath,
    spec: ProblemSpec,
    cfg: FixedPointConfig | None = None,
    u0: Field | None = None,
    assembly=None,
) -> PImage:
    """Solve with the given front and integrate the resulting flux in time."""
    cfg = cfg or FixedPointConfig()
    traj = solve_given_front(spec, front, u0, assembly)
    raw = -traj.fluxes()
    speed = np.clip(raw, cfg.sdot_min, spec.M)
    clamped = int(np.count_nonzero(np.abs(speed - raw) > 1e-12 * spec.M))
    s_new = spec.b + np.concatenate(([0.0], cumulative_trapezoid(speed, traj.times)))
    return PImage(FrontPath(traj.times, s_new, speed), raw, clamped, traj)


def solve_stefan_picard(spec: ProblemSpec, cfg: FixedPointConfig | None = None) -> Trajectory:
    """Damped fixed-point iteration ``s <- (1 - r) s + r P s``.

    Stops once ``sup_t |P s - s| <= tol_sup`` and returns the fixed-front
    solution for that ``s``.  The iteration log lands in
    ``Trajectory.iterations``.
    """
    cfg = cfg or FixedPointConfig()
    u0 = admit_initial_condition(None, spec)
    if is_trivial(u0):
        raise ValidationError("Picard construction needs u0 != 0 (the front would not move)")
    assembly = build_assembly(spec.alpha, spec.grid)
    g0 = stefan_speed_from_cylindrical(u0.values, spec.b, spec.alpha)
    slope = min(spec.M, max(g0, cfg.sdot_min))
    front = FrontPath.linear(spec.b, slope, spec.times)

    history = []
    residuals = []
    for k in range(cfg.max_iters):
        start = time.perf_counter()
        image = apply_P(front, spec, cfg, u0, assembly)
        residual = float(np.max(np.abs(image.front.s_values - front.s_values)))
        residuals.append(residual)
        history.append(
            {
                "k": k,
                "sup_residual": residual,
                "clamp_count": image.clamp_count,
                "wall_time": time.perf_counter() - start,
            }
        )
        log.debug("picard k=%d residual=%.3e clamps=%d", k, residual, image.clamp_count)
        if residual <= cfg.tol_sup:
            if image.clamp_count:
                raise SolverError(
                    f"converged with {image.clamp_count} clamped flux samples; "
                    "refine the grid or check the data bound M"
                )
            traj = image.trajectory
            traj.iterations = history
            return traj
        r = cfg.relaxation
        front = FrontPath(
            front.times,
            (1.0 - r) * front.s_values + r * image.front.s_values,
            (1.0 - r) * front.s_dot + r * image.front.s_dot,
        )
    raise ConvergenceError(f"Picard iteration stalled after {cfg.max_iters} iterations", residuals)


def solve_stefan_marching(spec: ProblemSpec, u0: Field | None = None) -> Trajectory:
    """Explicit front update followed by an implicit field step.

    Per step: ``g_n = -(D^alpha u)(s_n, t_n)``, ``s_{n+1} = s_n + dt g_n``, then
    the field is advanced with ``(s_{n+1}, g_n)``.  A flux of the wrong sign
    beyond the audit tolerance aborts the run.
    """
    u0 = admit_initial_condition(u0, spec)
    trivial = is_trivial(u0)
    assembly = build_assembly(spec.alpha, spec.grid)
    tol = spec.audit_tol
    dt = spec.dt

    v = Field(spec.grid, u0.values, "neumann_zero", "dirichlet_zero")
    snapshots = [v]
    s_vals = [spec.b]
    s_dot = []
    for n in range(spec.n_steps):
        speed = stefan_speed_from_cylindrical(v.values, s_vals[-1], spec.alpha)
        if speed < -tol:
            raise SolverError(
                f"front speed {speed:.3e} < 0 at t={n * dt:.6g}: flux sign lost", step=n
            )
        s_dot.append(speed)
        s_next = s_vals[-1] + dt * speed
        v = step_fixed_front(v, s_next, speed, dt, assembly, step_index=n + 1)
        s_vals.append(s_next)
        snapshots.append(v)
    s_dot.append(stefan_speed_from_cylindrical(v.values, s_vals[-1], spec.alpha))

    front = FrontPath(spec.times, s_vals, s_dot)
    flags = ["trivial data"] if trivial else []
    if not trivial:
        problems = front.violations(spec.M, tol)
        if problems:
            flags.extend(problems)
            log.warning("marching front left the admissible class: %s", problems[:3])
    return Trajectory(spec, spec.times, snapshots, front, flags)


def mass_balance_residual(traj: Trajectory) -> np.ndarray:
    """``r(t) = s(t) + int_0^s u(x, t) dx - b - int_0^b u0 dx`` (trapezoid rule)."""
    p = traj.spec.grid.nodes
    s = np.asarray(traj.front.s_values)
    vals = traj.values
    mass = s * trapezoid(vals, p, axis=1)
    total = s + mass
    return total - total[0]
