"""Fixed-front problem: march the transformed system on the unit cylinder.

With the front ``s(t)`` prescribed, ``v(p, t) = u(s(t) p, t)`` solves

    v_t = p (sdot / s) v_p + s^(-1-alpha) d/dp D^alpha v,
    v_p(0, t) = 0,  v(1, t) = 0,

which is integrated with backward Euler, coefficients frozen at the new time
level and the drift upwinded.  The interior block of ``Id - dt A`` is an
M-matrix, so the discrete scheme keeps the extremum principle.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.linalg
from scipy.special import gamma

from .errors import AdmissibilityError, SolverError, ValidationError
from .frac_ops import Field, Grid, assemble_dcaputo
from .transform import (
    FrontPath,
    ProblemSpec,
    cylinder_flux,
    from_cylindrical,
    stefan_speed_from_cylindrical,
)

log = logging.getLogger(__name__)

__all__ = [
    "OperatorAssembly",
    "Trajectory",
    "admit_initial_condition",
    "is_trivial",
    "build_assembly",
    "step_fixed_front",
    "solve_given_front",
    "export_trajectory",
]


@dataclass(frozen=True)
class OperatorAssembly:
    """Spatial matrices of ``A(t)`` on the unit grid.

    ``A(t) = (sdot/s) drift + s^(-1-alpha) A2``; rows 0 and ``n-1`` are
    replaced by the boundary conditions when the step matrix is formed.
    """

    alpha: float
    grid: Grid
    A2_matrix: np.ndarray = field(repr=False)
    drift_stencil: np.ndarray = field(repr=False)

    @property
    def neumann_row(self) -> np.ndarray:
        row = np.zeros(self.grid.n_nodes)
        row[:3] = np.array([-3.0, 4.0, -1.0]) / (2.0 * self.grid.h)
        return row

    def operator(self, s: float, s_dot: float) -> np.ndarray:
        return s ** (-1.0 - self.alpha) * self.A2_matrix + (s_dot / s) * self.drift_stencil

    def step_matrix(self, s: float, s_dot: float, dt: float) -> np.ndarray:
        n = self.grid.n_nodes
        mat = np.eye(n) - dt * self.operator(s, s_dot)
        mat[0] = self.neumann_row
        mat[-1] = 0.0
        mat[-1, -1] = 1.0
        return mat


def build_assembly(alpha: float, grid: Grid) -> OperatorAssembly:
    a2 = assemble_dcaputo(alpha, grid).entries
    n, h = grid.n_nodes, grid.h
    x = grid.nodes
    drift = np.zeros((n, n))
    # characteristics of v_t = x c v_x (c >= 0) run towards p = 0: upwind from the right
    rows = np.arange(n - 1)
    drift[rows, rows] = -x[rows] / h
    drift[rows, rows + 1] = x[rows] / h
    a2.flags.writeable = False
    drift.flags.writeable = False
    return OperatorAssembly(float(alpha), grid, a2, drift)


@dataclass
class Trajectory:
    """Snapshots of ``v`` on the unit grid together with the front path."""

    spec: ProblemSpec
    times: np.ndarray
    snapshots: list
    front: FrontPath
    flags: list = field(default_factory=list)
    iterations: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.snapshots) != len(self.times):
            raise ValidationError("snapshot count must equal time count")

    @property
    def values(self) -> np.ndarray:
        """``(n_times, n_nodes)`` array of cylindrical nodal values."""
        return np.vstack([snap.values for snap in self.snapshots])

    def physical(self, k: int) -> Field:
        return from_cylindrical(self.snapshots[k], float(self.front.s_values[k]))

    def flux(self, k: int) -> float:
        """``(D^alpha u)(s(t_k), t_k)``."""
        s = float(self.front.s_values[k])
        return s ** (-self.spec.alpha) * cylinder_flux(self.snapshots[k], self.spec.alpha)

    def fluxes(self) -> np.ndarray:
        return np.array([self.flux(k) for k in range(len(self.times))])


def is_trivial(values) -> bool:
    return not np.any(np.asarray(values.values if isinstance(values, Field) else values))


def admit_initial_condition(u0: Field | None, spec: ProblemSpec) -> Field:
    """Check ``u0`` against the data requirements and tag its boundary rows.

    Rejected when any node is negative, the last node is not exactly zero,
    the one-sided slope at ``x = 0`` is not flat (unless
    ``spec.allow_corner``), or the data cone
    ``u0 <= M Gamma(2-alpha) b^(alpha-1) (b - x)`` is broken.  Every
    violation is reported with its node index.  ``u0 == 0`` is accepted.
    """
    if u0 is None:
        u0 = spec.u0_field()
    if u0.grid.n_nodes != spec.n_nodes or not np.isclose(u0.grid.length, spec.b):
        raise ValidationError("u0 must be sampled on the physical grid of [0, b]")
    vals = np.asarray(u0.values, dtype=float)
    x = u0.grid.nodes
    h = u0.grid.h
    problems = []

    for i in np.flatnonzero(vals < 0):
        problems.append(f"u0 negative at node {i} (value {vals[i]:.3e})")
    if vals[-1] != 0.0:
        problems.append(f"u0(b) = {vals[-1]!r} is not zero at node {vals.size - 1}")

    slope0 = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * h)
    scale = float(np.max(np.abs(vals))) / spec.b
    if abs(slope0) > h * scale:
        msg = f"u0'(0) ~ {slope0:.3e} is not zero at node 0"
        if spec.allow_corner:
            log.info("accepted with corner at x=0: %s", msg)
        else:
            problems.append(msg)

    cone = spec.M * gamma(2.0 - spec.alpha) * spec.b ** (spec.alpha - 1.0) * (spec.b - x)
    excess = vals - cone
    slack = 1e-12 * (1.0 + np.abs(cone))
    bad = np.flatnonzero(excess > slack)
    if bad.size:
        worst = bad[np.argmax(excess[bad])]
        problems.append(
            f"data cone bound broken at {bad.size} node(s); worst node {worst} "
            f"(x={x[worst]:.6g}, excess {excess[worst]:.3e})"
        )
    if problems:
        raise AdmissibilityError(problems)
    if is_trivial(vals):
        log.warning("trivial data: u0 == 0, the front will not move")
    return Field(u0.grid, vals, "neumann_zero", "dirichlet_zero")


def step_fixed_front(
    v: Field,
    s: float,
    s_dot: float,
    dt: float,
    assembly: OperatorAssembly,
    source=None,
    *,
    step_index: int | None = None,
) -> Field:
    """One backward-Euler step of the transformed system.

    ``source`` (optional, length ``n``) is added to the interior right-hand
    side times ``dt``; its first and last entries are used as the right-hand
    sides of the Neumann and Dirichlet rows instead.
    """
    if not dt > 0:
        raise ValidationError(f"dt must be positive, got {dt}")
    if not s > 0:
        raise ValidationError(f"front position must be positive, got {s}")
    mat = assembly.step_matrix(s, s_dot, dt)
    rhs = np.array(v.values, dtype=float)
    rhs[0] = 0.0
    rhs[-1] = 0.0
    if source is not None:
        src = np.asarray(source, dtype=float)
        rhs[1:-1] += dt * src[1:-1]
        rhs[0] = src[0]
        rhs[-1] = src[-1]
    try:
        lu = scipy.linalg.lu_factor(mat, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolverError(f"LU factorisation failed: {exc}", step=step_index) from exc
    if np.any(np.diag(lu[0]) == 0.0):
        raise SolverError(
            "singular step matrix", step=step_index, condition=float(np.linalg.cond(mat))
        )
    new = scipy.linalg.lu_solve(lu, rhs)
    if not np.all(np.isfinite(new)):
        raise SolverError(
            "non-finite solution", step=step_index, condition=float(np.linalg.cond(mat))
        )
    new[-1] = 0.0
    return Field(v.grid, new, "neumann_zero", "dirichlet_zero")


def solve_given_front(
    spec: ProblemSpec,
    front: FrontPath,
    u0: Field | None = None,
    assembly: OperatorAssembly | None = None,
) -> Trajectory:
    """March the fixed-front problem over the time grid of ``spec``.

    Step ``n -> n+1`` uses ``s`` and ``sdot`` sampled at ``t_{n+1}``.
    """
    u0 = admit_initial_condition(u0, spec)
    times = spec.times
    if front.times.size != times.size or not np.allclose(front.times, times, rtol=0, atol=1e-12 * spec.T):
        raise ValidationError("front must be sampled on the time grid of the run")
    if not np.isclose(front.s_values[0], spec.b):
        raise ValidationError(f"front starts at {front.s_values[0]}, expected b = {spec.b}")
    front.check(spec.M, tol=1e-12 * spec.M)
    if assembly is None:
        assembly = build_assembly(spec.alpha, spec.grid)
    v = Field(spec.grid, u0.values, "neumann_zero", "dirichlet_zero")
    snapshots = [v]
    for n in range(spec.n_steps):
        try:
            v = step_fixed_front(
                v,
                float(front.s_values[n + 1]),
                float(front.s_dot[n + 1]),
                spec.dt,
                assembly,
                step_index=n + 1,
            )
        except SolverError as exc:
            raise SolverError(f"fixed-front solve failed at t={times[n + 1]:.6g}: {exc}") from exc
        snapshots.append(v)
    flags = ["trivial data"] if is_trivial(u0) else []
    return Trajectory(spec, times, snapshots, front, flags)


def _write_csv(path: Path, header: list[str], rows, note: str | None) -> None:
    with open(path, "w", newline="") as fh:
        if note:
            fh.write(f"# {note}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{float(v):.17g}" for v in row])


def export_trajectory(traj: Trajectory, out_dir, note: str | None = None, every: int = 1) -> None:
    """Write ``front.csv`` (t, s, sdot, flux) and ``snapshots/snap_KKKKK.csv`` (x, u)."""
    out = Path(out_dir)
    snap_dir = out / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)
    fluxes = traj.fluxes()
    f = traj.front
    _write_csv(
        out / "front.csv",
        ["t", "s", "s_dot", "flux"],
        zip(f.times, f.s_values, f.s_dot, fluxes),
        note,
    )
    last = len(traj.times) - 1
    for k in range(len(traj.times)):
        if k % every and k != last:
            continue
        u = traj.physical(k)
        _write_csv(snap_dir / f"snap_{k:05d}.csv", ["x", "u"], zip(u.x, u.values), note)


def initial_speed(spec: ProblemSpec, u0: Field | None = None) -> float:
    """Front speed implied by the data at ``t = 0``."""
    u0 = admit_initial_condition(u0, spec)
    return stefan_speed_from_cylindrical(u0.values, spec.b, spec.alpha)


