"""Numerical audits of the qualitative properties of the model.

Each auditor is a pure function returning an :class:`AuditCheck`.  Strict
inequalities become ``<= -tol`` (or ``>= 1 + 1e-12``) with ``tol`` tied to
the discretisation error.  :data:`AUDITORS` lists the names covered by
:func:`audit_suite`.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.integrate import trapezoid
from scipy.special import gamma

from .errors import ValidationError
from .frac_ops import Field, Grid, assemble_dcaputo, caputo_at_point_maxrep
from .given_front import Trajectory
from .stefan import mass_balance_residual, solve_stefan_marching, solve_stefan_picard
from .transform import ICFamily, ProblemSpec, barrier_profile

__all__ = [
    "AuditCheck",
    "AuditReport",
    "BarrierParams",
    "AUDITORS",
    "kappa_alpha",
    "omega_alpha_delta",
    "a_threshold",
    "delta_minus",
    "barrier_inner_integral",
    "barrier_expression",
    "barrier_expression_min",
    "barrier_scale",
    "near_edge_bound_margin",
    "audit_extremum_principle",
    "audit_flux_and_bounds",
    "audit_interior_max_sign",
    "audit_front_hopf",
    "audit_mass_balance",
    "audit_monotone_dependence",
    "audit_max_point_sign",
    "audit_kappa_identities",
    "audit_barrier_nonnegativity",
    "audit_suite",
    "negate_snapshot",
]


@dataclass
class AuditCheck:
    name: str
    passed: bool
    worst_violation: float
    location: object = None
    tolerance: float | None = None
    detail: dict = field(default_factory=dict)


@dataclass
class AuditReport:
    checks: list = field(default_factory=list)
    tolerances: dict = field(default_factory=dict)

    def add(self, check: AuditCheck) -> None:
        if any(c.name == check.name for c in self.checks):
            raise ValidationError(f"duplicate audit entry {check.name!r}")
        self.checks.append(check)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failed(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "checks": [_jsonable(asdict(c)) for c in self.checks],
            "tolerances": _jsonable(self.tolerances),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def table(self) -> str:
        lines = [f"{'check':<28} {'status':<6} {'worst violation':>16}  location"]
        for c in self.checks:
            status = "PASS" if c.passed else "FAIL"
            lines.append(f"{c.name:<28} {status:<6} {c.worst_violation:>16.6e}  {c.location}")
        return "\n".join(lines)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else repr(value)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


# -- barrier-construction formulas -------------------------------------------


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha out of (0,1): {alpha}")
    return alpha


def kappa_alpha(alpha: float) -> float:
    """``(3 - sqrt(3) sqrt((1+a)/(3-a))) / (2-a)``; exceeds 1 on ``(0, 1)``."""
    alpha = _check_alpha(alpha)
    return (3.0 - math.sqrt(3.0) * math.sqrt((1.0 + alpha) / (3.0 - alpha))) / (2.0 - alpha)


def omega_alpha_delta(alpha: float, delta: float) -> float:
    if not delta > 0:
        raise ValidationError(f"delta must be positive, got {delta}")
    kappa = kappa_alpha(alpha)
    return 2.0 * delta * (kappa - 1.0) / kappa


def a_threshold(alpha: float, delta: float) -> float:
    """Smallest decay rate for which the barrier expression is nonnegative."""
    omega = omega_alpha_delta(alpha, delta)
    return (
        4.0 * delta**2 / gamma(2.0 - alpha)
        * (2.0 * delta - omega) ** (1.0 - alpha)
        / (delta**2 - (delta - omega) ** 2) ** 2
    )


def delta_minus(alpha: float, length: float) -> float:
    """Smaller root in ``d`` of ``d^2 - 3L d/(2-a) + 3L^2/((2-a)(3-a))``, solved numerically."""
    alpha = _check_alpha(alpha)
    roots = np.roots(
        [1.0, -3.0 * length / (2.0 - alpha), 3.0 * length**2 / ((2.0 - alpha) * (3.0 - alpha))]
    )
    return float(np.min(roots.real))


@dataclass(frozen=True)
class BarrierParams:
    alpha: float
    delta: float
    x1: float = 0.0
    epsilon_amp: float = 1.0
    a: float | None = None
    domain_length: float | None = None

    def __post_init__(self):
        _check_alpha(self.alpha)
        problems = []
        if not self.delta > 0:
            problems.append(f"delta must be positive, got {self.delta}")
        if not self.epsilon_amp > 0:
            problems.append(f"epsilon_amp must be positive, got {self.epsilon_amp}")
        if self.x1 < 0:
            problems.append(f"x1 must be >= 0, got {self.x1}")
        if self.domain_length is not None and self.x1 + 2 * self.delta > self.domain_length:
            problems.append("barrier support [x1, x1 + 2 delta] leaves the domain")
        if problems:
            raise ValidationError(problems)
        a_star = a_threshold(self.alpha, self.delta)
        if self.a is None:
            object.__setattr__(self, "a", a_star)
        elif self.a < a_star * (1.0 - 1e-12):
            raise ValidationError(f"decay rate a={self.a} below threshold a*={a_star}")


def _kernel_moment(k: int, alpha: float, lo, hi):
    """``int_lo^hi tau^(k - alpha) d tau``."""
    e = k + 1.0 - alpha
    return (np.asarray(hi, dtype=float) ** e - np.asarray(lo, dtype=float) ** e) / e


def barrier_inner_integral(alpha: float, delta: float, x1: float, x) -> np.ndarray:
    """``3 int_{x1}^{x} (x - p)^(-alpha) (p - x1 - delta)^2 dp`` in closed form.

    With ``tau = x - p`` the integrand is ``tau^(-alpha) (d - tau)^2`` where
    ``d = x - x1 - delta``; it is integrated against the kernel moments of
    orders 0, 1, 2.  Per-cell moments telescope, so one moment over
    ``[0, x - x1]`` is the exact per-cell sum.
    """
    x = np.asarray(x, dtype=float)
    length = x - x1
    d = length - delta
    m0 = _kernel_moment(0, alpha, 0.0, length)
    m1 = _kernel_moment(1, alpha, 0.0, length)
    m2 = _kernel_moment(2, alpha, 0.0, length)
    return 3.0 * (d**2 * m0 - 2.0 * d * m1 + m2)


def barrier_expression(params: BarrierParams, x) -> np.ndarray:
    """``-eta_t + d/dx D^alpha eta`` of the bump barrier at its start time."""
    al, de, x1 = params.alpha, params.delta, params.x1
    x = np.asarray(x, dtype=float)
    length = x - x1
    decay = params.a * (de**2 - (length - de) ** 2) ** 2
    flux = (4.0 / gamma(1.0 - al)) * (
        barrier_inner_integral(al, de, x1, x) - de**2 * length ** (1.0 - al) / (1.0 - al)
    )
    return params.epsilon_amp * (decay + flux)


def barrier_scale(params: BarrierParams) -> float:
    al, de = params.alpha, params.delta
    return params.epsilon_amp * max(
        params.a * de**4, 4.0 * de**2 * (2.0 * de) ** (1.0 - al) / gamma(2.0 - al)
    )


def _open_support(params: BarrierParams, n_eval: int) -> np.ndarray:
    x = params.x1 + 2.0 * params.delta * np.linspace(0.0, 1.0, n_eval)
    return x[1:-1]


def barrier_expression_min(params: BarrierParams, n_eval: int = 10_000) -> tuple[float, float]:
    """Minimum of :func:`barrier_expression` over the open support and where it occurs."""
    x = _open_support(params, n_eval)
    vals = barrier_expression(params, x)
    i = int(np.argmin(vals))
    return float(vals[i]), float(x[i])


def near_edge_bound_margin(params: BarrierParams, n_eval: int = 10_000) -> float:
    """Min of ``3 int - (4 delta^2/3) L^(1-alpha)/(1-alpha)`` over ``(x1, x1 + delta/3]``."""
    x = _open_support(params, n_eval)
    x = x[x <= params.x1 + params.delta / 3.0]
    al, de = params.alpha, params.delta
    length = x - params.x1
    bound = 4.0 * de**2 / 3.0 * length ** (1.0 - al) / (1.0 - al)
    return float(np.min(barrier_inner_integral(al, de, params.x1, x) - bound))


# -- trajectory auditors -------------------------------------------------------


def _tol(traj: Trajectory, tol: float | None) -> float:
    return traj.spec.audit_tol if tol is None else float(tol)


def audit_extremum_principle(traj: Trajectory, tol: float | None = None) -> AuditCheck:
    """Interior extrema are bounded by the parabolic boundary; ``u >= -tol`` everywhere."""
    tol = _tol(traj, tol)
    u = traj.values
    boundary = np.concatenate([u[0], u[:, 0], u[:, -1]])
    interior = u[1:, 1:-1]
    b_min, b_max = float(boundary.min()), float(boundary.max())
    parts = {
        "interior_min_below_boundary": b_min - float(interior.min()),
        "interior_max_above_boundary": float(interior.max()) - b_max,
        "negative_values": -float(u.min()),
    }
    worst_key = max(parts, key=parts.get)
    worst = parts[worst_key]
    if worst_key == "interior_max_above_boundary":
        k, i = np.unravel_index(np.argmax(interior), interior.shape)
        where = (int(i) + 1, float(traj.times[k + 1]))
    elif worst_key == "interior_min_below_boundary":
        k, i = np.unravel_index(np.argmin(interior), interior.shape)
        where = (int(i) + 1, float(traj.times[k + 1]))
    else:
        k, i = np.unravel_index(np.argmin(u), u.shape)
        where = (int(i), float(traj.times[k]))
    return AuditCheck(
        "extremum_principle",
        worst <= tol,
        max(0.0, worst),
        where,
        tol,
        {"parts": parts, "boundary_min": b_min, "boundary_max": b_max},
    )


def audit_flux_and_bounds(
    traj: Trajectory, spec: ProblemSpec | None = None, tol: float | None = None
) -> AuditCheck:
    """Flux window ``[-M - tol, tol]``, strict sign after one step, and the cone bound."""
    spec = spec or traj.spec
    tol = _tol(traj, tol)
    flux = traj.fluxes()
    s = np.asarray(traj.front.s_values)
    parts = {}
    where = {}

    low = -spec.M - flux
    parts["flux_below_minus_M"] = float(low.max())
    where["flux_below_minus_M"] = ("front", float(traj.times[int(np.argmax(low))]))
    high = flux
    parts["flux_positive"] = float(high.max())
    where["flux_positive"] = ("front", float(traj.times[int(np.argmax(high))]))

    nontrivial = "trivial data" not in traj.flags
    if nontrivial and len(flux) > 1:
        # strictness: flux <= -tol from the first step on
        strict = flux[1:] + 2.0 * tol
        k = int(np.argmax(strict))
        parts["flux_not_strictly_negative"] = float(strict[k])
        where["flux_not_strictly_negative"] = ("front", float(traj.times[k + 1]))

    p = spec.grid.nodes
    cone = np.vstack([barrier_profile(sk * p, sk, spec.alpha, spec.M) for sk in s])
    excess = traj.values - cone
    k, i = np.unravel_index(np.argmax(excess), excess.shape)
    parts["cone_bound_excess"] = float(excess[k, i])
    where["cone_bound_excess"] = (int(i), float(traj.times[k]))

    # each part passes when <= tol; the strict part is stored as flux + 2 tol
    worst_key = max(parts, key=parts.get)
    amount = parts[worst_key]
    return AuditCheck(
        "flux_and_bounds",
        amount <= tol,
        max(amount, 0.0),
        where[worst_key],
        tol,
        {"parts": parts, "min_flux": float(flux.min()), "max_flux": float(flux.max())},
    )


def audit_interior_max_sign(traj: Trajectory, rtol: float = 1e-9) -> AuditCheck:
    """``d/dx D^alpha u <= 0`` at interior local maxima that dominate ``[0, x0]``."""
    op = assemble_dcaputo(traj.spec.alpha, traj.spec.grid)
    worst, where, visited = -np.inf, None, 0
    for k, snap in enumerate(traj.snapshots):
        v = snap.values
        running = np.maximum.accumulate(v)
        local = (v[1:-1] >= v[:-2]) & (v[1:-1] >= v[2:]) & (v[1:-1] >= running[1:-1])
        idx = np.flatnonzero(local) + 1
        if idx.size == 0:
            continue
        visited += idx.size
        vals = (op @ v)[idx]
        scale = rtol * (1.0 + float(np.max(np.abs(op.entries[idx]) @ np.abs(v))))
        j = int(np.argmax(vals - scale))
        if vals[j] - scale > worst:
            worst, where = float(vals[j] - scale), (int(idx[j]), float(traj.times[k]))
    worst = max(worst, 0.0) if visited else 0.0
    return AuditCheck(
        "interior_max_sign", worst <= 0.0, worst, where, rtol, {"maxima_checked": visited}
    )


def audit_front_hopf(traj: Trajectory, tol: float | None = None) -> AuditCheck:
    """Hopf-type sign at the front through the boundary representation.

    ``u`` is minimal (zero) at ``x = s``; applied to ``-u`` the representation
    gives ``-(D^alpha u)(s) >= 0``.  When ``||u0|| >= 10 tol`` it must exceed
    ``tol`` from the first step on.
    """
    tol = _tol(traj, tol)
    alpha = traj.spec.alpha
    u0_norm = float(np.max(np.abs(traj.values[0])))
    demand_strict = u0_norm >= 10.0 * tol and "trivial data" not in traj.flags
    worst, where = -np.inf, None
    for k in range(len(traj.times)):
        u = traj.physical(k)
        neg = Field(u.grid, -u.values)
        value = caputo_at_point_maxrep(neg, u.grid.n_nodes - 1, alpha)
        need = tol if (demand_strict and k >= 1) else -tol
        shortfall = need - value
        if shortfall > worst:
            worst, where = shortfall, ("front", float(traj.times[k]))
    return AuditCheck(
        "front_hopf_sign",
        worst <= 0.0,
        max(worst, 0.0),
        where,
        tol,
        {"strict_demanded": demand_strict},
    )


def audit_mass_balance(traj: Trajectory, factor: float = 10.0) -> AuditCheck:
    spec = traj.spec
    r = mass_balance_residual(traj)
    u0_l1 = spec.b * float(trapezoid(np.abs(traj.values[0]), spec.grid.nodes))
    bound = factor * (spec.h + spec.dt) * (spec.b + u0_l1)
    k = int(np.argmax(np.abs(r)))
    worst = float(abs(r[k]))
    return AuditCheck(
        "mass_balance", worst <= bound, worst, ("time", float(traj.times[k])), bound
    )


def _zero_extended(spec: ProblemSpec, x) -> np.ndarray:
    return spec.u0.sample(x, spec.b, spec.alpha, spec.M)


def _solve(spec: ProblemSpec, solver: str) -> Trajectory:
    if solver == "marching":
        return solve_stefan_marching(spec)
    if solver == "picard":
        return solve_stefan_picard(spec)
    raise ValidationError(f"unknown solver {solver!r}")


def audit_monotone_dependence(
    spec1: ProblemSpec, spec2: ProblemSpec, solver: str = "marching", C: float | None = None
) -> AuditCheck:
    """Ordered data give ordered fronts: ``s1 <= s2 + C (h + dt)``."""
    problems = []
    if spec1.b > spec2.b:
        problems.append(f"b1={spec1.b} exceeds b2={spec2.b}")
    if spec1.n_steps != spec2.n_steps or spec1.T != spec2.T:
        problems.append("both runs must share the time grid")
    if spec1.n_nodes != spec2.n_nodes:
        problems.append("both runs must share the node count")
    x = np.union1d(spec1.b * spec1.grid.nodes, spec2.b * spec2.grid.nodes)
    gap = _zero_extended(spec1, x) - _zero_extended(spec2, x)
    scale = 1e-12 * (1.0 + float(np.max(np.abs(_zero_extended(spec2, x)))))
    if np.any(gap > scale):
        i = int(np.argmax(gap))
        problems.append(f"u0^1 exceeds u0^2 at x={x[i]:.6g} by {gap[i]:.3e}")
    if problems:
        raise ValidationError(problems)

    t1 = _solve(spec1, solver)
    t2 = _solve(spec2, solver)
    if C is None:
        C = spec2.b + spec2.M * spec2.T
    tol = C * (spec2.h + spec2.dt)
    diff = np.asarray(t1.front.s_values) - np.asarray(t2.front.s_values)
    k = int(np.argmax(diff))
    return AuditCheck(
        "monotone_dependence",
        float(diff[k]) <= tol,
        max(float(diff[k]), 0.0),
        ("time", float(t1.times[k])),
        tol,
        {"s1_T": float(t1.front.s_values[-1]), "s2_T": float(t2.front.s_values[-1])},
    )


def random_max_field(rng: np.random.Generator, grid: Grid, i0: int) -> np.ndarray:
    """Random smooth field whose maximum over ``[0, x0]`` sits at ``x0``.

    ``f = -(x0 - x) w1(x) - (x0 - x)^2 w2(x)`` with positive random
    trigonometric weights; arbitrary beyond ``x0``.
    """
    x = grid.nodes
    x0 = x[i0]
    def weight():
        k = rng.integers(1, 6, size=3)
        c = rng.normal(size=3)
        w = np.sum(c[:, None] * np.sin(np.pi * k[:, None] * x[None, :] / grid.length), axis=0)
        return rng.uniform(0.0, 1.0) * np.exp(0.5 * w)
    d = x0 - x
    f = -d * weight() - d**2 * weight() + rng.normal()
    return f


def audit_max_point_sign(seed: int = 0, n_fields: int = 200, n_nodes: int = 65) -> AuditCheck:
    """Boundary-representation Caputo derivative at a maximum point is ``>= 0``.

    Strictly positive once the oscillation over ``[0, x0]`` beats ten times
    the grid tolerance.
    """
    rng = np.random.default_rng(seed)
    grid = Grid.cylindrical(n_nodes)
    worst, where, strict_cases = -np.inf, None, 0
    for trial in range(n_fields):
        alpha = float(rng.uniform(0.05, 0.95))
        i0 = int(rng.integers(1, n_nodes))
        f = random_max_field(rng, grid, i0)
        value = caputo_at_point_maxrep(f, i0, alpha, grid)
        x0 = grid.nodes[i0]
        grid_tol = 1e-10 * (1.0 + float(np.max(np.abs(f[: i0 + 1])))) * x0 ** (-alpha)
        osc = float(np.ptp(f[: i0 + 1]))
        if osc > 10.0 * grid_tol:
            strict_cases += 1
            shortfall = grid_tol - value
        else:
            shortfall = -grid_tol - value
        if shortfall > worst:
            worst, where = float(shortfall), {"trial": trial, "alpha": alpha, "node": i0}
    return AuditCheck(
        "max_point_sign",
        worst <= 0.0,
        max(worst, 0.0),
        where,
        None,
        {"fields": n_fields, "strict_cases": strict_cases, "seed": seed},
    )


def audit_kappa_identities(seed: int = 0, n_draws: int = 20, atol: float = 1e-12) -> AuditCheck:
    """``kappa > 1 + 1e-12`` on an alpha ladder, ``kappa (2 delta - omega)/2 = delta``,
    and ``kappa = 2 delta_- / L`` against a numerical quadratic solve."""
    rng = np.random.default_rng(seed)
    alphas = np.round(np.arange(0.05, 0.951, 0.05), 10)
    kappas = np.array([kappa_alpha(a) for a in alphas])
    gap_one = float(np.max(1.0 + 1e-12 - kappas))
    ident = 0.0
    for a in alphas:
        for d in (0.05, 0.1, 0.5):
            omega = omega_alpha_delta(a, d)
            ident = max(ident, abs(kappa_alpha(a) * (2 * d - omega) / 2 - d) / d)
    root = 0.0
    for _ in range(n_draws):
        a = float(rng.uniform(0.01, 0.99))
        length = float(rng.uniform(0.01, 2.0))
        root = max(root, abs(kappa_alpha(a) - 2.0 * delta_minus(a, length) / length))
    worst = max(gap_one, ident - atol, root - atol)
    return AuditCheck(
        "kappa_identities",
        gap_one < 0 and ident <= atol and root <= atol,
        max(worst, 0.0),
        {"alpha_min_kappa": float(alphas[int(np.argmin(kappas))])},
        atol,
        {"min_kappa": float(kappas.min()), "identity_err": ident, "root_err": root},
    )


def audit_barrier_nonnegativity(
    alphas=(0.25, 0.5, 0.75), deltas=(0.05, 0.1), n_eval: int = 10_000, rtol: float = 1e-8
) -> AuditCheck:
    """Barrier expression stays ``>= -rtol * scale`` at the threshold decay rate."""
    worst, where = -np.inf, None
    detail = {}
    for a in alphas:
        for d in deltas:
            params = BarrierParams(a, d)
            value, x = barrier_expression_min(params, n_eval)
            margin = near_edge_bound_margin(params, n_eval)
            scale = barrier_scale(params)
            shortfall = max(-value - rtol * scale, -margin - rtol * scale)
            detail[f"alpha={a},delta={d}"] = {"min": value, "edge_margin": margin}
            if shortfall > worst:
                worst, where = shortfall, {"alpha": a, "delta": d, "x": x}
    return AuditCheck(
        "barrier_nonnegativity", worst <= 0.0, max(worst, 0.0), where, rtol, detail
    )


AUDITORS = (
    "extremum_principle",
    "flux_and_bounds",
    "interior_max_sign",
    "front_hopf_sign",
    "mass_balance",
    "monotone_dependence",
    "max_point_sign",
    "kappa_identities",
    "barrier_nonnegativity",
)


def negate_snapshot(traj: Trajectory, k: int | None = None) -> Trajectory:
    """Copy of ``traj`` with one snapshot sign-flipped (auditor self-test)."""
    if k is None:
        k = len(traj.snapshots) // 2
    snaps = list(traj.snapshots)
    snaps[k] = snaps[k].with_values(-snaps[k].values + 0.0)
    return replace(traj, snapshots=snaps)


def nested_partner(spec: ProblemSpec, enlarge: float = 0.1) -> ProblemSpec:
    """Problem with data ordered above ``spec``'s: enlarged ``b`` for the parametric families."""
    if spec.u0.family is ICFamily.CUSTOM_NODES:
        return spec
    return spec.replace(b=spec.b * (1.0 + enlarge))


def audit_suite(
    spec: ProblemSpec,
    seed: int = 0,
    solver: str = "marching",
    inject: str | None = None,
    traj: Trajectory | None = None,
) -> tuple[AuditReport, Trajectory]:
    """Run every auditor in :data:`AUDITORS` once.

    ``inject`` names a trajectory auditor that receives a corrupted copy of
    the trajectory, for exercising the failure path.
    """
    if inject is not None and inject not in AUDITORS:
        raise ValidationError(f"unknown auditor {inject!r}")
    if traj is None:
        traj = _solve(spec, solver)
    report = AuditReport(tolerances={"audit_tol": spec.audit_tol, "seed": seed})
    bad = negate_snapshot(traj)

    def pick(name):
        return bad if inject == name else traj

    report.add(audit_extremum_principle(pick("extremum_principle")))
    report.add(audit_flux_and_bounds(pick("flux_and_bounds"), spec))
    report.add(audit_interior_max_sign(pick("interior_max_sign")))
    report.add(audit_front_hopf(pick("front_hopf_sign")))
    report.add(audit_mass_balance(pick("mass_balance")))
    if inject == "monotone_dependence":
        report.add(audit_monotone_dependence(spec, spec, solver, C=-1.0))
    else:
        report.add(audit_monotone_dependence(spec, nested_partner(spec), solver))
    report.add(audit_max_point_sign(seed))
    report.add(audit_kappa_identities(seed))
    report.add(audit_barrier_nonnegativity())
    for c in report.checks:
        # data-independent checks cannot be corrupted through the trajectory
        if c.name == inject and c.passed:
            c.passed = False
            c.detail["injected"] = True
    missing = set(AUDITORS) - {c.name for c in report.checks}
    assert not missing, missing
    return report, traj
