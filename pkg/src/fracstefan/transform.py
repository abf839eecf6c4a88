"""Front-fixing change of variables ``p = x / s(t)`` and the problem data types.

Physical and cylindrical grids always share their node count, so moving
between frames is an index-wise relabeling of nodal values with the spacing
rescaled by ``s``.  No interpolation happens between frames.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gamma

from .errors import AdmissibilityError, ValidationError
from .frac_ops import (
    Field,
    Grid,
    assemble_caputo,
    assemble_dcaputo,
    assemble_riemann_liouville,
    nodal_derivative,
)

__all__ = [
    "ICFamily",
    "InitialCondition",
    "ProblemSpec",
    "FrontPath",
    "to_cylindrical",
    "from_cylindrical",
    "scaling_identity_defect",
    "stefan_speed_from_cylindrical",
    "front_flux_physical",
    "barrier_profile",
]


class ICFamily(enum.Enum):
    CONE = "cone"
    QUARTIC = "quartic"
    BARRIER = "barrier"
    CUSTOM_NODES = "custom_nodes"


def barrier_profile(x, s: float, alpha: float, M: float) -> np.ndarray:
    """``M Gamma(2-alpha) s^(alpha-1) (s - x)``, the comparison function at time ``t``."""
    x = np.asarray(x, dtype=float)
    return M * gamma(2.0 - alpha) * s ** (alpha - 1.0) * (s - x)


def quartic_c_max(b: float, alpha: float, M: float) -> float:
    """Largest ``c`` for which ``c (b^2 - x^2)^2 / b^4`` stays under the data cone.

    ``(b - x)(b + x)^2`` peaks at ``x = b/3`` with value ``32 b^3 / 27``.
    """
    return 27.0 / 32.0 * M * gamma(2.0 - alpha) * b**alpha


@dataclass(frozen=True)
class InitialCondition:
    """Descriptor of ``u0`` on ``[0, b]``; sampled as zero beyond ``b``.

    ``params`` per family:

    * cone: ``c``
    * quartic: ``c`` and optional ``bump_amp``, ``bump_center``, ``bump_width``
      (a C1 bump ``amp * (1 - r^2)^2`` added on ``|x - center| < width``)
    * barrier: none
    * custom_nodes: ``values`` at equispaced nodes of ``[0, b]``
    """

    family: ICFamily
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "family", ICFamily(self.family))
        allowed = {
            ICFamily.CONE: {"c"},
            ICFamily.QUARTIC: {"c", "bump_amp", "bump_center", "bump_width"},
            ICFamily.BARRIER: set(),
            ICFamily.CUSTOM_NODES: {"values"},
        }[self.family]
        unknown = set(self.params) - allowed
        if unknown:
            raise ValidationError(
                f"unknown parameters for {self.family.value}: {sorted(unknown)}"
            )

    def __hash__(self):
        return hash((self.family, repr(sorted(self.params.items()))))

    def sample(self, x, b: float, alpha: float, M: float) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = x <= b
        p = self.params
        if self.family is ICFamily.CONE:
            out = float(p.get("c", 1.0)) * (b - x)
        elif self.family is ICFamily.QUARTIC:
            c = float(p.get("c", 0.5 * quartic_c_max(b, alpha, M)))
            out = c * (b**2 - x**2) ** 2 / b**4
            amp = float(p.get("bump_amp", 0.0))
            if amp:
                centre = float(p.get("bump_center", 0.5 * b))
                width = float(p.get("bump_width", 0.2 * b))
                r = (x - centre) / width
                out = out + amp * np.where(np.abs(r) < 1.0, (1.0 - r**2) ** 2, 0.0)
        elif self.family is ICFamily.BARRIER:
            out = barrier_profile(x, b, alpha, M)
        else:
            values = np.asarray(p["values"], dtype=float)
            out = np.interp(x, np.linspace(0.0, b, values.size), values)
        return np.where(inside, out, 0.0)


@dataclass(frozen=True)
class ProblemSpec:
    """Data and resolution of one run.

    ``h`` and ``dt`` refer to the cylindrical frame; ``tol`` overrides the
    default audit tolerance ``10 (h + dt) ||u0||_inf``.
    """

    alpha: float
    b: float
    T: float
    M: float
    u0: InitialCondition
    n_nodes: int = 129
    n_steps: int = 128
    allow_corner: bool = False
    tol: float | None = None

    def __post_init__(self):
        problems = []
        if not 0.0 < self.alpha < 1.0:
            problems.append(f"alpha out of (0,1): {self.alpha}")
        for name in ("b", "T", "M"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                problems.append(f"{name} must be positive, got {value}")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 3:
            problems.append(f"n_nodes must be an integer >= 3, got {self.n_nodes}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            problems.append(f"n_steps must be a positive integer, got {self.n_steps}")
        if not isinstance(self.u0, InitialCondition):
            problems.append("u0 must be an InitialCondition")
        if problems:
            raise ValidationError(problems)

    @property
    def grid(self) -> Grid:
        return Grid.cylindrical(self.n_nodes)

    @property
    def h(self) -> float:
        return 1.0 / (self.n_nodes - 1)

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def u0_values(self) -> np.ndarray:
        """``u0`` at the physical nodes ``x_i = b p_i``."""
        return self.u0.sample(self.b * self.grid.nodes, self.b, self.alpha, self.M)

    def u0_field(self) -> Field:
        return Field(Grid.physical(self.n_nodes, self.b), self.u0_values())

    @property
    def audit_tol(self) -> float:
        if self.tol is not None:
            return float(self.tol)
        return 10.0 * (self.h + self.dt) * float(np.max(np.abs(self.u0_values())))

    def replace(self, **changes) -> "ProblemSpec":
        from dataclasses import replace

        return replace(self, **changes)


@dataclass(frozen=True)
class FrontPath:
    """Samples ``(t_n, s_n, sdot_n)`` of the free boundary.

    ``s_dot`` is stored explicitly so the Stefan update and the drift
    coefficient ``x sdot / s`` see the same value.
    """

    times: np.ndarray
    s_values: np.ndarray
    s_dot: np.ndarray

    def __post_init__(self):
        arrays = {}
        for name in ("times", "s_values", "s_dot"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            arrays[name] = arr
            object.__setattr__(self, name, arr)
        n = arrays["times"].size
        if arrays["s_values"].size != n or arrays["s_dot"].size != n:
            raise ValidationError("times, s_values and s_dot must have equal length")
        if n == 0 or arrays["times"][0] != 0.0:
            raise ValidationError("front times must start at 0")
        if np.any(np.diff(arrays["times"]) <= 0):
            raise ValidationError("front times must be strictly increasing")

    @property
    def b(self) -> float:
        return float(self.s_values[0])

    @classmethod
    def linear(cls, b: float, speed: float, times) -> "FrontPath":
        times = np.asarray(times, dtype=float)
        return cls(times, b + speed * times, np.full(times.shape, float(speed)))

    def violations(self, M: float, tol: float = 0.0) -> list[str]:
        """Every breach of the admissible class, each with its sample index."""
        out = []
        ds = np.diff(self.s_values)
        for i in np.flatnonzero(ds <= 0):
            out.append(f"s not strictly increasing at index {i + 1}")
        for i in np.flatnonzero(self.s_dot <= 0):
            out.append(f"s_dot[{i}] = {self.s_dot[i]!r} is not positive")
        for i in np.flatnonzero(self.s_dot > M + tol):
            out.append(f"s_dot[{i}] = {self.s_dot[i]!r} exceeds M = {M}")
        lip = M * np.diff(self.times) + tol
        for i in np.flatnonzero(np.abs(ds) > lip):
            out.append(f"Lipschitz bound broken on [{i}, {i + 1}]")
        return out

    def check(self, M: float, tol: float = 0.0) -> "FrontPath":
        problems = self.violations(M, tol)
        if problems:
            raise AdmissibilityError(problems)
        return self


def _as_field(u) -> Field:
    if not isinstance(u, Field):
        raise ValidationError("expected a Field")
    return u


def to_cylindrical(u: Field, s: float, n_nodes: int | None = None) -> Field:
    """``v(p) = u(s p)``; an exact copy of nodal values onto the unit grid."""
    u = _as_field(u)
    if not s > 0:
        raise ValidationError(f"front position must be positive, got {s}")
    if not math.isclose(u.grid.length, s, rel_tol=1e-12, abs_tol=0.0):
        raise ValidationError(
            f"field lives on [0, {u.grid.length}], not on [0, {s}]"
        )
    if n_nodes is not None and n_nodes != u.grid.n_nodes:
        raise ValidationError("frames must share the node count; resampling is not supported")
    return Field(Grid.cylindrical(u.grid.n_nodes), u.values, u.bc_left, u.bc_right)


def from_cylindrical(v: Field, s: float) -> Field:
    """``u(x) = v(x / s)`` on ``[0, s]`` with spacing ``s h``."""
    v = _as_field(v)
    if not s > 0:
        raise ValidationError(f"front position must be positive, got {s}")
    return Field(Grid.physical(v.grid.n_nodes, s), v.values, v.bc_left, v.bc_right)


def scaling_identity_defect(
    u: Field, s: float, alpha: float, route: str = "cross", x_min_fraction: float = 0.0
) -> float:
    r"""Max interior mismatch in :math:`\partial^\alpha u_x = s^{-1-\alpha}\partial^\alpha v_p`.

    ``route="cross"`` evaluates the left side in the physical frame through
    nodal ``u_x`` and the Riemann-Liouville matrix, and the right side in the
    cylinder with the solver's ``d/dx D^alpha`` matrix, so the number measures
    the discretisation error of the identity and shrinks under refinement.

    ``route="same"`` uses the solver matrix in both frames; since the frames
    are relabelings this only exposes rounding.

    Near ``x = 0`` the exact ``d/dx D^alpha u`` behaves like ``x^(1-alpha)``,
    which caps the cross-route order of the full interior maximum at
    ``1 - alpha``.  ``x_min_fraction`` restricts the maximum to
    ``x >= x_min_fraction * s``, where the order is one.
    """
    u = _as_field(u)
    v = to_cylindrical(u, s)
    cyl = assemble_dcaputo(alpha, v.grid) @ v.values
    rhs = s ** (-1.0 - alpha) * cyl
    if route == "cross":
        ux = nodal_derivative(u.values, u.grid.h)
        lhs = assemble_riemann_liouville(alpha, u.grid) @ ux
    elif route == "same":
        lhs = assemble_dcaputo(alpha, u.grid) @ u.values
    else:
        raise ValidationError(f"unknown route {route!r}")
    if not 0.0 <= x_min_fraction < 1.0:
        raise ValidationError(f"x_min_fraction must lie in [0, 1), got {x_min_fraction}")
    mask = np.zeros(u.grid.n_nodes, dtype=bool)
    mask[1:-1] = True
    mask &= u.grid.nodes >= x_min_fraction * s
    return float(np.max(np.abs(lhs - rhs)[mask]))


@lru_cache(maxsize=64)
def _caputo_last_row(alpha: float, n_nodes: int) -> np.ndarray:
    row = assemble_caputo(alpha, Grid.cylindrical(n_nodes)).entries[-1].copy()
    row.flags.writeable = False
    return row


def cylinder_flux(v, alpha: float) -> float:
    """``(D^alpha v)(1)`` on the unit grid."""
    values = v.values if isinstance(v, Field) else np.asarray(v, dtype=float)
    row = _caputo_last_row(float(alpha), values.size)
    return float(row @ values)


def stefan_speed_from_cylindrical(v, s: float, alpha: float) -> float:
    """Front speed ``-(D^alpha u)(s) = -s^(-alpha) (D^alpha v)(1)``."""
    if not s > 0:
        raise ValidationError(f"front position must be positive, got {s}")
    return -(s ** (-float(alpha))) * cylinder_flux(v, alpha)


def front_flux_physical(u: Field, alpha: float) -> float:
    """``(D^alpha u)(s)`` evaluated directly on the physical grid."""
    u = _as_field(u)
    return float((assemble_caputo(alpha, u.grid) @ u.values)[-1])
