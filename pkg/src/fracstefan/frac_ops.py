r"""Discrete fractional integrals and derivatives on a uniform 1-D mesh.

All operators are dense ``n x n`` matrices acting on nodal values.  The
fractional integral uses product integration against the kernel
:math:`(x - p)^{\alpha - 1} / \Gamma(\alpha)` with a piecewise-linear
interpolant of the integrand; the Caputo derivative is the fractional
integral of order :math:`1 - \alpha` applied to the piecewise-constant cell
derivative (the L1 scheme).  Kernel moments are integrated in closed form on
every cell, so the weakly singular kernel is never sampled pointwise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import gamma

from .errors import ValidationError

__all__ = [
    "Frame",
    "OpKind",
    "Grid",
    "Field",
    "FracOpMatrix",
    "assemble_fractional_integral",
    "assemble_caputo",
    "assemble_riemann_liouville",
    "assemble_dcaputo",
    "cell_difference_matrix",
    "node_difference_matrix",
    "nodal_derivative",
    "semigroup_defect",
    "caputo_at_point_maxrep",
]


class Frame(enum.Enum):
    CYLINDRICAL = "cylindrical"
    PHYSICAL = "physical"


class OpKind(enum.Enum):
    INTEGRAL_I = "integral_I"
    CAPUTO_D = "caputo_D"
    RIEMANN_LIOUVILLE_D = "riemann_liouville_D"
    DD_COMPOSED = "dD_composed"


@dataclass(frozen=True)
class Grid:
    """Uniform mesh ``x_i = i * h`` on ``[0, length]``.

    The cylindrical frame always has ``length == 1``; a physical grid carries
    the current domain length ``s``.
    """

    n_nodes: int
    length: float = 1.0
    frame: Frame = Frame.CYLINDRICAL

    def __post_init__(self):
        problems = []
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 3:
            problems.append(f"n_nodes must be an integer >= 3, got {self.n_nodes}")
        if not (self.length > 0 and math.isfinite(self.length)):
            problems.append(f"grid length must be positive, got {self.length}")
        if self.frame is Frame.CYLINDRICAL and self.length != 1.0:
            problems.append("cylindrical grid must have length 1")
        if problems:
            raise ValidationError(problems)

    @classmethod
    def cylindrical(cls, n_nodes: int) -> "Grid":
        return cls(n_nodes, 1.0, Frame.CYLINDRICAL)

    @classmethod
    def physical(cls, n_nodes: int, length: float) -> "Grid":
        return cls(n_nodes, float(length), Frame.PHYSICAL)

    @property
    def h(self) -> float:
        return self.length / (self.n_nodes - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_nodes) * self.h


@dataclass(frozen=True)
class Field:
    """Nodal values of a scalar function on a grid at one time level."""

    grid: Grid
    values: np.ndarray
    bc_left: str = "none"
    bc_right: str = "none"

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.shape != (self.grid.n_nodes,):
            raise ValidationError(
                f"field has {values.shape} values, grid has {self.grid.n_nodes} nodes"
            )
        if self.bc_left not in ("neumann_zero", "none"):
            raise ValidationError(f"unknown left boundary tag {self.bc_left!r}")
        if self.bc_right not in ("dirichlet_zero", "none"):
            raise ValidationError(f"unknown right boundary tag {self.bc_right!r}")
        if self.bc_right == "dirichlet_zero" and values[-1] != 0.0:
            raise ValidationError(
                f"dirichlet_zero field has value {values[-1]!r} at the last node"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.nodes

    def with_values(self, values) -> "Field":
        return Field(self.grid, values, self.bc_left, self.bc_right)


@dataclass(frozen=True)
class FracOpMatrix:
    alpha: float
    kind: OpKind
    entries: np.ndarray = field(repr=False)
    grid: Grid
    # right-to-left factors whose product is ``entries``; applying them in
    # sequence keeps exact annihilation of constants
    factors: tuple = field(default=(), repr=False, compare=False)

    def __matmul__(self, other):
        if isinstance(other, Field):
            if other.grid.n_nodes != self.grid.n_nodes:
                raise ValidationError("field and operator live on different grids")
            vec = other.values
        else:
            vec = np.asarray(other, dtype=float)
        if not self.factors:
            return self.entries @ vec
        for factor in reversed(self.factors):
            vec = factor @ vec
        return vec

    def to_csv(self, path) -> None:
        """Row-major dump at full double precision."""
        np.savetxt(Path(path), self.entries, delimiter=",", fmt="%.17g")


def _check_order(alpha, *, allow_one: bool) -> float:
    alpha = float(alpha)
    upper_ok = alpha <= 1.0 if allow_one else alpha < 1.0
    if not (alpha > 0.0 and upper_ok):
        bracket = "(0,1]" if allow_one else "(0,1)"
        raise ValidationError(f"alpha out of {bracket}: {alpha}")
    return alpha


def _check_grid(grid: Grid) -> None:
    if grid.n_nodes < 3:
        raise ValidationError(f"n_nodes must be >= 3, got {grid.n_nodes}")


def _offsets(n: int) -> np.ndarray:
    """``k[i, j] = i - j`` clipped at zero (rows are targets, columns sources)."""
    idx = np.arange(n)
    return np.maximum(idx[:, None] - idx[None, :], 0).astype(float)


def _linear_product_weights(alpha: float, n: int) -> np.ndarray:
    r"""Weights of :math:`I^\alpha` for piecewise-linear data in units of ``h = 1``.

    For target node ``i`` and cell ``[j, j+1]`` (``j < i``) the kernel is
    integrated against the two hat functions over
    :math:`\tau = i - p \in [i-j-1, i-j]`.
    """
    hi = _offsets(n)
    lo = np.maximum(hi - 1.0, 0.0)
    active = np.tri(n, k=-1, dtype=bool)  # cell j contributes to row i iff j < i
    m0 = (hi**alpha - lo**alpha) / alpha
    m1 = (hi ** (alpha + 1) - lo ** (alpha + 1)) / (alpha + 1)
    w_left = np.where(active, m1 - lo * m0, 0.0)  # multiplies f_j
    w_right = np.where(active, hi * m0 - m1, 0.0)  # multiplies f_{j+1}
    weights = w_left.copy()
    weights[:, 1:] += w_right[:, :-1]
    return weights / gamma(alpha)


def _cell_integral_weights(beta: float, n: int) -> np.ndarray:
    r"""``n x (n-1)`` matrix integrating cell-constant data against the kernel.

    Row ``i``, column ``j`` holds
    :math:`\frac{1}{\Gamma(\beta)}\int_{x_j}^{x_{j+1}} (x_i - p)^{\beta-1}\,dp`
    in units of ``h = 1`` (zero for ``j >= i``).
    """
    hi = _offsets(n)[:, :-1]
    lo = np.maximum(hi - 1.0, 0.0)
    active = np.tri(n, n - 1, k=-1, dtype=bool)
    return np.where(active, hi**beta - lo**beta, 0.0) / gamma(beta + 1.0)


def cell_difference_matrix(grid: Grid) -> np.ndarray:
    """``(n-1) x n`` forward differences; row ``j`` is the slope on cell ``j``."""
    n = grid.n_nodes
    d = np.zeros((n - 1, n))
    rows = np.arange(n - 1)
    d[rows, rows] = -1.0
    d[rows, rows + 1] = 1.0
    return d / grid.h


def node_difference_matrix(grid: Grid) -> np.ndarray:
    """Nodal first difference used for the outer derivative in ``d/dx D^alpha``.

    Forward difference at nodes ``0..n-2``, backward at the last node.
    """
    n = grid.n_nodes
    d = np.zeros((n, n))
    rows = np.arange(n - 1)
    d[rows, rows] = -1.0
    d[rows, rows + 1] = 1.0
    d[n - 1, n - 2] = -1.0
    d[n - 1, n - 1] = 1.0
    return d / grid.h


def nodal_derivative(values, h: float) -> np.ndarray:
    """Central differences inside, second-order one-sided at the ends."""
    return np.gradient(np.asarray(values, dtype=float), h, edge_order=2)


def assemble_fractional_integral(alpha: float, grid: Grid) -> FracOpMatrix:
    """Product-integration matrix for the Riemann-Liouville integral ``I^alpha``.

    Exact whenever the integrand is piecewise linear on the grid; row 0 is
    zero.
    """
    alpha = _check_order(alpha, allow_one=True)
    _check_grid(grid)
    entries = grid.h**alpha * _linear_product_weights(alpha, grid.n_nodes)
    return FracOpMatrix(alpha, OpKind.INTEGRAL_I, entries, grid)


def _caputo_factors(alpha: float, grid: Grid) -> tuple:
    beta = 1.0 - alpha
    cell_int = grid.h**beta * _cell_integral_weights(beta, grid.n_nodes)
    return cell_int, cell_difference_matrix(grid)


def assemble_caputo(alpha: float, grid: Grid) -> FracOpMatrix:
    """L1 matrix for the Caputo derivative, ``D^alpha f = I^{1-alpha} f'``.

    Constants are annihilated exactly and affine data are reproduced exactly.
    """
    alpha = _check_order(alpha, allow_one=False)
    _check_grid(grid)
    cell_int, diff = _caputo_factors(alpha, grid)
    return FracOpMatrix(alpha, OpKind.CAPUTO_D, cell_int @ diff, grid, (cell_int, diff))


def assemble_riemann_liouville(alpha: float, grid: Grid) -> FracOpMatrix:
    r"""Matrix for :math:`\partial^\alpha f = \frac{d}{dx} I^{1-\alpha} f`.

    Built as the exact derivative of :math:`I^{1-\alpha}` applied to the
    piecewise-linear interpolant, which is the Caputo matrix plus the
    :math:`f(0)\,x^{-\alpha}/\Gamma(1-\alpha)` column.  The derivative is
    singular at ``x = 0`` unless ``f(0) = 0``; row 0 is left at zero.
    """
    alpha = _check_order(alpha, allow_one=False)
    _check_grid(grid)
    cell_int, diff = _caputo_factors(alpha, grid)
    entries = cell_int @ diff
    x = grid.nodes
    entries[1:, 0] += x[1:] ** (-alpha) / gamma(1.0 - alpha)
    entries[0, :] = 0.0
    return FracOpMatrix(alpha, OpKind.RIEMANN_LIOUVILLE_D, entries, grid)


def assemble_dcaputo(alpha: float, grid: Grid) -> FracOpMatrix:
    """``d/dx D^alpha``: nodal first difference composed with the Caputo matrix.

    With the forward difference every row has nonnegative off-diagonal
    entries and zero row sum, so ``Id - dt * A`` is an M-matrix.
    """
    caputo = assemble_caputo(alpha, grid)
    outer = node_difference_matrix(grid)
    entries = outer @ caputo.entries
    return FracOpMatrix(
        caputo.alpha, OpKind.DD_COMPOSED, entries, grid, (outer, *caputo.factors)
    )


def _values(f) -> np.ndarray:
    return f.values if isinstance(f, Field) else np.asarray(f, dtype=float)


def semigroup_defect(alpha: float, beta: float, grid: Grid, f) -> float:
    """Max-norm of ``(K_beta K_alpha - K_{alpha+beta}) f``."""
    alpha = _check_order(alpha, allow_one=True)
    beta = _check_order(beta, allow_one=True)
    _check_order(alpha + beta, allow_one=True)
    values = _values(f)
    k_a = assemble_fractional_integral(alpha, grid)
    k_b = assemble_fractional_integral(beta, grid)
    k_ab = assemble_fractional_integral(alpha + beta, grid)
    return float(np.max(np.abs(k_b @ (k_a @ values) - k_ab @ values)))


def caputo_at_point_maxrep(f, x0_index: int, alpha: float, grid: Grid | None = None) -> float:
    r"""Caputo derivative at ``x0`` through the boundary representation.

    With :math:`g = f(x_0) - f`, the value is

    .. math::

        D^\alpha f(x_0) = \frac{x_0^{-\alpha} g(0)}{\Gamma(1-\alpha)}
            + \frac{\alpha}{\Gamma(1-\alpha)}
              \int_0^{x_0} (x_0 - p)^{-\alpha-1} g(p)\,dp,

    evaluated exactly for the piecewise-linear interpolant of ``g``.  Both
    terms are nonnegative when ``f`` is maximal at ``x0`` over ``[0, x0]``.
    """
    alpha = _check_order(alpha, allow_one=False)
    if grid is None:
        if not isinstance(f, Field):
            raise ValidationError("a grid is required when f is a plain array")
        grid = f.grid
    values = _values(f)
    i0 = int(x0_index)
    if not 0 < i0 < grid.n_nodes:
        raise ValidationError(f"x0_index must be in 1..{grid.n_nodes - 1}, got {i0}")
    h = grid.h
    g = values[i0] - values[: i0 + 1]
    x0 = i0 * h
    scale = 1.0 / gamma(1.0 - alpha)

    boundary = x0 ** (-alpha) * g[0] * scale
    # cell touching x0: g = g[i0-1] * tau / h, the tau^{-alpha-1} singularity cancels
    near = g[i0 - 1] * h ** (-alpha) / (1.0 - alpha)
    far = 0.0
    if i0 >= 2:
        j = np.arange(i0 - 1)
        lo = (i0 - j - 1) * h
        hi = (i0 - j) * h
        n0 = (lo ** (-alpha) - hi ** (-alpha)) / alpha
        n1 = (hi ** (1 - alpha) - lo ** (1 - alpha)) / (1 - alpha)
        # g at tau=hi is g[j], at tau=lo is g[j+1]
        far = float(np.sum(g[j] * (n1 - lo * n0) + g[j + 1] * (hi * n0 - n1)) / h)
    return float(boundary + alpha * scale * (near + far))
