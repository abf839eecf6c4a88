
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad
from scipy.special import gamma

from fracstefan.errors import ValidationError
from fracstefan.frac_ops import (
    Field,
    Frame,
    Grid,
    OpKind,
    assemble_caputo,
    assemble_dcaputo,
    assemble_fractional_integral,
    assemble_riemann_liouville,
    caputo_at_point_maxrep,
    nodal_derivative,
    semigroup_defect,
)

ALPHAS = (0.25, 0.5, 0.75)


def observed_orders(errors, ratio=2.0):
    e = np.asarray(errors)
    return np.log(e[:-1] / e[1:]) / np.log(ratio)


class TestGridAndField:
    def test_cylindrical_grid_has_unit_length(self):
        g = Grid.cylindrical(5)
        assert g.h == 0.25
        np.testing.assert_array_equal(g.nodes, [0, 0.25, 0.5, 0.75, 1.0])

    def test_cylindrical_rejects_other_lengths(self):
        with pytest.raises(ValidationError):
            Grid(5, 2.0, Frame.CYLINDRICAL)

    def test_too_few_nodes(self):
        with pytest.raises(ValidationError, match="n_nodes"):
            Grid.physical(2, 1.0)

    def test_field_values_are_read_only(self):
        f = Field(Grid.cylindrical(4), [1.0, 2.0, 3.0, 0.0])
        with pytest.raises(ValueError):
            f.values[0] = 5.0

    def test_dirichlet_tag_requires_zero_end(self):
        with pytest.raises(ValidationError, match="last node"):
            Field(Grid.cylindrical(4), [1.0, 1.0, 1.0, 1e-300], bc_right="dirichlet_zero")

    def test_shape_mismatch(self):
        with pytest.raises(ValidationError):
            Field(Grid.cylindrical(4), np.ones(5))


class TestFractionalIntegral:
    @pytest.mark.parametrize("alpha", (0.3, 0.5, 1.0))
    def test_exact_on_linear_data(self, alpha):
        grid = Grid.physical(41, 2.0)
        x = grid.nodes
        op = assemble_fractional_integral(alpha, grid)
        expected = 3 * x**alpha / gamma(1 + alpha) + 2 * x ** (1 + alpha) / gamma(2 + alpha)
        np.testing.assert_allclose(op @ (3 + 2 * x), expected, rtol=1e-12, atol=1e-14)

    def test_row_zero_vanishes(self):
        op = assemble_fractional_integral(0.4, Grid.cylindrical(9))
        assert op.kind is OpKind.INTEGRAL_I
        assert not op.entries[0].any()

    def test_against_quadrature(self):
        # independent weakly-singular quadrature of a smooth integrand
        grid = Grid.cylindrical(257)
        alpha = 0.35
        f = np.cos
        op = assemble_fractional_integral(alpha, grid)
        i = 200
        x = grid.nodes[i]
        ref = quad(f, 0, x, weight="alg", wvar=(0, alpha - 1))[0] / gamma(alpha)
        # the 'alg' weight on [0, x] is p^0 (x - p)^(alpha - 1)
        assert (op @ f(grid.nodes))[i] == pytest.approx(ref, rel=1e-4)

    def test_rejects_bad_order(self):
        with pytest.raises(ValidationError, match="alpha"):
            assemble_fractional_integral(1.5, Grid.cylindrical(5))

    @pytest.mark.parametrize("alpha,beta", [(0.3, 0.4), (0.5, 0.5), (0.2, 0.7)])
    def test_semigroup_defect_shrinks(self, alpha, beta):
        defects = []
        for n in (33, 65, 129):
            grid = Grid.cylindrical(n)
            x = grid.nodes
            defects.append(semigroup_defect(alpha, beta, grid, x * (1 - x)))
        assert min(observed_orders(defects)) >= 1.0


class TestCaputo:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_constants_annihilated_exactly(self, alpha):
        op = assemble_caputo(alpha, Grid.cylindrical(129))
        assert np.all(op @ np.full(129, 7.3) == 0.0)

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_affine_reproduced(self, alpha):
        grid = Grid.physical(129, 1.7)
        x = grid.nodes
        got = assemble_caputo(alpha, grid) @ (2.0 - 0.6 * x)
        exact = -0.6 * x ** (1 - alpha) / gamma(2 - alpha)
        np.testing.assert_allclose(got[1:], exact[1:], rtol=1e-10)
        assert got[0] == 0.0

    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_power_rule_order(self, alpha):
        errs = []
        for n in (33, 65, 129, 257):
            grid = Grid.cylindrical(n)
            x = grid.nodes
            exact = 2 * x ** (2 - alpha) / gamma(3 - alpha)
            errs.append(np.max(np.abs(assemble_caputo(alpha, grid) @ x**2 - exact)))
        assert min(observed_orders(errs)) >= 2 - alpha - 0.3

    def test_matches_riemann_liouville_when_f0_vanishes(self):
        grid = Grid.cylindrical(33)
        x = grid.nodes
        f = np.sin(x)
        cap = assemble_caputo(0.4, grid) @ f
        rl = assemble_riemann_liouville(0.4, grid) @ f
        np.testing.assert_allclose(cap[1:], rl[1:], atol=1e-13)

    def test_riemann_liouville_of_constant(self):
        grid = Grid.cylindrical(33)
        x = grid.nodes
        rl = assemble_riemann_liouville(0.6, grid) @ np.ones(33)
        np.testing.assert_allclose(rl[1:], x[1:] ** -0.6 / gamma(0.4), rtol=1e-12)
        assert rl[0] == 0.0

    def test_alpha_one_is_rejected(self):
        with pytest.raises(ValidationError):
            assemble_caputo(1.0, Grid.cylindrical(5))

    def test_field_operand(self):
        grid = Grid.cylindrical(9)
        f = Field(grid, grid.nodes)
        op = assemble_caputo(0.5, grid)
        np.testing.assert_array_equal(op @ f, op @ grid.nodes)
        with pytest.raises(ValidationError):
            op @ Field(Grid.cylindrical(5), np.zeros(5))

    def test_csv_export_round_trip(self, tmp_path):
        op = assemble_caputo(0.5, Grid.cylindrical(7))
        op.to_csv(tmp_path / "m.csv")
        back = np.loadtxt(tmp_path / "m.csv", delimiter=",")
        np.testing.assert_array_equal(back, op.entries)

    @settings(max_examples=40, deadline=None)
    @given(
        alpha=st.floats(0.05, 0.95),
        a=st.floats(-5, 5),
        b=st.floats(-5, 5),
        seed=st.integers(0, 2**16),
    )
    def test_linearity_and_shift_invariance(self, alpha, a, b, seed):
        rng = np.random.default_rng(seed)
        grid = Grid.cylindrical(17)
        op = assemble_caputo(alpha, grid)
        f, g = rng.normal(size=(2, 17))
        np.testing.assert_allclose(op @ (a * f + b * g), a * (op @ f) + b * (op @ g), atol=1e-9)
        np.testing.assert_allclose(op @ (f + 3.0), op @ f, atol=1e-10)


class TestComposedOperator:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_m_matrix_structure(self, alpha):
        a = assemble_dcaputo(alpha, Grid.cylindrical(65)).entries
        off = a - np.diag(np.diag(a))
        assert off[:-1].min() >= -1e-12
        np.testing.assert_allclose(a.sum(axis=1), 0.0, atol=1e-9 * np.abs(a).max())

    def test_constants_exactly_annihilated(self):
        op = assemble_dcaputo(0.5, Grid.cylindrical(33))
        assert np.all(op @ np.ones(33) == 0.0)

    def test_second_derivative_limit_of_x_squared(self):
        # d/dx D^alpha x^2 = 2 x^(1-alpha)/Gamma(2-alpha)
        alpha = 0.5
        errs = []
        for n in (65, 129, 257):
            grid = Grid.cylindrical(n)
            x = grid.nodes
            exact = 2 * x ** (1 - alpha) / gamma(2 - alpha)
            got = assemble_dcaputo(alpha, grid) @ x**2
            errs.append(np.max(np.abs(got - exact)[x >= 0.25]))
        assert errs[-1] < errs[0]
        assert errs[-1] < 1e-2


class TestMaxRepresentation:
    @pytest.mark.parametrize("alpha", ALPHAS)
    def test_agrees_with_l1_row(self, alpha):
        grid = Grid.cylindrical(65)
        x = grid.nodes
        f = np.exp(-x) * np.cos(3 * x)
        l1 = assemble_caputo(alpha, grid) @ f
        for i in (1, 2, 17, 64):
            assert caputo_at_point_maxrep(f, i, alpha, grid) == pytest.approx(l1[i], rel=1e-11, abs=1e-12)

    def test_nonnegative_at_maximum(self):
        grid = Grid.cylindrical(65)
        x = grid.nodes
        f = 1 - (x - 0.5) ** 2
        assert caputo_at_point_maxrep(Field(grid, f), 32, 0.4) > 0

    def test_rejects_origin(self):
        with pytest.raises(ValidationError):
            caputo_at_point_maxrep(np.ones(5), 0, 0.5, Grid.cylindrical(5))

    def test_needs_grid_for_arrays(self):
        with pytest.raises(ValidationError, match="grid"):
            caputo_at_point_maxrep(np.ones(5), 2, 0.5)


def test_nodal_derivative_exact_for_quadratics():
    x = np.linspace(0, 2, 21)
    np.testing.assert_allclose(nodal_derivative(x**2 - x, x[1]), 2 * x - 1, atol=1e-12)
