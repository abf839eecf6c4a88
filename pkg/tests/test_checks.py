import json
import math

import numpy as np
import pytest
from scipy.integrate import quad

from fracstefan.checks import (
    AUDITORS,
    AuditCheck,
    AuditReport,
    BarrierParams,
    a_threshold,
    audit_barrier_nonnegativity,
    audit_extremum_principle,
    audit_flux_and_bounds,
    audit_front_hopf,
    audit_interior_max_sign,
    audit_kappa_identities,
    audit_mass_balance,
    audit_monotone_dependence,
    audit_max_point_sign,
    audit_suite,
    barrier_expression,
    barrier_expression_min,
    barrier_inner_integral,
    delta_minus,
    kappa_alpha,
    near_edge_bound_margin,
    negate_snapshot,
    omega_alpha_delta,
)
from fracstefan.errors import ValidationError
from fracstefan.stefan import solve_stefan_marching
from fracstefan.transform import InitialCondition, ProblemSpec

# 40-digit mpmath evaluations of the closed forms
FROZEN = {
    0.25: (1.0470009050044089, 0.0089781975888952957, 4275.4609217780721),
    0.5: (1.1055728090000841, 0.019098300562505258, 1608.2798948121498),
    0.75: (1.1779798146784427, 0.030217803813052, 1076.2219758133147),
}


@pytest.fixture(scope="module")
def spec():
    return ProblemSpec(0.5, 1.0, 0.5, 1.0, InitialCondition("quartic"), n_nodes=65, n_steps=64)


@pytest.fixture(scope="module")
def traj(spec):
    return solve_stefan_marching(spec)


class TestBarrierFormulas:
    @pytest.mark.parametrize("alpha", sorted(FROZEN))
    def test_frozen_values(self, alpha):
        k, w, a = FROZEN[alpha]
        assert kappa_alpha(alpha) == pytest.approx(k, rel=1e-14)
        assert omega_alpha_delta(alpha, 0.1) == pytest.approx(w, rel=1e-12)
        assert a_threshold(alpha, 0.1) == pytest.approx(a, rel=1e-12)

    def test_kappa_at_one_half_is_golden(self):
        # (3 - 3/sqrt(5)) / 1.5 = 2 - 2/sqrt(5)
        assert kappa_alpha(0.5) == pytest.approx(2 - 2 / math.sqrt(5), rel=1e-15)

    @pytest.mark.parametrize("alpha", (0.1, 0.5, 0.9))
    def test_delta_minus_is_kappa_L_over_two(self, alpha):
        assert 2 * delta_minus(alpha, 0.37) / 0.37 == pytest.approx(kappa_alpha(alpha), abs=1e-12)

    @pytest.mark.parametrize("alpha", (0.2, 0.5, 0.8))
    def test_inner_integral_against_quad(self, alpha):
        delta, x1 = 0.1, 0.3
        for x in (0.31, 0.35, 0.42, 0.5):
            ref = 3 * quad(lambda p: (p - x1 - delta) ** 2, x1, x, weight="alg", wvar=(0, -alpha))[0]
            assert barrier_inner_integral(alpha, delta, x1, x) == pytest.approx(ref, rel=1e-10)

    def test_expression_vanishes_at_left_edge(self):
        params = BarrierParams(0.5, 0.1, x1=0.2)
        assert barrier_expression(params, 0.2) == pytest.approx(0.0, abs=1e-15)

    @pytest.mark.parametrize("alpha", (0.25, 0.5, 0.75))
    def test_nonnegative_at_threshold(self, alpha):
        params = BarrierParams(alpha, 0.05, x1=0.4, epsilon_amp=0.3, domain_length=1.0)
        value, _ = barrier_expression_min(params, 4000)
        assert value >= 0
        assert near_edge_bound_margin(params, 4000) >= 0

    @pytest.mark.parametrize("alpha", (0.25, 0.5, 0.75))
    def test_decay_term_is_needed_but_threshold_is_conservative(self, alpha):
        params = BarrierParams(alpha, 0.1)
        a_star = params.a
        object.__setattr__(params, "a", 0.0)
        assert barrier_expression_min(params, 20_000)[0] < 0
        # the sufficient rate overshoots the numerically critical one
        object.__setattr__(params, "a", 0.25 * a_star)
        assert barrier_expression_min(params, 20_000)[0] >= 0

    def test_parameter_validation(self):
        with pytest.raises(ValidationError) as err:
            BarrierParams(0.5, -0.1, x1=-1.0, epsilon_amp=0.0)
        assert len(err.value.problems) == 3
        with pytest.raises(ValidationError, match="threshold"):
            BarrierParams(0.5, 0.1, a=1.0)
        with pytest.raises(ValidationError, match="domain"):
            BarrierParams(0.5, 0.3, x1=0.5, domain_length=1.0)
        with pytest.raises(ValidationError, match="alpha"):
            kappa_alpha(1.0)


class TestAuditors:
    def test_good_run_passes_trajectory_audits(self, traj):
        for audit in (audit_extremum_principle, audit_flux_and_bounds, audit_interior_max_sign,
                      audit_front_hopf, audit_mass_balance):
            check = audit(traj)
            assert check.passed, check

    def test_negated_snapshot_is_caught(self, traj):
        bad = negate_snapshot(traj)
        assert not audit_extremum_principle(bad).passed
        assert not audit_flux_and_bounds(bad).passed
        check = audit_extremum_principle(bad)
        assert check.worst_violation > 0
        assert check.location[1] == pytest.approx(traj.times[len(traj.times) // 2])

    def test_flux_strictness_uses_tolerance(self, traj):
        huge = 10.0
        assert not audit_flux_and_bounds(traj, tol=huge).passed

    def test_max_point_sign_random_fields(self):
        check = audit_max_point_sign(seed=7, n_fields=200)
        assert check.passed
        assert check.detail["strict_cases"] > 150

    def test_kappa_and_barrier_audits(self):
        assert audit_kappa_identities(seed=3).passed
        assert audit_barrier_nonnegativity(n_eval=2000).passed

    def test_monotone_dependence_with_bump(self, spec):
        bigger = spec.replace(u0=InitialCondition("quartic", {"bump_amp": 0.05, "bump_center": 0.5, "bump_width": 0.2}))
        check = audit_monotone_dependence(spec, bigger)
        assert check.passed
        assert check.detail["s1_T"] < check.detail["s2_T"]

    def test_monotone_precondition(self, spec):
        bigger = spec.replace(u0=InitialCondition("quartic", {"bump_amp": 0.05}))
        with pytest.raises(ValidationError, match="exceeds"):
            audit_monotone_dependence(bigger, spec)


class TestReport:
    def test_duplicate_names_rejected(self):
        report = AuditReport()
        report.add(AuditCheck("x", True, 0.0))
        with pytest.raises(ValidationError):
            report.add(AuditCheck("x", True, 0.0))

    def test_json_and_table(self):
        report = AuditReport([AuditCheck("a", True, 0.0, (1, 0.5), 1e-3, {"v": np.float64(2)}),
                              AuditCheck("b", False, 0.25)])
        data = json.loads(report.to_json())
        assert data["passed"] is False
        assert [c["name"] for c in data["checks"]] == ["a", "b"]
        assert "FAIL" in report.table()
        assert report.failed == ["b"]

    def test_suite_covers_registry(self, spec, traj):
        report, _ = audit_suite(spec, seed=1, traj=traj)
        assert [c.name for c in report.checks] == list(AUDITORS)
        assert report.passed, report.table()

    @pytest.mark.parametrize("name", AUDITORS)
    def test_injection_fails_named_check(self, spec, traj, name):
        report, _ = audit_suite(spec, seed=1, traj=traj, inject=name)
        assert report.failed == [name]

    def test_unknown_injection(self, spec, traj):
        with pytest.raises(ValidationError):
            audit_suite(spec, traj=traj, inject="nope")
