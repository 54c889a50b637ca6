import warnings

import numpy as np
import pytest

from supres.errors import DomainError, MultipleRootsWarning, SingularSystem
from supres.fundsol import build_pairs
from supres.mc import McConfig, run_rule, sweep_stop_loss
from supres.model import Lognormal, ModelSpec, validate
from supres.sell import (
    CaseTag,
    SellAtCap,
    SellAtStopLoss,
    SellImmediately,
    _brackets,
    assemble_candidate,
    classify_and_solve,
    pasting_residual,
    rule_value,
    value_sell,
)

M_HAT_REF = 1.1469763520840346


class TestAssembleCandidate:
    def test_cap_boundary_holds_for_any_m(self, ref_model, ref_pairs):
        for m, case in ((1.3, CaseTag.C1), (0.5, CaseTag.C2), (1.05, CaseTag.C1)):
            cand = assemble_candidate(ref_model, ref_pairs, m, case)
            assert float(cand.vplus(8.0)) == pytest.approx(8.0, rel=1e-10)

    def test_stop_boundary_value_matching(self, ref_model, ref_pairs):
        cand = assemble_candidate(ref_model, ref_pairs, 0.5, CaseTag.C2)
        assert float(cand.vminus(0.5)) == pytest.approx(0.5, rel=1e-10)

    def test_switch_continuity(self, ref_model, ref_pairs):
        cand = assemble_candidate(ref_model, ref_pairs, 1.2, CaseTag.C1)
        assert float(cand.vminus(2.0)) == pytest.approx(float(cand.vplus(2.0)), rel=1e-10)

    def test_c1_left_boundary(self, ref_model, ref_pairs):
        cand = assemble_candidate(ref_model, ref_pairs, 1.2, CaseTag.C1)
        assert float(cand.vplus(1.0)) == pytest.approx(1.0, rel=1e-10)

    def test_c2_left_continuity(self, ref_model, ref_pairs):
        cand = assemble_candidate(ref_model, ref_pairs, 0.5, CaseTag.C2)
        assert float(cand.vplus(1.0)) == pytest.approx(float(cand.vminus(1.0)), rel=1e-10)

    def test_positive_component_is_m_independent_on_c1(self, ref_model, ref_pairs):
        a = assemble_candidate(ref_model, ref_pairs, 1.1, CaseTag.C1)
        b = assemble_candidate(ref_model, ref_pairs, 1.8, CaseTag.C1)
        assert a.coeffs[2:] == pytest.approx(b.coeffs[2:], rel=1e-12)

    def test_degenerate_m_raises_singular_system(self, ref_model, ref_pairs):
        with pytest.raises(SingularSystem):
            assemble_candidate(ref_model, ref_pairs, 2.0 - 1e-13, CaseTag.C1)

    def test_case_domain_guard(self, ref_model, ref_pairs):
        with pytest.raises(DomainError):
            assemble_candidate(ref_model, ref_pairs, 0.5, CaseTag.C1)
        with pytest.raises(DomainError):
            assemble_candidate(ref_model, ref_pairs, 1.5, CaseTag.C2)


class TestPastingResidual:
    def test_residual_continuity_in_m(self, ref_model, ref_pairs):
        for m in (1.05, 1.3, 1.7):
            a = pasting_residual(ref_model, ref_pairs, m, CaseTag.C1)
            b = pasting_residual(ref_model, ref_pairs, m + 1e-6, CaseTag.C1)
            assert abs(b - a) <= 1e-4

    def test_residual_continuous_across_branch_joint(self, ref_model, ref_pairs):
        # The C2 system at m -> L coincides with the C1 system at m = L.
        a = pasting_residual(ref_model, ref_pairs, 1.0, CaseTag.C1)
        b = pasting_residual(ref_model, ref_pairs, 1.0 - 1e-9, CaseTag.C2)
        assert abs(a - b) <= 1e-6

    def test_reference_c1_branch_has_sign_change(self, ref_model, ref_pairs):
        # Negative at L, positive near H: the pasting root sits inside (L, H).
        assert pasting_residual(ref_model, ref_pairs, 1.0, CaseTag.C1) < 0.0
        assert pasting_residual(ref_model, ref_pairs, 1.5, CaseTag.C1) > 0.0

    def test_c2_instance_has_c2_bracket(self, c2_model, c2_sell):
        # The residual crosses zero upward at the found boundary.
        pairs = c2_sell.pairs
        m = c2_sell.m_hat
        assert pasting_residual(c2_model, pairs, 0.9 * m, CaseTag.C2) < 0.0
        assert pasting_residual(c2_model, pairs, 1.1 * m, CaseTag.C2) > 0.0


class TestClassifyReference:
    def test_case_and_boundary(self, ref_sell):
        assert ref_sell.case is CaseTag.C1
        assert ref_sell.m_hat == pytest.approx(M_HAT_REF, abs=1e-11)
        assert abs(ref_sell.diagnostics.pasting_residual) <= 1e-9

    def test_positive_coefficients_exact(self, ref_sell):
        assert ref_sell.coeffs[2] == pytest.approx(63.0 / 31.0, rel=1e-12)
        assert ref_sell.coeffs[3] == pytest.approx(-32.0 / 31.0, rel=1e-12)

    def test_value_samples(self, ref_sell):
        assert ref_sell.value(1.5, "+") == pytest.approx(1.9748393736853842, rel=1e-12)
        assert ref_sell.value(1.5, "-") == pytest.approx(1.6389163149025330, rel=1e-10)

    def test_stopped_region_identity(self, ref_sell):
        x = ref_sell.m_hat / 2.0
        assert ref_sell.value(x, "-") == x
        assert ref_sell.dvalue(x, "-") == 1.0

    def test_domain_errors(self, ref_sell):
        with pytest.raises(DomainError):
            ref_sell.value(0.5, "+")
        with pytest.raises(DomainError):
            ref_sell.value(9.0, "+")
        with pytest.raises(DomainError):
            ref_sell.value(2.5, "-")

    def test_value_sell_delegate(self, ref_sell):
        assert value_sell(ref_sell, 8.0, "+") == pytest.approx(8.0, rel=1e-12)


class TestClassifyOtherCases:
    def test_c2_instance(self, c2_model, c2_sell):
        assert c2_sell.case is CaseTag.C2
        assert 0.0 < c2_sell.m_hat < c2_model.L
        assert abs(c2_sell.diagnostics.pasting_residual) <= 1e-9
        # Value continuity across L instead of the C1 Dirichlet condition.
        assert c2_sell.value(1.0, "+") > 1.0

    def test_c3_instance(self, c3_model, c3_sell):
        assert c3_sell.case is CaseTag.C3
        assert c3_sell.m_hat == 0.0
        xs = np.linspace(0.05, c3_model.H, 400)
        assert np.all(c3_sell.dvalue(xs, "-") >= 1.0 - 1e-9)
        # Proportionality to the discounted H-hit functional.
        ratio = c3_sell.value(xs, "-") / c3_sell.pairs.neg.phi(xs)
        assert np.ptp(ratio) <= 1e-8 * np.max(ratio)

    def test_c3_renewal_value_at_h(self, c3_model, c3_sell):
        from supres.fundsol import hit_functionals
        hf = hit_functionals(c3_model, c3_sell.pairs)
        den = 1.0 - float(hf.phi_minus(1.0)) * float(hf.delta(2.0))
        expect = 3.0 * float(hf.chi(2.0)) / den
        assert c3_sell.value(2.0, "-") == pytest.approx(expect, rel=1e-9)

    def test_lognormal_sweep_contains_c1_instance(self):
        # Pushing the negative drift toward the rate with small variance
        # moves the boundary into [L, H): at least one C1 shows up.
        found = set()
        for mu_m in (0.002, 0.005, 0.01, 0.019):
            m = validate(ModelSpec(L=1.0, H=2.0, M=8.0, r=0.02,
                                   pos=Lognormal(0.04, np.sqrt(0.06)),
                                   neg=Lognormal(mu_m, 0.1)))
            found.add(classify_and_solve(m).case)
        assert CaseTag.C1 in found and CaseTag.C2 in found


class TestSolutionProperties:
    @pytest.mark.parametrize("which", ["ref", "c2", "c3"])
    def test_domination_and_cap(self, which, ref_sell, c2_sell, c3_sell):
        sol = {"ref": ref_sell, "c2": c2_sell, "c3": c3_sell}[which]
        model = sol.model
        xp = np.linspace(model.L, model.M, 1000)
        xm = np.linspace(model.H / 1000, model.H, 1000)
        assert np.all(sol.value(xp, "+") - xp >= -1e-9 * model.M)
        assert np.all(sol.value(xm, "-") - xm >= -1e-9 * model.M)
        assert np.max(sol.value(xp, "+")) <= model.M * (1 + 1e-10)

    @pytest.mark.parametrize("which", ["ref", "c2", "c3"])
    def test_monotone_gain(self, which, ref_sell, c2_sell, c3_sell):
        sol = {"ref": ref_sell, "c2": c2_sell, "c3": c3_sell}[which]
        model = sol.model
        lo = max(sol.m_hat, model.H / 1000)
        xs = np.linspace(lo, model.H, 1000)
        g = sol.value(xs, "-") - xs
        assert np.all(np.diff(g) >= -1e-9 * model.M)

    def test_analytic_sweep_optimality(self, ref_model, ref_pairs, ref_sell):
        # The assembled rule value at any state is maximized at m_hat.
        ms = np.linspace(0.05, 1.95, 50)
        for x, f in ((1.5, "+"), (1.5, "-"), (0.5, "-")):
            best = rule_value(ref_model, ref_pairs, x, f, ref_sell.m_hat)
            others = [rule_value(ref_model, ref_pairs, x, f, m) for m in ms]
            assert best >= max(others) - 1e-8

    def test_rule_value_matches_solution_at_m_hat(self, ref_model, ref_pairs, ref_sell):
        got = rule_value(ref_model, ref_pairs, 1.5, "+", ref_sell.m_hat)
        assert got == pytest.approx(ref_sell.value(1.5, "+"), rel=1e-12)


class TestBracketSelection:
    def test_single_bracket(self):
        grid = np.array([1.0, 2.0, 3.0])
        res = np.array([-1.0, 0.5, 2.0])
        assert _brackets(grid, res) == [(1.0, 2.0)]

    def test_multiple_brackets_reported_in_order(self):
        grid = np.array([1.0, 2.0, 3.0, 4.0])
        res = np.array([-1.0, 0.5, -0.5, 1.0])
        assert _brackets(grid, res) == [(1.0, 2.0), (2.0, 3.0), (3.0, 4.0)]

    def test_nan_entries_skipped(self):
        grid = np.array([1.0, 2.0, 3.0])
        res = np.array([-1.0, np.nan, 2.0])
        assert _brackets(grid, res) == []

    def test_exact_zero_counts_as_root(self):
        grid = np.array([1.0, 2.0, 3.0])
        res = np.array([0.0, 1.0, 2.0])
        assert _brackets(grid, res)[0] == (1.0, 1.0)


class TestDegenerateOrderings:
    """Models outside the drift sandwich bypass validate(); simulation ranks rules."""

    def test_both_drifts_below_rate_sell_immediately(self):
        model = ModelSpec(L=1.0, H=2.0, M=8.0, r=0.02,
                          pos=Lognormal(0.01, np.sqrt(0.06)),
                          neg=Lognormal(0.005, 0.1))
        cfg = McConfig(n_paths=20_000, dt=2e-3, seed=31, horizon=300.0)
        now = run_rule(model, 1.5, "+", SellImmediately(), cfg)
        assert now.mean == 1.5 and now.std_error == 0.0
        table = sweep_stop_loss(model, 1.5, "+", [0.4, 0.9, 1.4], cfg)
        for m, est in table:
            assert est.mean <= now.mean + 3.0 * est.std_error

    def test_both_drifts_above_rate_sell_at_cap(self):
        model = ModelSpec(L=1.0, H=2.0, M=8.0, r=0.02,
                          pos=Lognormal(0.04, np.sqrt(0.06)),
                          neg=Lognormal(0.03, 0.1))
        cfg = McConfig(n_paths=20_000, dt=2e-3, seed=32, horizon=300.0)
        cap = run_rule(model, 1.5, "+", SellAtCap(), cfg)
        table = sweep_stop_loss(model, 1.5, "+", [0.4, 0.9, 1.4], cfg)
        for m, est in table:
            pooled = np.hypot(est.std_error, cap.std_error)
            assert est.mean <= cap.mean + 3.0 * pooled


class TestMonteCarloCrossChecks:
    def test_c2_value_against_simulation(self, c2_model, c2_sell):
        cfg = McConfig(n_paths=60_000, dt=1e-3, seed=411, horizon=400.0)
        est = run_rule(c2_model, 1.5, "+", SellAtStopLoss(c2_sell.m_hat), cfg)
        ref = float(c2_sell.value(1.5, "+"))
        assert abs(est.mean - ref) <= 3.0 * est.std_error

    def test_c3_value_against_simulation(self, c3_model, c3_sell):
        # Never stop early: the C3 value is the cap-only rule's value.
        cfg = McConfig(n_paths=40_000, dt=1e-3, seed=412, horizon=400.0)
        est = run_rule(c3_model, 1.5, "-", SellAtCap(), cfg)
        ref = float(c3_sell.value(1.5, "-"))
        assert abs(est.mean - ref) <= 3.0 * est.std_error
