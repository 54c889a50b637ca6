"""Invariant suite behind the `check` command.

Every check is a named pass/fail with a short numeric detail string, so the
report is machine-readable and a failing run pinpoints which mathematical
property broke.  Analytic checks are cheap; the two Monte Carlo checks use
the configured path budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .buy import BuySolution, find_B, gain
from .fundsol import ode_residual, wronskian_sign_constant
from .mc import McConfig, martingale_check, run_rule
from .model import ModelSpec, Regime
from .sell import CaseTag, SellSolution, pasting_residual


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass
class CheckReport:
    results: list = field(default_factory=list)

    def add(self, name: str, passed: bool, detail: str) -> None:
        self.results.append(CheckResult(name=name, passed=bool(passed), detail=detail))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def to_dict(self) -> dict:
        return {"passed": self.passed,
                "checks": [{"name": r.name, "passed": r.passed, "detail": r.detail}
                           for r in self.results]}


def _rel(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1.0)


def run_check_suite(model: ModelSpec, sol: SellSolution, buy_sol: BuySolution,
                    mc_cfg: McConfig | None = None, tol_paste: float = 1e-9,
                    tol_ode: float = 1e-8, grid_n: int = 1000) -> CheckReport:
    rep = CheckReport()
    L, H, M, m_hat = model.L, model.H, model.M, sol.m_hat

    e_cap = _rel(float(sol.value(M, "+")), M)
    rep.add("cap_boundary", e_cap <= 1e-10, f"|v(M,+)-M|/M = {e_cap:.2e}")

    e_switch = _rel(float(sol.value(H, "-")), float(sol.value(H, "+")))
    rep.add("switch_continuity", e_switch <= 1e-10, f"|v(H,-)-v(H,+)| rel = {e_switch:.2e}")

    if sol.case is CaseTag.C1:
        e_l = _rel(float(sol.value(L, "+")), L)
        rep.add("left_boundary", e_l <= 1e-10, f"C1: |v(L,+)-L|/L = {e_l:.2e}")
    else:
        e_l = _rel(float(sol.value(L, "+")), float(sol.value(L, "-")))
        rep.add("left_boundary", e_l <= 1e-10, f"|v(L,+)-v(L,-)| rel = {e_l:.2e}")

    if sol.case is CaseTag.C3:
        xs = np.linspace(H / grid_n, H, grid_n)
        slope_min = float(np.min(sol.dvalue(xs, "-")))
        rep.add("smooth_pasting", slope_min >= 1.0 - 1e-9,
                f"C3: min dv/dx(x,-) = {slope_min:.6f} (must be >= 1)")
    else:
        e_m = _rel(float(sol.value(m_hat, "-")), m_hat)
        res = pasting_residual(model, sol.pairs, m_hat, sol.case)
        rep.add("stop_boundary", e_m <= 1e-10, f"|v(m,-)-m| rel = {e_m:.2e}")
        rep.add("smooth_pasting", abs(res) <= tol_paste,
                f"|dv/dx(m,-)-1| = {abs(res):.2e} (tol {tol_paste:.0e})")

    xp = np.linspace(L, M, grid_n)
    dom_p = float(np.min(sol.value(xp, "+") - xp))
    rep.add("domination_positive", dom_p >= -1e-9 * M, f"min v(x,+)-x = {dom_p:.2e}")

    xm = np.linspace(H / grid_n, H, grid_n)
    dom_m = float(np.min(sol.value(xm, "-") - xm))
    rep.add("domination_negative", dom_m >= -1e-9 * M, f"min v(x,-)-x = {dom_m:.2e}")

    v_max = max(float(np.max(sol.value(xp, "+"))), float(np.max(sol.value(xm, "-"))))
    rep.add("value_cap", v_max <= M * (1.0 + 1e-10), f"max v = {v_max:.12g} vs M = {M}")

    xg = np.linspace(max(m_hat, H / grid_n), H, grid_n)
    gdiff = np.diff(sol.value(xg, "-") - xg)
    rep.add("monotone_gain", bool(np.all(gdiff >= -1e-9 * M)),
            f"min increment of g(.,-) on [m,H] = {float(np.min(gdiff)):.2e}")

    res_p = ode_residual(sol._vplus, model.pos, model.r,
                         np.linspace(L, M, 400), domain=(L, M))
    rep.add("ode_residual_positive", res_p <= tol_ode, f"residual = {res_p:.2e}")
    lo_m = max(m_hat, sol.pairs.neg.a, H / grid_n)
    res_m = ode_residual(sol._vminus, model.neg, model.r,
                         np.linspace(lo_m, H, 400), domain=(sol.pairs.neg.a, H))
    rep.add("ode_residual_negative", res_m <= tol_ode, f"residual = {res_m:.2e}")

    rep.add("wronskian_positive_pair", wronskian_sign_constant(sol.pairs.pos),
            "phi' psi - phi psi' keeps one sign")
    rep.add("wronskian_negative_pair", wronskian_sign_constant(sol.pairs.neg),
            "phi' psi - phi psi' keeps one sign")

    rho_at_B = buy_sol.kappa
    rho_max = float(np.max(buy_sol.rho_samples))
    rep.add("buy_ratio_optimality", rho_at_B >= rho_max - 1e-9 * max(abs(rho_max), 1.0),
            f"rho(B) = {rho_at_B:.9g} vs grid max {rho_max:.9g}")

    u_p = buy_sol.value(xp, "+")
    g_p = gain(sol, xp, "+")
    rep.add("buy_domination_positive", bool(np.all(u_p >= g_p - 1e-9 * M)),
            f"min u-g on [L,M] = {float(np.min(u_p - g_p)):.2e}")
    u_m = buy_sol.value(xm, "-")
    g_m = gain(sol, xm, "-")
    rep.add("buy_domination_negative", bool(np.all(u_m >= g_m - 1e-9 * M)),
            f"min u-g on (0,H] = {float(np.min(u_m - g_m)):.2e}")
    strict = float(np.max((u_m - g_m)[xm > m_hat]))
    rep.add("never_buy_negative", strict > 0.0,
            f"max u-g above m on (0,H] = {strict:.3e} (must be > 0)")

    if buy_sol.B < M:
        xs_b = np.linspace(buy_sol.B, M, 200)
        res_u = ode_residual(_CurveShim(buy_sol), model.pos, model.r, xs_b,
                             domain=(buy_sol.B, M))
        rep.add("buy_supersolution", res_u <= max(tol_ode, 1e-7),
                f"generator residual on (B,M) = {res_u:.2e}")

    if mc_cfg is not None:
        x0 = 0.5 * (L + H)
        est = run_rule(model, x0, "+", sol.optimal_rule, mc_cfg)
        ref = float(sol.value(x0, "+"))
        ok = abs(est.mean - ref) <= 3.0 * est.std_error
        rep.add("mc_value_consistency", ok,
                f"MC {est.mean:.6f} +- {est.std_error:.6f} vs v({x0:g},+) = {ref:.6f}")
        diag = martingale_check(model, sol, x0, "+", 1.0, mc_cfg)
        rep.add("mc_martingale", diag.passed,
                f"difference {diag.difference:.6f} vs 3*SE = {3 * diag.std_error:.6f}")

    return rep


class _CurveShim:
    """Adapter exposing the buy value's positive component as a curve."""

    def __init__(self, buy_sol: BuySolution):
        self._b = buy_sol

    def __call__(self, x):
        return self._b.value(x, Regime.POSITIVE)

    def deriv(self, x):
        return self._b.dvalue(x, Regime.POSITIVE)
