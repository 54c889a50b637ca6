"""Orchestration between the wire schemas and the core solvers.

Every function takes a request model and returns a response model; the CLI
and the FastAPI routes both go through here, which keeps file output a pure
client-side concern and the whole pipeline deterministic for a fixed
request.
"""

from __future__ import annotations

import numpy as np
from scipy.interpolate import PPoly

from .api import schemas
from .buy import BuyBelow, BuySolution, find_B
from .errors import ConfigError
from .fundsol import build_pairs
from .mc import McConfig, run_rule, sweep_stop_loss
from .model import General, Lognormal, ModelSpec, Regime, validate
from .checks import run_check_suite
from .sell import (
    CaseTag,
    SellAtCap,
    SellAtStopLoss,
    SellImmediately,
    SellSolution,
    classify_and_solve,
)


def to_dynamics(spec: schemas.LognormalSpec | schemas.GeneralSpec):
    if isinstance(spec, schemas.LognormalSpec):
        return Lognormal(mu_rate=spec.mu_rate, sigma_rate=spec.sigma_rate)
    mu = PPoly(np.asarray(spec.mu.coefficients, dtype=float),
               np.asarray(spec.mu.breakpoints, dtype=float), extrapolate=True)
    sg = PPoly(np.asarray(spec.sigma.coefficients, dtype=float),
               np.asarray(spec.sigma.breakpoints, dtype=float), extrapolate=True)
    return General(mu_poly=mu, sigma_poly=sg)


def to_model(section: schemas.ModelSection) -> ModelSpec:
    return validate(ModelSpec(L=section.L, H=section.H, M=section.M, r=section.r,
                              pos=to_dynamics(section.pos), neg=to_dynamics(section.neg)))


def to_rule(spec: schemas.RuleSpec):
    if spec.kind == "stop_loss":
        if spec.level is None:
            raise ConfigError("stop_loss rule needs a level")
        return SellAtStopLoss(spec.level)
    if spec.kind == "immediate":
        return SellImmediately()
    if spec.kind == "cap":
        return SellAtCap()
    if spec.level is None:
        raise ConfigError("buy_below rule needs a level")
    return BuyBelow(spec.level)


def to_mc_config(section: schemas.McSection) -> McConfig:
    return McConfig(n_paths=section.n_paths, dt=section.dt, seed=section.seed,
                    horizon=section.horizon, scheme=section.scheme)


def _masked(values: np.ndarray, mask: np.ndarray) -> list:
    return [float(v) if ok else None for v, ok in zip(values, mask)]


def value_table(sol: SellSolution, table_n: int,
                buy_sol: BuySolution | None = None) -> schemas.TableData:
    """Evaluate the solution on a uniform price grid over (0, M].

    Columns outside a regime's domain are empty (positive on [L, M],
    negative on (0, H]).
    """
    model = sol.model
    xs = np.linspace(model.M / table_n, model.M, table_n)
    in_pos = (xs >= model.L) & (xs <= model.M)
    in_neg = xs <= model.H

    vp = np.full_like(xs, np.nan)
    dvp = np.full_like(xs, np.nan)
    vp[in_pos] = sol.value(xs[in_pos], "+")
    dvp[in_pos] = sol.dvalue(xs[in_pos], "+")
    vm = np.full_like(xs, np.nan)
    dvm = np.full_like(xs, np.nan)
    vm[in_neg] = sol.value(xs[in_neg], "-")
    dvm[in_neg] = sol.dvalue(xs[in_neg], "-")

    columns = ["x", "v_plus", "v_minus", "dv_plus", "dv_minus"]
    series = [xs, vp, vm, dvp, dvm]
    masks = [np.ones_like(xs, dtype=bool), in_pos, in_neg, in_pos, in_neg]

    if buy_sol is not None:
        gp = np.full_like(xs, np.nan)
        rho = np.full_like(xs, np.nan)
        up = np.full_like(xs, np.nan)
        um = np.full_like(xs, np.nan)
        gp[in_pos] = vp[in_pos] - xs[in_pos]
        rho[in_pos] = gp[in_pos] / buy_sol.psi(xs[in_pos])
        up[in_pos] = buy_sol.value(xs[in_pos], "+")
        um[in_neg] = buy_sol.value(xs[in_neg], "-")
        columns += ["g_plus", "rho", "u_plus", "u_minus"]
        series += [gp, rho, up, um]
        masks += [in_pos, in_pos, in_pos, in_neg]

    rows = [[(float(col[i]) if m[i] else None) for col, m in zip(series, masks)]
            for i in range(table_n)]
    return schemas.TableData(columns=columns, rows=rows)


def _sell_record_fields(sol: SellSolution) -> dict:
    d = sol.diagnostics
    return {
        "case": sol.case.value,
        "m_hat": sol.m_hat,
        "coeffs": schemas.CoeffRecord(
            A_minus=float(sol.coeffs[0]), B_minus=float(sol.coeffs[1]),
            A_plus=float(sol.coeffs[2]), B_plus=float(sol.coeffs[3])),
        "diagnostics": schemas.DiagnosticsRecord(
            pasting_residual=None if np.isnan(d.pasting_residual) else float(d.pasting_residual),
            multiple_roots=d.multiple_roots,
            n_brackets=d.n_brackets,
            system_condition=None if np.isnan(d.cond) else float(d.cond)),
    }


def solve_sell(req: schemas.SolveSellRequest) -> schemas.SellRecord:
    model = to_model(req.model)
    sol = classify_and_solve(model, tol_paste=req.solver.tol_paste,
                             grid_n=req.solver.grid_n)
    return schemas.SellRecord(**_sell_record_fields(sol),
                              value_table=value_table(sol, req.output.table_n))


def solve_buy(req: schemas.SolveBuyRequest) -> schemas.BuyRecord:
    model = to_model(req.model)
    sol = classify_and_solve(model, tol_paste=req.solver.tol_paste,
                             grid_n=req.solver.grid_n)
    buy_sol = find_B(sol, grid_n=req.solver.grid_n)
    return schemas.BuyRecord(**_sell_record_fields(sol),
                             B=buy_sol.B, kappa=buy_sol.kappa,
                             value_table=value_table(sol, req.output.table_n, buy_sol))


def simulate(req: schemas.SimulateRequest) -> schemas.SimulateRecord:
    model = to_model(req.model)
    rule = to_rule(req.simulate.rule)
    cfg = to_mc_config(req.mc)
    sell_sol = None
    if isinstance(rule, BuyBelow):
        sell_sol = classify_and_solve(model, tol_paste=req.solver.tol_paste,
                                      grid_n=req.solver.grid_n)
    est = run_rule(model, req.simulate.x0, req.simulate.f0, rule, cfg,
                   sell_solution=sell_sol)
    return schemas.SimulateRecord(
        x0=req.simulate.x0, f0=req.simulate.f0, rule=req.simulate.rule,
        estimate=schemas.EstimateRecord(
            mean=est.mean, std_error=est.std_error, n_paths=est.n_paths,
            seed=est.seed, truncated_fraction=est.truncated_fraction,
            horizon_warning=est.horizon_warning))


def sweep(req: schemas.SweepRequest) -> schemas.SweepRecord:
    model = to_model(req.model)
    cfg = to_mc_config(req.mc)
    grid = np.linspace(req.sweep.m_min, req.sweep.m_max, req.sweep.n_points)
    table = sweep_stop_loss(model, req.sweep.x0, req.sweep.f0, grid, cfg)
    entries = [schemas.SweepEntry(m=m, mean=e.mean, std_error=e.std_error,
                                  truncated_fraction=e.truncated_fraction)
               for m, e in table]
    return schemas.SweepRecord(x0=req.sweep.x0, f0=req.sweep.f0, entries=entries)


def check(req: schemas.CheckRequest) -> schemas.CheckRecord:
    model = to_model(req.model)
    sol = classify_and_solve(model, tol_paste=req.solver.tol_paste,
                             grid_n=req.solver.grid_n)
    buy_sol = find_B(sol, grid_n=req.solver.grid_n)
    mc_cfg = to_mc_config(req.mc) if req.mc_checks else None
    rep = run_check_suite(model, sol, buy_sol, mc_cfg,
                          tol_paste=req.solver.tol_paste, tol_ode=req.solver.tol_ode)
    return schemas.CheckRecord(passed=rep.passed,
                               checks=[schemas.CheckEntry(name=r.name, passed=r.passed,
                                                          detail=r.detail)
                                       for r in rep.results])


def solution_from_record(model_section: schemas.ModelSection, solver: schemas.SolverSection,
                         record: dict) -> SellSolution:
    """Rebuild the sell solution from a written record plus its config.

    The fundamental pairs are rebuilt deterministically from the config; the
    case and boundary come from the record; the value components are
    re-derived from the boundary conditions at the recorded m_hat, which
    reproduces the original coefficients bit-for-bit on the same pipeline.
    """
    from .sell import assemble_candidate, case_c3_value, SolveDiagnostics

    model = to_model(model_section)
    pairs = build_pairs(model)
    case = CaseTag(record["case"])
    m_hat = float(record["m_hat"])
    diag = SolveDiagnostics()
    if case is CaseTag.C3:
        vminus, vplus, coeffs = case_c3_value(model, pairs)
    else:
        cand = assemble_candidate(model, pairs, m_hat, case)
        vminus, vplus, coeffs = cand.vminus, cand.vplus, cand.coeffs
    return SellSolution(case=case, m_hat=m_hat, coeffs=coeffs, model=model,
                        pairs=pairs, diagnostics=diag, _vminus=vminus, _vplus=vplus)
