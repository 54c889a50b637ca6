"""Monte Carlo oracle for stopping-rule values on the two-regime model.

Estimates are unbiased for the discounted payoff of a rule via per-path
exponential kill clocks (see kernels), reproducible bit-for-bit for a fixed
(seed, n_paths, dt) regardless of the worker count: every path owns a
counter-based stream keyed by (seed, path index) and the reduction order is
fixed.  The worker count can be pinned with the SUPRES_MC_THREADS
environment variable; it only affects speed.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numba
import numpy as np

from ..buy import BuyBelow
from ..errors import ConfigError, DomainError
from ..model import (
    ZERO_FLOOR,
    General,
    Lognormal,
    ModelSpec,
    Regime,
    proportional_poly,
)
from ..sell import SellAtCap, SellAtStopLoss, SellImmediately, SellSolution
from .kernels import (
    KILLED,
    TRIGGERED,
    TRUNCATED,
    sim_rule_general,
    sim_rule_lognormal,
    sweep_lognormal,
)

MC_THREADS_ENV = "SUPRES_MC_THREADS"


@dataclass(frozen=True)
class McConfig:
    n_paths: int
    dt: float = 1e-3
    seed: int = 0
    horizon: float = 400.0
    scheme: str = "auto"  # auto | exact | euler

    def __post_init__(self):
        if self.n_paths < 1:
            raise ConfigError(f"n_paths must be >= 1, got {self.n_paths}")
        if not self.dt > 0.0:
            raise ConfigError(f"dt must be positive, got {self.dt}")
        if not self.horizon > 0.0:
            raise ConfigError(f"horizon must be positive, got {self.horizon}")
        if self.scheme not in ("auto", "exact", "euler"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_paths: int
    seed: int
    truncated_fraction: float
    horizon_warning: bool = False


@dataclass(frozen=True)
class MartingaleDiagnostic:
    difference: float
    std_error: float
    passed: bool
    mc_mean: float
    reference: float


@dataclass(frozen=True)
class PathState:
    t: float
    s: float
    f: Regime


def step(model: ModelSpec, state: PathState, dt: float, normal_draw: float,
         scheme: str = "auto") -> PathState:
    """Advance one time step and apply the hysteretic switch rule.

    Reference implementation of the kernels' per-step semantics: move with
    the current regime's coefficients (exact lognormal increment or Euler),
    then flip the flag if the new price crossed L (from +) or H (from -).
    The level separation L < H means at most one switch per step.
    """
    if dt <= 0.0:
        raise ConfigError(f"dt must be positive, got {dt}")
    f = Regime.parse(state.f)
    dyn = model.dynamics(f)
    use_exact = scheme == "exact" or (scheme == "auto" and isinstance(dyn, Lognormal))
    if use_exact:
        if not isinstance(dyn, Lognormal):
            raise ConfigError("the exact lognormal step needs lognormal dynamics")
        s_new = state.s * np.exp((dyn.mu_rate - 0.5 * dyn.variance_rate) * dt
                                 + dyn.sigma_rate * np.sqrt(dt) * normal_draw)
    else:
        s_new = state.s + float(dyn.mu(state.s)) * dt \
            + float(dyn.sigma(state.s)) * np.sqrt(dt) * normal_draw
        s_new = max(s_new, ZERO_FLOOR)
    if f is Regime.POSITIVE and s_new <= model.L:
        f = Regime.NEGATIVE
    elif f is Regime.NEGATIVE and s_new >= model.H:
        f = Regime.POSITIVE
    return PathState(t=state.t + dt, s=float(s_new), f=f)


def _configure_threads() -> None:
    raw = os.environ.get(MC_THREADS_ENV)
    if raw:
        try:
            want = int(raw)
        except ValueError:
            raise ConfigError(f"{MC_THREADS_ENV} must be an integer, got {raw!r}")
        limit = numba.config.NUMBA_NUM_THREADS
        numba.set_num_threads(min(max(want, 1), limit))


def _resolve_scheme(model: ModelSpec, cfg: McConfig) -> str:
    if cfg.scheme == "exact" and not model.is_lognormal:
        raise ConfigError("the exact lognormal scheme needs lognormal dynamics")
    if cfg.scheme == "auto":
        return "exact" if model.is_lognormal else "euler"
    return cfg.scheme


def _log_params(model: ModelSpec, dt: float):
    cp = (model.pos.mu_rate - 0.5 * model.pos.variance_rate) * dt
    sp = model.pos.sigma_rate * np.sqrt(dt)
    cm = (model.neg.mu_rate - 0.5 * model.neg.variance_rate) * dt
    sm = model.neg.sigma_rate * np.sqrt(dt)
    return cp, sp, cm, sm


def _poly_arrays(dyn, hi: float):
    if isinstance(dyn, Lognormal):
        mu = proportional_poly(dyn.mu_rate, ZERO_FLOOR, hi)
        sg = proportional_poly(dyn.sigma_rate, ZERO_FLOOR, hi)
    else:
        mu, sg = dyn.mu_poly, dyn.sigma_poly
    return (np.ascontiguousarray(mu.x, dtype=float), np.ascontiguousarray(mu.c, dtype=float),
            np.ascontiguousarray(sg.x, dtype=float), np.ascontiguousarray(sg.c, dtype=float))


def _check_start(model: ModelSpec, x0: float, f0: Regime) -> None:
    if f0 is Regime.POSITIVE and not (model.L <= x0 <= model.M):
        raise DomainError(f"positive-regime start needs x0 in [L, M], got {x0}")
    if f0 is Regime.NEGATIVE and not (0.0 < x0 <= model.H):
        raise DomainError(f"negative-regime start needs x0 in (0, H], got {x0}")


def _simulate(model: ModelSpec, x0: float, f0: Regime, cfg: McConfig,
              cap: float, lo: float, buy_mode: bool, horizon: float):
    scheme = _resolve_scheme(model, cfg)
    fsign = np.int8(1 if f0 is Regime.POSITIVE else -1)
    if scheme == "exact":
        cp, sp, cm, sm = _log_params(model, cfg.dt)
        return sim_rule_lognormal(
            np.uint64(cfg.seed), np.int64(cfg.n_paths), cfg.dt, horizon, model.r,
            np.log(x0), fsign, np.log(model.L), np.log(model.H),
            np.log(cap) if np.isfinite(cap) else np.inf,
            np.log(lo) if lo > 0.0 else -np.inf,
            buy_mode, cp, sp, cm, sm)
    hi = 4.0 * model.M
    pos_arrays = _poly_arrays(model.pos, hi)
    neg_arrays = _poly_arrays(model.neg, hi)
    return sim_rule_general(
        np.uint64(cfg.seed), np.int64(cfg.n_paths), cfg.dt, horizon, model.r,
        x0, fsign, model.L, model.H,
        cap if np.isfinite(cap) else np.inf,
        lo if lo > 0.0 else -1.0,
        buy_mode, ZERO_FLOOR, *pos_arrays, *neg_arrays)


def _estimate_from(payoff: np.ndarray, status: np.ndarray, cfg: McConfig) -> McEstimate:
    n = payoff.shape[0]
    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    trunc = float(np.mean(status == TRUNCATED))
    warn = trunc > 0.05
    if warn:
        warnings.warn(f"truncated_fraction={trunc:.3f} > 0.05: horizon too small",
                      RuntimeWarning)
    return McEstimate(mean=mean, std_error=se, n_paths=n, seed=cfg.seed,
                      truncated_fraction=trunc, horizon_warning=warn)


def run_rule(model: ModelSpec, x0: float, f0, rule, cfg: McConfig,
             sell_solution: SellSolution | None = None) -> McEstimate:
    """Estimate the discounted payoff of a stopping rule from (x0, f0).

    Sell rules pay the price at the trigger; the buy rule pays the gain
    g(S, +) at the first positive-regime touch of its threshold (needs the
    solved sell problem for the gain).  Paths that neither trigger nor get
    killed by the horizon contribute their current state value and are
    counted in truncated_fraction.
    """
    f0 = Regime.parse(f0)
    _check_start(model, x0, f0)
    _configure_threads()

    if isinstance(rule, SellImmediately):
        return McEstimate(mean=float(x0), std_error=0.0, n_paths=cfg.n_paths,
                          seed=cfg.seed, truncated_fraction=0.0)

    if isinstance(rule, SellAtStopLoss):
        if not rule.m < model.M:
            raise DomainError(f"stop-loss level must be below M, got {rule.m}")
        cap, lo, buy_mode = model.M, rule.m, False
    elif isinstance(rule, SellAtCap):
        cap, lo, buy_mode = model.M, 0.0, False
    elif isinstance(rule, BuyBelow):
        if not (model.L <= rule.threshold < model.M):
            raise DomainError(f"buy threshold must lie in [L, M), got {rule.threshold}")
        if sell_solution is None:
            raise ConfigError("buy-rule estimation needs the solved sell problem")
        cap, lo, buy_mode = np.inf, rule.threshold, True
    else:
        raise ConfigError(f"unknown rule {rule!r}")

    s_end, f_end, t_end, status = _simulate(model, x0, f0, cfg, cap, lo,
                                            buy_mode, cfg.horizon)
    if buy_mode:
        pos_mask = f_end > 0
        g = np.zeros_like(s_end)
        if np.any(pos_mask):
            g[pos_mask] = sell_solution.value_extended(s_end[pos_mask], "+") - s_end[pos_mask]
        if np.any(~pos_mask):
            g[~pos_mask] = sell_solution.value_extended(s_end[~pos_mask], "-") - s_end[~pos_mask]
        payoff = np.where(status == KILLED, 0.0, g)
    else:
        payoff = np.where(status == KILLED, 0.0, s_end)
    return _estimate_from(payoff, status, cfg)


def sweep_stop_loss(model: ModelSpec, x0: float, f0, m_grid, cfg: McConfig):
    """One estimate per stop-loss level, on common random numbers.

    Lognormal models evaluate every level on the same simulated paths in a
    single pass; general models rerun the rule per level, which still shares
    randomness because path streams depend only on (seed, path index).
    Returns [(m, McEstimate)] in the input grid order.
    """
    f0 = Regime.parse(f0)
    _check_start(model, x0, f0)
    _configure_threads()
    m_grid = np.asarray(m_grid, dtype=float)
    if np.any(m_grid <= 0.0) or np.any(m_grid >= model.H):
        raise DomainError("sweep levels must lie in (0, H)")

    if _resolve_scheme(model, cfg) == "exact":
        order = np.argsort(-m_grid)
        lo_desc = np.ascontiguousarray(np.log(m_grid[order]))
        cp, sp, cm, sm = _log_params(model, cfg.dt)
        payoff, status = sweep_lognormal(
            np.uint64(cfg.seed), np.int64(cfg.n_paths), cfg.dt, cfg.horizon,
            model.r, np.log(x0), np.int8(1 if f0 is Regime.POSITIVE else -1),
            np.log(model.L), np.log(model.H), np.log(model.M),
            lo_desc, cp, sp, cm, sm)
        out: list = [None] * len(m_grid)
        for col, idx in enumerate(order):
            out[idx] = (float(m_grid[idx]),
                        _estimate_from(payoff[:, col], status[:, col], cfg))
        return out
    return [(float(m), run_rule(model, x0, f0, SellAtStopLoss(float(m)), cfg))
            for m in m_grid]


def martingale_check(model: ModelSpec, sell_sol: SellSolution, x0: float, f0,
                     t_check: float, cfg: McConfig, rule=None) -> MartingaleDiagnostic:
    """Compare the MC mean of the discounted stopped value process with v(x0, f0).

    Under the optimal rule the stopped, discounted value process is a
    martingale, so the difference should vanish within noise; under a
    suboptimal rule the process is only a supermartingale and the difference
    should not exceed the noise band from above.
    """
    f0 = Regime.parse(f0)
    _check_start(model, x0, f0)
    _configure_threads()
    reference = float(sell_sol.value(x0, f0))
    if t_check <= 0.0:
        return MartingaleDiagnostic(difference=0.0, std_error=0.0, passed=True,
                                    mc_mean=reference, reference=reference)

    rule = rule if rule is not None else sell_sol.optimal_rule
    if isinstance(rule, SellAtStopLoss):
        lo = rule.m
    elif isinstance(rule, SellAtCap):
        lo = 0.0
    else:
        raise ConfigError("martingale_check needs a sell rule")
    s_end, f_end, t_end, status = _simulate(model, x0, f0, cfg, model.M, lo,
                                            False, t_check)
    v = np.empty_like(s_end)
    pos_mask = f_end > 0
    if np.any(pos_mask):
        v[pos_mask] = sell_sol.value_extended(s_end[pos_mask], "+")
    if np.any(~pos_mask):
        v[~pos_mask] = sell_sol.value_extended(s_end[~pos_mask], "-")
    payoff = np.where(status == KILLED, 0.0, v)
    mean = float(payoff.mean())
    se = float(payoff.std(ddof=1) / np.sqrt(len(payoff)))
    diff = mean - reference
    return MartingaleDiagnostic(difference=diff, std_error=se,
                                passed=abs(diff) <= 3.0 * se,
                                mc_mean=mean, reference=reference)


def interval_exit(dyn, r: float, x0: float, interval: tuple, cfg: McConfig):
    """Discounted exit indicators for a single-regime diffusion on (a, b).

    Returns (upper, lower) McEstimates of the discounted probability of
    leaving the interval through the top, respectively the bottom.  Used to
    cross-validate the hitting functionals read off the fundamental pairs.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (0.0 < a < x0 < b):
        raise DomainError(f"need 0 < a < x0 < b, got a={a}, x0={x0}, b={b}")
    _configure_threads()
    if isinstance(dyn, Lognormal):
        cp = (dyn.mu_rate - 0.5 * dyn.variance_rate) * cfg.dt
        sp = dyn.sigma_rate * np.sqrt(cfg.dt)
        s_end, f_end, t_end, status = sim_rule_lognormal(
            np.uint64(cfg.seed), np.int64(cfg.n_paths), cfg.dt, cfg.horizon, r,
            np.log(x0), np.int8(-1), -np.inf, np.inf,
            np.log(b), np.log(a), False, cp, sp, cp, sp)
    else:
        arrays = _poly_arrays(dyn, 4.0 * b)
        s_end, f_end, t_end, status = sim_rule_general(
            np.uint64(cfg.seed), np.int64(cfg.n_paths), cfg.dt, cfg.horizon, r,
            x0, np.int8(-1), -1.0, np.inf, b, a, False, ZERO_FLOOR,
            *arrays, *arrays)
    hit = status == TRIGGERED
    upper = np.where(hit & (s_end >= b), 1.0, 0.0)
    lower = np.where(hit & (s_end <= a), 1.0, 0.0)
    return (_estimate_from(upper, status, cfg), _estimate_from(lower, status, cfg))
