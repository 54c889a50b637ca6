"""Numba path kernels for the regime-switching simulator.

Shared conventions: the flag is +1/-1; switches are applied after each move
(end-of-step detection, no bridge correction) and triggers are evaluated on
the post-switch state, including the initial state at t=0.  Discounting uses
one exponential kill clock per path (rate r, drawn from the path's stream):
a payoff counts only if the trigger beats the clock, so the average of
undiscounted trigger payoffs estimates the discounted value while path
lengths stay O(1/r) even for rules whose stopping time has heavy tails or
positive mass at infinity.

Per-path status codes: 0 = rule triggered (alive), 1 = killed by the clock,
2 = still running at the horizon.
"""

from __future__ import annotations

import numpy as np
from numba import njit, prange

from .rng import normal_pair, uniform_pair

TRIGGERED = 0
KILLED = 1
TRUNCATED = 2


@njit(inline="always", cache=True)
def _ppoly_eval(breaks, coefs, x):
    """Evaluate a scipy-PPoly-layout piecewise polynomial (edge extrapolation)."""
    n = breaks.shape[0] - 1
    if x <= breaks[0]:
        i = 0
    elif x >= breaks[n]:
        i = n - 1
    else:
        lo = 0
        hi = n
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if x >= breaks[mid]:
                lo = mid
            else:
                hi = mid
        i = lo
    t = x - breaks[i]
    acc = coefs[0, i]
    for j in range(1, coefs.shape[0]):
        acc = acc * t + coefs[j, i]
    return acc


@njit(parallel=True, cache=True)
def sim_rule_lognormal(seed, n, dt, horizon, r, log_x0, f0,
                       log_l, log_h, cap_log, lo_log, buy_mode,
                       cp, sp, cm, sm):
    """Exact log-space stepping between end-of-step switch/trigger checks.

    cp/sp and cm/sm are the per-step log drift and log standard deviation of
    the positive/negative regime.  Sell mode triggers at price >= cap (any
    regime) or at price <= lo in the negative regime; buy mode triggers at
    price <= lo in the positive regime.
    """
    s_end = np.empty(n)
    f_end = np.empty(n, np.int8)
    t_end = np.empty(n)
    status = np.empty(n, np.int8)
    n_steps = np.int64(np.ceil(horizon / dt - 1e-9))
    for i in prange(n):
        path = np.uint64(i)
        skey = np.uint64(seed)
        draw = np.uint64(0)
        u0, _ = uniform_pair(draw, path, skey)
        draw += np.uint64(1)
        ekill = -np.log(u0) / r
        ls = log_x0
        f = f0
        t = 0.0
        spare = 0.0
        have_spare = False
        st = np.int8(TRUNCATED)
        for k in range(n_steps + 1):
            if buy_mode:
                trig = f > 0 and ls <= lo_log
            else:
                trig = ls >= cap_log or (f < 0 and ls <= lo_log)
            if trig:
                st = np.int8(TRIGGERED) if (t == 0.0 or t < ekill) else np.int8(KILLED)
                break
            if k == n_steps:
                break
            if t >= ekill:
                st = np.int8(KILLED)
                break
            if have_spare:
                z = spare
                have_spare = False
            else:
                z1, z2, draw = normal_pair(draw, path, skey)
                z = z1
                spare = z2
                have_spare = True
            if f > 0:
                ls += cp + sp * z
            else:
                ls += cm + sm * z
            t += dt
            if f > 0:
                if ls <= log_l:
                    f = np.int8(-1)
            elif ls >= log_h:
                f = np.int8(1)
        s_end[i] = np.exp(ls)
        f_end[i] = f
        t_end[i] = t
        status[i] = st
    return s_end, f_end, t_end, status


@njit(parallel=True, cache=True)
def sim_rule_general(seed, n, dt, horizon, r, x0, f0,
                     lev_l, lev_h, cap, lo, buy_mode, floor,
                     mu_p_x, mu_p_c, sg_p_x, sg_p_c,
                     mu_m_x, mu_m_c, sg_m_x, sg_m_c):
    """Euler-Maruyama stepping in price space for piecewise-polynomial coefficients.

    Prices are absorbed at `floor` (the zero stand-in): an absorbed path
    stops moving and waits for its kill clock or the horizon.
    """
    s_end = np.empty(n)
    f_end = np.empty(n, np.int8)
    t_end = np.empty(n)
    status = np.empty(n, np.int8)
    sqdt = np.sqrt(dt)
    n_steps = np.int64(np.ceil(horizon / dt - 1e-9))
    for i in prange(n):
        path = np.uint64(i)
        skey = np.uint64(seed)
        draw = np.uint64(0)
        u0, _ = uniform_pair(draw, path, skey)
        draw += np.uint64(1)
        ekill = -np.log(u0) / r
        x = x0
        f = f0
        t = 0.0
        spare = 0.0
        have_spare = False
        absorbed = False
        st = np.int8(TRUNCATED)
        for k in range(n_steps + 1):
            if buy_mode:
                trig = f > 0 and x <= lo
            else:
                trig = x >= cap or (f < 0 and x <= lo)
            if trig:
                st = np.int8(TRIGGERED) if (t == 0.0 or t < ekill) else np.int8(KILLED)
                break
            if k == n_steps:
                break
            if t >= ekill:
                st = np.int8(KILLED)
                break
            if not absorbed:
                if have_spare:
                    z = spare
                    have_spare = False
                else:
                    z1, z2, draw = normal_pair(draw, path, skey)
                    z = z1
                    spare = z2
                    have_spare = True
                if f > 0:
                    mu = _ppoly_eval(mu_p_x, mu_p_c, x)
                    sg = _ppoly_eval(sg_p_x, sg_p_c, x)
                else:
                    mu = _ppoly_eval(mu_m_x, mu_m_c, x)
                    sg = _ppoly_eval(sg_m_x, sg_m_c, x)
                x += mu * dt + sg * sqdt * z
                if x <= floor:
                    x = floor
                    absorbed = True
            t += dt
            if f > 0:
                if x <= lev_l:
                    f = np.int8(-1)
            elif x >= lev_h:
                f = np.int8(1)
        s_end[i] = x
        f_end[i] = f
        t_end[i] = t
        status[i] = st
    return s_end, f_end, t_end, status


@njit(parallel=True, cache=True)
def sweep_lognormal(seed, n, dt, horizon, r, log_x0, f0,
                    log_l, log_h, cap_log, lo_logs_desc,
                    cp, sp, cm, sm):
    """All stop-loss levels on the same paths in one pass (common random numbers).

    lo_logs_desc holds the log stop levels sorted descending; a falling
    negative-regime price triggers them in exactly that order, and a cap hit
    or kill settles every level still pending.  Stream layout matches
    sim_rule_lognormal, so a sweep column is path-identical to the single
    rule run with the same seed.
    """
    nm = lo_logs_desc.shape[0]
    payoff = np.zeros((n, nm))
    status = np.empty((n, nm), np.int8)
    n_steps = np.int64(np.ceil(horizon / dt - 1e-9))
    for i in prange(n):
        path = np.uint64(i)
        skey = np.uint64(seed)
        draw = np.uint64(0)
        u0, _ = uniform_pair(draw, path, skey)
        draw += np.uint64(1)
        ekill = -np.log(u0) / r
        ls = log_x0
        f = f0
        t = 0.0
        spare = 0.0
        have_spare = False
        j = 0
        for k in range(n_steps + 1):
            alive = t == 0.0 or t < ekill
            if ls >= cap_log:
                val = np.exp(ls) if alive else 0.0
                stc = np.int8(TRIGGERED) if alive else np.int8(KILLED)
                for q in range(j, nm):
                    payoff[i, q] = val
                    status[i, q] = stc
                j = nm
                break
            if f < 0:
                while j < nm and ls <= lo_logs_desc[j]:
                    payoff[i, j] = np.exp(ls) if alive else 0.0
                    status[i, j] = np.int8(TRIGGERED) if alive else np.int8(KILLED)
                    j += 1
                if j == nm:
                    break
            if k == n_steps:
                break
            if t >= ekill:
                for q in range(j, nm):
                    payoff[i, q] = 0.0
                    status[i, q] = np.int8(KILLED)
                j = nm
                break
            if have_spare:
                z = spare
                have_spare = False
            else:
                z1, z2, draw = normal_pair(draw, path, skey)
                z = z1
                spare = z2
                have_spare = True
            if f > 0:
                ls += cp + sp * z
            else:
                ls += cm + sm * z
            t += dt
            if f > 0:
                if ls <= log_l:
                    f = np.int8(-1)
            elif ls >= log_h:
                f = np.int8(1)
        for q in range(j, nm):
            payoff[i, q] = np.exp(ls)
            status[i, q] = np.int8(TRUNCATED)
    return payoff, status
