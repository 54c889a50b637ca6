"""Selling problem: stop-loss boundary by smooth pasting and the value function.

The candidate value for a stop-loss level m is assembled directly from the
four boundary conditions of its case (value matching at m, M and at the
switch levels), which makes the candidate exactly the expected discounted
payoff of the rule "sell at the cap, or in the negative regime at or below
m".  The optimal boundary is the m where the negative-regime component
pastes smoothly onto the payoff (slope one); the case tag records where that
happens: C1 in [L, H), C2 in (0, L), C3 never (m = 0).
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.optimize import brentq

from .errors import (
    DegenerateDenominator,
    DomainError,
    MultipleRootsWarning,
    NumericalError,
    SingularSystem,
)
from .fundsol import (
    ComboCurve,
    FundamentalPair,
    PowerCurve,
    RegimePairs,
    ScaledCurve,
    build_pairs,
    hit_functionals,
)
from .model import ModelSpec, Regime

_COND_LIMIT = 1e13


class CaseTag(enum.Enum):
    C1 = "C1"  # m_hat in [L, H)
    C2 = "C2"  # m_hat in (0, L)
    C3 = "C3"  # m_hat = 0: never stop early in the negative regime


@dataclass(frozen=True)
class SellAtStopLoss:
    """Sell at the cap or once the negative regime trades at or below m."""

    m: float

    def __post_init__(self):
        if not self.m >= 0.0:
            raise DomainError(f"stop-loss level must be nonnegative, got {self.m}")


@dataclass(frozen=True)
class SellImmediately:
    pass


@dataclass(frozen=True)
class SellAtCap:
    """Hold until the price reaches the cap M."""


StoppingRule = Union[SellAtStopLoss, SellImmediately, SellAtCap]


def _system_basis(pair: FundamentalPair, lo: float, hi: float):
    """Two independent solutions scaled to stay O(1) on [lo, hi].

    Lognormal pairs re-anchor the raw powers so the increasing member peaks
    at hi and the decreasing member at lo (entries of the linear system stay
    in [0, 1] even for extreme exponents); numeric pairs are already
    interval-normalized.
    """
    if pair.kind == "lognormal":
        inc, dec = pair.basis
        return inc.reanchored(hi), dec.reanchored(lo)
    return pair.basis


@dataclass(frozen=True)
class Candidate:
    """Assembled stop-loss candidate: coefficients and evaluable components."""

    case: CaseTag
    m: float
    vminus: ComboCurve
    vplus: ComboCurve
    coeffs: tuple
    cond: float


def assemble_candidate(model: ModelSpec, pairs: RegimePairs, m: float,
                       case: CaseTag) -> Candidate:
    """Solve the 4x4 boundary-condition system for stop-loss level m.

    C1 rows: v(m,-)=m, v(H,-)=v(H,+), v(L,+)=L, v(M,+)=M.
    C2 rows: v(m,-)=m, v(L,+)=v(L,-), v(H,-)=v(H,+), v(M,+)=M.
    Returned coefficients are in the raw basis of each pair (pure powers for
    lognormal dynamics, the normalized pair members otherwise).
    """
    L, H, M = model.L, model.H, model.M
    if case is CaseTag.C1 and not (L <= m < H):
        raise DomainError(f"C1 needs m in [L, H), got m={m}")
    if case is CaseTag.C2 and not (0.0 < m < L):
        raise DomainError(f"C2 needs m in (0, L), got m={m}")

    bm1, bm2 = _system_basis(pairs.neg, m, H)
    bp1, bp2 = _system_basis(pairs.pos, L, M)

    if case is CaseTag.C1:
        rows = np.array([
            [bm1(m), bm2(m), 0.0, 0.0],
            [bm1(H), bm2(H), -bp1(H), -bp2(H)],
            [0.0, 0.0, bp1(L), bp2(L)],
            [0.0, 0.0, bp1(M), bp2(M)],
        ])
        rhs = np.array([m, 0.0, L, M])
    else:
        rows = np.array([
            [bm1(m), bm2(m), 0.0, 0.0],
            [bm1(L), bm2(L), -bp1(L), -bp2(L)],
            [bm1(H), bm2(H), -bp1(H), -bp2(H)],
            [0.0, 0.0, bp1(M), bp2(M)],
        ])
        rhs = np.array([m, 0.0, 0.0, M])

    cond = float(np.linalg.cond(rows))
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise SingularSystem(f"boundary system degenerate at m={m:.6g}", cond=cond)
    y = np.linalg.solve(rows, rhs)

    vminus = ComboCurve(y[0], bm1, y[1], bm2)
    vplus = ComboCurve(y[2], bp1, y[3], bp2)

    if pairs.neg.kind == "lognormal":
        raw_minus = (y[0] * bm1.anchor ** (-bm1.k), y[1] * bm2.anchor ** (-bm2.k))
    else:
        raw_minus = (y[0], y[1])
    if pairs.pos.kind == "lognormal":
        raw_plus = (y[2] * bp1.anchor ** (-bp1.k), y[3] * bp2.anchor ** (-bp2.k))
    else:
        raw_plus = (y[2], y[3])

    return Candidate(case=case, m=m, vminus=vminus, vplus=vplus,
                     coeffs=(*raw_minus, *raw_plus), cond=cond)


def pasting_residual(model: ModelSpec, pairs: RegimePairs, m: float,
                     case: CaseTag) -> float:
    """Slope error of the candidate at its own boundary: dv/dx(m, -) - 1."""
    cand = assemble_candidate(model, pairs, m, case)
    return float(cand.vminus.deriv(m)) - 1.0


def case_c3_value(model: ModelSpec, pairs: RegimePairs):
    """Never-stop-early value: v(x,-) proportional to the discounted H-hit.

    v(x,-) = phi_minus(x) * M*chi(H) / (1 - phi_minus(L)*delta(H)) and the
    positive component matches it at L and the cap at M.
    """
    hf = hit_functionals(model, pairs)
    den = 1.0 - float(hf.phi_minus(model.L)) * float(hf.delta(model.H))
    if not den > 0.0:
        raise DegenerateDenominator(f"1 - phi_minus(L)*delta(H) = {den:.3e} <= 0")
    scale = model.M * float(hf.chi(model.H)) / den
    vminus = ScaledCurve(scale, hf.phi_minus)
    v_at_L = scale * float(hf.phi_minus(model.L))
    vplus = ComboCurve(model.M, hf.chi, v_at_L, hf.delta)
    coeffs = (scale, 0.0, model.M, v_at_L)
    return vminus, vplus, coeffs


@dataclass
class SolveDiagnostics:
    """Residual scans and flags recorded while classifying."""

    c1_grid: np.ndarray = field(default_factory=lambda: np.array([]))
    c1_residuals: np.ndarray = field(default_factory=lambda: np.array([]))
    c2_grid: np.ndarray = field(default_factory=lambda: np.array([]))
    c2_residuals: np.ndarray = field(default_factory=lambda: np.array([]))
    multiple_roots: bool = False
    n_brackets: int = 0
    pasting_residual: float = float("nan")
    cond: float = float("nan")


@dataclass(frozen=True)
class SellSolution:
    """Solved selling problem: case, boundary, coefficients and value function."""

    case: CaseTag
    m_hat: float
    coeffs: tuple
    model: ModelSpec
    pairs: RegimePairs
    diagnostics: SolveDiagnostics
    _vminus: object
    _vplus: object

    def value(self, x, f) -> np.ndarray | float:
        """v(x, f) on the reachable domain; raises DomainError outside it."""
        f = Regime.parse(f)
        xv = np.asarray(x, dtype=float)
        if f is Regime.POSITIVE:
            if np.any(xv < self.model.L - 1e-12) or np.any(xv > self.model.M + 1e-12):
                raise DomainError("positive regime lives on [L, M]")
            out = np.asarray(self._vplus(xv), dtype=float)
        else:
            if np.any(xv <= 0.0) or np.any(xv > self.model.H + 1e-12):
                raise DomainError("negative regime lives on (0, H]")
            out = np.where(xv <= self.m_hat, xv, self._vminus(xv))
        return float(out) if np.isscalar(x) or xv.ndim == 0 else out

    def dvalue(self, x, f) -> np.ndarray | float:
        f = Regime.parse(f)
        xv = np.asarray(x, dtype=float)
        if f is Regime.POSITIVE:
            out = np.asarray(self._vplus.deriv(xv), dtype=float)
        else:
            out = np.where(xv <= self.m_hat, 1.0, self._vminus.deriv(xv))
        return float(out) if np.isscalar(x) or xv.ndim == 0 else out

    def value_extended(self, x, f) -> np.ndarray:
        """Lenient evaluation for simulated states (cap overshoot -> payoff x)."""
        f = Regime.parse(f)
        xv = np.asarray(x, dtype=float)
        if f is Regime.POSITIVE:
            inside = np.clip(xv, self.model.L, self.model.M)
            return np.where(xv >= self.model.M, xv,
                            np.asarray(self._vplus(inside), dtype=float))
        inside = np.clip(xv, 1e-300, self.model.H)
        return np.where(xv <= self.m_hat, xv,
                        np.asarray(self._vminus(inside), dtype=float))

    @property
    def optimal_rule(self) -> StoppingRule:
        return SellAtStopLoss(self.m_hat) if self.m_hat > 0.0 else SellAtCap()


def value_sell(sol: SellSolution, x, f):
    return sol.value(x, f)


def _scan_residual(model, pairs, grid, case):
    res = np.full(grid.shape, np.nan)
    for i, m in enumerate(grid):
        try:
            res[i] = pasting_residual(model, pairs, m, case)
        except SingularSystem:
            pass
    return res


def _brackets(grid, res):
    out = []
    for i in range(len(grid) - 1):
        a, b = res[i], res[i + 1]
        if np.isnan(a) or np.isnan(b):
            continue
        if a == 0.0:
            out.append((grid[i], grid[i]))
        elif a * b < 0.0:
            out.append((grid[i], grid[i + 1]))
    if len(res) and res[-1] == 0.0:
        out.append((grid[-1], grid[-1]))
    return out


def classify_and_solve(model: ModelSpec, pairs: Optional[RegimePairs] = None,
                       tol_paste: float = 1e-9, grid_n: int = 400) -> SellSolution:
    """Find the stop-loss boundary and build the full sell solution.

    Scans the C1 branch on [L, H - eps] for a pasting bracket, then the C2
    branch on (0, L); each branch is refined by bracketing root search until
    the pasting residual is below tol_paste.  No bracket on either branch
    means C3.  Multiple brackets keep the largest root (latest stopping
    boundary) and set the multiple_roots diagnostic.
    """
    pairs = pairs or build_pairs(model)
    L, H = model.L, model.H
    diag = SolveDiagnostics()

    def refine(lo, hi, case):
        if lo == hi:
            return lo
        f = lambda m: pasting_residual(model, pairs, m, case)
        root = brentq(f, lo, hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
        if abs(f(root)) > tol_paste:
            raise NumericalError(
                f"pasting residual {f(root):.3e} at m={root:.12g} "
                f"exceeds tol_paste={tol_paste:.1e}")
        return root

    def finish(case, m_hat, cand_coeffs, vminus, vplus):
        if case is not CaseTag.C3:
            diag.pasting_residual = pasting_residual(model, pairs, m_hat, case)
        return SellSolution(case=case, m_hat=m_hat, coeffs=cand_coeffs, model=model,
                            pairs=pairs, diagnostics=diag, _vminus=vminus, _vplus=vplus)

    eps1 = 1e-6 * (H - L)
    diag.c1_grid = np.linspace(L, H - eps1, grid_n)
    diag.c1_residuals = _scan_residual(model, pairs, diag.c1_grid, CaseTag.C1)
    br = _brackets(diag.c1_grid, diag.c1_residuals)
    if br:
        diag.n_brackets = len(br)
        if len(br) > 1:
            diag.multiple_roots = True
            warnings.warn("multiple pasting brackets on the C1 branch; "
                          "keeping the largest root", MultipleRootsWarning)
        m_hat = refine(*br[-1], CaseTag.C1)
        cand = assemble_candidate(model, pairs, m_hat, CaseTag.C1)
        diag.cond = cand.cond
        return finish(CaseTag.C1, m_hat, cand.coeffs, cand.vminus, cand.vplus)

    # Log spacing: a nearly fair negative regime pushes the boundary toward
    # zero exponentially fast, so the scan must reach many decades down.
    lo2 = max(1e-18 * L, pairs.neg.a * (1.0 + 1e-9))
    diag.c2_grid = np.geomspace(lo2, L * (1.0 - 1e-9), grid_n)
    diag.c2_residuals = _scan_residual(model, pairs, diag.c2_grid, CaseTag.C2)
    br = _brackets(diag.c2_grid, diag.c2_residuals)
    if br:
        diag.n_brackets = len(br)
        if len(br) > 1:
            diag.multiple_roots = True
            warnings.warn("multiple pasting brackets on the C2 branch; "
                          "keeping the largest root", MultipleRootsWarning)
        m_hat = refine(*br[-1], CaseTag.C2)
        cand = assemble_candidate(model, pairs, m_hat, CaseTag.C2)
        diag.cond = cand.cond
        return finish(CaseTag.C2, m_hat, cand.coeffs, cand.vminus, cand.vplus)

    vminus, vplus, coeffs = case_c3_value(model, pairs)
    return finish(CaseTag.C3, 0.0, coeffs, vminus, vplus)


def rule_value(model: ModelSpec, pairs: RegimePairs, x, f, m: float):
    """Expected discounted payoff of the stop-loss rule m from state (x, f).

    This is the candidate evaluated at (x, f): the assembly's boundary
    conditions are exactly the rule's value-matching identities.  Used by
    the analytic sweep-optimality checks.
    """
    f = Regime.parse(f)
    if m <= 0.0:
        vminus, vplus, _ = case_c3_value(model, pairs)
        case = CaseTag.C3
    else:
        case = CaseTag.C1 if m >= model.L else CaseTag.C2
        cand = assemble_candidate(model, pairs, m, case)
        vminus, vplus = cand.vminus, cand.vplus
    xv = np.asarray(x, dtype=float)
    if f is Regime.POSITIVE:
        if case is CaseTag.C1:
            out = np.where(xv <= model.L, xv, vplus(xv))
        else:
            out = np.asarray(vplus(xv), dtype=float)
    else:
        out = np.where(xv <= m, xv, vminus(xv))
    return float(out) if np.isscalar(x) or xv.ndim == 0 else out
