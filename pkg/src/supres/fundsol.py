"""Fundamental solutions of the discounted generator equations.

For each regime the second-order ODE  0.5*sigma(x)^2 f'' + mu(x) f' - r f = 0
has a one-dimensional cone of increasing positive solutions (phi) and of
decreasing ones (psi).  Ratios of their values encode discounted hitting
functionals, which is all the sell/buy solvers consume.  Lognormal dynamics
admit closed-form power solutions; anything else goes through a two-sided
shooting integration with cubic-Hermite interpolation of the solution and
its integrated derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import BPoly

from .errors import (
    IntegrationFailure,
    NonMonotoneSolution,
    NumericalError,
    SingularNormalization,
)
from .model import DynamicsSpec, General, Lognormal, ModelSpec

# Left endpoint used when a numeric negative-regime pair must reach toward
# the (possibly singular) zero boundary: floor = NEG_FLOOR_FRAC * H.
NEG_FLOOR_FRAC = 1e-8


@dataclass(frozen=True)
class LognormalRoots:
    """Exponents of the power solutions x^alpha (increasing), x^beta (decreasing)."""

    alpha: float
    beta: float


def lognormal_roots(sigma2: float, mu: float, r: float) -> LognormalRoots:
    """Both real roots of 0.5*sigma2*t^2 + (mu - 0.5*sigma2)*t - r = 0.

    The constant term is -r < 0, so the discriminant is positive and the
    roots straddle zero.  Uses the cancellation-free quadratic formula so the
    clean rational cases come out exact.
    """
    if sigma2 <= 0.0:
        raise NumericalError(f"variance rate must be positive, got {sigma2}")
    if r <= 0.0:
        raise NumericalError(f"discount rate must be positive, got {r}")
    a = 0.5 * sigma2
    b = mu - 0.5 * sigma2
    c = -r
    disc = b * b - 4.0 * a * c
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b if b != 0.0 else 1.0))
    r1, r2 = q / a, c / q
    return LognormalRoots(alpha=max(r1, r2), beta=min(r1, r2))


class PowerCurve:
    """f(x) = (x / anchor)^k, evaluated in log space so large |k| stays finite."""

    def __init__(self, k: float, anchor: float = 1.0):
        self.k = float(k)
        self.anchor = float(anchor)
        self._log_anchor = math.log(self.anchor)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(self.k * (np.log(x) - self._log_anchor))

    def deriv(self, x):
        x = np.asarray(x, dtype=float)
        return self.k / x * self(x)

    def reanchored(self, anchor: float) -> "PowerCurve":
        return PowerCurve(self.k, anchor)


class ComboCurve:
    """c1*f1 + c2*f2 for two curves exposing __call__ and deriv."""

    def __init__(self, c1: float, f1, c2: float, f2):
        self.c1, self.f1, self.c2, self.f2 = float(c1), f1, float(c2), f2

    def __call__(self, x):
        return self.c1 * self.f1(x) + self.c2 * self.f2(x)

    def deriv(self, x):
        return self.c1 * self.f1.deriv(x) + self.c2 * self.f2.deriv(x)


class ScaledCurve:
    """c * f, keeping the deriv interface."""

    def __init__(self, c: float, f):
        self.c, self.f = float(c), f

    def __call__(self, x):
        return self.c * self.f(x)

    def deriv(self, x):
        return self.c * self.f.deriv(x)


class HermiteCurve:
    """Hermite interpolant carrying the integrated derivative data.

    Pieces are quintic, matching (f, f', f'') at the nodes with f'' taken
    from the ODE identity f'' = 2(r f - mu f')/sigma^2.  Carrying the
    identity-consistent curvature (instead of cubic pieces that only match
    f and f') is what lets an independent finite-difference residual check
    reach 1e-8 in double precision: differencing noisy node values would
    amplify their error by 1/cell^2.
    """

    def __init__(self, xs: np.ndarray, values: np.ndarray, derivs: np.ndarray,
                 second_derivs: np.ndarray):
        data = np.stack([values, derivs, second_derivs], axis=1)
        self._spline = BPoly.from_derivatives(xs, data, extrapolate=True)
        self._dspline = self._spline.derivative()

    def __call__(self, x):
        return self._spline(np.asarray(x, dtype=float))

    def deriv(self, x):
        return self._dspline(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class FundamentalPair:
    """Increasing (phi) and decreasing (psi) members on an interval.

    Anchors: phi(a)=0, phi(b)=1 and psi(a)=1, psi(b)=0, except when the
    interval starts at zero (lognormal negative regime): there psi cannot be
    anchored at the singular endpoint and is normalized psi(b)=1 instead;
    `zero_left` records that.  `basis` holds the raw independent solutions
    the pair was built from (pure powers for lognormal; phi/psi themselves
    for numeric pairs), which is the basis candidate coefficients are
    reported in.
    """

    a: float
    b: float
    phi: object
    psi: object
    basis: tuple
    kind: str
    zero_left: bool = False
    roots: Optional[LognormalRoots] = None


def pair_closed_form(dyn: Lognormal, r: float, interval: tuple) -> FundamentalPair:
    """Power-law pair for lognormal dynamics on (a, b), 0 <= a < b."""
    a, b = float(interval[0]), float(interval[1])
    if not (0.0 <= a < b):
        raise NumericalError(f"need 0 <= a < b, got ({a}, {b})")
    rt = lognormal_roots(dyn.variance_rate, dyn.mu_rate, r)
    inc = PowerCurve(rt.alpha, anchor=b)
    dec = PowerCurve(rt.beta, anchor=max(a, b * 1e-16) if a > 0 else b)

    if a == 0.0:
        # x^beta blows up at zero: phi = (x/b)^alpha is exact, psi is the
        # pure decreasing power normalized at the right endpoint.
        return FundamentalPair(a=a, b=b, phi=inc, psi=dec, basis=(inc, dec),
                               kind="lognormal", zero_left=True, roots=rt)

    mat = np.array([[inc(a), dec(a)], [inc(b), dec(b)]])
    det = mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0]
    if det == 0.0 or not np.isfinite(det):
        raise SingularNormalization(f"anchor system singular on ({a}, {b})")
    phi_c = np.linalg.solve(mat, np.array([0.0, 1.0]))
    psi_c = np.linalg.solve(mat, np.array([1.0, 0.0]))
    phi = ComboCurve(phi_c[0], inc, phi_c[1], dec)
    psi = ComboCurve(psi_c[0], inc, psi_c[1], dec)
    return FundamentalPair(a=a, b=b, phi=phi, psi=psi, basis=(inc, dec),
                           kind="lognormal", roots=rt)


def coefficient_knots(dyn: DynamicsSpec, lo: float, hi: float) -> list:
    """Interior breakpoints of general coefficients inside (lo, hi).

    The ODE solution is only piecewise smooth across them, so integrations
    restart there and residual grids skip their neighborhoods.
    """
    if isinstance(dyn, Lognormal):
        return []
    ks = set()
    for poly in (dyn.mu_poly, dyn.sigma_poly):
        for k in poly.x[1:-1]:
            if lo < k < hi:
                ks.add(float(k))
    return sorted(ks)


def _integrate_one(dyn: DynamicsSpec, r: float, x_from: float, x_to: float,
                   y0: float, dy0: float, xs_eval: np.ndarray):
    def rhs(x, y):
        f, fp = y
        sig = dyn.sigma(x)
        return (fp, 2.0 * (r * f - dyn.mu(x) * fp) / (sig * sig))

    forward = x_to > x_from
    knots = coefficient_knots(dyn, min(x_from, x_to), max(x_from, x_to))
    stops = sorted(knots + [x_to], reverse=not forward)
    f_vals = np.empty_like(xs_eval)
    d_vals = np.empty_like(xs_eval)
    cur = x_from
    y = (y0, dy0)
    for stop in stops:
        # Near machine-limit tolerances: the residual check differences node
        # values, so their noise must sit well below tol_ode * h^2.
        sol = solve_ivp(rhs, (cur, stop), y, dense_output=True,
                        method="DOP853", rtol=3e-14, atol=1e-16)
        if not sol.success:
            raise IntegrationFailure(f"shooting from {cur:g} failed: {sol.message}")
        lo, hi = (cur, stop) if forward else (stop, cur)
        mask = (xs_eval >= lo) & (xs_eval <= hi)
        if np.any(mask):
            ys = sol.sol(xs_eval[mask])
            f_vals[mask] = ys[0]
            d_vals[mask] = ys[1]
        y = sol.y[:, -1]
        cur = stop
    return f_vals, d_vals


def _ode_second_derivative(dyn: DynamicsSpec, r: float, xs, f, fp):
    sig = dyn.sigma(xs)
    return 2.0 * (r * f - dyn.mu(xs) * fp) / (sig * sig)


def pair_numeric(dyn: DynamicsSpec, r: float, interval: tuple,
                 tol_ode: float = 1e-8, n_grid: int = 4001) -> FundamentalPair:
    """Shooting construction of the pair for general coefficients.

    One initial-value integration from each endpoint (the growing direction
    is forward-stable either way), normalized to the interval anchors and
    wrapped in Hermite interpolants that carry the integrated derivative and
    the identity-consistent curvature.  The ODE residual of the result is
    checked at tol_ode with a central finite-difference second derivative.
    """
    a, b = float(interval[0]), float(interval[1])
    if not (0.0 < a < b):
        raise NumericalError(f"need 0 < a < b for the numeric pair, got ({a}, {b})")
    xs = np.linspace(a, b, n_grid)
    knots = coefficient_knots(dyn, a, b)
    if knots:
        # Interpolation pieces must break where the coefficients do.
        xs = np.unique(np.concatenate([xs, np.asarray(knots)]))

    f_inc, d_inc = _integrate_one(dyn, r, a, b, 0.0, 1.0, xs)
    f_dec, d_dec = _integrate_one(dyn, r, b, a, 0.0, -1.0, xs[::-1])
    f_dec, d_dec = f_dec[::-1], d_dec[::-1]

    if f_inc[-1] <= 0.0 or f_dec[0] <= 0.0:
        raise IntegrationFailure("shooting produced a nonpositive normalizer")
    phi = HermiteCurve(xs, f_inc / f_inc[-1], d_inc / f_inc[-1],
                       _ode_second_derivative(dyn, r, xs, f_inc, d_inc) / f_inc[-1])
    psi = HermiteCurve(xs, f_dec / f_dec[0], d_dec / f_dec[0],
                       _ode_second_derivative(dyn, r, xs, f_dec, d_dec) / f_dec[0])

    mid = xs[1:-1]
    if np.any(phi.deriv(mid) <= 0.0):
        raise NonMonotoneSolution("normalized phi is not strictly increasing")
    if np.any(psi.deriv(mid) >= 0.0):
        raise NonMonotoneSolution("normalized psi is not strictly decreasing")

    pair = FundamentalPair(a=a, b=b, phi=phi, psi=psi, basis=(phi, psi), kind="numeric")
    for member in (phi, psi):
        res = ode_residual(member, dyn, r, xs, domain=(a, b))
        if res > tol_ode:
            raise IntegrationFailure(
                f"ODE residual {res:.3e} exceeds tol_ode={tol_ode:.1e}")
    return pair


def ode_residual(curve, dyn: DynamicsSpec, r: float, xs, rel_h: float = 1e-3,
                 domain: Optional[tuple] = None) -> float:
    """Max scaled residual |0.5*sigma^2 f'' + mu f' - r f| with a central-FD f''.

    Uses the five-point central second difference (fourth-order accurate):
    the plain three-point stencil cannot reach 1e-8 in double precision for
    curvy members, because its h window is squeezed between O(h^2 f'''')
    truncation and O(eps/h^2) roundoff.  Points whose widest stencil arm
    leaves the stated domain (or crosses zero) are skipped: interval-bound
    interpolants would be extrapolated there.
    """
    xs = np.asarray(xs, dtype=float)
    h = rel_h * float(np.max(np.abs(xs)))
    xs = xs[xs > 2.5 * h]
    if domain is not None:
        xs = xs[(xs >= domain[0] + 2.5 * h) & (xs <= domain[1] - 2.5 * h)]
    for k in coefficient_knots(dyn, -np.inf, np.inf):
        xs = xs[np.abs(xs - k) > 2.5 * h]
    if xs.size == 0:
        return 0.0
    f = curve(xs)
    fpp = (-curve(xs + 2 * h) + 16.0 * curve(xs + h) - 30.0 * f
           + 16.0 * curve(xs - h) - curve(xs - 2 * h)) / (12.0 * h * h)
    res = 0.5 * dyn.sigma(xs) ** 2 * fpp + dyn.mu(xs) * curve.deriv(xs) - r * f
    scale = np.maximum(np.abs(r * f), 1.0)
    return float(np.max(np.abs(res) / scale))


def wronskian_sign_constant(pair: FundamentalPair, n: int = 200) -> bool:
    """phi' psi - phi psi' keeps one sign on the open interval (independence)."""
    lo = pair.a if pair.a > 0 else pair.b * 1e-6
    xs = np.linspace(lo + 1e-9 * (pair.b - lo), pair.b - 1e-9 * (pair.b - lo), n)
    w = pair.phi.deriv(xs) * pair.psi(xs) - pair.phi(xs) * pair.psi.deriv(xs)
    return bool(np.all(w > 0.0) or np.all(w < 0.0))


def psi_infinity(dyn: DynamicsSpec, r: float, L: float,
                 x_far: Optional[float] = None, n_grid: int = 4001):
    """The decreasing solution vanishing at +infinity, normalized to 1 at L.

    This is the normalization the purchase-timing ratio needs: psi(x)/psi(y)
    must equal the discounted first-passage factor from x down to y for the
    unrestricted positive-regime diffusion.  Lognormal: exactly (x/L)^beta.
    General coefficients: built on [L, x_far] with a zero anchor at x_far
    (far-field truncation; the contamination by the growing mode decays like
    phi(M)/phi(x_far), so pick x_far well above the price range of interest).
    """
    L = float(L)
    if isinstance(dyn, Lognormal):
        rt = lognormal_roots(dyn.variance_rate, dyn.mu_rate, r)
        return PowerCurve(rt.beta, anchor=L)
    if x_far is None:
        raise NumericalError("psi_infinity for general coefficients needs x_far")
    xs = np.linspace(L, float(x_far), n_grid)
    f_dec, d_dec = _integrate_one(dyn, r, float(x_far), L, 0.0, -1.0, xs[::-1])
    f_dec, d_dec = f_dec[::-1], d_dec[::-1]
    if f_dec[0] <= 0.0:
        raise IntegrationFailure("far-field shooting produced a nonpositive normalizer")
    return HermiteCurve(xs, f_dec / f_dec[0], d_dec / f_dec[0],
                        _ode_second_derivative(dyn, r, xs, f_dec, d_dec) / f_dec[0])


@dataclass(frozen=True)
class RegimePairs:
    """The two pairs every solver consumes: positive on [L, M], negative on (0, H]."""

    pos: FundamentalPair
    neg: FundamentalPair
    model: ModelSpec = field(repr=False, default=None)


def build_pairs(model: ModelSpec, tol_ode: float = 1e-8, n_grid: int = 2001) -> RegimePairs:
    if isinstance(model.pos, Lognormal):
        pos = pair_closed_form(model.pos, model.r, (model.L, model.M))
    else:
        pos = pair_numeric(model.pos, model.r, (model.L, model.M), tol_ode, n_grid)
    if isinstance(model.neg, Lognormal):
        neg = pair_closed_form(model.neg, model.r, (0.0, model.H))
    else:
        floor = NEG_FLOOR_FRAC * model.H
        neg = pair_numeric(model.neg, model.r, (floor, model.H), tol_ode, n_grid)
    return RegimePairs(pos=pos, neg=neg, model=model)


@dataclass(frozen=True)
class HitFunctionals:
    """Named discounted hitting functionals, read off the anchored pairs.

    chi(x):  value of hitting M before L from (x, +), discounted at the exit.
    delta(x): value of the discounted exit at L from (x, +).
    phi_minus(x): discounted hit of H from (x, -), worthless at the zero boundary.
    """

    chi: object
    delta: object
    phi_minus: object


def hit_functionals(model: ModelSpec, pairs: RegimePairs) -> HitFunctionals:
    return HitFunctionals(chi=pairs.pos.phi, delta=pairs.pos.psi, phi_minus=pairs.neg.phi)
