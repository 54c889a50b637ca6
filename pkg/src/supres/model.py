"""Two-regime market model: coefficient specs, levels, and validation.

The price follows one of two diffusions depending on a hysteretic flag: the
positive regime lives on [L, inf) and switches off when the price touches L,
the negative regime lives on (0, H] and switches off at H.  A validated
ModelSpec guarantees the drift sandwich mu_neg(x) <= r*x <= mu_pos(x), which
is what makes the stopping analysis work downstream.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy.interpolate import PPoly

from .errors import (
    DomainError,
    DriftSandwichViolation,
    LevelOrderViolation,
    ModelError,
    ModelValidationError,
    NonpositiveRate,
    NonpositiveVolatility,
)

# Simulated prices are clipped here instead of going nonpositive; General
# specs treat it as the absorbing stand-in for zero.
ZERO_FLOOR = 1e-12


class Regime(enum.Enum):
    """Which coefficient set currently drives the price."""

    POSITIVE = "+"
    NEGATIVE = "-"

    def __str__(self) -> str:  # serializes as "+" / "-"
        return self.value

    @classmethod
    def parse(cls, token: "Regime | str") -> "Regime":
        if isinstance(token, Regime):
            return token
        if token in ("+", "pos", "positive"):
            return cls.POSITIVE
        if token in ("-", "neg", "negative"):
            return cls.NEGATIVE
        raise DomainError(f"unknown regime token {token!r}")


@dataclass(frozen=True)
class Lognormal:
    """Proportional coefficients: mu(x) = mu_rate*x, sigma(x) = sigma_rate*x."""

    mu_rate: float
    sigma_rate: float

    def mu(self, x):
        return self.mu_rate * np.asarray(x, dtype=float)

    def sigma(self, x):
        return self.sigma_rate * np.asarray(x, dtype=float)

    @property
    def variance_rate(self) -> float:
        return self.sigma_rate**2


@dataclass(frozen=True)
class General:
    """Piecewise-polynomial drift and volatility on a stated interval.

    Both members are scipy PPoly instances (local-power convention) and are
    extrapolated with their edge pieces outside the breakpoint range, so they
    stay evaluable slightly beyond the model levels (simulation overshoot,
    far-field construction for the buying problem).
    """

    mu_poly: PPoly
    sigma_poly: PPoly

    def mu(self, x):
        return self.mu_poly(np.asarray(x, dtype=float))

    def sigma(self, x):
        return self.sigma_poly(np.asarray(x, dtype=float))


DynamicsSpec = Union[Lognormal, General]


def piecewise_constant(value: float, lo: float = ZERO_FLOOR, hi: float = 1e6) -> PPoly:
    """A single-piece constant polynomial on [lo, hi]."""
    return PPoly(np.array([[float(value)]]), np.array([lo, hi]), extrapolate=True)


def piecewise_linear(points_x, points_y) -> PPoly:
    """Piecewise-linear interpolant through (x_i, y_i), extrapolated by edge pieces."""
    x = np.asarray(points_x, dtype=float)
    y = np.asarray(points_y, dtype=float)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
        raise ModelError("piecewise_linear needs at least two strictly increasing knots")
    slopes = np.diff(y) / np.diff(x)
    c = np.vstack([slopes, y[:-1]])
    return PPoly(c, x, extrapolate=True)


def proportional_poly(rate: float, lo: float = ZERO_FLOOR, hi: float = 1e6) -> PPoly:
    """f(x) = rate*x as a single linear piece (lognormal routed through General)."""
    return PPoly(np.array([[rate], [rate * lo]]), np.array([lo, hi]), extrapolate=True)


@dataclass(frozen=True)
class ModelSpec:
    """Levels, discount rate, and the two regime dynamics.

    Construction does not validate; call validate() to obtain the checked
    instance (tests for degenerate drift orderings rely on being able to
    build unvalidated specs).
    """

    L: float
    H: float
    M: float
    r: float
    pos: DynamicsSpec
    neg: DynamicsSpec

    @property
    def is_lognormal(self) -> bool:
        return isinstance(self.pos, Lognormal) and isinstance(self.neg, Lognormal)

    def dynamics(self, f: Regime) -> DynamicsSpec:
        return self.pos if Regime.parse(f) is Regime.POSITIVE else self.neg


def coefficients(spec: ModelSpec, f: Regime, x) -> tuple:
    """Return (drift, volatility) of the given regime at price x.

    Pure and deterministic; raises DomainError for x <= 0.
    """
    xv = np.asarray(x, dtype=float)
    if np.any(xv <= 0.0):
        raise DomainError(f"price must be positive, got {x!r}")
    dyn = spec.dynamics(f)
    mu = dyn.mu(xv)
    sig = dyn.sigma(xv)
    if np.isscalar(x) or xv.ndim == 0:
        return float(mu), float(sig)
    return mu, sig


def _check_poly_continuity(poly: PPoly, what: str, errors: list) -> None:
    # Interior breakpoints: the piecewise polynomial must be continuous
    # (the Holder-continuity surrogate for General coefficients).
    for xb in poly.x[1:-1]:
        left = poly(np.nextafter(xb, -np.inf))
        right = poly(xb)
        scale = max(1.0, abs(left), abs(right))
        if abs(left - right) > 1e-8 * scale:
            errors.append(ModelError(f"{what} is discontinuous at knot x={xb:g}"))


def validate(spec: ModelSpec, grid_n: int = 10_000) -> ModelSpec:
    """Check every ModelSpec invariant; return the spec or raise the full error list.

    The drift sandwich and positive-volatility conditions are checked on a
    dense grid over (0, M] (grid_n points); lognormal variants reduce to the
    exact rate inequalities.
    """
    errors: list[ModelError] = []

    if not (0.0 < spec.L < spec.H <= spec.M):
        errors.append(LevelOrderViolation(
            f"need 0 < L < H <= M, got L={spec.L}, H={spec.H}, M={spec.M}"))
    if not spec.r > 0.0:
        errors.append(NonpositiveRate(f"discount rate must be positive, got r={spec.r}"))

    for name, dyn, side in (("pos", spec.pos, +1), ("neg", spec.neg, -1)):
        if isinstance(dyn, Lognormal):
            if dyn.sigma_rate <= 0.0:
                errors.append(NonpositiveVolatility(
                    f"{name}: sigma_rate must be positive, got {dyn.sigma_rate}"))
            if side > 0 and dyn.mu_rate < spec.r:
                errors.append(DriftSandwichViolation(
                    f"pos: mu_rate={dyn.mu_rate} < r={spec.r}"))
            if side < 0 and dyn.mu_rate > spec.r:
                errors.append(DriftSandwichViolation(
                    f"neg: mu_rate={dyn.mu_rate} > r={spec.r}"))
        else:
            _check_poly_continuity(dyn.mu_poly, f"{name} drift", errors)
            _check_poly_continuity(dyn.sigma_poly, f"{name} volatility", errors)
            if spec.M > 0:
                xs = np.linspace(spec.M / grid_n, spec.M, grid_n)
                sig = dyn.sigma(xs)
                if np.any(sig <= 0.0):
                    xbad = xs[np.argmax(sig <= 0.0)]
                    errors.append(NonpositiveVolatility(
                        f"{name}: sigma(x) <= 0 at x={xbad:.6g}"))
                gap = dyn.mu(xs) - spec.r * xs
                if side > 0 and np.any(gap < -1e-12):
                    xbad = float(xs[np.argmin(gap)])
                    errors.append(DriftSandwichViolation(
                        f"pos: mu(x) < r*x at x={xbad:.6g}", x=xbad))
                if side < 0 and np.any(gap > 1e-12):
                    xbad = float(xs[np.argmax(gap)])
                    errors.append(DriftSandwichViolation(
                        f"neg: mu(x) > r*x at x={xbad:.6g}", x=xbad))

    if errors:
        raise ModelValidationError(errors)
    return spec
