"""Purchase timing: threshold B from the gain/psi ratio and the buy value u.

The gain of buying at (x, f) is g(x, f) = v(x, f) - x, with v the solved sell
value.  Buying is only ever optimal in the positive regime, at prices up to
the level B maximizing rho(x) = g(x, +)/psi(x) over [L, M], where psi is the
decreasing solution of the positive-regime equation that vanishes at +inf
(so psi(x)/psi(B) is the discounted first-passage factor from x down to B
for the unrestricted positive-regime diffusion).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .fundsol import psi_infinity
from .model import Regime
from .sell import SellSolution

# Far-field anchor for the numeric psi construction, as a multiple of M.
X_FAR_FACTOR = 50.0


@dataclass(frozen=True)
class BuyBelow:
    """Buy the first time the positive regime trades at or below the threshold."""

    threshold: float


@dataclass(frozen=True)
class BuySolution:
    """Threshold, ratio value at the threshold, and the evaluable buy value."""

    B: float
    kappa: float
    sell: SellSolution
    psi: object
    rho_grid: np.ndarray
    rho_samples: np.ndarray

    def _u_plus(self, xv: np.ndarray) -> np.ndarray:
        g = np.asarray(self.sell.value(xv, Regime.POSITIVE), dtype=float) - xv
        cont = self.psi(xv) / self.psi(self.B) * self._gain_at_B()
        return np.where(xv <= self.B, g, cont)

    def _gain_at_B(self) -> float:
        return float(self.sell.value(self.B, Regime.POSITIVE)) - self.B

    def value(self, x, f):
        """u(x, f) on the reachable domain."""
        f = Regime.parse(f)
        xv = np.asarray(x, dtype=float)
        if f is Regime.POSITIVE:
            if np.any(xv < self.sell.model.L - 1e-12) or np.any(xv > self.sell.model.M + 1e-12):
                raise DomainError("positive regime lives on [L, M]")
            out = self._u_plus(xv)
        else:
            if np.any(xv <= 0.0) or np.any(xv > self.sell.model.H + 1e-12):
                raise DomainError("negative regime lives on (0, H]")
            out = self.sell.pairs.neg.phi(xv) * self.u_at_H
        return float(out) if np.isscalar(x) or xv.ndim == 0 else out

    def dvalue(self, x, f):
        f = Regime.parse(f)
        xv = np.asarray(x, dtype=float)
        if f is Regime.POSITIVE:
            g_d = np.asarray(self.sell.dvalue(xv, Regime.POSITIVE), dtype=float) - 1.0
            cont_d = self.psi.deriv(xv) / self.psi(self.B) * self._gain_at_B()
            out = np.where(xv <= self.B, g_d, cont_d)
        else:
            out = self.sell.pairs.neg.phi.deriv(xv) * self.u_at_H
        return float(out) if np.isscalar(x) or xv.ndim == 0 else out

    @property
    def u_at_H(self) -> float:
        return float(self._u_plus(np.asarray(self.sell.model.H, dtype=float)))

    @property
    def rule(self) -> BuyBelow:
        return BuyBelow(self.B)


def gain(sell_sol: SellSolution, x, f):
    """g(x, f) = v(x, f) - x; nonnegative on the reachable domain."""
    xv = np.asarray(x, dtype=float)
    out = np.asarray(sell_sol.value(xv, f), dtype=float) - xv
    return float(out) if np.isscalar(x) or xv.ndim == 0 else out


def _golden_max(fn, lo: float, hi: float, tol: float) -> float:
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def find_B(sell_sol: SellSolution, grid_n: int = 400,
           x_far: float | None = None) -> BuySolution:
    """Locate the buying threshold as the argmax of g(., +)/psi on [L, M].

    Grid argmax (leftmost on ties) refined by golden-section search when the
    maximum is interior; an argmax at the left endpoint means the ratio is
    monotone decreasing and B = L.
    """
    model = sell_sol.model
    if x_far is None:
        x_far = X_FAR_FACTOR * model.M
    psi = psi_infinity(model.pos, model.r, model.L, x_far=x_far)

    def rho(x):
        xv = np.asarray(x, dtype=float)
        g = np.asarray(sell_sol.value(xv, Regime.POSITIVE), dtype=float) - xv
        return g / psi(xv)

    xs = np.linspace(model.L, model.M, grid_n)
    rs = rho(xs)
    peak = float(np.max(rs))
    # Leftmost argmax with a float-noise tolerance, so an indifferent (flat)
    # ratio resolves to the earliest purchase threshold.
    i = int(np.argmax(rs >= peak - 1e-12 * max(abs(peak), 1.0)))
    if i == 0:
        B = model.L
    else:
        lo = xs[max(i - 1, 0)]
        hi = xs[min(i + 1, grid_n - 1)]
        B = _golden_max(lambda x: float(rho(x)), lo, hi,
                        tol=1e-11 * (model.M - model.L))
    kappa = float(rho(B))
    return BuySolution(B=B, kappa=kappa, sell=sell_sol, psi=psi,
                       rho_grid=xs, rho_samples=np.asarray(rs, dtype=float))


def buy_value(buy_sol: BuySolution, x, f):
    return buy_sol.value(x, f)
