"""Optimal sell/buy timing under a two-regime support/resistance price model."""

from .buy import BuyBelow, BuySolution, buy_value, find_B, gain
from .fundsol import (
    FundamentalPair,
    LognormalRoots,
    build_pairs,
    hit_functionals,
    lognormal_roots,
    pair_closed_form,
    pair_numeric,
    psi_infinity,
)
from .mc import (
    McConfig,
    McEstimate,
    interval_exit,
    martingale_check,
    run_rule,
    sweep_stop_loss,
)
from .model import (
    General,
    Lognormal,
    ModelSpec,
    Regime,
    coefficients,
    piecewise_constant,
    piecewise_linear,
    proportional_poly,
    validate,
)
from .sell import (
    CaseTag,
    SellAtCap,
    SellAtStopLoss,
    SellImmediately,
    SellSolution,
    classify_and_solve,
    pasting_residual,
    rule_value,
    value_sell,
)

__version__ = "0.1.0"

__all__ = [
    "BuyBelow", "BuySolution", "buy_value", "find_B", "gain",
    "FundamentalPair", "LognormalRoots", "build_pairs", "hit_functionals",
    "lognormal_roots", "pair_closed_form", "pair_numeric", "psi_infinity",
    "McConfig", "McEstimate", "interval_exit", "martingale_check",
    "run_rule", "sweep_stop_loss",
    "General", "Lognormal", "ModelSpec", "Regime", "coefficients",
    "piecewise_constant", "piecewise_linear", "proportional_poly", "validate",
    "CaseTag", "SellAtCap", "SellAtStopLoss", "SellImmediately",
    "SellSolution", "classify_and_solve", "pasting_residual", "rule_value",
    "value_sell",
    "__version__",
]
