from .engine import (
    MC_THREADS_ENV,
    MartingaleDiagnostic,
    McConfig,
    McEstimate,
    PathState,
    interval_exit,
    martingale_check,
    run_rule,
    step,
    sweep_stop_loss,
)

__all__ = [
    "MC_THREADS_ENV",
    "MartingaleDiagnostic",
    "McConfig",
    "McEstimate",
    "PathState",
    "interval_exit",
    "martingale_check",
    "run_rule",
    "step",
    "sweep_stop_loss",
]
