"""Exception types shared across the solver and simulator."""

from __future__ import annotations


class SupresError(Exception):
    """Base class for all package errors."""


class ModelError(SupresError):
    """Base class for model-specification problems."""


class LevelOrderViolation(ModelError):
    """The switching/cap levels are not ordered 0 < L < H <= M."""


class DriftSandwichViolation(ModelError):
    """mu_neg(x) <= r*x <= mu_pos(x) fails somewhere on the check grid."""

    def __init__(self, message: str, x: float | None = None):
        super().__init__(message)
        self.x = x


class NonpositiveVolatility(ModelError):
    """sigma(x) <= 0 somewhere it must be strictly positive."""


class NonpositiveRate(ModelError):
    """The discount rate must be strictly positive."""


class ModelValidationError(ModelError):
    """Aggregate of every violation found by validate()."""

    def __init__(self, errors: list[ModelError]):
        self.errors = errors
        super().__init__("; ".join(str(e) for e in errors))


class DomainError(SupresError):
    """A (price, regime) query lies outside the reachable domain."""


class SingularNormalization(SupresError):
    """The 2x2 anchor system for a closed-form pair is singular."""


class IntegrationFailure(SupresError):
    """The ODE integrator could not meet its tolerance."""


class NonMonotoneSolution(SupresError):
    """A normalized fundamental-solution member failed its monotonicity check."""


class SingularSystem(SupresError):
    """The 4x4 boundary-condition system is numerically singular."""

    def __init__(self, message: str, cond: float | None = None):
        super().__init__(message)
        self.cond = cond


class DegenerateDenominator(SupresError):
    """1 - phi_minus(L)*delta(H) <= 0: the renewal identity is ill-posed."""


class NumericalError(SupresError):
    """Generic numerical failure in a solver step."""


class ConfigError(SupresError):
    """A run configuration is malformed or inconsistent."""


class MultipleRootsWarning(UserWarning):
    """More than one pasting bracket was found; the largest root was kept."""
