import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from supres.errors import (
    DomainError,
    DriftSandwichViolation,
    LevelOrderViolation,
    ModelValidationError,
    NonpositiveRate,
    NonpositiveVolatility,
)
from supres.model import (
    General,
    Lognormal,
    ModelSpec,
    Regime,
    coefficients,
    piecewise_constant,
    piecewise_linear,
    validate,
)


def _lognormal_model(**kw):
    base = dict(L=1.0, H=2.0, M=8.0, r=0.02,
                pos=Lognormal(0.04, np.sqrt(0.06)),
                neg=Lognormal(0.005, 0.1))
    base.update(kw)
    return ModelSpec(**base)


def _errors_of(exc_info):
    return [type(e) for e in exc_info.value.errors]


class TestValidate:
    def test_reference_instance_is_valid(self, ref_model):
        assert ref_model.L == 1.0 and ref_model.M == 8.0

    def test_level_order_violation(self):
        with pytest.raises(ModelValidationError) as ei:
            validate(_lognormal_model(L=2.0, H=1.0))
        assert LevelOrderViolation in _errors_of(ei)

    def test_h_above_m_rejected(self):
        with pytest.raises(ModelValidationError) as ei:
            validate(_lognormal_model(H=9.0))
        assert LevelOrderViolation in _errors_of(ei)

    def test_h_equal_m_allowed(self):
        validate(_lognormal_model(H=8.0))

    def test_drift_sandwich_violation_negative_side(self):
        with pytest.raises(ModelValidationError) as ei:
            validate(_lognormal_model(neg=Lognormal(0.05, 0.1)))
        assert DriftSandwichViolation in _errors_of(ei)

    def test_drift_sandwich_violation_positive_side(self):
        with pytest.raises(ModelValidationError) as ei:
            validate(_lognormal_model(pos=Lognormal(0.01, 0.2)))
        assert DriftSandwichViolation in _errors_of(ei)

    def test_nonpositive_volatility(self):
        with pytest.raises(ModelValidationError) as ei:
            validate(_lognormal_model(pos=Lognormal(0.04, 0.0)))
        assert NonpositiveVolatility in _errors_of(ei)

    def test_nonpositive_rate(self):
        with pytest.raises(ModelValidationError) as ei:
            validate(_lognormal_model(r=0.0))
        assert NonpositiveRate in _errors_of(ei)

    def test_all_violations_reported_together(self):
        with pytest.raises(ModelValidationError) as ei:
            validate(_lognormal_model(L=3.0, H=1.0, r=-1.0,
                                      neg=Lognormal(0.5, -0.1)))
        kinds = set(_errors_of(ei))
        assert {LevelOrderViolation, NonpositiveRate, NonpositiveVolatility} <= kinds

    def test_general_drift_violation_reports_location(self):
        # Drift dips below r*x around x = 4 on the positive side.
        mu = piecewise_linear([1e-6, 4.0, 8.0], [0.1, 0.05, 0.9])
        sg = piecewise_constant(0.5, 1e-6, 8.0)
        with pytest.raises(ModelValidationError) as ei:
            validate(_lognormal_model(pos=General(mu, sg)))
        bad = [e for e in ei.value.errors if isinstance(e, DriftSandwichViolation)]
        assert bad and bad[0].x is not None and 2.0 < bad[0].x < 8.0

    def test_general_valid_instance(self, c3_model):
        assert isinstance(c3_model.neg, General)

    def test_discontinuous_general_coefficients_rejected(self):
        import scipy.interpolate as si
        mu = si.PPoly(np.array([[0.0, 0.0], [0.1, 0.5]]), np.array([1e-6, 1.0, 8.0]),
                      extrapolate=True)
        sg = piecewise_constant(0.5, 1e-6, 8.0)
        with pytest.raises(ModelValidationError):
            validate(_lognormal_model(pos=General(mu, sg)))

    def test_pointwise_sandwich_on_grid(self, ref_model):
        xs = np.linspace(1e-3, ref_model.M, 2000)
        assert np.all(ref_model.neg.mu(xs) - ref_model.r * xs <= 1e-15)
        assert np.all(ref_model.pos.mu(xs) - ref_model.r * xs >= -1e-15)


class TestCoefficients:
    def test_lognormal_drift(self, ref_model):
        mu, sig = coefficients(ref_model, "+", 2.0)
        assert mu == pytest.approx(0.08, abs=0)

    def test_lognormal_volatility_at_one(self):
        m = _lognormal_model(pos=Lognormal(0.04, 0.3))
        _, sig = coefficients(m, Regime.POSITIVE, 1.0)
        assert sig == 0.3

    def test_piecewise_linear_interpolation(self):
        mu = piecewise_linear([1.0, 3.0], [0.01, 0.03])
        sg = piecewise_constant(0.5, 1e-6, 8.0)
        m = _lognormal_model(pos=General(mu, sg))
        drift, _ = coefficients(m, "+", 2.0)
        assert drift == pytest.approx(0.02, abs=1e-15)

    def test_domain_error_for_nonpositive_price(self, ref_model):
        with pytest.raises(DomainError):
            coefficients(ref_model, "+", 0.0)
        with pytest.raises(DomainError):
            coefficients(ref_model, "-", -1.0)

    def test_deterministic_and_pure(self, ref_model):
        a = coefficients(ref_model, "-", 1.2345)
        b = coefficients(ref_model, "-", 1.2345)
        assert a == b

    def test_vectorized_evaluation(self, ref_model):
        xs = np.array([1.0, 2.0, 4.0])
        mu, sig = coefficients(ref_model, "+", xs)
        assert np.array_equal(mu, 0.04 * xs)


class TestRegime:
    def test_serialization_tokens(self):
        assert str(Regime.POSITIVE) == "+" and str(Regime.NEGATIVE) == "-"
        assert Regime.parse("+") is Regime.POSITIVE
        assert Regime.parse("-") is Regime.NEGATIVE
        assert len(Regime) == 2

    def test_parse_rejects_garbage(self):
        with pytest.raises(DomainError):
            Regime.parse("x")


@settings(max_examples=60, deadline=None)
@given(mu_m=st.floats(0.0, 0.1), mu_p=st.floats(0.0, 0.1),
       r=st.floats(0.001, 0.1))
def test_lognormal_sandwich_is_the_validation_rule(mu_m, mu_p, r):
    spec = ModelSpec(L=1.0, H=2.0, M=4.0, r=r,
                     pos=Lognormal(mu_p, 0.2), neg=Lognormal(mu_m, 0.2))
    should_pass = mu_m <= r <= mu_p
    if should_pass:
        validate(spec)
    else:
        with pytest.raises(ModelValidationError):
            validate(spec)
