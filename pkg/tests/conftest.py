import numpy as np
import pytest

from supres.buy import find_B
from supres.fundsol import build_pairs
from supres.model import General, Lognormal, ModelSpec, piecewise_constant, validate
from supres.sell import classify_and_solve

# Reference instance: band (1, 2), cap 8, r = 2%, lognormal in both regimes.
REF = dict(L=1.0, H=2.0, M=8.0, r=0.02,
           pos=Lognormal(0.04, np.sqrt(0.06)),
           neg=Lognormal(0.005, 0.1))


@pytest.fixture(scope="session")
def ref_model():
    return validate(ModelSpec(**REF))


@pytest.fixture(scope="session")
def ref_pairs(ref_model):
    return build_pairs(ref_model)


@pytest.fixture(scope="session")
def ref_sell(ref_model, ref_pairs):
    return classify_and_solve(ref_model, ref_pairs)


@pytest.fixture(scope="session")
def ref_buy(ref_sell):
    return find_B(ref_sell)


@pytest.fixture(scope="session")
def c2_model():
    # Nearly fair negative regime: waiting there is almost free, so the
    # boundary drops below L.
    return validate(ModelSpec(L=1.0, H=2.0, M=8.0, r=0.02,
                              pos=Lognormal(0.04, np.sqrt(0.06)),
                              neg=Lognormal(0.019, 0.1)))


@pytest.fixture(scope="session")
def c2_sell(c2_model):
    return classify_and_solve(c2_model)


@pytest.fixture(scope="session")
def c3_model():
    # Constant negative-regime coefficients keep the slope of the discounted
    # H-hit bounded away from zero near the absorbing origin, so stopping
    # early is never optimal.
    neg = General(mu_poly=piecewise_constant(-0.02, 1e-12, 10.0),
                  sigma_poly=piecewise_constant(1.0, 1e-12, 10.0))
    return validate(ModelSpec(L=1.0, H=2.0, M=3.0, r=0.02,
                              pos=Lognormal(0.05, np.sqrt(0.05)), neg=neg))


@pytest.fixture(scope="session")
def c3_sell(c3_model):
    return classify_and_solve(c3_model)
