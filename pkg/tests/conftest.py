import pytest
from mpmath import mp, mpf

from opuctau.precision import PrecisionContext
from opuctau.weights import WeightParams


@pytest.fixture(autouse=True)
def _base_precision():
    old = mp.prec
    mp.prec = 320
    yield
    mp.prec = old


@pytest.fixture()
def ctx():
    """Standard medium-precision context for unit tests."""
    return PrecisionContext(bits=192, tol=1e-35)


@pytest.fixture()
def ctx_fast():
    return PrecisionContext(bits=128, tol=1e-18)


@pytest.fixture()
def generic_params():
    """The generic regular draw used across the route tests."""
    with mp.workprec(400):
        return WeightParams.from_exponents(
            mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, mpf(2) / 5, mp.expjpi(mpf(1) / 3)
        )


@pytest.fixture()
def generic_params_xi0():
    with mp.workprec(400):
        return WeightParams.from_exponents(
            mpf(3) / 10, mpf(2) / 10, mpf(1) / 10, 0, mp.expjpi(mpf(1) / 3)
        )
