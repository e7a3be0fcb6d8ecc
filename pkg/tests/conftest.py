"""Test configuration and fixtures."""

import numpy as np
import pytest

from critspec.core.config import Thresholds
from critspec.services.riemann import RationalMap
from critspec.services.ruelle import identity_test_map


@pytest.fixture
def chebyshev() -> RationalMap:
    """z² − 2, whose Julia set is [−2, 2] and whose critical orbit is 0 → −2 → 2 → 2."""
    return RationalMap.polynomial([-2, 0, 1])


@pytest.fixture
def square_map() -> RationalMap:
    """z², with degenerate critical point 0."""
    return RationalMap.polynomial([0, 0, 1])


@pytest.fixture
def cauliflower() -> RationalMap:
    """z² + 1/4, with a parabolic fixed point at 1/2."""
    return RationalMap.polynomial([0.25, 0, 1])


@pytest.fixture
def hyperbolic() -> RationalMap:
    """z² − 0.1, whose critical point is attracted to a fixed point."""
    return RationalMap.polynomial([-0.1, 0, 1])


@pytest.fixture
def test_map() -> RationalMap:
    """2z(z+1)/(z+3): fixes 0, 1 and ∞."""
    return identity_test_map()


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture
def thresholds() -> Thresholds:
    return Thresholds()
