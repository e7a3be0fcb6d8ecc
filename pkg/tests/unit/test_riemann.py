"""
Unit tests for rational maps on the sphere and Moebius normalization.
"""

import math

import numpy as np
import pytest

from critspec.core.exceptions import InvalidMapError, NormalizationError, PoleError
from critspec.models.domain import INFINITY, SpherePoint, spherical_distance
from critspec.services.riemann import (
    MoebiusTransform,
    RationalMap,
    is_normalized,
    moebius_normalize,
    select_critical_point,
)


class TestRationalMap:
    """Evaluation and special points."""

    def test_evaluate_finite_and_infinity(self, chebyshev):
        assert chebyshev.evaluate(0).value == -2
        assert chebyshev.evaluate(INFINITY).infinite
        assert chebyshev.degree == 2
        assert chebyshev.is_polynomial

    def test_pole_maps_to_infinity(self, test_map):
        assert test_map.evaluate(-3).infinite
        assert test_map.evaluate(INFINITY).infinite
        with pytest.raises(PoleError):
            test_map.derivative(-3)

    def test_common_root_rejected(self):
        with pytest.raises(InvalidMapError):
            RationalMap([0, 1], [0, 1, 1])

    def test_constant_map_rejected(self):
        with pytest.raises(InvalidMapError):
            RationalMap([3.0], [1.0])

    def test_coefficient_pairs_accepted(self):
        R = RationalMap([[-2.0, 0.0], 0, [1.0, 0.0]])
        assert R == RationalMap.polynomial([-2, 0, 1])
        assert RationalMap.from_json(R.to_json()) == R

    def test_derivatives(self, test_map):
        z = 0.3 + 0.2j
        h = 1e-6
        numeric = (test_map.value(z + h) - test_map.value(z - h)) / (2 * h)
        assert test_map.derivative(z) == pytest.approx(numeric, rel=1e-8)
        numeric2 = (test_map.derivative(z + h) - test_map.derivative(z - h)) / (2 * h)
        assert test_map.second_derivative(z) == pytest.approx(numeric2, rel=1e-6)

    def test_critical_points_of_test_map(self, test_map):
        crit = sorted(c.point.value.real for c in test_map.finite_critical_points())
        assert crit[0] == pytest.approx(-3 - math.sqrt(6), abs=1e-10)
        assert crit[1] == pytest.approx(-3 + math.sqrt(6), abs=1e-10)
        assert all(c.is_simple for c in test_map.critical_points())

    def test_polynomial_critical_point_at_infinity(self, chebyshev):
        points = chebyshev.critical_points()
        assert any(c.point.infinite for c in points)
        assert any(not c.point.infinite and abs(c.point.value) < 1e-12 for c in points)

    def test_fixed_points_with_multipliers(self, chebyshev):
        fixed = {(fp.point.infinite, round(fp.point.value.real, 9)): fp for fp in chebyshev.fixed_points()}
        assert (False, 2.0) in fixed and (False, -1.0) in fixed and (True, 0.0) in fixed
        assert fixed[(False, 2.0)].multiplier == pytest.approx(4)
        assert fixed[(False, -1.0)].multiplier == pytest.approx(-2)
        assert fixed[(True, 0.0)].multiplier == 0

    def test_multiplier_at_infinity_for_affine_leading_term(self, test_map):
        # R(z) ≈ 2z near ∞
        assert test_map.multiplier(INFINITY) == pytest.approx(0.5)

    def test_preimages(self, chebyshev):
        values = sorted(p.point.value.real for p in chebyshev.preimages(2))
        assert values == pytest.approx([-2, 2])
        batch = chebyshev.preimage_array(np.array([2.0, -2.0]))
        assert np.sort(batch[0].real) == pytest.approx([-2, 2])
        assert np.allclose(np.abs(batch[1]), 0, atol=1e-7)

    def test_vectorized_evaluation_matches_scalar(self, test_map, rng):
        z = rng.normal(size=8) + 1j * rng.normal(size=8)
        expected = [test_map.value(x) for x in z]
        assert np.allclose(test_map.values(z), expected, rtol=1e-14)


class TestMoebius:
    """Conjugation to a map fixing 0, 1 and ∞."""

    def test_from_triple_sends_points_to_0_1_inf(self):
        M = MoebiusTransform.from_triple(2, -1, 5j)
        assert abs(M.apply(2).value) < 1e-12
        assert abs(M.apply(-1).value - 1) < 1e-12
        assert M.apply(5j).infinite

    def test_inverse_round_trip(self):
        M = MoebiusTransform.from_triple(1 + 1j, -2, INFINITY)
        z = 0.7 - 0.4j
        assert M.inverse().apply(M.apply(z)).value == pytest.approx(z, abs=1e-12)

    def test_normalize_chebyshev(self, chebyshev):
        R, M = moebius_normalize(chebyshev)
        assert is_normalized(R)
        assert R.degree == 2
        # conjugation preserves the multipliers 4, −2 and 0
        multipliers = sorted(abs(fp.multiplier) for fp in R.fixed_points())
        assert multipliers == pytest.approx([0, 2, 4], abs=1e-6)
        assert not M.is_identity()

    def test_already_normalized_map_is_unchanged(self, test_map):
        R, M = moebius_normalize(test_map, [0, 1, INFINITY])
        assert R == test_map
        assert M.is_identity()

    def test_non_fixed_point_rejected(self, chebyshev):
        with pytest.raises(NormalizationError):
            moebius_normalize(chebyshev, [0, 2, INFINITY])

    def test_spherical_distance(self):
        assert spherical_distance(0, INFINITY) == pytest.approx(2)
        assert spherical_distance(SpherePoint(1), SpherePoint(1)) == 0


def test_select_critical_point(test_map):
    c = select_critical_point(test_map, index=1)
    assert c.value.real == pytest.approx(-3 + math.sqrt(6), abs=1e-10)
    nearest = select_critical_point(test_map, value=complex(-3 - math.sqrt(6)))
    assert nearest.value.real < -5
    with pytest.raises(InvalidMapError):
        select_critical_point(test_map, index=5)
    with pytest.raises(InvalidMapError):
        select_critical_point(test_map, value=0.5)
