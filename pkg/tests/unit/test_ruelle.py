"""
Unit tests for the Ruelle and Beltrami operators and the orbit identities.
"""

import math

import numpy as np
import pytest

from critspec.core.exceptions import BranchCollisionError, PreconditionError
from critspec.models.schemas import GridSpec
from critspec.services.potential import gamma
from critspec.services.ruelle import (
    CriticalData,
    KernelCombo,
    PreimageTree,
    abel_potential_check,
    admissible_for_identity,
    beltrami_apply,
    beltrami_duality_check,
    identity_check,
    identity_family,
    identity_samples,
    identity_test_map,
    l1_contraction_check,
    one_step_check,
    poincare_A,
    poincare_B,
    pushforward,
    resolvent_check,
    ruelle_apply,
    ruelle_apply_array,
    ruelle_power,
    search_identity_map,
    voronoi_identity_check,
)
from critspec.services.summability import identity_weights, weight_family


def smooth(y):
    return np.exp(0.3 * y) / (y - 5.0)


class TestRuelleOperator:
    def test_constant_function_under_square_map(self, square_map):
        """For z², R_*(1)(z) = 2·1/(2y)² summed over y = ±√z, i.e. 1/(2z)."""
        one = lambda y: np.ones_like(y)  # noqa: E731
        assert ruelle_apply(square_map, one, 2.0) == pytest.approx(0.25)
        assert ruelle_apply(square_map, one, 1j) == pytest.approx(1 / 2j)

    @pytest.mark.parametrize("m,n", [(1, 1), (2, 3), (3, 3)])
    def test_semigroup(self, square_map, m, n):
        z = 0.7 + 0.3j
        direct = ruelle_power(square_map, smooth, z, m + n)
        composed = ruelle_power(square_map, pushforward(square_map, smooth, n), z, m)
        assert composed == pytest.approx(direct, rel=1e-10)

    def test_power_zero_is_evaluation(self, square_map):
        assert ruelle_power(square_map, smooth, 0.5, 0) == pytest.approx(smooth(0.5))
        with pytest.raises(PreconditionError):
            ruelle_power(square_map, smooth, 0.5, -1)

    def test_tree_depth_is_capped(self, square_map):
        with pytest.raises(PreconditionError):
            PreimageTree.build(square_map, 2.0, 9)

    def test_branch_collision_at_critical_value(self, chebyshev):
        with pytest.raises(BranchCollisionError):
            ruelle_apply(chebyshev, smooth, -2.0)

    def test_batched_application_matches_tree(self, test_map, rng):
        zs = 2 * rng.normal(size=8) + 2j * rng.normal(size=8)
        batched = ruelle_apply_array(test_map, smooth, zs)
        single = np.array([ruelle_apply(test_map, smooth, z) for z in zs])
        assert np.allclose(batched, single, rtol=1e-9, atol=0)


class TestKernelCombo:
    def test_merging_and_trivial_parameters(self):
        combo = KernelCombo([(2, 1), (2, 1), (0, 5), (1, 3)])
        assert len(combo) == 1
        assert combo.terms == [(2 + 0j, 2 + 0j)]
        assert combo.evaluate(0.5j) == pytest.approx(2 * gamma(2, 0.5j))

    def test_one_step_expansion(self, test_map):
        zs = identity_samples(test_map, 6, seed=1)
        report = one_step_check(test_map, 2.0 + 1.0j, zs)
        assert report.max_rel_residual < 1e-8

    def test_pushforward_keeps_critical_value_terms(self, test_map):
        crit = CriticalData.of(test_map)
        pushed = KernelCombo([(2.0 + 1.0j, 1.0)]).pushforward(test_map, crit)
        params = {a for a, _ in pushed.terms}
        assert complex(test_map.value(2.0 + 1.0j)) in params
        assert all(complex(v) in params for v in crit.values)


class TestCriticalData:
    def test_test_map_critical_points(self, test_map):
        crit = CriticalData.of(test_map)
        assert crit.points == pytest.approx((-3 - math.sqrt(6), -3 + math.sqrt(6)))
        assert crit.values[1] == pytest.approx(test_map.value(crit.points[1]))

    def test_admissibility(self, test_map, chebyshev):
        assert admissible_for_identity(test_map).ok
        verdict = admissible_for_identity(chebyshev)
        assert not verdict.ok
        assert "map fixes 0, 1 and ∞" in verdict.violations

    def test_family_contains_test_map(self):
        assert identity_family(1.0) == identity_test_map()

    def test_seeded_search(self):
        t, R = search_identity_map(seed=4)
        assert 0.25 <= t <= 4.0
        assert admissible_for_identity(R).ok
        assert search_identity_map(seed=4)[0] == t


class TestPoincareSeries:
    def test_a_series_matches_direct_sum(self, test_map):
        a, z, lam, N = 2.0 + 1.0j, 0.3 - 0.4j, 0.5, 10
        value, truncation = poincare_A(test_map, a, z, lam, N)
        expected, p, d = 0j, a, 1.0 + 0j
        for n in range(N + 1):
            expected += lam ** n * gamma(p, z) / d
            d *= test_map.derivative(p)
            p = test_map.value(p)
        assert value == pytest.approx(expected, rel=1e-12)
        assert truncation.N == N
        assert len(truncation.term_log10) == N + 1

    def test_b_series_matches_ruelle_powers(self, test_map):
        a, z, lam, N = 2.0 + 1.0j, 0.3 - 0.4j, 0.4, 3
        value, _ = poincare_B(test_map, a, z, lam, N)
        kernel = lambda y: gamma(a, y)  # noqa: E731
        expected = sum(lam ** n * ruelle_power(test_map, kernel, z, n) for n in range(N + 1))
        assert value == pytest.approx(expected, rel=1e-12)

    def test_b_series_rejects_lambda_outside_disk(self, test_map):
        with pytest.raises(PreconditionError):
            poincare_B(test_map, 2.0, 0.3j, 1.0, 2)

    def test_a_series_rejects_lambda_beyond_orbit_radius(self, test_map):
        # the orbit of 0.1 is attracted to 0 with multiplier 2/3, so σ(a) has radius 2/3
        with pytest.raises(PreconditionError) as info:
            poincare_A(test_map, 0.1, 0.3 - 0.4j, 0.9, 10)
        assert info.value.details["radius"] == pytest.approx(2 / 3, rel=0.05)
        value, _ = poincare_A(test_map, 0.1, 0.3 - 0.4j, 0.5, 10)
        assert np.isfinite(value)


class TestIdentity:
    @pytest.fixture
    def c(self, test_map):
        return CriticalData.of(test_map).points[1]

    @pytest.fixture
    def zs(self, test_map):
        return identity_samples(test_map, 10, seed=0)

    def test_order_matched_residual(self, test_map, c, zs):
        report = identity_check(test_map, c, 0.2, zs, N=4)
        assert len(report.samples) == 10
        assert report.max_order_matched_residual <= 1e-8

    def test_truncation_residual_shrinks_with_order(self, test_map, c, zs):
        low = identity_check(test_map, c, 0.2, zs, N=4)
        high = identity_check(test_map, c, 0.2, zs, N=5)
        assert high.max_rel_residual < low.max_rel_residual

    def test_identity_weights_reproduce_abel_identity(self, test_map, c, zs):
        abel = identity_check(test_map, c, 0.2, zs, N=4)
        voronoi = voronoi_identity_check(test_map, c, identity_weights(), 0.2, zs, N=4)
        for u, v in zip(abel.samples, voronoi.samples):
            assert abs(u.rel_residual - v.rel_residual) <= 1e-12

    def test_preconditions(self, test_map, c, zs):
        with pytest.raises(PreconditionError):
            identity_check(test_map, c, 0.2, zs, N=7)
        with pytest.raises(PreconditionError):
            identity_check(test_map, c, 0.9, zs, N=4)
        with pytest.raises(PreconditionError):
            identity_check(test_map, 0.5, 0.2, zs, N=4)

    def test_voronoi_identity_needs_convergent_weights(self, test_map, c, zs):
        with pytest.raises(PreconditionError) as info:
            voronoi_identity_check(test_map, c, weight_family("geometric", 1, r=6.0), 0.2, zs, N=4)
        assert "q(λ) converges" in info.value.message

    def test_abel_measure_potential(self, test_map, c):
        lhs, rhs, rel = abel_potential_check(test_map, c, 0.3, 0.5 + 1.5j, N=6)
        assert rel <= 1e-10
        assert lhs == pytest.approx(rhs, rel=1e-10)

    def test_report_json(self, test_map, c, zs):
        data = identity_check(test_map, c, 0.2, zs[:2], N=3).to_json()
        assert data["N"] == 3
        assert len(data["samples"]) == 2
        assert "order_matched_residual" in data["samples"][0]


class TestResolventAndContraction:
    def test_resolvent_residual_within_envelope(self, test_map):
        report = resolvent_check(test_map, 2.0 + 1.0j, 0.3 - 0.4j, 0.3, 3)
        assert report.ok

    def test_l1_contraction(self, test_map):
        report = l1_contraction_check(test_map, 2.0 + 1.0j, grid=GridSpec.square(10, 200))
        assert report.norm > 0
        assert report.ok


class TestBeltrami:
    def test_unimodular_under_constant_coefficient(self, square_map):
        sample = beltrami_apply(square_map, lambda zs: np.ones_like(zs), GridSpec.square(1, 4))
        assert np.allclose(np.abs(sample.values[sample.mask]), 1.0)

    def test_grid_through_critical_point_rejected(self, square_map):
        with pytest.raises(PreconditionError):
            beltrami_apply(square_map, lambda zs: np.ones_like(zs), GridSpec.square(1, 3))

    def test_duality_with_ruelle_operator(self, square_map):
        """⟨Bel(μ), φ⟩ = ⟨μ, R_*φ⟩ for μ the indicator of the unit disk, whose preimage under z² is itself."""
        disk = lambda w: (np.abs(w) < 1).astype(float)  # noqa: E731
        report = beltrami_duality_check(square_map, smooth, disk, GridSpec.square(1.5, 200))
        assert report.scale > 0
        assert report.relative_gap < 0.05
