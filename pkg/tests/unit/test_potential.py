"""
Unit tests for the γ kernel, Cauchy transforms and potentials.
"""

import math

import numpy as np
import pytest

from critspec.core.exceptions import KernelPoleError, PreconditionError
from critspec.models.domain import MMeasureVerdict
from critspec.models.schemas import GridSpec
from critspec.services.measures import AtomicMeasure
from critspec.services.potential import (
    GammaKernel,
    cauchy_transform,
    contour_mass_recovery,
    gamma,
    gamma_l1_estimate,
    gamma_or_zero,
    m_measure_test,
    potential_l1_norm,
    potential_of_measure,
    sample_field,
)


class TestGamma:
    def test_partial_fractions_match_closed_form(self, rng):
        a = 2.0 - 0.5j
        z = rng.normal(size=50) * 3 + 1j * rng.normal(size=50) * 3
        kernel = GammaKernel(a)
        assert np.allclose(gamma(a, z), kernel.closed_form(z), rtol=1e-10, atol=0)

    def test_residues(self):
        kernel = GammaKernel(3j)
        assert kernel.poles == (0j, 1 + 0j, 3j)
        assert kernel.residues == (3j - 1, -3j, 1 + 0j)

    def test_degenerate_parameters(self):
        with pytest.raises(PreconditionError):
            gamma(0, 0.5j)
        with pytest.raises(PreconditionError):
            GammaKernel(1)
        assert gamma_or_zero(1, np.array([2j, 3])).tolist() == [0, 0]

    def test_pole_exclusion(self):
        with pytest.raises(KernelPoleError):
            gamma(2.0, 1e-12)
        with pytest.raises(KernelPoleError):
            gamma(2.0, 1.0 + 1e-3, exclusion_radius=1e-2)

    def test_l1_estimate_converges(self):
        estimate = gamma_l1_estimate(2.0 + 1.0j, tolerance=1e-2)
        assert estimate.estimate > 0
        assert estimate.refinement_change <= 1e-2
        assert estimate.ratio is not None

    def test_l1_grows_like_a_log_a(self):
        estimate = gamma_l1_estimate(100.0, tolerance=1e-2)
        assert estimate.reference == pytest.approx(100 * math.log(100))
        assert 2 < estimate.ratio < 30

    def test_l1_ratio_is_stable_across_parameters(self):
        ratios = [gamma_l1_estimate(a, tolerance=1e-2).ratio for a in (5.0, 10.0, 50.0)]
        assert max(ratios) / min(ratios) <= 3

    def test_l1_on_unit_circle_has_no_reference(self):
        estimate = gamma_l1_estimate(-1.0, tolerance=1e-2)
        assert estimate.reference is None


class TestCauchyTransform:
    def test_single_atom(self):
        mu = AtomicMeasure([2], [3])
        assert cauchy_transform(mu, 0) == pytest.approx(1.5)
        assert cauchy_transform(AtomicMeasure.zero(), np.zeros(3)).tolist() == [0, 0, 0]

    def test_evaluation_at_an_atom(self):
        with pytest.raises(KernelPoleError):
            cauchy_transform(AtomicMeasure([2], [3]), 2.0)

    def test_contour_recovers_weights(self):
        mu = AtomicMeasure([0.5 + 0.5j, -1, 2], [1, 2j, -0.5])
        for i, w in enumerate(mu.weights):
            assert contour_mass_recovery(mu, i, 0.3) == pytest.approx(w, abs=1e-10)

    def test_contour_must_isolate_atom(self):
        mu = AtomicMeasure([0, 0.1], [1, 1])
        with pytest.raises(PreconditionError):
            contour_mass_recovery(mu, 0, 0.5)


class TestPotential:
    def test_potential_is_weighted_kernel_sum(self):
        nu = AtomicMeasure([2, 3j], [1, -0.5])
        z = 0.3 + 0.7j
        expected = gamma(2, z) - 0.5 * gamma(3j, z)
        assert potential_of_measure(nu, z) == pytest.approx(expected, rel=1e-12)

    def test_atoms_at_kernel_poles_rejected(self):
        with pytest.raises(PreconditionError):
            potential_of_measure(AtomicMeasure([1, 2], [1, 1]), 0.5j)

    def test_l1_norm_on_grid(self):
        nu = AtomicMeasure([2], [1])
        grid = GridSpec.square(4, 48, 1e-3)
        norm = potential_l1_norm(nu, grid)
        assert math.isfinite(norm)
        assert norm > 0
        assert potential_l1_norm(nu.scaled(2), grid) == pytest.approx(2 * norm)

    def test_sample_field_masks_exclusions(self):
        grid = GridSpec(xmin=-1, xmax=1, ymin=-1, ymax=1, nx=2, ny=2, exclusion_radius=0.8)
        sample = sample_field(lambda z: z, grid, exclusions=[0.5 + 0.5j])
        assert sample.mask.sum() == 3
        assert sample.sup == pytest.approx(math.sqrt(0.5))
        assert len(sample.to_frame()) == 3


class TestMMeasure:
    def test_single_atom_is_detected(self):
        result = m_measure_test(AtomicMeasure([2], [1]))
        assert result.verdict == MMeasureVerdict.M_MEASURE
        assert result.samples == 128

    def test_cancellation_below_threshold(self):
        result = m_measure_test(AtomicMeasure([1, 1 + 1e-9], [1, -1]))
        assert result.verdict == MMeasureVerdict.NOT_DETECTED
        assert "never vanishes" in result.caveat

    def test_empty_measure(self):
        assert m_measure_test(AtomicMeasure.zero()).verdict == MMeasureVerdict.DEGENERATE
