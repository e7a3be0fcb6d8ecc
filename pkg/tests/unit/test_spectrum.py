"""
Unit tests for critical orbits, the spectrum and its estimators.
"""

import math

import numpy as np
import pytest

from critspec.core.exceptions import PreconditionError
from critspec.models.domain import INFINITY, PrecisionConfig, TrichotomyCase
from critspec.services.spectrum import (
    Spectrum,
    SpectrumSource,
    iterate_orbit,
    lyapunov_estimate,
    o_n_proxy,
    oscillation_stats,
    partial_sums_and_barycenters,
    postcritical_sample,
    radius_of_convergence,
    spectrum,
    trichotomy_classify,
)


class TestOrbit:
    def test_eventually_periodic_orbit(self, chebyshev):
        """−2 → 2 → 2 → …: preperiod 1, period 1, replicated past the repeat."""
        orbit = iterate_orbit(chebyshev, -2, 5)
        assert orbit.points.tolist() == [-2, 2, 2, 2, 2, 2]
        assert (orbit.preperiod, orbit.period) == (1, 1)
        assert np.exp(orbit.log_moduli) == pytest.approx([4.0] * 5)

    def test_escaping_orbit_is_flagged(self, square_map):
        orbit = iterate_orbit(square_map, 2, 10)
        assert orbit.approached_infinity
        assert orbit.points.tolist() == [2, 4, 16, 256, 65536]

    def test_critical_hit_is_flagged(self, square_map):
        orbit = iterate_orbit(square_map, 0, 10)
        assert orbit.hit_critical
        assert orbit.log_moduli[-1] == -math.inf

    def test_rejects_empty_horizon(self, chebyshev):
        with pytest.raises(PreconditionError):
            iterate_orbit(chebyshev, 0, 0)


class TestSpectrum:
    def test_chebyshev_spectrum(self, chebyshev):
        """σ_n(0) = −4⁻ⁿ for n ≥ 1 and S_n = 2/3 + 4⁻ⁿ/3."""
        s = spectrum(chebyshev, 0, 30)
        n = np.arange(1, 31)
        assert s.length == 30
        assert not s.degenerate
        assert s.sigma[0] == pytest.approx(1.0)
        assert np.max(np.abs(s.sigma[1:] - (-(4.0 ** -n)))) < 1e-12
        expected = 2.0 / 3.0 + 4.0 ** -np.arange(31) / 3.0
        assert np.max(np.abs(s.partial_sums - expected)) < 1e-12
        assert s.critical_value.value == -2

    def test_barycenters(self, chebyshev):
        s = spectrum(chebyshev, 0, 10)
        partial, bary = partial_sums_and_barycenters(s)
        assert bary[4] == pytest.approx(partial[4] / 5)
        assert partial_sums_and_barycenters([1, 1, 1])[1].tolist() == [1, 1, 1]

    def test_long_horizon_stays_finite_in_log_form(self, chebyshev):
        s = spectrum(chebyshev, 0, 2000)
        assert s.log_modulus[2000] == pytest.approx(-2000 * math.log(4.0))
        assert np.all(np.isfinite(s.log_modulus))

    def test_extended_precision_agrees(self, chebyshev):
        s = spectrum(chebyshev, 0, 20, precision=PrecisionConfig(mantissa_bits=106))
        assert np.max(np.abs(s.sigma[1:] + 4.0 ** -np.arange(1, 21))) < 1e-12

    def test_degenerate_critical_point(self, square_map):
        """The critical value of z² is itself critical; the spectrum stops at σ_0."""
        s = spectrum(square_map, 0, 50)
        assert s.degenerate
        assert s.length == 0
        assert s.notes

    def test_rejects_non_critical_points(self, chebyshev):
        with pytest.raises(PreconditionError):
            spectrum(chebyshev, 1.0, 10)
        with pytest.raises(PreconditionError):
            spectrum(chebyshev, INFINITY, 10)

    def test_frame_round_trip(self, chebyshev):
        s = spectrum(chebyshev, 0, 12)
        frame = s.to_frame()
        assert list(frame.columns) == [
            "n", "sigma_re", "sigma_im", "log10_abs_sigma", "S_re", "S_im", "abs_b"
        ]
        back = Spectrum.from_frame(frame)
        assert np.allclose(back.sigma, s.sigma, rtol=1e-12, atol=0)

    def test_source_serves_index_ranges(self, chebyshev):
        source = SpectrumSource(chebyshev, 0)
        values = source.values(100, 103)
        assert np.allclose(values, -(4.0 ** -np.arange(100, 103)), rtol=1e-9, atol=0)
        assert source.length is None


class TestTrichotomy:
    def test_expanding_orbit(self, chebyshev):
        verdict = trichotomy_classify(spectrum(chebyshev, 0, 64))
        assert verdict.case == TrichotomyCase.SUBSEQUENCE_TO_INFINITY

    def test_attracted_orbit(self, hyperbolic):
        verdict = trichotomy_classify(spectrum(hyperbolic, 0, 64))
        assert verdict.case == TrichotomyCase.DERIVATIVE_TO_ZERO
        assert verdict.evidence["slope"] > 1

    def test_bounded_sequence(self):
        s = Spectrum.from_sequence([(-1) ** n for n in range(64)])
        assert trichotomy_classify(s).case == TrichotomyCase.BOUNDED_LIMINF

    def test_degenerate_and_short(self, square_map):
        assert trichotomy_classify(spectrum(square_map, 0, 10)).case == TrichotomyCase.DEGENERATE
        assert trichotomy_classify(Spectrum.from_sequence([1.0] * 10)).case == TrichotomyCase.UNDECIDED


class TestEstimators:
    def test_radius(self, chebyshev):
        estimate = radius_of_convergence(spectrum(chebyshev, 0, 64))
        assert estimate.radius == pytest.approx(4.0, rel=1e-9)
        assert estimate.slope_radius == pytest.approx(4.0, rel=1e-9)
        assert estimate.error < 1e-9

    def test_radius_of_bounded_sequence(self):
        assert radius_of_convergence(Spectrum.from_sequence([1.0] * 32)).radius == pytest.approx(1.0)
        with pytest.raises(PreconditionError):
            radius_of_convergence(Spectrum.from_sequence([1.0] * 8))

    def test_oscillation_and_lyapunov(self, chebyshev, square_map):
        s = spectrum(chebyshev, 0, 40)
        stats = oscillation_stats(s)
        assert stats.sup_ratio == pytest.approx(0.25)
        assert stats.liminf_derivative == pytest.approx(4.0)
        assert lyapunov_estimate(s) == pytest.approx(math.log(4.0))
        assert oscillation_stats(spectrum(square_map, 0, 10)) is None

    def test_o_n_proxy(self, chebyshev):
        assert o_n_proxy(spectrum(chebyshev, 0, 40)) < 1e-12
        assert o_n_proxy(Spectrum.from_sequence([1.0] * 101)) == pytest.approx(1 / 51)


class TestPostcritical:
    def test_finite_postcritical_set(self, chebyshev):
        pc = postcritical_sample(chebyshev, 0, 50)
        assert pc.bounded
        assert pc.points.tolist() == [-2, 2]
        assert pc.diameter == pytest.approx(4.0)
        assert pc.bounding_box == (-2.0, 2.0, 0.0, 0.0)

    def test_degenerate_postcritical_set(self, square_map):
        pc = postcritical_sample(square_map, 0, 50)
        assert pc.bounded
        assert pc.diameter == 0.0
        assert set(pc.area_estimates.values()) == {0.0}
