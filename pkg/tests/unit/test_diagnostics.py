"""
Unit tests for the instability criteria and the full diagnostics report.
"""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from critspec.core.exceptions import CritspecError
from critspec.models.domain import CriterionId, CriterionStatus, SeparationOutcome, TrichotomyCase
from critspec.models.schemas import GridSpec
from critspec.services.diagnostics import (
    SeparationReport,
    abel_criterion,
    barycentric_check,
    bounded_theorem_checks,
    c_in_detected_basin,
    corollary_checks,
    fixed_point_hypothesis,
    full_report,
    norlund_criterion,
    pc_area_criterion,
    separation_criterion,
    separation_heuristic,
    stability_bound_check,
)
from critspec.services.spectrum import FormulaSequence, Spectrum, postcritical_sample, spectrum
from critspec.services.summability import LambdaPath, weight_family

SEPARATION_GRID = GridSpec.square(2.5, 48)


def constant(length: int) -> Spectrum:
    return Spectrum.from_sequence(np.ones(length))


def alternating(length: int) -> Spectrum:
    return Spectrum.from_sequence([(-1.0) ** n for n in range(length)])


class TestStabilityBound:
    def test_chebyshev_ratio_grows_by_four(self, chebyshev):
        result = stability_bound_check(spectrum(chebyshev, 0, 64))
        assert result.status == CriterionStatus.INSTABILITY_EVIDENCE
        assert result.evidence["growth_ratio"] == pytest.approx(4.0, rel=0.01)

    def test_constant_spectrum_is_unbounded(self):
        assert stability_bound_check(constant(64)).status == CriterionStatus.INSTABILITY_EVIDENCE

    def test_alternating_spectrum_is_bounded(self):
        result = stability_bound_check(alternating(64))
        assert result.status == CriterionStatus.CONSISTENT_WITH_STABILITY
        assert result.evidence["trailing_max_rho"] == pytest.approx(1.0)

    def test_short_or_degenerate(self, square_map):
        assert stability_bound_check(constant(20)).status == CriterionStatus.INAPPLICABLE
        result = stability_bound_check(spectrum(square_map, 0, 64))
        assert result.status == CriterionStatus.INAPPLICABLE
        assert result.evidence["reason"] == "degenerate spectrum"


class TestCorollaries:
    def test_vanishing_spectrum_fires_first_test(self, chebyshev):
        first, second = corollary_checks(spectrum(chebyshev, 0, 64))
        assert first.status == CriterionStatus.INSTABILITY_EVIDENCE
        assert first.evidence["limsup_abs_S"] == pytest.approx(2 / 3, rel=1e-6)
        assert second.status == CriterionStatus.INAPPLICABLE

    def test_constant_spectrum_fires_second_test(self):
        first, second = corollary_checks(constant(64))
        assert first.status == CriterionStatus.INAPPLICABLE
        assert second.status == CriterionStatus.INSTABILITY_EVIDENCE
        assert second.evidence["alpha"] == [1.0, 0.0]

    def test_summable_alternating_squares(self):
        """Σ(−1)ⁿ/n² with σ_0 = 1 sums to 1 − π²/12 ≈ 0.178."""
        values = [1.0] + [(-1.0) ** n / n ** 2 for n in range(1, 65)]
        first, _ = corollary_checks(Spectrum.from_sequence(values))
        assert first.status == CriterionStatus.INSTABILITY_EVIDENCE
        assert first.evidence["limsup_abs_S"] == pytest.approx(1 - math.pi ** 2 / 12, abs=1e-3)

    def test_degenerate(self, square_map):
        statuses = {r.status for r in corollary_checks(spectrum(square_map, 0, 64))}
        assert statuses == {CriterionStatus.INAPPLICABLE}


class TestBarycentric:
    def test_constant_spectrum(self):
        result = barycentric_check(constant(401))
        assert result.status == CriterionStatus.INSTABILITY_EVIDENCE
        assert result.evidence["last_abs_b"] == pytest.approx(1.0)

    def test_chebyshev_partial_sums_converge(self, chebyshev):
        result = barycentric_check(spectrum(chebyshev, 0, 64))
        assert result.status == CriterionStatus.CONSISTENT_WITH_STABILITY
        assert result.evidence["partial_sums_cauchy"] is True

    def test_linear_growth_is_inapplicable(self):
        result = barycentric_check(Spectrum.from_sequence(np.arange(1.0, 65.0)))
        assert result.status == CriterionStatus.INAPPLICABLE
        assert result.evidence["reason"] == "o(n) proxy fails"


class TestAbelCriterion:
    def test_constant_spectrum_has_nonzero_limit(self):
        result = abel_criterion(constant(401), LambdaPath.radial(12), FormulaSequence(lambda n: 1.0))
        assert result.status == CriterionStatus.INSTABILITY_EVIDENCE
        assert result.evidence["limit"][0] == pytest.approx(1.0, abs=1e-4)

    def test_chebyshev_abel_limit_vanishes(self, chebyshev):
        result = abel_criterion(spectrum(chebyshev, 0, 64))
        assert result.status == CriterionStatus.CONSISTENT_WITH_STABILITY
        assert result.evidence["radius"] == pytest.approx(4.0, rel=1e-6)

    def test_alternating_abel_limit_vanishes(self):
        sequence = FormulaSequence(lambda n: (-1.0) ** n)
        result = abel_criterion(alternating(401), LambdaPath.radial(17), sequence)
        assert result.status == CriterionStatus.CONSISTENT_WITH_STABILITY

    def test_growing_spectrum_is_inapplicable(self):
        result = abel_criterion(Spectrum.from_sequence(1.5 ** np.arange(64)))
        assert result.status == CriterionStatus.INAPPLICABLE


class TestSeparation:
    def test_chebyshev_is_not_separated(self, chebyshev):
        report = separation_heuristic(chebyshev, 0, [-2, 2], SEPARATION_GRID, 50)
        assert report.outcome == SeparationOutcome.NOT_SEPARATED
        assert not c_in_detected_basin(chebyshev, 0, 50)
        result = separation_criterion(report, False, SEPARATION_GRID, 50)
        assert result.status == CriterionStatus.UNDECIDED
        assert result.evidence["outcome"] == SeparationOutcome.NOT_SEPARATED.value

    def test_zero_budget(self, chebyshev):
        report = separation_heuristic(chebyshev, 0, [-2, 2], SEPARATION_GRID, 0)
        assert report.outcome == SeparationOutcome.UNDECIDED
        assert report.reason == "zero iteration budget"

    def test_points_outside_grid(self, chebyshev):
        report = separation_heuristic(chebyshev, 0, [-2, 10], SEPARATION_GRID, 20)
        assert report.outcome == SeparationOutcome.UNDECIDED

    def test_basin_makes_separation_inapplicable(self, hyperbolic):
        assert c_in_detected_basin(hyperbolic, 0, 200)
        report = SeparationReport(SeparationOutcome.UNDECIDED, 0.0, 0)
        result = separation_criterion(report, True, SEPARATION_GRID, 200)
        assert result.status == CriterionStatus.INAPPLICABLE


class TestHypotheses:
    def test_fixed_point_outside_postcritical_set(self, chebyshev):
        """z² − 2 fixes 2, −1 and ∞; P_c = {−2, 2} misses −1 and ∞."""
        hyp = fixed_point_hypothesis(chebyshev, [-2, 2])
        assert hyp.holds
        assert "inf" in hyp.outside
        finite = [complex(*p) for p in hyp.outside if p != "inf"]
        assert any(abs(z + 1) < 1e-9 for z in finite)

    def test_pc_area_is_evidence_only(self, chebyshev):
        result = pc_area_criterion(postcritical_sample(chebyshev, 0, 50))
        assert result.status == CriterionStatus.UNDECIDED
        assert result.evidence["diameter"] == pytest.approx(4.0)

    def test_bounded_theorems_follow_separation(self, chebyshev):
        s = spectrum(chebyshev, 0, 64)
        pc = postcritical_sample(chebyshev, 0, 64)
        not_separated = SeparationReport(SeparationOutcome.NOT_SEPARATED, 0.5, 10)
        first, second = bounded_theorem_checks(s, pc, not_separated)
        assert first.status == second.status == CriterionStatus.UNDECIDED

        separated = SeparationReport(SeparationOutcome.SEPARATED, 0.5, 10)
        first, second = bounded_theorem_checks(s, pc, separated)
        assert first.status == CriterionStatus.UNDECIDED
        assert second.status == CriterionStatus.INSTABILITY_EVIDENCE
        assert second.evidence["limit"] == pytest.approx([0.0, 0.0], abs=1e-12)

    def test_norlund_needs_an_orbit(self, chebyshev, square_map):
        w = weight_family("constant", 65)
        synthetic = norlund_criterion(chebyshev, constant(65), w, 0.5)
        assert synthetic.status == CriterionStatus.INAPPLICABLE
        degenerate = norlund_criterion(square_map, spectrum(square_map, 0, 64), w, 0.5)
        assert degenerate.status == CriterionStatus.INAPPLICABLE


class TestFullReport:
    @pytest.fixture
    def report(self, chebyshev):
        return full_report(chebyshev, 0, 64, separation_grid=GridSpec.square(2.5, 32), budget=50)

    def test_chebyshev_report(self, report):
        assert report.status_of(CriterionId.PROP_STABILITY_BOUND) == CriterionStatus.INSTABILITY_EVIDENCE
        assert report.status_of(CriterionId.COR_BULLET_1) == CriterionStatus.INSTABILITY_EVIDENCE
        assert report.status_of(CriterionId.SEPARATION) == CriterionStatus.UNDECIDED
        assert report.has_instability_evidence
        assert len(report.criteria) == len(CriterionId)

    def test_report_json(self, report):
        data = report.to_json()
        assert data["instability_evidence"] is True
        assert data["separation"]["outcome"] == SeparationOutcome.NOT_SEPARATED.value
        assert data["trichotomy"]["case"] == TrichotomyCase.SUBSEQUENCE_TO_INFINITY.value
        assert data["summary"]["radius"]["radius"] == pytest.approx(4.0, rel=1e-6)

    def test_executor_gives_the_same_statuses(self, chebyshev, report):
        with ThreadPoolExecutor(max_workers=4) as pool:
            threaded = full_report(chebyshev, 0, 64, separation_grid=GridSpec.square(2.5, 32), budget=50,
                                   executor=pool)
        assert [c.status for c in threaded.criteria] == [c.status for c in report.criteria]

    def test_attracted_critical_point(self, hyperbolic):
        report = full_report(hyperbolic, 0, 64, budget=200)
        assert {c.status for c in report.criteria} == {CriterionStatus.INAPPLICABLE}
        assert any("attracted" in note for note in report.notes)
        assert not report.has_instability_evidence

    def test_degenerate_critical_point(self, square_map):
        report = full_report(square_map, 0, 64, budget=50)
        assert {c.status for c in report.criteria} == {CriterionStatus.INAPPLICABLE}
        assert any("degenerate" in note for note in report.notes)

    def test_separation_failure_still_produces_a_report(self, chebyshev, monkeypatch):
        def failing(*args, **kwargs):
            raise CritspecError("grid walk failed")

        monkeypatch.setattr("critspec.services.diagnostics.separation_heuristic", failing)
        report = full_report(chebyshev, 0, 64, separation_grid=GridSpec.square(2.5, 32), budget=50)
        assert report.separation.outcome == SeparationOutcome.UNDECIDED
        assert "grid walk failed" in report.separation.reason
        assert report.status_of(CriterionId.SEPARATION) == CriterionStatus.UNDECIDED
        assert report.status_of(CriterionId.PROP_STABILITY_BOUND) == CriterionStatus.INSTABILITY_EVIDENCE
        assert len(report.criteria) == len(CriterionId)
