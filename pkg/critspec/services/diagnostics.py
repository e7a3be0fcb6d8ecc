"""
Per-criterion instability evidence assembled from spectra, summability scans
and measures.

Every status is evidence at the recorded thresholds, never a proof: the
criteria are asymptotic statements evaluated on finite horizons.
"""

import math
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from critspec.core.config import Thresholds, settings
from critspec.core.exceptions import CritspecError, PreconditionError
from critspec.core.observability import MetricsCollector, get_logger, trace_operation
from critspec.models.domain import (
    ConvergenceVerdict,
    CriterionId,
    CriterionStatus,
    MMeasureVerdict,
    PointLike,
    PrecisionConfig,
    SeparationOutcome,
    as_point,
)
from critspec.models.schemas import GridSpec
from critspec.services.julia import classify_orbits, pixel_of
from critspec.services.measures import build_voronoi_measure
from critspec.services.potential import m_measure_test
from critspec.services.riemann import RationalMap
from critspec.services.spectrum import (
    PostcriticalSample,
    Spectrum,
    SpectrumSource,
    lyapunov_estimate,
    o_n_proxy,
    oscillation_stats,
    postcritical_sample,
    radius_of_convergence,
    spectrum,
    trichotomy_classify,
)
from critspec.services.summability import (
    LambdaPath,
    NorlundWeights,
    SequenceLike,
    abel_scan,
    cauchy_verdict,
    norlund_averages,
    norlund_regularity_check,
    weight_family,
)

logger = get_logger(__name__)

# ρ_n = |S_n|/|σ_n| counts as bounded when it stays below this multiple of its median
BOUND_FACTOR = 10.0
SUBSEQUENCE_STRIDES = (1, 2, 4, 8)


@dataclass(frozen=True)
class CriterionResult:
    criterion: CriterionId
    status: CriterionStatus
    evidence: Dict[str, Any]
    thresholds: Dict[str, Any]
    caveat: str

    def to_json(self) -> Dict[str, Any]:
        return {
            "criterion": self.criterion.value,
            "status": self.status.value,
            "evidence": self.evidence,
            "thresholds": self.thresholds,
            "caveat": self.caveat,
        }


def _result(
    criterion: CriterionId,
    status: CriterionStatus,
    evidence: Dict[str, Any],
    thresholds: Dict[str, Any],
    caveat: str,
) -> CriterionResult:
    MetricsCollector.track_verdict(criterion.value, status.value)
    return CriterionResult(criterion, status, evidence, thresholds, caveat)


def _spread(values: np.ndarray) -> float:
    return float(np.max(np.abs(values[:, None] - values[None, :]))) if values.size else 0.0


@trace_operation("stability_bound_check")
def stability_bound_check(s: Spectrum, thresholds: Optional[Thresholds] = None) -> CriterionResult:
    """
    ρ_n = |S_n|/|σ_n| against a single bound C.

    Instability evidence when the window minima of ρ_n increase strictly over
    the last three windows; consistent with stability when the trailing half
    of ρ_n stays below BOUND_FACTOR times its median.
    """
    th = thresholds or settings.thresholds
    w = th.trichotomy_window
    used = {"window": w, "windows": 3, "bound_factor": BOUND_FACTOR, "min_length": 32}
    caveat = "a finite horizon cannot exclude a larger constant C"
    cid = CriterionId.PROP_STABILITY_BOUND
    if s.degenerate:
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": "degenerate spectrum"}, used, caveat)
    if s.length < 32:
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": "horizon below 32", "length": s.length},
                       used, caveat)

    with np.errstate(divide="ignore", invalid="ignore"):
        log_rho = np.log(np.abs(s.partial_sums)) - s.log_modulus
    minima = [float(np.min(log_rho[len(log_rho) - (k + 1) * w: len(log_rho) - k * w])) for k in (2, 1, 0)]
    tail = log_rho[len(log_rho) // 2:]
    finite_tail = tail[np.isfinite(tail)]
    steps = np.diff(finite_tail)
    evidence: Dict[str, Any] = {
        "window_min_log_rho": minima,
        "growth_ratio": float(np.exp(np.median(steps))) if steps.size else None,
    }
    if minima[0] < minima[1] < minima[2]:
        return _result(cid, CriterionStatus.INSTABILITY_EVIDENCE, evidence, used, caveat)

    rho = np.exp(log_rho[np.isfinite(log_rho)])
    median = float(np.median(rho)) if rho.size else 0.0
    trailing_max = float(np.max(np.exp(finite_tail))) if finite_tail.size else 0.0
    evidence.update(median_rho=median, trailing_max_rho=trailing_max)
    if trailing_max <= BOUND_FACTOR * median:
        return _result(cid, CriterionStatus.CONSISTENT_WITH_STABILITY, evidence, used, caveat)
    return _result(cid, CriterionStatus.UNDECIDED, evidence, used, caveat)


def _subsequences(N: int) -> List[Tuple[int, int, np.ndarray]]:
    """(stride, offset, indices) over the trailing half of 0..N."""
    start = N // 2
    out = []
    for stride in SUBSEQUENCE_STRIDES:
        for offset in range(stride):
            idx = np.arange(start, N + 1)
            idx = idx[idx % stride == offset]
            if idx.size >= 6:
                out.append((stride, offset, idx))
    return out


@trace_operation("corollary_checks")
def corollary_checks(s: Spectrum, thresholds: Optional[Thresholds] = None) -> Tuple[CriterionResult, CriterionResult]:
    """
    Subsequential tests over residue classes n ≡ offset (mod stride) in the
    trailing half, strides 1, 2, 4, 8.

    First test: σ_{n_i} → 0 while limsup|S_{n_i}| > δ. Second test: σ_{n_i}
    stays in a δ-band around α ≠ 0 while |S_{n_i}| outgrows √n·|α|.
    """
    th = thresholds or settings.thresholds
    delta = th.corollary_delta
    used = {"delta": delta, "strides": list(SUBSEQUENCE_STRIDES), "growth_envelope": "sqrt(n)*|alpha|"}
    caveat = "subsequences are drawn from a declared family of residue classes on a finite horizon"
    if s.degenerate:
        reason = {"reason": "degenerate spectrum"}
        return (_result(CriterionId.COR_BULLET_1, CriterionStatus.INAPPLICABLE, reason, used, caveat),
                _result(CriterionId.COR_BULLET_2, CriterionStatus.INAPPLICABLE, reason, used, caveat))

    sigma, S = s.sigma, s.partial_sums
    first: Optional[Dict[str, Any]] = None
    first_hyp = False
    second: Optional[Dict[str, Any]] = None
    second_hyp = False
    for stride, offset, idx in _subsequences(s.length):
        tail = idx[idx.size // 2:]
        mags = np.abs(sigma[tail])
        sums = np.abs(S[tail])

        if np.all(np.isfinite(mags)) and mags.max() <= delta and mags[-1] <= mags[0]:
            first_hyp = True
            if sums.max() > delta and first is None:
                first = {"stride": stride, "offset": offset, "max_abs_sigma": float(mags.max()),
                         "limsup_abs_S": float(sums.max())}

        alpha = complex(sigma[tail[-1]])
        band = np.abs(sigma[tail] - alpha) <= delta * max(1.0, abs(alpha))
        if abs(alpha) > delta and np.all(band):
            second_hyp = True
            n_last = int(tail[-1])
            envelope = math.sqrt(n_last + 1) * abs(alpha)
            if sums[-1] >= envelope and sums[-1] > sums[0] and second is None:
                second = {"stride": stride, "offset": offset, "alpha": [alpha.real, alpha.imag],
                          "abs_S_last": float(sums[-1]), "envelope": envelope}

    def verdict(cid: CriterionId, found: Optional[Dict[str, Any]], hyp: bool, missing: str) -> CriterionResult:
        if found is not None:
            return _result(cid, CriterionStatus.INSTABILITY_EVIDENCE, found, used, caveat)
        if hyp:
            return _result(cid, CriterionStatus.CONSISTENT_WITH_STABILITY, {"reason": "partial sums stay small"},
                           used, caveat)
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": missing}, used, caveat)

    return (
        verdict(CriterionId.COR_BULLET_1, first, first_hyp, "no subsequence with σ → 0"),
        verdict(CriterionId.COR_BULLET_2, second, second_hyp, "no subsequence with σ → α ≠ 0"),
    )


@trace_operation("barycentric_check")
def barycentric_check(s: Spectrum, thresholds: Optional[Thresholds] = None) -> CriterionResult:
    """
    Instability evidence when σ_n = o(n) at the proxy threshold while the
    barycenters b_n stay away from 0.
    """
    th = thresholds or settings.thresholds
    w = th.cauchy_window
    used = {"o_n_proxy": th.o_n_proxy, "window": w, "delta": th.corollary_delta,
            "cauchy_tolerance": th.cauchy_tolerance}
    caveat = "o(n) and barycentric convergence are judged on the trailing window only"
    cid = CriterionId.BARYCENTRIC
    if s.degenerate:
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": "degenerate spectrum"}, used, caveat)
    try:
        proxy = o_n_proxy(s)
    except PreconditionError as exc:
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": exc.message}, used, caveat)
    if not proxy <= th.o_n_proxy:
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": "o(n) proxy fails", "o_n_proxy": proxy},
                       used, caveat)

    b = np.abs(s.barycenters[-w:])
    S_tail = s.partial_sums[-w:]
    partial_cauchy = _spread(S_tail) < th.cauchy_tolerance * max(1.0, float(np.max(np.abs(S_tail))))
    evidence = {"o_n_proxy": proxy, "last_abs_b": float(b[-1]), "partial_sums_cauchy": bool(partial_cauchy)}
    if b.max() <= th.corollary_delta or partial_cauchy:
        return _result(cid, CriterionStatus.CONSISTENT_WITH_STABILITY, evidence, used, caveat)
    if b.min() > th.corollary_delta:
        return _result(cid, CriterionStatus.INSTABILITY_EVIDENCE, evidence, used, caveat)
    return _result(cid, CriterionStatus.UNDECIDED, evidence, used, caveat)


@trace_operation("abel_criterion")
def abel_criterion(
    s: Spectrum,
    path: Optional[LambdaPath] = None,
    sequence: Optional[SequenceLike] = None,
    thresholds: Optional[Thresholds] = None,
) -> CriterionResult:
    """
    Radial Abel scan of σ(c). Instability evidence when P_λ converges to a
    limit of modulus above abel_nonzero, diverges or oscillates.

    `sequence` replaces the materialized spectrum, e.g. with a lazily
    extended SpectrumSource for long truncations.
    """
    th = thresholds or settings.thresholds
    path = path or LambdaPath.radial()
    used = {"o_n_proxy": th.o_n_proxy, "radius_slack": th.radius_slack, "abel_nonzero": th.abel_nonzero,
            "cauchy_window": th.cauchy_window, "cauchy_tolerance": th.cauchy_tolerance}
    caveat = "Abel convergence is judged on a finite λ-path"
    cid = CriterionId.ABEL_CONVERGENCE
    if s.degenerate:
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": "degenerate spectrum"}, used, caveat)
    try:
        proxy = o_n_proxy(s)
        radius = radius_of_convergence(s).radius
    except PreconditionError as exc:
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": exc.message}, used, caveat)
    evidence: Dict[str, Any] = {"o_n_proxy": proxy, "radius": radius}
    if not proxy <= th.o_n_proxy or radius < 1 - th.radius_slack:
        evidence["reason"] = "o(n) proxy or radius of convergence fails"
        return _result(cid, CriterionStatus.INAPPLICABLE, evidence, used, caveat)

    report = abel_scan(s.sigma if sequence is None else sequence, path, th)
    evidence["verdict"] = report.verdict.value
    if report.limit is not None:
        evidence["limit"] = [report.limit.real, report.limit.imag]
    if report.verdict == ConvergenceVerdict.CONVERGES_TO:
        status = (CriterionStatus.INSTABILITY_EVIDENCE if abs(report.limit) > th.abel_nonzero
                  else CriterionStatus.CONSISTENT_WITH_STABILITY)
    elif report.verdict in (ConvergenceVerdict.DIVERGES, ConvergenceVerdict.OSCILLATES):
        status = CriterionStatus.INSTABILITY_EVIDENCE
    else:
        status = CriterionStatus.UNDECIDED
    return _result(cid, status, evidence, used, caveat)


# Separation of c and P_c by the Fatou set

@dataclass(frozen=True)
class SeparationReport:
    outcome: SeparationOutcome
    fatou_fraction: float
    reached_cells: int
    reason: str = ""

    def to_json(self) -> Dict[str, Any]:
        return {
            "outcome": self.outcome.value,
            "fatou_fraction": self.fatou_fraction,
            "reached_cells": self.reached_cells,
            "reason": self.reason,
        }


def _cell_corners(grid: GridSpec) -> np.ndarray:
    xs = np.linspace(grid.xmin, grid.xmax, grid.nx + 1)
    ys = np.linspace(grid.ymin, grid.ymax, grid.ny + 1)
    # edges within rounding of an axis sit exactly on it
    xs[np.abs(xs) < 1e-12 * (grid.xmax - grid.xmin)] = 0.0
    ys[np.abs(ys) < 1e-12 * (grid.ymax - grid.ymin)] = 0.0
    X, Y = np.meshgrid(xs, ys)
    return X + 1j * Y


def _flood(passable: np.ndarray, start: Tuple[int, int]) -> np.ndarray:
    """4-connected flood fill through passable cells."""
    reached = np.zeros_like(passable)
    reached[start] = True
    while True:
        grown = reached.copy()
        grown[1:, :] |= reached[:-1, :]
        grown[:-1, :] |= reached[1:, :]
        grown[:, 1:] |= reached[:, :-1]
        grown[:, :-1] |= reached[:, 1:]
        grown &= passable
        if np.array_equal(grown, reached):
            return reached
        reached = grown


@trace_operation("separation_heuristic")
def separation_heuristic(
    R: RationalMap,
    c: PointLike,
    pc_points: Sequence[complex],
    grid: GridSpec,
    budget: int,
    thresholds: Optional[Thresholds] = None,
) -> SeparationReport:
    """
    Look for a closed loop of Fatou-candidate cells separating c from P_c.

    A cell is a Fatou candidate when its center and its four corners all
    escape to an attracting ∞ or converge to an attracting cycle within the
    budget. P_c is separated when a flood fill from the cell of c through
    the remaining cells reaches no cell holding a P_c point.
    """
    th = thresholds or settings.thresholds
    point = as_point(c)
    pc = np.asarray(list(pc_points), dtype=complex)
    if budget <= 0:
        return SeparationReport(SeparationOutcome.UNDECIDED, 0.0, 0, "zero iteration budget")
    if point.infinite or pc.size == 0 or not np.all(np.isfinite(pc)):
        return SeparationReport(SeparationOutcome.UNDECIDED, 0.0, 0, "P_c sample unbounded or empty")
    try:
        start = pixel_of(grid, point.value)
        targets = [pixel_of(grid, complex(p)) for p in pc]
    except PreconditionError:
        return SeparationReport(SeparationOutcome.UNDECIDED, 0.0, 0, "c or P_c outside the grid")

    corners = classify_orbits(R, _cell_corners(grid), budget, th).fatou
    centers = classify_orbits(R, grid.points(), budget, th).fatou
    fatou = centers & corners[:-1, :-1] & corners[1:, :-1] & corners[:-1, 1:] & corners[1:, 1:]
    passable = ~fatou
    passable[start] = True
    for cell in targets:
        passable[cell] = True
    reached = _flood(passable, start)
    hit = any(reached[cell] for cell in targets)
    outcome = SeparationOutcome.NOT_SEPARATED if hit else SeparationOutcome.SEPARATED
    logger.info("Separation heuristic", outcome=outcome.value, fatou_fraction=float(np.mean(fatou)))
    return SeparationReport(outcome, float(np.mean(fatou)), int(np.sum(reached)))


def c_in_detected_basin(R: RationalMap, c: PointLike, budget: int, thresholds: Optional[Thresholds] = None) -> bool:
    """True when the orbit of c escapes or falls into an attracting cycle within the budget."""
    point = as_point(c)
    if point.infinite:
        return True
    return bool(classify_orbits(R, np.array([point.value]), budget, thresholds).fatou[0])


def separation_criterion(
    report: SeparationReport,
    in_basin: bool,
    grid: GridSpec,
    budget: int,
    thresholds: Optional[Thresholds] = None,
) -> CriterionResult:
    """The separation hypothesis as a report entry; its outcome never counts as evidence."""
    th = thresholds or settings.thresholds
    used = {"cycle_tolerance": th.cycle_tolerance, "max_period": th.max_period, "budget": budget,
            "grid": grid.model_dump()}
    caveat = "grid-resolution heuristic; parabolic basins stay unresolved"
    evidence = report.to_json()
    if in_basin:
        evidence["reason"] = "c lies in a detected attracting basin"
        return _result(CriterionId.SEPARATION, CriterionStatus.INAPPLICABLE, evidence, used, caveat)
    return _result(CriterionId.SEPARATION, CriterionStatus.UNDECIDED, evidence, used, caveat)


@dataclass(frozen=True)
class FixedPointHypothesis:
    holds: bool
    outside: Tuple[Any, ...]

    def to_json(self) -> Dict[str, Any]:
        return {"holds": self.holds, "fixed_points_outside_pc": list(self.outside)}


def fixed_point_hypothesis(
    R: RationalMap,
    pc_points: Sequence[complex],
    bounded: bool = True,
    thresholds: Optional[Thresholds] = None,
) -> FixedPointHypothesis:
    """Whether P_c misses at least one fixed point of R, to the merge radius."""
    th = thresholds or settings.thresholds
    pc = np.asarray(list(pc_points), dtype=complex)
    outside = []
    for fp in R.fixed_points():
        if fp.point.infinite:
            if bounded:
                outside.append("inf")
            continue
        z = fp.point.value
        if pc.size == 0 or float(np.min(np.abs(pc - z))) > th.merge_radius * max(1.0, abs(z)):
            outside.append([z.real, z.imag])
    return FixedPointHypothesis(bool(outside), tuple(outside))


@trace_operation("pc_area")
def pc_area_criterion(pc: PostcriticalSample) -> CriterionResult:
    """Box-count areas of the P_c sample; evidence only."""
    used = {"levels": sorted(pc.area_estimates)}
    caveat = "the measure of P_c is a hypothesis; box counts of a finite sample only bound it"
    if not pc.bounded or pc.points.size == 0:
        return _result(CriterionId.PC_AREA, CriterionStatus.INAPPLICABLE, {"reason": "P_c sample unbounded"},
                        used, caveat)
    levels = np.array(sorted(pc.area_estimates), dtype=float)
    areas = np.array([pc.area_estimates[int(k)] for k in levels])
    evidence: Dict[str, Any] = {"areas": {str(int(k)): float(a) for k, a in zip(levels, areas)},
                                "diameter": pc.diameter}
    if np.all(areas > 0) and levels.size >= 2:
        evidence["log2_area_slope"] = float(np.polyfit(levels, np.log2(areas), 1)[0])
    return _result(CriterionId.PC_AREA, CriterionStatus.UNDECIDED, evidence, used, caveat)


def _bounded_sequence(s: Spectrum, slack: float) -> bool:
    mags = np.abs(s.sigma)
    if not np.all(np.isfinite(mags)) or mags.size < 4:
        return False
    half = mags.size // 2
    return float(mags[half:].max()) <= (1 + slack) * max(1.0, float(mags[:half].max()))


@trace_operation("bounded_theorem_checks")
def bounded_theorem_checks(
    s: Spectrum,
    pc: PostcriticalSample,
    separation: SeparationReport,
    thresholds: Optional[Thresholds] = None,
) -> Tuple[CriterionResult, CriterionResult]:
    """
    Hypotheses for bounded spectra: bounded P_c, σ bounded, c separated from
    P_c by Fatou candidates. The first conclusion additionally needs P_c of
    measure zero (reported, never decided); the second needs σ convergent.
    """
    th = thresholds or settings.thresholds
    used = {"radius_slack": th.radius_slack, "cauchy_window": th.cauchy_window,
            "cauchy_tolerance": th.cauchy_tolerance}
    caveat = "hypotheses are checked numerically at grid and horizon resolution"
    reasons = []
    if s.degenerate:
        reasons.append("degenerate spectrum")
    if not pc.bounded:
        reasons.append("P_c sample unbounded")
    if not s.degenerate and not _bounded_sequence(s, th.radius_slack):
        reasons.append("σ not bounded on the horizon")
    if reasons:
        ev = {"reason": "; ".join(reasons)}
        return (_result(CriterionId.BOUNDED_THM_1, CriterionStatus.INAPPLICABLE, ev, used, caveat),
                _result(CriterionId.BOUNDED_THM_2, CriterionStatus.INAPPLICABLE, ev, used, caveat))

    evidence: Dict[str, Any] = {"separation": separation.outcome.value}
    if separation.outcome != SeparationOutcome.SEPARATED:
        evidence["reason"] = "separation not established at this resolution"
        return (_result(CriterionId.BOUNDED_THM_1, CriterionStatus.UNDECIDED, evidence, used, caveat),
                _result(CriterionId.BOUNDED_THM_2, CriterionStatus.UNDECIDED, evidence, used, caveat))

    first = _result(CriterionId.BOUNDED_THM_1, CriterionStatus.UNDECIDED,
                    dict(evidence, reason="measure of P_c undecidable from samples"), used, caveat)
    verdict, limit = cauchy_verdict(s.sigma, th.cauchy_window, th.cauchy_tolerance, th.divergence_radius)
    second_ev = dict(evidence, sigma_verdict=verdict.value)
    if verdict == ConvergenceVerdict.CONVERGES_TO:
        second_ev["limit"] = [limit.real, limit.imag]
        second = _result(CriterionId.BOUNDED_THM_2, CriterionStatus.INSTABILITY_EVIDENCE, second_ev, used, caveat)
    else:
        second = _result(CriterionId.BOUNDED_THM_2, CriterionStatus.UNDECIDED, second_ev, used, caveat)
    return first, second


@trace_operation("norlund_criterion")
def norlund_criterion(
    R: RationalMap,
    s: Spectrum,
    w: NorlundWeights,
    lam: float,
    thresholds: Optional[Thresholds] = None,
) -> CriterionResult:
    """
    |σ| Nörlund-regular for w, and the Voronoi measure at λ based at the
    critical value is a non-zero M-measure at the grid threshold.
    """
    th = thresholds or settings.thresholds
    used = {"regularity_slack": th.regularity_slack, "m_measure": th.m_measure, "scan_null": th.scan_null,
            "lambda": lam, "weights": w.to_json()}
    caveat = "the Voronoi measure is evaluated at one λ; its limit as λ → 1 is not computed"
    cid = CriterionId.NORLUND_REGULAR
    if s.degenerate or s.critical_value is None or s.critical_value.infinite:
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": "degenerate spectrum"}, used, caveat)
    t = norlund_averages(np.abs(s.sigma), w)
    try:
        regularity = norlund_regularity_check(t, th)
    except PreconditionError as exc:
        return _result(cid, CriterionStatus.INAPPLICABLE, {"reason": exc.message}, used, caveat)
    evidence: Dict[str, Any] = {"regularity": regularity.to_json()}
    if not regularity.regular:
        evidence["reason"] = "|σ| not Nörlund regular"
        return _result(cid, CriterionStatus.INAPPLICABLE, evidence, used, caveat)

    nu = build_voronoi_measure(R, s.critical_value, s.sigma, w, lam, N=s.length, thresholds=th)
    evidence["total_variation"] = nu.total_variation
    if nu.total_variation <= th.scan_null:
        evidence["reason"] = "Voronoi measure vanishes at this λ"
        return _result(cid, CriterionStatus.UNDECIDED, evidence, used, caveat)
    m = m_measure_test(nu, threshold=th.m_measure)
    evidence["m_measure"] = m.verdict.value
    status = (CriterionStatus.INSTABILITY_EVIDENCE if m.verdict == MMeasureVerdict.M_MEASURE
              else CriterionStatus.UNDECIDED)
    return _result(cid, status, evidence, used, caveat)


# Full report

@dataclass
class DiagnosticsReport:
    map: Dict[str, Any]
    critical_point: Any
    horizon: int
    trichotomy: Dict[str, Any]
    criteria: List[CriterionResult]
    summary: Dict[str, Any] = field(default_factory=dict)
    fixed_points: Optional[FixedPointHypothesis] = None
    separation: Optional[SeparationReport] = None
    thresholds: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    citations: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def has_instability_evidence(self) -> bool:
        return any(c.status == CriterionStatus.INSTABILITY_EVIDENCE for c in self.criteria)

    def status_of(self, criterion: CriterionId) -> CriterionStatus:
        for c in self.criteria:
            if c.criterion == criterion:
                return c.status
        raise KeyError(criterion.value)

    def to_json(self) -> Dict[str, Any]:
        return {
            "map": self.map,
            "critical_point": self.critical_point,
            "horizon": self.horizon,
            "trichotomy": self.trichotomy,
            "summary": self.summary,
            "fixed_point_hypothesis": None if self.fixed_points is None else self.fixed_points.to_json(),
            "separation": None if self.separation is None else self.separation.to_json(),
            "criteria": [c.to_json() for c in self.criteria],
            "instability_evidence": self.has_instability_evidence,
            "thresholds": self.thresholds,
            "seed": self.seed,
            "citations": self.citations,
            "notes": self.notes,
        }


def _guarded(criterion: CriterionId, fn: Callable[[], Any]) -> Any:
    try:
        return fn()
    except CritspecError as exc:
        logger.warning("Criterion failed", criterion=criterion.value, error=exc.message)
        return _result(criterion, CriterionStatus.INAPPLICABLE, {"error": exc.to_dict()}, {}, exc.message)


def _summary(s: Spectrum) -> Dict[str, Any]:
    out: Dict[str, Any] = {"length": s.length, "degenerate": s.degenerate, "notes": list(s.notes)}
    for name, fn in (
        ("radius", lambda: radius_of_convergence(s).to_json()),
        ("lyapunov", lambda: lyapunov_estimate(s)),
        ("o_n_proxy", lambda: o_n_proxy(s)),
    ):
        try:
            out[name] = fn()
        except PreconditionError as exc:
            out[name] = None
            out.setdefault("skipped", {})[name] = exc.message
    osc = oscillation_stats(s)
    out["oscillation"] = None if osc is None else osc.to_json()
    return out


@trace_operation("full_report")
def full_report(
    R: RationalMap,
    c: PointLike,
    N: int,
    thresholds: Optional[Thresholds] = None,
    precision: Optional[PrecisionConfig] = None,
    path: Optional[LambdaPath] = None,
    weights: Optional[NorlundWeights] = None,
    lam: float = 0.5,
    separation_grid: Optional[GridSpec] = None,
    budget: int = 200,
    seed: int = 0,
    executor: Optional[Executor] = None,
    citations: Sequence[str] = (),
) -> DiagnosticsReport:
    """
    Every criterion on one critical point. Criterion failures become
    inapplicable entries; the report itself is always produced.
    """
    th = thresholds or settings.thresholds
    point = as_point(c)
    s = spectrum(R, point, N, precision, th)
    pc = postcritical_sample(R, point, N, precision, th)
    grid = separation_grid or GridSpec.square(2.5, 96)
    weights = weights or weight_family("constant", max(N + 1, 16), thresholds=th)
    in_basin = c_in_detected_basin(R, point, budget, th)
    notes = list(s.notes)
    if s.degenerate:
        notes.append("degenerate spectrum: the critical orbit lands on a critical point")

    if in_basin:
        notes.append("critical orbit attracted to a cycle: the criteria concern critical points in the Julia set")
        separation = SeparationReport(SeparationOutcome.UNDECIDED, 0.0, 0, "c lies in a detected attracting basin")
        criteria = [
            _result(cid, CriterionStatus.INAPPLICABLE, {"reason": "c lies in a detected attracting basin"},
                    {"budget": budget, "cycle_tolerance": th.cycle_tolerance, "max_period": th.max_period},
                    "basin detection is limited to attracting cycles of period ≤ max_period")
            for cid in CriterionId
        ]
    else:
        separation, criteria = _run_criteria(R, point, s, pc, grid, budget, path, weights, lam, th, executor)

    report = DiagnosticsReport(
        map=R.to_json(),
        critical_point=point.to_json(),
        horizon=N,
        trichotomy=trichotomy_classify(s, thresholds=th).to_json(),
        criteria=criteria,
        summary=_summary(s),
        fixed_points=fixed_point_hypothesis(R, pc.points, pc.bounded, th),
        separation=separation,
        thresholds=th.model_dump(),
        seed=seed,
        citations=list(citations),
        notes=notes,
    )
    logger.info("Diagnostics report", horizon=N, instability_evidence=report.has_instability_evidence)
    return report


def _pair(result: Any, second: CriterionId) -> Tuple[CriterionResult, CriterionResult]:
    if isinstance(result, CriterionResult):
        return result, _result(second, result.status, result.evidence, result.thresholds, result.caveat)
    return result


def _run_criteria(
    R: RationalMap,
    point: Any,
    s: Spectrum,
    pc: PostcriticalSample,
    grid: GridSpec,
    budget: int,
    path: Optional[LambdaPath],
    weights: NorlundWeights,
    lam: float,
    th: Thresholds,
    executor: Optional[Executor],
) -> Tuple[SeparationReport, List[CriterionResult]]:
    source = None if s.degenerate else SpectrumSource(R, point, thresholds=th)

    def separation_data() -> SeparationReport:
        if not pc.bounded:
            return SeparationReport(SeparationOutcome.UNDECIDED, 0.0, 0, "P_c sample unbounded")
        try:
            return separation_heuristic(R, point, pc.points, grid, budget, th)
        except CritspecError as exc:
            logger.warning("Separation heuristic failed", error=exc.message)
            return SeparationReport(SeparationOutcome.UNDECIDED, 0.0, 0, f"separation failed: {exc.message}")

    jobs: List[Tuple[CriterionId, Callable[[], Any]]] = [
        (CriterionId.PROP_STABILITY_BOUND, lambda: stability_bound_check(s, th)),
        (CriterionId.COR_BULLET_1, lambda: corollary_checks(s, th)),
        (CriterionId.BARYCENTRIC, lambda: barycentric_check(s, th)),
        (CriterionId.ABEL_CONVERGENCE, lambda: abel_criterion(s, path, source, th)),
        (CriterionId.NORLUND_REGULAR, lambda: norlund_criterion(R, s, weights, lam, th)),
        (CriterionId.PC_AREA, lambda: pc_area_criterion(pc)),
    ]
    if executor is not None:
        futures = [executor.submit(_guarded, cid, fn) for cid, fn in jobs]
        sep_future = executor.submit(separation_data)
        results = [f.result() for f in futures]
        separation = sep_future.result()
    else:
        results = [_guarded(cid, fn) for cid, fn in jobs]
        separation = separation_data()

    stability, corollaries, barycentric, abel, norlund, area = results
    corollaries = _pair(corollaries, CriterionId.COR_BULLET_2)
    bounded = _pair(_guarded(CriterionId.BOUNDED_THM_1, lambda: bounded_theorem_checks(s, pc, separation, th)),
                    CriterionId.BOUNDED_THM_2)
    sep = _guarded(CriterionId.SEPARATION, lambda: separation_criterion(separation, False, grid, budget, th))
    return separation, [stability, *corollaries, barycentric, abel, *bounded, norlund, sep, area]
