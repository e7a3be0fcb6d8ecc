"""
Batch pipeline: spectrum → summability → measures → diagnostics → identity
checks → render.

Stages after the spectrum are independent of each other and may run on a
thread pool; their artifacts are written in stage order once all of them
have finished, so the output does not depend on the thread count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from critspec.core.config import Thresholds
from critspec.core.exceptions import CritspecError, PreconditionError, ProjectiveClassError
from critspec.core.observability import MetricsCollector, get_logger, monitor_performance
from critspec.models.domain import INFINITY, PathKind, SpherePoint
from critspec.models.schemas import MapSpec, PathSpec, RunConfig, WeightSpec
from critspec.services.diagnostics import DiagnosticsReport, full_report
from critspec.services.julia import render_julia
from critspec.services.measures import build_abel_measure, build_voronoi_measure, projective_normalize, weak_star_scan
from critspec.services.potential import m_measure_test, potential_l1_norm
from critspec.services.riemann import RationalMap, moebius_normalize, select_critical_point
from critspec.services.ruelle import identity_check, identity_samples, voronoi_identity_check
from critspec.services.spectrum import Spectrum, SpectrumSource, spectrum
from critspec.services.summability import (
    LambdaPath,
    NorlundWeights,
    abel_scan,
    cesaro_means,
    functional_norm,
    identity_weights,
    norlund_validate,
    summability_report_norlund,
    weight_family,
)
from critspec.storage.artifacts import ArtifactStore

logger = get_logger(__name__)

STAGES = ("spectrum", "summability", "measures", "diagnostics", "ruelle", "render")

EXIT_OK = 0
EXIT_ERROR = 2
EXIT_EVIDENCE = 10

# (kind, artifact name, payload)
Artifact = Tuple[str, str, Any]


def default_stages(config: RunConfig) -> List[str]:
    """Every stage, minus identity checks and rendering unless the config enables them."""
    return [s for s in STAGES
            if (s != "ruelle" or config.identity.enabled) and (s != "render" or config.render.enabled)]


def build_map(spec: MapSpec) -> RationalMap:
    R = RationalMap(spec.num, spec.den)
    if not spec.normalize:
        return R
    triple = None
    if spec.fixed_triple is not None:
        triple = [INFINITY if p is None else SpherePoint(complex(p[0], p[1])) for p in spec.fixed_triple]
    R, _ = moebius_normalize(R, triple)
    return R


def build_path(spec: PathSpec) -> LambdaPath:
    if spec.kind == PathKind.STOLZ:
        return LambdaPath.stolz(spec.alpha, spec.K)
    if spec.kind == PathKind.EXPLICIT:
        return LambdaPath.explicit([complex(re, im) for re, im in spec.samples])
    return LambdaPath.radial(spec.K)


def build_weights(spec: WeightSpec, thresholds: Thresholds) -> NorlundWeights:
    if spec.q:
        return norlund_validate(spec.q, thresholds=thresholds)
    return weight_family(spec.family, spec.size, r=spec.r, thresholds=thresholds)


@dataclass(frozen=True)
class StageError:
    stage: str
    error: str
    message: str
    details: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def of(cls, stage: str, exc: Exception) -> "StageError":
        if isinstance(exc, CritspecError):
            return cls(stage, exc.code, exc.message, exc.details)
        return cls(stage, type(exc).__name__, str(exc))

    def to_json(self) -> Dict[str, Any]:
        return {"stage": self.stage, "error": self.error, "message": self.message, "details": self.details}


@dataclass
class PipelineResult:
    stages: List[str]
    artifacts: List[str]
    errors: List[StageError]
    report: Optional[DiagnosticsReport] = None

    @property
    def exit_code(self) -> int:
        if self.report is not None and self.report.has_instability_evidence:
            return EXIT_EVIDENCE
        return EXIT_ERROR if self.errors else EXIT_OK


class PipelineRunner:
    """Runs selected stages of one RunConfig into an output directory."""

    def __init__(self, config: RunConfig, out: Optional[Path] = None, threads: int = 1):
        self.config = config
        self.threads = max(1, int(threads))
        self.store = ArtifactStore(out if out is not None else Path(config.output))
        self.thresholds = config.thresholds
        self.R = build_map(config.map)
        selector = config.critical_point
        value = None if selector.value is None else complex(*selector.value)
        self.c = select_critical_point(self.R, index=selector.index, value=value)
        self.path = build_path(config.path)
        self.weights = build_weights(config.weights, self.thresholds)
        self.spectrum: Optional[Spectrum] = None
        self.report: Optional[DiagnosticsReport] = None
        self._selected: List[str] = []

    def _source(self) -> SpectrumSource:
        return SpectrumSource(self.R, self.c, self.config.precision, self.thresholds)

    # Stages

    @monitor_performance("stage_spectrum")
    def stage_spectrum(self) -> List[Artifact]:
        self.spectrum = spectrum(self.R, self.c, self.config.horizon, self.config.precision, self.thresholds)
        return [("csv", "spectrum.csv", self.spectrum.to_frame())]

    @monitor_performance("stage_summability")
    def stage_summability(self) -> List[Artifact]:
        s = self._require_spectrum()
        th = self.thresholds
        abel = abel_scan(s.sigma if s.degenerate else self._source(), self.path, th)
        norlund = summability_report_norlund(s.sigma, self.weights, th)
        doc: Dict[str, Any] = {
            "abel": abel.to_json(),
            "functional_norms": [functional_norm(lam) for lam in self.path.samples],
            "norlund": dict(norlund.to_json(), weights=self.weights.to_json()),
        }
        if self.weights.is_constant and not self.weights.is_identity:
            means = cesaro_means(s.sigma)
            doc["cesaro"] = {
                "means": means,
                "equals_barycenters": bool(np.array_equal(means, s.barycenters)),
            }
        return [("json", "summability.json", doc)]

    @monitor_performance("stage_measures")
    def stage_measures(self) -> List[Artifact]:
        s = self._require_spectrum()
        th = self.thresholds
        v = s.critical_value
        if v is None or v.infinite:
            raise PreconditionError("finite critical value")
        a = s.sigma if s.degenerate else self._source()
        scan = weak_star_scan(self.R, v, a, self.path, thresholds=th, seed=self.config.seed)
        doc: Dict[str, Any] = {"scan": scan.to_json()}
        try:
            doc["projective"] = projective_normalize(scan, th).to_json()
        except ProjectiveClassError as exc:
            doc["projective"] = {"error": exc.message}

        lam = self.config.weights.lam
        abel_nu = build_abel_measure(self.R, v, s.sigma, lam, N=s.length, thresholds=th)
        doc["abel_measure"] = dict(abel_nu.to_json(), **{"lambda": lam})
        doc["m_measure"] = m_measure_test(abel_nu, thresholds=th).to_json() if abel_nu.size else None
        doc["potential_l1"] = potential_l1_norm(abel_nu, self.config.grids.field) if abel_nu.size else 0.0
        try:
            voronoi = build_voronoi_measure(self.R, v, s.sigma, self.weights, lam, N=s.length, thresholds=th)
            doc["voronoi_measure"] = dict(voronoi.to_json(), **{"lambda": lam})
        except PreconditionError as exc:
            doc["voronoi_measure"] = {"error": exc.message, "details": exc.details}
        return [("json", "measures.json", doc), ("csv", "scan.csv", scan.to_frame())]

    @monitor_performance("stage_diagnostics")
    def stage_diagnostics(self) -> List[Artifact]:
        self._require_spectrum()
        cfg = self.config
        citations = [name for stage, name in (("spectrum", "spectrum.csv"), ("summability", "summability.json"),
                                              ("measures", "measures.json"), ("measures", "scan.csv"))
                     if stage in self._selected]
        kwargs = dict(
            thresholds=self.thresholds,
            precision=cfg.precision,
            path=self.path,
            weights=self.weights,
            lam=cfg.weights.lam,
            separation_grid=cfg.grids.separation,
            budget=cfg.grids.separation_budget,
            seed=cfg.seed,
            citations=citations,
        )
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                self.report = full_report(self.R, self.c, cfg.horizon, executor=pool, **kwargs)
        else:
            self.report = full_report(self.R, self.c, cfg.horizon, **kwargs)
        return [("json", "diagnostics.json", self.report.to_json())]

    @monitor_performance("stage_ruelle")
    def stage_ruelle(self) -> List[Artifact]:
        spec = self.config.identity
        zs = identity_samples(self.R, spec.samples, self.config.seed)
        plain = identity_check(self.R, self.c, spec.lam, zs, spec.N)
        doc: Dict[str, Any] = {
            "identity": plain.to_json(),
            "voronoi_identity_weights": voronoi_identity_check(
                self.R, self.c, identity_weights(), spec.lam, zs, spec.N).to_json(),
        }
        try:
            doc["voronoi_configured_weights"] = voronoi_identity_check(
                self.R, self.c, self.weights, spec.lam, zs, spec.N).to_json()
        except PreconditionError as exc:
            doc["voronoi_configured_weights"] = {"error": exc.message}
        return [("json", "residuals.json", doc)]

    @monitor_performance("stage_render")
    def stage_render(self) -> List[Artifact]:
        spec = self.config.render
        image = render_julia(self.R, spec.grid, spec.max_iter, self.thresholds)
        out: List[Artifact] = [("pgm", "julia.pgm", image.pixels)]
        if spec.png:
            out.append(("png", "julia.png", image.pixels))
        return out

    # Orchestration

    def _require_spectrum(self) -> Spectrum:
        if self.spectrum is None:
            raise PreconditionError("spectrum stage completed")
        return self.spectrum

    def _write(self, artifacts: Sequence[Artifact]) -> None:
        writers: Dict[str, Callable[[str, Any], Any]] = {
            "json": self.store.json,
            "csv": self.store.csv,
            "pgm": self.store.pgm,
            "png": self.store.png,
        }
        for kind, name, payload in artifacts:
            writers[kind](name, payload)

    def _run_stage(self, name: str) -> Tuple[List[Artifact], Optional[StageError]]:
        fn = getattr(self, f"stage_{name}")
        with MetricsCollector.track_duration(name):
            try:
                artifacts = fn()
            except Exception as exc:
                MetricsCollector.track_stage(name, "error")
                logger.warning("Stage failed; continuing", stage=name, error=str(exc))
                return [], StageError.of(name, exc)
        MetricsCollector.track_stage(name, "success")
        return artifacts, None

    def run(self, stages: Sequence[str] = STAGES) -> PipelineResult:
        unknown = [s for s in stages if s not in STAGES]
        if unknown:
            raise CritspecError("unknown pipeline stage", {"stages": unknown})
        selected = [s for s in STAGES if s in stages]
        self._selected = selected
        self.report = None
        errors: List[StageError] = []

        logger.info("Pipeline started", stages=selected, threads=self.threads, out=str(self.store.root))
        needs_spectrum = any(s in selected for s in ("spectrum", "summability", "measures", "diagnostics"))
        if needs_spectrum:
            artifacts, error = self._run_stage("spectrum")
            if "spectrum" in selected:
                self._write(artifacts)
            if error is not None:
                errors.append(error)

        rest = [s for s in selected if s != "spectrum"]
        if self.threads > 1 and len(rest) > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                outcomes = list(pool.map(self._run_stage, rest))
        else:
            outcomes = [self._run_stage(s) for s in rest]
        for artifacts, error in outcomes:
            self._write(artifacts)
            if error is not None:
                errors.append(error)

        self.store.json("run.json", {
            "config": self.config.model_dump(mode="json", exclude={"output"}),
            "stages": selected,
            "artifacts": list(self.store.written),
            "errors": [e.to_json() for e in errors],
        })
        result = PipelineResult(selected, list(self.store.written), errors, self.report)
        logger.info("Pipeline finished", artifacts=len(result.artifacts), errors=len(errors),
                    exit_code=result.exit_code)
        return result
