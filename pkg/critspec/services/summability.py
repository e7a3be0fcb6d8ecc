"""
Summability methods: Abel averages along λ-paths and Nörlund (Voronoi) averages.

Long Abel sums are evaluated in fixed-size chunks in log-polar form, so terms
λⁿa_n stay representable even when a_n alone overflows.
"""

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from critspec.core.config import Thresholds, settings
from critspec.core.exceptions import CritspecError, PreconditionError, WeightValidationError
from critspec.core.observability import MetricsCollector, get_logger, trace_operation
from critspec.models.domain import ConvergenceVerdict, PathKind, SummabilityMethod
from critspec.services.spectrum import ExplicitSequence, FormulaSequence, SequenceSource

logger = get_logger(__name__)

SequenceLike = Union[SequenceSource, Sequence[complex], np.ndarray]


def as_source(a: SequenceLike) -> SequenceSource:
    if isinstance(a, SequenceSource):
        return a
    return ExplicitSequence(a)


def _check_disk(lam: complex) -> None:
    if not abs(lam) < 1:
        raise PreconditionError("|λ| < 1", lam=[lam.real, lam.imag])


def functional_norm(lam: complex) -> float:
    """‖P_λ‖ = |1−λ|/(1−|λ|)."""
    lam = complex(lam)
    _check_disk(lam)
    return abs(1 - lam) / (1 - abs(lam))


def norm_witness(lam: complex) -> FormulaSequence:
    """a_n = e^{−in·arg λ}, a unit-bounded sequence with |P_λ(a)| = ‖P_λ‖."""
    theta = cmath.phase(complex(lam))
    return FormulaSequence(lambda n: np.exp(-1j * theta * n), name="norm-witness")


@dataclass(frozen=True)
class LambdaPath:
    """Samples λ_1..λ_K approaching 1 inside the unit disk."""

    kind: PathKind
    samples: np.ndarray
    alpha: float = 1.0

    def __post_init__(self) -> None:
        if self.samples.size == 0:
            raise PreconditionError("non-empty path")
        if np.any(np.abs(self.samples) >= 1):
            raise PreconditionError("|λ| < 1 along the path")

    @classmethod
    def radial(cls, K: int = 20) -> "LambdaPath":
        k = np.arange(1, K + 1)
        return cls(PathKind.RADIAL, (1.0 - 2.0 ** (-k)).astype(complex))

    @classmethod
    def stolz(cls, alpha: float, K: int = 20) -> "LambdaPath":
        """
        λ_k = 1 − r_k e^{−iθ_k} with r_k = 2⁻ᵏ and θ_k chosen so that
        |1−λ_k|/(1−|λ_k|) = α exactly; θ_k → arccos(1/α).
        """
        if alpha < 1:
            raise PreconditionError("α >= 1", alpha=alpha)
        r = 2.0 ** (-np.arange(1, K + 1, dtype=float))
        cos_theta = 1.0 / alpha + r * (1.0 - 1.0 / alpha ** 2) / 2.0
        if np.any(cos_theta > 1):
            raise PreconditionError("Stolz ratio reachable at every radius", alpha=alpha)
        theta = np.arccos(cos_theta)
        return cls(PathKind.STOLZ, 1.0 - r * np.exp(-1j * theta), float(alpha))

    @classmethod
    def explicit(cls, samples: Sequence[complex]) -> "LambdaPath":
        return cls(PathKind.EXPLICIT, np.asarray(samples, dtype=complex))

    @property
    def ratios(self) -> np.ndarray:
        return np.abs(1 - self.samples) / (1 - np.abs(self.samples))

    def to_json(self) -> Dict[str, Any]:
        return {"kind": self.kind.value, "alpha": self.alpha, "K": int(self.samples.size)}


@dataclass(frozen=True)
class AbelValue:
    """(1−λ)Σ_{n≤N} a_nλⁿ with its tail bound."""

    lam: complex
    value: complex
    tail_bound: float
    terms: int
    converged: bool

    def to_json(self) -> Dict[str, Any]:
        return {
            "lambda": [self.lam.real, self.lam.imag],
            "value": [self.value.real, self.value.imag],
            "tail_bound": self.tail_bound,
            "terms": self.terms,
        }


def _chunked_abel_sum(source: SequenceSource, lam: complex, start: int, stop: int, chunk: int) -> complex:
    """Σ_{start≤n<stop} a_nλⁿ, chunk by chunk in index order."""
    log_lam = math.log(abs(lam)) if lam != 0 else -math.inf
    arg_lam = math.atan2(lam.imag, lam.real)
    total = 0j
    for lo in range(start, stop, chunk):
        hi = min(lo + chunk, stop)
        if lam == 0:
            if lo == 0:
                total += complex(source.values(0, 1)[0])
            break
        logs, args = source.log_polar(lo, hi)
        n = np.arange(lo, hi, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            terms = np.exp(logs + n * log_lam) * np.exp(1j * (args + n * arg_lam))
        total += complex(np.sum(terms))
    return total


def _tail_bound(source: SequenceSource, lam: complex, N: int) -> float:
    """|1−λ|·sup_{N/2<n≤N}|a_n|·|λ|^{N+1}/(1−|λ|)."""
    if lam == 0:
        return 0.0
    lo = N // 2 + 1
    logs, _ = source.log_polar(lo, N + 1) if lo <= N else source.log_polar(N, N + 1)
    sup_log = float(np.max(logs)) if logs.size else -math.inf
    log_bound = math.log(abs(1 - lam)) + sup_log + (N + 1) * math.log(abs(lam)) - math.log(1 - abs(lam))
    return math.exp(log_bound) if log_bound < 700 else math.inf


@trace_operation("abel_average")
def abel_average(
    a: SequenceLike,
    lam: complex,
    N: Optional[int] = None,
    tolerance: Optional[float] = None,
    max_terms: Optional[int] = None,
) -> AbelValue:
    """
    Abel average P_λ = (1−λ)Σ a_nλⁿ.

    With an explicit N the sum runs over n ≤ N. Otherwise N is chosen
    adaptively: starting from the configured truncation, N doubles until
    tail_bound ≤ tolerance·max(1, |value|), capped by max_terms and by the
    sequence length.

    Raises:
        PreconditionError: |λ| ≥ 1 or an empty sequence
    """
    lam = complex(lam)
    _check_disk(lam)
    source = as_source(a)
    tol = settings.thresholds.tail_tolerance if tolerance is None else tolerance
    cap = settings.max_terms if max_terms is None else max_terms
    chunk = settings.chunk_size
    length = source.length
    if length is not None and length < 1:
        raise PreconditionError("non-empty sequence")

    if N is not None:
        stop = N + 1 if length is None else min(N + 1, length)
        total = _chunked_abel_sum(source, lam, 0, stop, chunk)
        value = (1 - lam) * total
        bound = _tail_bound(source, lam, stop - 1)
        MetricsCollector.track_series_terms("abel", stop)
        return AbelValue(lam, value, bound, stop, bound <= tol * max(1.0, abs(value)))

    limit = cap if length is None else min(cap, length)
    stop = min(settings.series_truncation, limit)
    while not source.available(stop) and stop > 1:
        stop = max(1, stop // 2)
        limit = stop
    total = _chunked_abel_sum(source, lam, 0, stop, chunk)
    while True:
        value = (1 - lam) * total
        bound = _tail_bound(source, lam, stop - 1)
        converged = bound <= tol * max(1.0, abs(value))
        if converged or stop >= limit:
            break
        new_stop = min(2 * stop, limit)
        if not source.available(new_stop):
            limit = stop
            break
        total += _chunked_abel_sum(source, lam, stop, new_stop, chunk)
        stop = new_stop

    MetricsCollector.track_series_terms("abel", stop)
    if not converged:
        logger.debug("Abel sum truncated above tolerance", lam=[lam.real, lam.imag], terms=stop, tail_bound=bound)
    return AbelValue(lam, value, bound, stop, converged)


def cauchy_verdict(
    values: Sequence[complex],
    window: int,
    tolerance: float,
    divergence_radius: float,
) -> Tuple[ConvergenceVerdict, Optional[complex]]:
    """Verdict from the last `window` values: Cauchy, escaping or bounded oscillation."""
    vals = np.asarray(values, dtype=complex)
    if vals.size < window:
        return ConvergenceVerdict.UNDECIDED, None
    tail = vals[-window:]
    if not np.all(np.isfinite(tail)) or np.any(np.abs(tail) > divergence_radius):
        return ConvergenceVerdict.DIVERGES, None
    spread = max(abs(u - v) for u, v in itertools.combinations(tail, 2))
    if spread < tolerance:
        return ConvergenceVerdict.CONVERGES_TO, complex(np.mean(tail))
    return ConvergenceVerdict.OSCILLATES, None


@dataclass
class SummabilityReport:
    method: SummabilityMethod
    verdict: ConvergenceVerdict
    limit: Optional[complex] = None
    path: Optional[LambdaPath] = None
    values: List[AbelValue] = field(default_factory=list)
    averages: Optional[np.ndarray] = None
    cluster_sample: List[complex] = field(default_factory=list)

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "method": self.method.value,
            "path": self.path.to_json() if self.path is not None else None,
            "values": [v.to_json() for v in self.values],
            "verdict": self.verdict.value,
            "limit": None if self.limit is None else [self.limit.real, self.limit.imag],
        }
        if self.averages is not None:
            data["averages"] = [[t.real, t.imag] for t in self.averages]
        if self.cluster_sample:
            data["cluster_sample"] = [[z.real, z.imag] for z in self.cluster_sample]
        return data


@trace_operation("abel_scan")
def abel_scan(
    a: SequenceLike,
    path: LambdaPath,
    thresholds: Optional[Thresholds] = None,
    max_terms: Optional[int] = None,
) -> SummabilityReport:
    """
    Evaluate P_λ along the path and decide convergence from the last values.

    Any path point whose truncation misses the tail tolerance makes the
    verdict undecided.
    """
    th = thresholds or settings.thresholds
    source = as_source(a)
    values = [abel_average(source, lam, tolerance=th.tail_tolerance, max_terms=max_terms)
              for lam in path.samples]
    verdict, limit = cauchy_verdict(
        [v.value for v in values], th.cauchy_window, th.cauchy_tolerance, th.divergence_radius
    )
    if not all(v.converged for v in values):
        verdict, limit = ConvergenceVerdict.UNDECIDED, None

    cluster: List[complex] = []
    if path.kind != PathKind.RADIAL:
        cluster = [v.value for v in values[-th.cauchy_window:]]

    logger.info("Abel scan finished", path=path.kind.value, verdict=verdict.value, points=len(values))
    return SummabilityReport(SummabilityMethod.ABEL, verdict, limit, path, values, cluster_sample=cluster)


# Nörlund weights

_FAMILIES = ("constant", "arithmetic", "geometric")


@dataclass(frozen=True)
class NorlundWeights:
    """Validated weights q_0..q_M with partial sums Q_n and an optional generator."""

    q: np.ndarray
    Q: np.ndarray
    family: Optional[str] = None
    ratio: Optional[float] = None

    @property
    def size(self) -> int:
        return int(self.q.size)

    @property
    def is_identity(self) -> bool:
        return bool(np.all(self.q[1:] == 0))

    @property
    def is_constant(self) -> bool:
        return bool(np.all(self.q == self.q[0]))

    def extended(self, size: int) -> "NorlundWeights":
        """Weights of at least `size` entries, via the generator when needed."""
        if size <= self.size:
            return self
        if self.family is None:
            if self.is_identity:
                return NorlundWeights(np.concatenate([self.q, np.zeros(size - self.size)]),
                                      np.full(size, self.Q[0]))
            raise PreconditionError("weights cover the sequence", weights=self.size, required=size)
        return weight_family(self.family, size, self.ratio)

    def generating(self, lam: complex) -> complex:
        """q(λ) = Σ q_nλⁿ; closed form for named families, polynomial otherwise."""
        lam = complex(lam)
        _check_disk(lam)
        scale = float(self.q[0])
        if self.family == "constant":
            return scale / (1 - lam)
        if self.family == "arithmetic":
            return scale / (1 - lam) ** 2
        if self.family == "geometric" and self.ratio is not None:
            if abs(self.ratio * lam) >= 1:
                return complex(math.inf)
            return scale / (1 - self.ratio * lam)
        return complex(np.polynomial.polynomial.polyval(lam, self.q))

    def partial_generating(self, lam: complex, m: int) -> complex:
        """q_{≤m}(λ) = Σ_{j≤m} q_jλʲ."""
        w = self.extended(m + 1)
        return complex(np.polynomial.polynomial.polyval(complex(lam), w.q[: m + 1]))

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"size": self.size}
        if self.family is not None:
            data["family"] = self.family
            if self.ratio is not None:
                data["ratio"] = self.ratio
        else:
            data["q"] = self.q.tolist()
        return data


def norlund_validate(
    q: Sequence[float],
    family: Optional[str] = None,
    ratio: Optional[float] = None,
    thresholds: Optional[Thresholds] = None,
) -> NorlundWeights:
    """
    Validate Nörlund weights.

    Raises:
        WeightValidationError: q_0 ≤ 0, a negative weight, or a trailing ratio
            q_M/Q_M above the declared threshold
    """
    th = thresholds or settings.thresholds
    arr = np.asarray(q, dtype=float)
    if arr.size == 0:
        raise WeightValidationError("empty weight list")
    if not np.all(np.isfinite(arr)):
        raise WeightValidationError("weights must be finite")
    if arr[0] <= 0:
        raise WeightValidationError("q_0 must be positive")
    if np.any(arr < 0):
        raise WeightValidationError("weights must be non-negative")
    Q = np.cumsum(arr)
    trailing = float(arr[-1] / Q[-1]) if arr.size > 1 else 0.0
    if arr.size > 1 and trailing > th.norlund_ratio:
        raise WeightValidationError(
            f"trailing ratio q_n/Q_n = {trailing:.4g} exceeds {th.norlund_ratio}"
        )
    return NorlundWeights(arr, Q, family, ratio)


def weight_family(
    name: str,
    M: int,
    r: Optional[float] = None,
    thresholds: Optional[Thresholds] = None,
) -> NorlundWeights:
    """Named weight families of size M: constant, arithmetic (n+1) or geometric rⁿ."""
    if name not in _FAMILIES:
        raise WeightValidationError(f"unknown weight family '{name}'")
    n = np.arange(M, dtype=float)
    if name == "constant":
        q = np.ones(M)
    elif name == "arithmetic":
        q = n + 1.0
    else:
        if r is None or r <= 0:
            raise WeightValidationError("geometric weights need a positive ratio r")
        q = float(r) ** n
    return norlund_validate(q, family=name, ratio=r if name == "geometric" else None, thresholds=thresholds)


def identity_weights(M: int = 1) -> NorlundWeights:
    q = np.zeros(M)
    q[0] = 1.0
    return norlund_validate(q)


def q_generating(w: NorlundWeights, lam: complex) -> complex:
    return w.generating(lam)


def q_positive_on_grid(w: NorlundWeights, grid: Optional[Sequence[float]] = None) -> bool:
    """Spot-check q(λ) > 0 on a grid in [0, 1)."""
    points = np.linspace(0.0, 0.99, 100) if grid is None else np.asarray(grid, dtype=float)
    return all(w.generating(float(x)).real > 0 for x in points)


@trace_operation("norlund_averages")
def norlund_averages(x: Sequence[complex], w: NorlundWeights) -> np.ndarray:
    """t_n = (q_n x_0 + q_{n−1}x_1 + … + q_0 x_n)/Q_n."""
    xs = np.asarray(x, dtype=complex)
    n = xs.size
    if n == 0:
        return xs.copy()
    weights = w.extended(n)
    if weights.is_identity:
        return xs.copy()
    Q = weights.Q[:n]
    if weights.is_constant:
        if weights.q[0] == 1.0:
            return np.cumsum(xs) / Q
        return weights.q[0] * np.cumsum(xs) / Q
    conv = np.convolve(weights.q[:n], xs)[:n]
    MetricsCollector.track_series_terms("norlund", n)
    return conv / Q


def cesaro_means(x: Sequence[complex]) -> np.ndarray:
    xs = np.asarray(x, dtype=complex)
    return norlund_averages(xs, weight_family("constant", max(xs.size, 5)))


@dataclass(frozen=True)
class RegularityVerdict:
    regular: bool
    estimate: float
    slack: float

    def to_json(self) -> Dict[str, Any]:
        return {"regular": self.regular, "estimate": self.estimate, "slack": self.slack}


def norlund_regularity_check(
    t: Sequence[complex],
    thresholds: Optional[Thresholds] = None,
) -> RegularityVerdict:
    """limsup |t_n|^{1/n} over the trailing half; regular when ≤ 1 + slack."""
    th = thresholds or settings.thresholds
    ts = np.asarray(t, dtype=complex)
    if ts.size < 16:
        raise PreconditionError("at least 16 averages", length=int(ts.size))
    n = np.arange(ts.size // 2, ts.size)
    n = n[n >= 1]
    with np.errstate(divide="ignore"):
        rates = np.log(np.abs(ts[n])) / n
    estimate = float(np.exp(np.max(rates)))
    return RegularityVerdict(estimate <= 1.0 + th.regularity_slack, estimate, th.regularity_slack)


@dataclass(frozen=True)
class ConvolutionValue:
    value: complex
    discrepancy: float
    tail_bound: float


def convolution_series(
    x: Sequence[complex],
    w: NorlundWeights,
    lam: complex,
) -> ConvolutionValue:
    """
    [N(x)](λ) = Σ_n (Σ_i q_i x_{n−i}) λⁿ, evaluated by direct convolution and as
    Σ t_n Q_n λⁿ; the two must agree.
    """
    lam = complex(lam)
    _check_disk(lam)
    xs = np.asarray(x, dtype=complex)
    n = xs.size
    weights = w.extended(n)
    powers = lam ** np.arange(n)
    direct_coeffs = np.convolve(weights.q[:n], xs)[:n]
    direct = complex(np.sum(direct_coeffs * powers))
    t = norlund_averages(xs, weights)
    via_t = complex(np.sum(t * weights.Q[:n] * powers))

    scale = float(np.sum(np.abs(direct_coeffs * powers))) or 1.0
    discrepancy = abs(direct - via_t)
    if discrepancy > 1e-8 * scale:
        raise CritspecError(
            "convolution orders disagree",
            {"discrepancy": discrepancy, "scale": scale},
        )
    lo = n // 2
    sup = float(np.max(np.abs(direct_coeffs[lo:]))) if n > 1 else float(abs(direct_coeffs[0]))
    tail = abs(1 - lam) * sup * abs(lam) ** n / (1 - abs(lam))
    return ConvolutionValue(direct, discrepancy, tail)


def summability_report_norlund(
    x: Sequence[complex],
    w: NorlundWeights,
    thresholds: Optional[Thresholds] = None,
) -> SummabilityReport:
    """Nörlund averages with the last-window convergence verdict."""
    th = thresholds or settings.thresholds
    t = norlund_averages(x, w)
    verdict, limit = cauchy_verdict(t, th.cauchy_window, th.cauchy_tolerance, th.divergence_radius)
    method = SummabilityMethod.CESARO if w.is_constant and not w.is_identity else SummabilityMethod.NORLUND
    return SummabilityReport(method, verdict, limit, averages=t)
