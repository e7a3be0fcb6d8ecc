"""
Truncated atomic measures along orbits: Abel measures
ν_λ = (1−λ)Σ a_nλⁿ δ_{Rⁿ(z)}, Voronoi measures built from Nörlund weights,
pairings against test families and weak-* scans along λ-paths.
"""

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from critspec.core.config import Thresholds, settings
from critspec.core.exceptions import CritspecError, PreconditionError, ProjectiveClassError
from critspec.core.observability import MetricsCollector, get_logger, trace_operation
from critspec.models.domain import PointLike, ScanVerdict, as_point
from critspec.services.potential import gamma
from critspec.services.riemann import RationalMap
from critspec.services.summability import (
    LambdaPath,
    NorlundWeights,
    SequenceLike,
    abel_average,
    as_source,
    functional_norm,
)

logger = get_logger(__name__)


class AtomicMeasure:
    """
    Finite complex measure Σ w_i δ_{t_i} with finite locations.

    Atoms closer than the merge radius are combined, keeping the first
    location in order of appearance.
    """

    def __init__(
        self,
        locations: Sequence[complex],
        weights: Sequence[complex],
        tail_bound: float = 0.0,
        merge_radius: Optional[float] = None,
        terms: int = 0,
    ):
        locs = np.asarray(locations, dtype=complex).ravel()
        w = np.asarray(weights, dtype=complex).ravel()
        if locs.size != w.size:
            raise PreconditionError("one weight per atom", atoms=int(locs.size), weights=int(w.size))
        if not np.all(np.isfinite(locs)):
            raise PreconditionError("finite atom locations")
        radius = settings.thresholds.merge_radius if merge_radius is None else merge_radius
        self.locations, self.weights = _merge(locs, w, radius)
        self.tail_bound = float(tail_bound)
        self.terms = int(terms)

    @classmethod
    def zero(cls) -> "AtomicMeasure":
        return cls([], [])

    @property
    def size(self) -> int:
        return int(self.locations.size)

    @cached_property
    def total_variation(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    @cached_property
    def mass(self) -> complex:
        return complex(np.sum(self.weights))

    def scaled(self, r: complex) -> "AtomicMeasure":
        return AtomicMeasure(self.locations, r * self.weights, abs(r) * self.tail_bound)

    def pair(self, f: Callable[[np.ndarray], np.ndarray]) -> complex:
        return measure_pairing(self, f)

    def to_json(self) -> Dict[str, Any]:
        return {
            "atoms": [
                {"z": [t.real, t.imag], "w": [w.real, w.imag]}
                for t, w in zip(self.locations, self.weights)
            ],
            "tv": self.total_variation,
            "mass": [self.mass.real, self.mass.imag],
            "tail_bound": self.tail_bound,
        }

    @classmethod
    def from_json(cls, data: Dict[str, Any]) -> "AtomicMeasure":
        atoms = data.get("atoms", [])
        locs = [complex(a["z"][0], a["z"][1]) for a in atoms]
        weights = [complex(a["w"][0], a["w"][1]) for a in atoms]
        return cls(locs, weights, data.get("tail_bound", 0.0))

    def __repr__(self) -> str:
        return f"AtomicMeasure(atoms={self.size}, tv={self.total_variation:.6g})"


def _merge(locs: np.ndarray, weights: np.ndarray, radius: float) -> Tuple[np.ndarray, np.ndarray]:
    if locs.size == 0:
        return locs, weights
    # exact duplicates first, in order of first appearance
    uniq, first, inverse = np.unique(locs, return_index=True, return_inverse=True)
    summed = np.zeros(uniq.size, dtype=complex)
    np.add.at(summed, inverse.ravel(), weights)
    order = np.argsort(first, kind="stable")
    locs = uniq[order]
    weights = summed[order]

    # near duplicates by grid hashing with cell size = radius
    cells: Dict[Tuple[int, int], List[int]] = {}
    keep: List[int] = []
    merged = weights.copy()
    for i, z in enumerate(locs):
        cx, cy = math.floor(z.real / radius), math.floor(z.imag / radius)
        target = None
        for dx, dy in itertools.product((-1, 0, 1), repeat=2):
            for j in cells.get((cx + dx, cy + dy), ()):
                if abs(locs[j] - z) <= radius:
                    target = j
                    break
            if target is not None:
                break
        if target is None:
            cells.setdefault((cx, cy), []).append(i)
            keep.append(i)
        else:
            merged[target] += weights[i]
    idx = np.asarray(keep, dtype=int)
    locs, merged = locs[idx], merged[idx]
    nonzero = merged != 0
    return locs[nonzero], merged[nonzero]


def measure_pairing(nu: AtomicMeasure, f: Callable[[np.ndarray], np.ndarray]) -> complex:
    """∫f dν = Σ w_i f(t_i) for a vectorized test function f."""
    if nu.size == 0:
        return 0j
    values = np.asarray(f(nu.locations), dtype=complex)
    if not np.all(np.isfinite(values)):
        raise PreconditionError("test function finite on the atoms")
    return complex(np.sum(nu.weights * values))


class OrbitTrace:
    """Points Rⁿ(z) served by index, with exact cycle detection."""

    def __init__(self, R: RationalMap, z: PointLike, thresholds: Optional[Thresholds] = None,
                 max_steps: Optional[int] = None):
        point = as_point(z)
        if point.infinite:
            raise PreconditionError("orbit avoids ∞", "the base point is ∞")
        th = thresholds or settings.thresholds
        self.R = R
        self.points: List[complex] = [point.value]
        self.preperiod: Optional[int] = None
        self.period: Optional[int] = None
        self._seen: Dict[complex, int] = {point.value: 0}
        self._escape = 2.0 / th.infinity_radius
        self._max_steps = settings.max_orbit_steps if max_steps is None else max_steps

    @property
    def periodic(self) -> bool:
        return self.period is not None

    def extend(self, count: int) -> None:
        while len(self.points) < count and not self.periodic:
            if len(self.points) > self._max_steps:
                raise PreconditionError("orbit horizon", requested=count, available=len(self.points))
            nxt = self.R.value(self.points[-1])
            if not (math.isfinite(nxt.real) and math.isfinite(nxt.imag)) or abs(nxt) > self._escape:
                raise PreconditionError(
                    "orbit avoids ∞", "kernel pairings are invalid along an escaping orbit",
                    step=len(self.points),
                )
            index = len(self.points)
            self.points.append(nxt)
            seen = self._seen.get(nxt)
            if seen is not None:
                self.preperiod, self.period = seen, index - seen
            else:
                self._seen[nxt] = index

    def indices(self, n: np.ndarray) -> np.ndarray:
        """Storage index of Rⁿ(z) for each n."""
        if n.size == 0:
            return n.astype(int)
        self.extend(int(n.max()) + 1)
        idx = n.astype(int).copy()
        if self.periodic:
            tail = idx >= self.preperiod
            idx[tail] = self.preperiod + (idx[tail] - self.preperiod) % self.period
        return idx

    def locations(self) -> np.ndarray:
        return np.asarray(self.points, dtype=complex)


def _accumulate(
    trace: OrbitTrace,
    weight_chunk: Callable[[int, int], np.ndarray],
    stop: int,
) -> Tuple[np.ndarray, np.ndarray]:
    """Sum per-index weights onto orbit points chunk by chunk, in index order."""
    chunk = settings.chunk_size
    acc: Optional[np.ndarray] = None
    for lo in range(0, stop, chunk):
        hi = min(lo + chunk, stop)
        idx = trace.indices(np.arange(lo, hi))
        w = weight_chunk(lo, hi)
        size = len(trace.points)
        if acc is None or acc.size < size:
            grown = np.zeros(size, dtype=complex)
            if acc is not None:
                grown[: acc.size] = acc
            acc = grown
        acc += np.bincount(idx, weights=w.real, minlength=size) \
            + 1j * np.bincount(idx, weights=w.imag, minlength=size)
    if acc is None:
        return np.zeros(0, dtype=complex), np.zeros(0, dtype=complex)
    return trace.locations()[: acc.size], acc


def _abel_weights(source, lam: complex) -> Callable[[int, int], np.ndarray]:
    log_scale = math.log(abs(1 - lam))
    arg_scale = math.atan2((1 - lam).imag, (1 - lam).real)
    log_lam = math.log(abs(lam)) if lam != 0 else -math.inf
    arg_lam = math.atan2(lam.imag, lam.real)

    def chunk(lo: int, hi: int) -> np.ndarray:
        logs, args = source.log_polar(lo, hi)
        n = np.arange(lo, hi, dtype=float)
        if lam == 0:
            out = np.zeros(hi - lo, dtype=complex)
            if lo == 0:
                out[0] = (1 - lam) * complex(source.values(0, 1)[0])
            return out
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(log_scale + logs + n * log_lam) * np.exp(1j * (arg_scale + args + n * arg_lam))

    return chunk


@trace_operation("build_abel_measure")
def build_abel_measure(
    R: RationalMap,
    z: PointLike,
    a: SequenceLike,
    lam: complex,
    N: Optional[int] = None,
    thresholds: Optional[Thresholds] = None,
    trace: Optional[OrbitTrace] = None,
) -> AtomicMeasure:
    """
    ν_λ = (1−λ)Σ_{n≤N} a_nλⁿ δ_{Rⁿ(z)}, merged by location.

    Without N the truncation follows abel_average's adaptive tail policy.

    Raises:
        PreconditionError: |λ| ≥ 1, or the orbit of z approaches ∞
    """
    lam = complex(lam)
    source = as_source(a)
    avg = abel_average(source, lam, N=N, tolerance=(thresholds or settings.thresholds).tail_tolerance)
    trace = trace or OrbitTrace(R, z, thresholds)
    locs, weights = _accumulate(trace, _abel_weights(source, lam), avg.terms)
    return AtomicMeasure(locs, weights, avg.tail_bound, terms=avg.terms)


def _radius_proxy(x: np.ndarray, w: NorlundWeights) -> Optional[float]:
    """
    Radius of convergence of N(|x|) from the trailing half of its coefficients.

    log c_k is fitted by α + β·log k + γ·k, so polynomial growth lands in β
    and only exponential growth moves the radius e^{−γ} away from 1.
    """
    n = x.size
    if n < 16:
        return None
    coeffs = np.convolve(w.q[:n], np.abs(x))[:n]
    k = np.arange(n // 2, n)
    k = k[coeffs[k] > 0]
    if k.size < 3:
        return math.inf
    design = np.column_stack([np.ones(k.size), np.log(k + 1.0), k.astype(float)])
    (_, _, rate), *_ = np.linalg.lstsq(design, np.log(coeffs[k]), rcond=None)
    return math.exp(-float(rate))


def _voronoi_truncated(
    trace: OrbitTrace,
    xs: np.ndarray,
    weights: NorlundWeights,
    lam: complex,
    th: Thresholds,
    cross_check_limit: int,
) -> AtomicMeasure:
    N = xs.size - 1
    radius = _radius_proxy(xs, weights)
    if radius is not None and radius < 1 - th.radius_slack:
        raise PreconditionError("N(|x|) has radius of convergence 1", radius=radius)

    powers = lam ** np.arange(N + 1)
    partial_q = np.cumsum(weights.q[: N + 1] * powers)
    by_atom = (1 - lam) * xs * powers * partial_q[N - np.arange(N + 1)]

    if N + 1 <= cross_check_limit:
        by_term = np.zeros(N + 1, dtype=complex)
        for n in range(N + 1):
            by_term[: n + 1] += powers[n] * weights.q[n::-1] * xs[: n + 1]
        by_term *= 1 - lam
        scale = max(float(np.sum(np.abs(by_atom))), 1e-300)
        discrepancy = float(np.sum(np.abs(by_term - by_atom)))
        if discrepancy > 1e-10 * scale:
            raise CritspecError(
                "Voronoi accumulation orders disagree",
                {"discrepancy": discrepancy, "scale": scale},
            )

    idx = trace.indices(np.arange(N + 1))
    locs = trace.locations()
    acc = np.zeros(locs.size, dtype=complex)
    np.add.at(acc, idx, by_atom)
    used = np.unique(idx)

    sup = float(np.max(np.abs(xs[N // 2:]))) if xs.size else 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        tail = abs(1 - lam) * sup * abs(weights.generating(lam)) * abs(lam) ** (N + 1) / (1 - abs(lam))
    MetricsCollector.track_series_terms("voronoi", N + 1)
    return AtomicMeasure(locs[used], acc[used], float(tail), terms=N + 1)


def within_tolerance(nu: AtomicMeasure, thresholds: Optional[Thresholds] = None) -> bool:
    """tail_bound ≤ tail_tolerance·max(TV, 1)."""
    th = thresholds or settings.thresholds
    return bool(nu.tail_bound <= th.tail_tolerance * max(nu.total_variation, 1.0))


@trace_operation("build_voronoi_measure")
def build_voronoi_measure(
    R: RationalMap,
    z: PointLike,
    x: SequenceLike,
    w: NorlundWeights,
    lam: complex,
    N: Optional[int] = None,
    thresholds: Optional[Thresholds] = None,
    cross_check_limit: int = 4096,
    trace: Optional[OrbitTrace] = None,
) -> AtomicMeasure:
    """
    ν_λ = (1−λ)Σ_{n≤N} T_nλⁿ with T_n = Σ_{k≤n} q_{n−k}x_k δ_{Rᵏ(z)}.

    The atom at Rᵏ(z) receives (1−λ)x_kλᵏ·Σ_{j≤N−k} q_jλʲ. For N up to
    cross_check_limit the direct accumulation over T_n is computed as well and
    both must agree to 1e−10 relative to the total variation.

    Without N a finite sequence is used in full; an unbounded one starts at
    the configured truncation and doubles N until the tail bound is within
    tail_tolerance·max(TV, 1), capped by max_terms.

    Raises:
        PreconditionError: |λ| ≥ 1, an escaping orbit, or N(|x|) with radius
            of convergence below 1
    """
    th = thresholds or settings.thresholds
    lam = complex(lam)
    if not abs(lam) < 1:
        raise PreconditionError("|λ| < 1", lam=[lam.real, lam.imag])
    source = as_source(x)
    trace = trace or OrbitTrace(R, z, th)

    if N is not None or source.length is not None:
        if N is None:
            N = source.length - 1
        xs = source.materialize(N + 1)
        return _voronoi_truncated(trace, xs, w.extended(xs.size), lam, th, cross_check_limit)

    cap = settings.max_terms
    stop = min(settings.series_truncation, cap)
    while True:
        xs = source.materialize(stop)
        nu = _voronoi_truncated(trace, xs, w.extended(stop), lam, th, cross_check_limit)
        if within_tolerance(nu, th) or stop >= cap or not source.available(2 * stop):
            break
        stop = min(2 * stop, cap)
    if not within_tolerance(nu, th):
        logger.debug("Voronoi measure truncated above tolerance", lam=[lam.real, lam.imag], terms=stop,
                     tail_bound=nu.tail_bound)
    return nu


# Test families and scans

@dataclass(frozen=True)
class TestFunction:
    __test__ = False

    name: str
    f: Callable[[np.ndarray], np.ndarray]

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.f(z)


def _monomial(j: int, k: int) -> TestFunction:
    return TestFunction(f"z^{j}*conj(z)^{k}", lambda z: z ** j * np.conj(z) ** k)


def _kernel(a: complex, radius: float) -> TestFunction:
    return TestFunction(f"gamma[{a.real:.6g}{a.imag:+.6g}j]", lambda z: gamma(a, z, radius))


class TestFamily:
    """Declared test functions for weak-* pairings."""

    __test__ = False

    def __init__(self, functions: Sequence[TestFunction]):
        if not functions:
            raise PreconditionError("non-empty test family")
        self.functions = list(functions)

    @property
    def names(self) -> List[str]:
        return [t.name for t in self.functions]

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    @classmethod
    def monomials(cls, max_degree: int = 6) -> "TestFamily":
        return cls([_monomial(j, k) for j in range(max_degree + 1) for k in range(max_degree + 1 - j)])

    @classmethod
    def default(
        cls,
        support: Sequence[complex],
        seed: int = 0,
        kernels: int = 8,
        max_degree: int = 6,
        thresholds: Optional[Thresholds] = None,
    ) -> "TestFamily":
        """
        Monomials z^j·conj(z)^k with j + k ≤ max_degree plus γ kernels at seeded
        random points at distance ≥ 0.1 from the support. Kernels are omitted
        when the support touches 0 or 1.
        """
        th = thresholds or settings.thresholds
        functions = cls.monomials(max_degree).functions
        pts = np.asarray(list(support), dtype=complex)
        if pts.size and (np.min(np.abs(pts)) < 0.1 or np.min(np.abs(pts - 1)) < 0.1):
            logger.warning("Support touches a kernel pole; using monomials only")
            return cls(functions)
        rng = np.random.default_rng(seed)
        extent = 1.0 + (float(np.max(np.abs(pts))) if pts.size else 1.0)
        chosen: List[complex] = []
        while len(chosen) < kernels:
            a = complex(rng.uniform(-extent, extent), rng.uniform(-extent, extent))
            if min(abs(a), abs(a - 1)) < 0.1:
                continue
            if pts.size and np.min(np.abs(pts - a)) < 0.1:
                continue
            chosen.append(a)
        functions.extend(_kernel(a, th.kernel_exclusion) for a in chosen)
        return cls(functions)


def argument_coherence(a: SequenceLike, lam: complex, N: Optional[int] = None) -> float:
    """α(λ) = Σ|λⁿa_n − |λⁿa_n|| / Σ|λⁿa_n| over the Abel truncation."""
    lam = complex(lam)
    source = as_source(a)
    terms = abel_average(source, lam).terms if N is None else N + 1
    log_lam = math.log(abs(lam)) if lam != 0 else -math.inf
    arg_lam = math.atan2(lam.imag, lam.real)
    num = 0.0
    den = 0.0
    chunk = settings.chunk_size
    for lo in range(0, terms, chunk):
        hi = min(lo + chunk, terms)
        logs, args = source.log_polar(lo, hi)
        n = np.arange(lo, hi, dtype=float)
        with np.errstate(over="ignore", invalid="ignore"):
            mod = np.exp(logs + n * log_lam) if lam != 0 else np.where(n == 0, np.exp(logs), 0.0)
        phase = np.exp(1j * (args + n * arg_lam))
        num += float(np.sum(np.abs(mod * phase - mod)))
        den += float(np.sum(mod))
    if den == 0:
        raise ProjectiveClassError()
    return num / den


@dataclass
class WeakStarScan:
    path: LambdaPath
    tests: TestFamily
    pairings: np.ndarray
    total_variation: np.ndarray
    tv_bound: np.ndarray
    scale: np.ndarray
    verdict: ScanVerdict
    normalizers: Optional[np.ndarray] = None
    limit_pairings: Optional[np.ndarray] = None
    coherence: Optional[np.ndarray] = None
    coherent: Optional[bool] = None
    tail_ok: Optional[np.ndarray] = None
    measures: List[AtomicMeasure] = field(default_factory=list)

    @property
    def tv_bound_holds(self) -> bool:
        ok = np.isinf(self.tv_bound) | (self.total_variation <= self.tv_bound * (1 + 1e-9) + 1e-300)
        return bool(np.all(ok))

    def to_frame(self) -> pd.DataFrame:
        data: Dict[str, Any] = {
            "lambda_re": self.path.samples.real,
            "lambda_im": self.path.samples.imag,
            "tv": self.total_variation,
        }
        for j, name in enumerate(self.tests.names):
            data[f"{name}_re"] = self.pairings[:, j].real
            data[f"{name}_im"] = self.pairings[:, j].imag
        return pd.DataFrame(data)

    def to_json(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {
            "path": self.path.to_json(),
            "tests": self.tests.names,
            "verdict": self.verdict.value,
            "tv": self.total_variation.tolist(),
            "tv_bound_holds": self.tv_bound_holds,
        }
        if self.tail_ok is not None:
            out["within_tail_tolerance"] = self.tail_ok.tolist()
        if self.normalizers is not None:
            out["normalizers"] = self.normalizers.tolist()
        if self.limit_pairings is not None:
            out["limit_pairings"] = [[p.real, p.imag] for p in self.limit_pairings]
        if self.coherence is not None:
            out["coherence"] = self.coherence.tolist()
            out["coherent"] = self.coherent
        return out


def _sequence_sup(source, terms: int) -> float:
    """sup_{n<terms}|a_n|; ∞ when the sequence escapes."""
    best = -math.inf
    chunk = settings.chunk_size
    for lo in range(0, terms, chunk):
        logs, _ = source.log_polar(lo, min(lo + chunk, terms))
        if logs.size:
            best = max(best, float(np.max(logs)))
    return math.exp(best) if best < 700 else math.inf


@trace_operation("weak_star_scan")
def weak_star_scan(
    R: RationalMap,
    z: PointLike,
    a: SequenceLike,
    path: LambdaPath,
    tests: Optional[TestFamily] = None,
    weights: Optional[NorlundWeights] = None,
    thresholds: Optional[Thresholds] = None,
    seed: int = 0,
    keep_measures: bool = False,
) -> WeakStarScan:
    """
    Pairings ⟨f, ν_λ⟩ and TV(ν_λ) along the path.

    null-limit: every pairing scaled by max(1, sup_atoms|f|) stays within the
    null threshold over the last window. nonnull-limit: the TV-normalized
    pairings are Cauchy over the last window and some is bounded away from 0.
    """
    th = thresholds or settings.thresholds
    source = as_source(a)
    trace = OrbitTrace(R, z, th)
    measures: List[AtomicMeasure] = []
    for lam in path.samples:
        if weights is None:
            nu = build_abel_measure(R, z, source, lam, thresholds=th, trace=trace)
        else:
            nu = build_voronoi_measure(R, z, source, weights, lam, thresholds=th, trace=trace)
        measures.append(nu)

    if tests is None:
        support = np.concatenate([m.locations for m in measures]) if measures else np.zeros(0)
        tests = TestFamily.default(np.unique(support), seed=seed, thresholds=th)

    K = len(measures)
    pairings = np.zeros((K, len(tests)), dtype=complex)
    scale = np.ones((K, len(tests)))
    tv = np.array([m.total_variation for m in measures])
    for i, nu in enumerate(measures):
        for j, t in enumerate(tests):
            pairings[i, j] = measure_pairing(nu, t)
            if nu.size:
                scale[i, j] = max(1.0, float(np.max(np.abs(t(nu.locations)))))

    tv_bound = np.empty(K)
    for i, (lam, nu) in enumerate(zip(path.samples, measures)):
        tv_bound[i] = functional_norm(lam) * _sequence_sup(source, nu.terms)
        if weights is not None:
            tv_bound[i] *= abs(weights.generating(abs(lam)))
    tail_ok = np.array([within_tolerance(nu, th) for nu in measures], dtype=bool)

    window = min(th.cauchy_window, K)
    tail = slice(K - window, K)
    scaled = np.abs(pairings[tail]) / scale[tail]

    verdict = ScanVerdict.UNDECIDED
    normalizers = None
    limit = None
    if not np.all(tail_ok):
        logger.info("Weak-* scan truncation above tolerance", points=int(np.sum(~tail_ok)))
    elif np.all(scaled <= th.scan_null):
        verdict = ScanVerdict.NULL_LIMIT
    elif np.all(tv[tail] > 0):
        normalizers = np.divide(1.0, tv, out=np.zeros_like(tv), where=tv > 0)
        normalized = pairings * normalizers[:, None] / scale
        last = normalized[tail]
        spread = max(
            (float(np.max(np.abs(u - v))) for u, v in itertools.combinations(last, 2)),
            default=0.0,
        )
        if spread <= th.scan_null and float(np.max(np.abs(last[-1]))) > th.scan_null:
            verdict = ScanVerdict.NONNULL_LIMIT
            limit = pairings[-1] * normalizers[-1]

    coherence = np.array([
        argument_coherence(source, lam, N=nu.terms - 1) if nu.size else 0.0
        for lam, nu in zip(path.samples, measures)
    ]) if weights is None else None
    coherent = bool(np.all(coherence[tail] <= th.coherence_max)) if coherence is not None else None

    logger.info("Weak-* scan finished", verdict=verdict.value, points=K, tests=len(tests))
    return WeakStarScan(
        path=path,
        tests=tests,
        pairings=pairings,
        total_variation=tv,
        tv_bound=tv_bound,
        scale=scale,
        verdict=verdict,
        normalizers=normalizers,
        limit_pairings=limit,
        coherence=coherence,
        coherent=coherent,
        tail_ok=tail_ok,
        measures=measures if keep_measures else [],
    )


@dataclass(frozen=True)
class ProjectiveLimit:
    """TV-normalized pairings along the path and whether they stabilize."""

    normalized: np.ndarray
    stable: bool
    limit: Optional[np.ndarray]
    spread: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "stable": self.stable,
            "spread": self.spread,
            "limit": None if self.limit is None else [[p.real, p.imag] for p in self.limit],
        }


def projective_normalize(scan: WeakStarScan, thresholds: Optional[Thresholds] = None) -> ProjectiveLimit:
    """
    Scale pairings by r_k = 1/TV(ν_{λ_k}) and test the last window for a limit.

    Raises:
        ProjectiveClassError: a measure in the last window vanishes identically
    """
    th = thresholds or settings.thresholds
    K = scan.total_variation.size
    window = min(th.cauchy_window, K)
    tail = slice(K - window, K)
    if np.any(scan.total_variation[tail] <= 0):
        raise ProjectiveClassError()
    normalized = scan.pairings / scan.total_variation[:, None]
    last = normalized[tail] / scan.scale[tail]
    spread = max(
        (float(np.max(np.abs(u - v))) for u, v in itertools.combinations(last, 2)),
        default=0.0,
    )
    stable = spread <= th.scan_null
    return ProjectiveLimit(normalized, stable, normalized[-1] if stable else None, spread)
