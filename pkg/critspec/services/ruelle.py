"""
The complex Ruelle operator R_*φ(z) = Σ_{R(y)=z} φ(y)/R'(y)², the Beltrami
operator, the Poincaré series A and B and numerical checks of the identities
relating them.
"""

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from critspec.core.config import Thresholds, settings
from critspec.core.exceptions import BranchCollisionError, CritspecError, PoleError, PreconditionError
from critspec.core.observability import MetricsCollector, get_logger, trace_operation
from critspec.models.domain import INFINITY, PointLike, as_point
from critspec.models.schemas import GridSpec
from critspec.services.measures import build_abel_measure, build_voronoi_measure
from critspec.services.potential import FieldSample, gamma, gamma_or_zero, potential_of_measure, sample_field
from critspec.services.riemann import RationalMap, is_normalized
from critspec.services.spectrum import Spectrum, SpectrumSource, radius_of_convergence, spectrum
from critspec.services.summability import NorlundWeights

logger = get_logger(__name__)

MAX_TREE_DEPTH = 8

Field = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CriticalData:
    """Finite simple critical points c_i with v_i = R(c_i) and R''(c_i)."""

    points: Tuple[complex, ...]
    values: Tuple[complex, ...]
    second: Tuple[complex, ...]

    @classmethod
    def of(cls, R: RationalMap) -> "CriticalData":
        crit = R.critical_points()
        if any(c.point.infinite for c in crit):
            raise PreconditionError("finite critical points", "∞ is a critical point of the map")
        if any(not c.is_simple for c in crit):
            raise PreconditionError("simple critical points")
        pts = tuple(sorted((c.point.value for c in crit), key=lambda z: (z.real, z.imag)))
        return cls(pts, tuple(R.value(c) for c in pts), tuple(R.second_derivative(c) for c in pts))


def _critical_values(R: RationalMap) -> np.ndarray:
    return np.array([v.value for v in R.critical_values() if not v.infinite], dtype=complex)


def _check_branches(R: RationalMap, z: complex, critical_values: np.ndarray, depth: int) -> None:
    radius = settings.thresholds.kernel_exclusion
    if critical_values.size and np.min(np.abs(critical_values - z)) <= radius * (1 + abs(z)):
        raise BranchCollisionError(z, depth)


def _finite_preimages(R: RationalMap, z: complex, depth: int) -> List[complex]:
    found = R.preimages(z)
    if any(m.point.infinite for m in found):
        raise PreconditionError("z ≠ R(∞)", "a branch of the preimage tree runs through ∞", depth=depth)
    if any(not m.is_simple for m in found):
        raise BranchCollisionError(z, depth)
    return [m.point.value for m in found]


@dataclass
class PreimageTree:
    """
    Levels of R^{-n}(z), n = 0..depth, each node carrying (Rⁿ)'(y).

    Node derivative products are built incrementally:
    (R^{n+1})'(y) = (Rⁿ)'(R(y))·R'(y).
    """

    root: complex
    nodes: List[np.ndarray] = field(default_factory=list)
    derivatives: List[np.ndarray] = field(default_factory=list)

    @classmethod
    @trace_operation("preimage_tree")
    def build(cls, R: RationalMap, z: complex, depth: int) -> "PreimageTree":
        if depth > MAX_TREE_DEPTH:
            raise PreconditionError(f"depth <= {MAX_TREE_DEPTH}", depth=depth)
        z = complex(z)
        crit_values = _critical_values(R)
        tree = cls(z, [np.array([z])], [np.array([1.0 + 0j])])
        memo: Dict[complex, List[complex]] = {}
        for level in range(1, depth + 1):
            ys: List[complex] = []
            ds: List[complex] = []
            for w, dw in zip(tree.nodes[-1], tree.derivatives[-1]):
                w = complex(w)
                if w not in memo:
                    _check_branches(R, w, crit_values, level - 1)
                    memo[w] = _finite_preimages(R, w, level - 1)
                for y in memo[w]:
                    ys.append(y)
                    ds.append(dw * R.derivative(y))
            tree.nodes.append(np.asarray(ys, dtype=complex))
            tree.derivatives.append(np.asarray(ds, dtype=complex))
        return tree

    @property
    def depth(self) -> int:
        return len(self.nodes) - 1

    def level_sum(self, phi: Field, n: int) -> complex:
        """Σ_{y∈R^{-n}(z)} φ(y)/((Rⁿ)'(y))²."""
        ys = self.nodes[n]
        return complex(np.sum(np.asarray(phi(ys), dtype=complex) / self.derivatives[n] ** 2))

    def level_sums(self, phi: Field) -> np.ndarray:
        return np.array([self.level_sum(phi, n) for n in range(self.depth + 1)], dtype=complex)


@trace_operation("ruelle_apply")
def ruelle_apply(R: RationalMap, phi: Field, z: complex) -> complex:
    """
    R_*φ(z) = Σ_{y∈R^{-1}(z)} φ(y)/R'(y)².

    Raises:
        BranchCollisionError: z within 1e−9 of a critical value
    """
    return PreimageTree.build(R, z, 1).level_sum(phi, 1)


@trace_operation("ruelle_power")
def ruelle_power(R: RationalMap, phi: Field, z: complex, n: int) -> complex:
    """(R_*)ⁿφ(z) over the full preimage tree; n ≤ 8."""
    if n < 0:
        raise PreconditionError("n >= 0", n=n)
    if n == 0:
        return complex(np.asarray(phi(np.array([complex(z)])))[0])
    return PreimageTree.build(R, z, n).level_sum(phi, n)


def pushforward(R: RationalMap, phi: Field, n: int = 1) -> Field:
    """The field (R_*)ⁿφ as a vectorized callable."""

    def field_(zs: np.ndarray) -> np.ndarray:
        flat = np.asarray(zs, dtype=complex).ravel()
        out = np.array([ruelle_power(R, phi, z, n) for z in flat], dtype=complex)
        return out.reshape(np.shape(zs))

    return field_


def ruelle_apply_array(R: RationalMap, phi: Field, zs: np.ndarray) -> np.ndarray:
    """R_*φ on many points through batched preimages; NaN where a preimage is missing."""
    zs = np.asarray(zs, dtype=complex)
    ys = R.preimage_array(zs.ravel())
    deriv = R.derivative_values(ys)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.asarray(phi(ys), dtype=complex) / deriv ** 2
    return np.sum(terms, axis=1).reshape(zs.shape)


class KernelCombo:
    """
    Finite formal sum Σ c_i γ_{a_i}; parameters at 0 or 1 carry the zero kernel.
    """

    def __init__(self, terms: Sequence[Tuple[complex, complex]] = ()):
        merged: Dict[complex, complex] = {}
        for a, c in terms:
            a = complex(a)
            if a == 0 or a == 1:
                continue
            merged[a] = merged.get(a, 0j) + complex(c)
        self.terms: List[Tuple[complex, complex]] = [(a, c) for a, c in merged.items() if c != 0]

    def __len__(self) -> int:
        return len(self.terms)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.evaluate(z)

    def evaluate(self, z: Any, exclusion_radius: Optional[float] = None) -> Any:
        zs = np.asarray(z, dtype=complex)
        total = np.zeros(zs.shape, dtype=complex)
        for a, c in self.terms:
            total = total + c * gamma(a, zs, exclusion_radius)
        return complex(total) if total.ndim == 0 else total

    def pushforward(self, R: RationalMap, critical: Optional[CriticalData] = None) -> "KernelCombo":
        """
        R_*(γ_a) = (1/R'(a))γ_{R(a)} + Σ_i γ_a(c_i)/R''(c_i)·γ_{v_i}, term by term.
        """
        crit = critical or CriticalData.of(R)
        out: List[Tuple[complex, complex]] = []
        for a, c in self.terms:
            out.append((R.value(a), c / R.derivative(a)))
            for ci, vi, d2 in zip(crit.points, crit.values, crit.second):
                out.append((vi, c * gamma(a, ci) / d2))
        return KernelCombo(out)

    def to_json(self) -> List[Dict[str, List[float]]]:
        return [{"a": [a.real, a.imag], "c": [c.real, c.imag]} for a, c in self.terms]


@dataclass(frozen=True)
class SeriesTruncation:
    N: int
    term_log10: Tuple[float, ...]
    tail_bound: float
    method: str = "geometric-fit"

    def to_json(self) -> Dict[str, Any]:
        return {
            "N": self.N,
            "term_log10": list(self.term_log10),
            "tail_bound": self.tail_bound,
            "method": self.method,
        }


def _truncation(terms: np.ndarray) -> SeriesTruncation:
    mags = np.abs(terms)
    with np.errstate(divide="ignore"):
        logs = np.log10(mags)
    N = terms.size - 1
    nz = mags[mags > 0]
    if nz.size < 2:
        return SeriesTruncation(N, tuple(float(x) for x in logs), 0.0 if nz.size == 0 else math.inf)
    tail = nz[nz.size // 2:] if nz.size >= 4 else nz
    ratio = float(np.exp(np.mean(np.diff(np.log(tail))))) if tail.size >= 2 else 1.0
    bound = float(mags[-1] * ratio / (1 - ratio)) if ratio < 1 else math.inf
    return SeriesTruncation(N, tuple(float(x) for x in logs), bound)


@dataclass(frozen=True)
class OrbitCoefficients:
    """Orbit points p_n = Rⁿ(a) and derivative products (Rⁿ)'(a), n = 0..N."""

    points: np.ndarray
    derivatives: np.ndarray

    @classmethod
    def of(cls, R: RationalMap, a: complex, N: int) -> "OrbitCoefficients":
        pts = [complex(a)]
        ders = [1.0 + 0j]
        for n in range(N):
            try:
                d = R.derivative(pts[-1])
            except PoleError:
                raise PreconditionError("orbit avoids ∞", step=n)
            if d == 0:
                raise PreconditionError("orbit avoids critical points", step=n)
            ders.append(ders[-1] * d)
            pts.append(R.value(pts[-1]))
        return cls(np.asarray(pts), np.asarray(ders))

    def coefficients(self, z: complex, exclusion_radius: Optional[float] = None) -> np.ndarray:
        """α_n(z) = γ_{p_n}(z)/(Rⁿ)'(a)."""
        out = np.empty(self.points.size, dtype=complex)
        for n, (p, d) in enumerate(zip(self.points, self.derivatives)):
            out[n] = gamma_or_zero(p, z, exclusion_radius) / d
        return out


def _powers(lam: complex, N: int) -> np.ndarray:
    return complex(lam) ** np.arange(N + 1)


def _orbit_radius(R: RationalMap, a: complex, N: int) -> float:
    """Radius of convergence of Σ λⁿ/(Rⁿ)'(a); infinite when the estimate has too few entries."""
    try:
        derivatives = OrbitCoefficients.of(R, a, N).derivatives
        return radius_of_convergence(Spectrum.from_sequence(1.0 / derivatives)).radius
    except PreconditionError:
        return math.inf


@trace_operation("poincare_A")
def poincare_A(R: RationalMap, a: complex, z: complex, lam: complex, N: int) -> Tuple[complex, SeriesTruncation]:
    """
    A_a(z, λ) = Σ_{n≤N} λⁿ γ_{Rⁿ(a)}(z)/(Rⁿ)'(a).

    Raises:
        PreconditionError: |λ| at or beyond the radius of convergence of σ(a)
        KernelPoleError: z within the exclusion radius of an orbit point or of {0, 1}
    """
    lam = complex(lam)
    if lam != 0:
        radius = _orbit_radius(R, a, max(N, 64))
        if abs(lam) >= radius:
            raise PreconditionError("|λ| below the radius of convergence of σ(a)", radius=radius)
    coeffs = OrbitCoefficients.of(R, a, N).coefficients(z)
    terms = coeffs * _powers(lam, N)
    MetricsCollector.track_series_terms("poincare_A", N + 1)
    return complex(np.sum(terms)), _truncation(terms)


@trace_operation("poincare_B")
def poincare_B(R: RationalMap, a: complex, z: complex, lam: complex, N: int) -> Tuple[complex, SeriesTruncation]:
    """
    B_a(z, λ) = Σ_{n≤N} λⁿ (R_*)ⁿγ_a(z) over the preimage tree of z; N ≤ 8.

    Raises:
        BranchCollisionError: a tree node meets a critical value
        KernelPoleError: a tree node near a pole of γ_a
    """
    lam = complex(lam)
    if not abs(lam) < 1:
        raise PreconditionError("|λ| < 1", lam=[lam.real, lam.imag])
    tree = PreimageTree.build(R, z, N)
    sums = tree.level_sums(lambda y: gamma(a, y))
    terms = sums * _powers(lam, N)
    MetricsCollector.track_series_terms("poincare_B", N + 1)
    return complex(np.sum(terms)), _truncation(terms)


# Identity checks

@dataclass(frozen=True)
class ResidualSample:
    z: complex
    lhs: complex
    rhs: complex
    rel_residual: float
    order_matched: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "z": [self.z.real, self.z.imag],
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "rel_residual": self.rel_residual,
            "order_matched_residual": self.order_matched,
        }


@dataclass(frozen=True)
class ResidualReport:
    identity: str
    lam: complex
    N: int
    samples: Tuple[ResidualSample, ...]

    @property
    def max_rel_residual(self) -> float:
        return max((s.rel_residual for s in self.samples), default=0.0)

    @property
    def max_order_matched_residual(self) -> float:
        return max((s.order_matched for s in self.samples), default=0.0)

    def to_json(self) -> Dict[str, Any]:
        return {
            "identity": self.identity,
            "lambda": [self.lam.real, self.lam.imag],
            "N": self.N,
            "samples": [s.to_json() for s in self.samples],
            "max_rel_residual": self.max_rel_residual,
            "max_order_matched_residual": self.max_order_matched_residual,
        }


def _relative(lhs: complex, rhs: complex) -> float:
    scale = max(abs(lhs), abs(rhs))
    return abs(lhs - rhs) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class Admissibility:
    ok: bool
    violations: Tuple[str, ...]

    def to_json(self) -> Dict[str, Any]:
        return {"ok": self.ok, "violations": list(self.violations)}


def admissible_for_identity(R: RationalMap, steps: int = 12, thresholds: Optional[Thresholds] = None) -> Admissibility:
    """
    Preconditions of the orbit identities: R fixes 0, 1, ∞; critical points
    are finite, simple and not fixed; critical orbits avoid {0, 1, ∞} and the
    critical points for `steps` steps.
    """
    th = thresholds or settings.thresholds
    violations: List[str] = []
    if not is_normalized(R):
        violations.append("map fixes 0, 1 and ∞")
    try:
        crit = CriticalData.of(R)
    except PreconditionError as exc:
        violations.append(exc.message)
        return Admissibility(False, tuple(violations))

    cps = np.asarray(crit.points)
    for c, v in zip(crit.points, crit.values):
        if abs(v - c) <= th.degeneracy_radius * (1 + abs(c)):
            violations.append("critical points are not fixed")
            break
    escape = 2.0 / th.infinity_radius
    for c, v in zip(crit.points, crit.values):
        z = v
        for n in range(steps):
            if not np.isfinite(z) or abs(z) > escape:
                violations.append(f"critical orbits avoid ∞ for {steps} steps")
                break
            if min(abs(z), abs(z - 1)) <= th.kernel_exclusion:
                violations.append(f"critical orbits avoid 0 and 1 for {steps} steps")
                break
            if np.min(np.abs(cps - z)) <= th.degeneracy_radius * (1 + abs(z)):
                violations.append(f"critical orbits avoid the critical points for {steps} steps")
                break
            z = R.value(z)
        else:
            continue
        break
    return Admissibility(not violations, tuple(violations))


def identity_test_map() -> RationalMap:
    """
    2z(z+1)/(z+3): fixes 0, 1, ∞ with multipliers 2/3, 5/4, 1/2; simple
    critical points −3 ± √6 whose orbits stay off {0, 1, ∞}.
    """
    return RationalMap([0.0, 2.0, 2.0], [3.0, 1.0])


def identity_family(t: float) -> RationalMap:
    """R_t(z) = 2z(z+t)/(z+2t+1); every member fixes 0, 1 and ∞."""
    return RationalMap([0.0, 2.0 * t, 2.0], [2.0 * t + 1.0, 1.0])


def search_identity_map(
    seed: int = 0,
    family: Callable[[float], RationalMap] = identity_family,
    interval: Tuple[float, float] = (0.25, 4.0),
    attempts: int = 64,
    steps: int = 12,
) -> Tuple[float, RationalMap]:
    """Seeded search over a one-parameter family for a map admissible for the identities."""
    rng = np.random.default_rng(seed)
    for _ in range(attempts):
        t = float(rng.uniform(*interval))
        try:
            R = family(t)
        except CritspecError as exc:
            logger.debug("Family member rejected", t=t, error=str(exc))
            continue
        if admissible_for_identity(R, steps).ok:
            logger.info("Identity test map found", t=t)
            return t, R
    raise PreconditionError("admissible map in family", attempts=attempts)


def _check_identity_inputs(R: RationalMap, c: PointLike, lam: complex, N: int) -> Tuple[CriticalData, complex]:
    if N > 6:
        raise PreconditionError("N <= 6", N=N)
    lam = complex(lam)
    adm = admissible_for_identity(R, steps=max(12, N + 1))
    if not adm.ok:
        raise PreconditionError(adm.violations[0])
    crit = CriticalData.of(R)
    point = as_point(c)
    if point.infinite or min(abs(point.value - p) for p in crit.points) > 1e-6 * (1 + abs(point.value)):
        raise PreconditionError("c is a critical point of the map")
    if not abs(lam) < 1:
        raise PreconditionError("|λ| < 1", lam=[lam.real, lam.imag])
    if lam != 0:
        try:
            radius = radius_of_convergence(spectrum(R, point, 64)).radius
        except PreconditionError:
            # too few entries for an estimate
            radius = math.inf
        if abs(lam) >= radius:
            raise PreconditionError("|λ| below the radius of convergence of the spectrum", radius=radius)
    return crit, lam


def identity_samples(R: RationalMap, count: int = 10, seed: int = 0, radius: float = 3.0) -> np.ndarray:
    """Seeded sample points away from 0, 1, the critical points and critical values."""
    crit = CriticalData.of(R)
    avoid = np.array([0.0, 1.0, *crit.points, *crit.values], dtype=complex)
    rng = np.random.default_rng(seed)
    out: List[complex] = []
    while len(out) < count:
        z = complex(rng.uniform(-radius, radius), rng.uniform(-radius, radius))
        if np.min(np.abs(avoid - z)) > 0.1:
            out.append(z)
    return np.asarray(out)


def _identity_terms(
    R: RationalMap,
    v: complex,
    crit: CriticalData,
    z: complex,
    N: int,
) -> Tuple[np.ndarray, np.ndarray, List[np.ndarray], List[np.ndarray]]:
    """b_n(z), α_n(z), α_n(c_i) and β^{(i)}_n(z) for n ≤ N."""
    tree = PreimageTree.build(R, z, N)
    b = tree.level_sums(lambda y: gamma(v, y))
    orbit = OrbitCoefficients.of(R, v, N)
    alpha_z = orbit.coefficients(z)
    alpha_c = [orbit.coefficients(ci) for ci in crit.points]
    beta = [tree.level_sums(lambda y, vi=vi: gamma_or_zero(vi, y)) for vi in crit.values]
    return b, alpha_z, alpha_c, beta


def _cauchy_order_matched(lam: complex, N: int, alpha_c: np.ndarray, beta: np.ndarray) -> complex:
    """λ·Σ_{j+k≤N−1} λ^{j+k} α_j β_k."""
    total = 0j
    for j in range(N):
        for k in range(N - j):
            total += lam ** (j + k) * alpha_c[j] * beta[k]
    return lam * total


@trace_operation("identity_check")
def identity_check(
    R: RationalMap,
    c: PointLike,
    lam: complex,
    zs: Sequence[complex],
    N: int,
) -> ResidualReport:
    """
    B_v(z,λ) = A_v(z,λ) + λΣ_i A_v(c_i,λ)B_{v_i}(z,λ)/R''(c_i) with v = R(c).

    Each sample reports the truncation residual (every series cut at N
    independently) and the order-matched residual (both sides expanded to
    λ-order N).
    """
    crit, lam = _check_identity_inputs(R, c, lam, N)
    v = R.value(as_point(c).value)
    powers = _powers(lam, N)
    samples: List[ResidualSample] = []
    for z in zs:
        z = complex(z)
        b, alpha_z, alpha_c, beta = _identity_terms(R, v, crit, z, N)
        lhs = complex(np.sum(powers * b))
        A_z = complex(np.sum(powers * alpha_z))
        rhs = A_z
        rhs_om = A_z
        for ac, bt, d2 in zip(alpha_c, beta, crit.second):
            rhs += lam * complex(np.sum(powers * ac)) * complex(np.sum(powers * bt)) / d2
            rhs_om += _cauchy_order_matched(lam, N, ac, bt) / d2
        samples.append(ResidualSample(z, lhs, rhs, _relative(lhs, rhs), _relative(lhs, rhs_om)))
    report = ResidualReport("B = A + lambda*sum A(c_i) B_i / R''(c_i)", lam, N, tuple(samples))
    logger.info("Identity check", N=N, max_rel_residual=report.max_rel_residual,
                max_order_matched=report.max_order_matched_residual)
    return report


@trace_operation("voronoi_identity_check")
def voronoi_identity_check(
    R: RationalMap,
    c: PointLike,
    w: NorlundWeights,
    lam: complex,
    zs: Sequence[complex],
    N: int,
) -> ResidualReport:
    """
    B_v(z,λ) = E_v(z,λ) + λΣ_i E_v(c_i,λ)B_{v_i}(z,λ)/R''(c_i) with
    E_v(z,λ) = ∫γ_a(z)dν_λ(a)/(q(λ)(1−λ)) for the Voronoi measure of σ(c)
    based at v.

    Since Σ_{n≥k}q_{n−k}λⁿ = λᵏq(λ), the λ-expansion of E coincides with
    that of A, so the order-matched residual uses A's coefficients.

    Raises:
        PreconditionError: q(λ) diverges or vanishes at λ, or the identity preconditions fail
    """
    crit, lam = _check_identity_inputs(R, c, lam, N)
    q_lam = w.generating(lam)
    if not np.isfinite(q_lam):
        raise PreconditionError("q(λ) converges", lam=[lam.real, lam.imag])
    if abs(q_lam) < 1e-9:
        raise PreconditionError("q(λ) ≠ 0", q=[q_lam.real, q_lam.imag])
    point = as_point(c)
    v = R.value(point.value)
    source = SpectrumSource(R, point)
    nu = build_voronoi_measure(R, v, source, w, lam, N=N)
    scale = 1.0 / (q_lam * (1 - lam))

    def E(x: complex) -> complex:
        return complex(potential_of_measure(nu, x)) * scale if nu.size else 0j

    powers = _powers(lam, N)
    samples: List[ResidualSample] = []
    for z in zs:
        z = complex(z)
        b, alpha_z, alpha_c, beta = _identity_terms(R, v, crit, z, N)
        lhs = complex(np.sum(powers * b))
        rhs = E(z)
        rhs_om = complex(np.sum(powers * alpha_z))
        for ci, ac, bt, d2 in zip(crit.points, alpha_c, beta, crit.second):
            rhs += lam * E(ci) * complex(np.sum(powers * bt)) / d2
            rhs_om += _cauchy_order_matched(lam, N, ac, bt) / d2
        samples.append(ResidualSample(z, lhs, rhs, _relative(lhs, rhs), _relative(lhs, rhs_om)))
    return ResidualReport("B = E + lambda*sum E(c_i) B_i / R''(c_i)", lam, N, tuple(samples))


def one_step_check(R: RationalMap, a: complex, zs: Sequence[complex]) -> ResidualReport:
    """R_*(γ_a) against its kernel expansion at each sample point."""
    combo = KernelCombo([(a, 1.0)]).pushforward(R)
    samples = []
    for z in zs:
        z = complex(z)
        lhs = ruelle_apply(R, lambda y: gamma(a, y), z)
        rhs = combo.evaluate(z)
        rel = _relative(lhs, rhs)
        samples.append(ResidualSample(z, lhs, rhs, rel, rel))
    return ResidualReport("R_*(gamma_a) expansion", 0j, 1, tuple(samples))


@trace_operation("abel_potential_check")
def abel_potential_check(
    R: RationalMap,
    c: PointLike,
    lam: complex,
    z: complex,
    N: int,
) -> Tuple[complex, complex, float]:
    """(1−λ)A_v(z,λ) against ∫γ_a(z)dν_λ(a) for the Abel measure of σ(c) based at v."""
    point = as_point(c)
    v = R.value(point.value)
    A, _ = poincare_A(R, v, z, lam, N)
    lhs = (1 - complex(lam)) * A
    nu = build_abel_measure(R, v, SpectrumSource(R, point), lam, N=N)
    rhs = complex(potential_of_measure(nu, z)) if nu.size else 0j
    return lhs, rhs, _relative(lhs, rhs)


@dataclass(frozen=True)
class ResolventReport:
    value: complex
    kernel: complex
    residual: float
    envelope: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.envelope

    def to_json(self) -> Dict[str, Any]:
        return {
            "value": [self.value.real, self.value.imag],
            "kernel": [self.kernel.real, self.kernel.imag],
            "residual": self.residual,
            "envelope": self.envelope,
            "ok": self.ok,
        }


@trace_operation("resolvent_check")
def resolvent_check(R: RationalMap, a: complex, z: complex, lam: complex, N: int) -> ResolventReport:
    """(Id − λR_*) applied to B_N returns γ_a(z) − λ^{N+1}(R_*)^{N+1}γ_a(z)."""
    lam = complex(lam)
    B_z, _ = poincare_B(R, a, z, lam, N)
    pushed = ruelle_apply(R, lambda ys: np.array([poincare_B(R, a, y, lam, N)[0] for y in ys]), z)
    value = B_z - lam * pushed
    kernel = complex(gamma(a, z))
    top = ruelle_power(R, lambda y: gamma(a, y), z, N + 1)
    residual = abs(value - kernel)
    envelope = abs(lam) ** (N + 1) * abs(top) * (1 + 1e-6) + 1e-12 * max(1.0, abs(kernel))
    return ResolventReport(value, kernel, residual, envelope)


@dataclass(frozen=True)
class ContractionReport:
    norm: float
    pushed_norm: float
    slack: float

    @property
    def ok(self) -> bool:
        return self.pushed_norm <= (1 + self.slack) * self.norm

    def to_json(self) -> Dict[str, Any]:
        return {"norm": self.norm, "pushed_norm": self.pushed_norm, "slack": self.slack, "ok": self.ok}


def _disk_field(f: Field, radius: float) -> Field:
    def masked(zs: np.ndarray) -> np.ndarray:
        out = np.asarray(f(zs), dtype=complex)
        return np.where(np.abs(zs) <= radius, out, 0j)

    return masked


@trace_operation("l1_contraction_check")
def l1_contraction_check(
    R: RationalMap,
    a: complex,
    grid: Optional[GridSpec] = None,
    radius: float = 10.0,
    slack: float = 0.05,
) -> ContractionReport:
    """Riemann sums of |R_*γ_a| and |γ_a| over the disk of the given radius."""
    grid = grid or GridSpec.square(radius, 400)
    crit_values = [complex(v) for v in _critical_values(R)]
    phi = lambda y: gamma(a, y, 0.0)  # noqa: E731
    base = sample_field(_disk_field(lambda zs: gamma(a, zs, grid.exclusion_radius), radius), grid,
                        [0j, 1 + 0j, complex(a)])
    pushed = sample_field(
        _disk_field(lambda zs: ruelle_apply_array(R, phi, zs), radius),
        grid,
        [0j, 1 + 0j, complex(R.value(a))] + crit_values,
    )
    values = pushed.values[pushed.mask]
    finite = np.isfinite(values)
    pushed_norm = float(np.sum(np.abs(values[finite])) * grid.cell_area)
    return ContractionReport(base.l1, pushed_norm, slack)


# Beltrami operator

@trace_operation("beltrami_apply")
def beltrami_apply(R: RationalMap, mu: Field, grid: GridSpec) -> FieldSample:
    """
    Bel(μ)(z) = μ(R(z))·conj(R'(z))/R'(z) at the grid cell centers.

    Raises:
        PreconditionError: a grid point within 1e−9 of a critical point or pole
    """
    pts = grid.points()
    crit = [c.point.value for c in R.finite_critical_points()]
    poles = [p.point.value for p in R.preimages(INFINITY) if not p.point.infinite]
    for s in crit + poles:
        if np.min(np.abs(pts - s)) < 1e-9:
            raise PreconditionError("grid avoids critical points and poles", point=[s.real, s.imag])

    def bel(zs: np.ndarray) -> np.ndarray:
        d = R.derivative_values(zs)
        return np.asarray(mu(R.values(zs)), dtype=complex) * np.conj(d) / d

    return sample_field(bel, grid)


@dataclass(frozen=True)
class DualityReport:
    beltrami_side: complex
    ruelle_side: complex
    scale: float

    @property
    def relative_gap(self) -> float:
        return abs(self.beltrami_side - self.ruelle_side) / self.scale if self.scale > 0 else 0.0


def beltrami_duality_check(R: RationalMap, phi: Field, mu: Field, grid: GridSpec) -> DualityReport:
    """Riemann sums of ⟨Bel(μ), φ⟩ and ⟨μ, R_*φ⟩ on the same grid."""
    bel = beltrami_apply(R, mu, grid)
    phi_vals = np.asarray(phi(bel.points), dtype=complex)
    lhs = complex(np.nansum(bel.values * phi_vals) * grid.cell_area)
    pts = grid.points()
    pushed = ruelle_apply_array(R, phi, pts)
    rhs_vals = np.asarray(mu(pts), dtype=complex) * pushed
    rhs = complex(np.nansum(np.where(np.isfinite(rhs_vals), rhs_vals, 0)) * grid.cell_area)
    scale = float(np.nansum(np.abs(phi_vals)) * grid.cell_area)
    return DualityReport(lhs, rhs, scale)
