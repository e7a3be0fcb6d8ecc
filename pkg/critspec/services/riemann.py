"""
Rational maps on the Riemann sphere.

A RationalMap is a pair of polynomials P/Q stored as ascending coefficient arrays.
Evaluation, derivatives, critical and fixed points, preimages and Moebius
conjugation all live here.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from critspec.core.config import settings
from critspec.core.exceptions import (
    IndeterminateError,
    InvalidMapError,
    NormalizationError,
    PoleError,
)
from critspec.core.observability import get_logger, trace_operation
from critspec.models.domain import INFINITY, PointLike, SpherePoint, as_point, spherical_distance
from critspec.services.roots import polynomial_roots, residual_scale, trim

logger = get_logger(__name__)

# relative size below which a computed coefficient is treated as cancellation noise
_COEFF_NOISE = 1e-13


def _coerce_coefficients(values: Sequence[Any]) -> np.ndarray:
    """Accept numbers or [re, im] pairs."""
    out = []
    for v in values:
        if isinstance(v, (list, tuple)):
            if len(v) != 2:
                raise InvalidMapError("coefficient pairs must be [re, im]", {"value": list(v)})
            out.append(complex(float(v[0]), float(v[1])))
        else:
            out.append(complex(v))
    arr = np.asarray(out, dtype=complex)
    if arr.size == 0:
        raise InvalidMapError("empty coefficient list")
    if not np.all(np.isfinite(arr)):
        raise InvalidMapError("coefficients must be finite")
    return arr


def _clean(coeffs: np.ndarray) -> np.ndarray:
    """Zero out coefficients that are roundoff relative to the largest one, then trim."""
    c = np.asarray(coeffs, dtype=complex).copy()
    scale = np.max(np.abs(c)) if c.size else 0.0
    if scale > 0:
        c[np.abs(c) <= _COEFF_NOISE * scale] = 0.0
    return trim(c)


def _degree(coeffs: np.ndarray) -> int:
    """Polynomial degree; the zero polynomial has degree −1."""
    if coeffs.size == 1 and coeffs[0] == 0:
        return -1
    return coeffs.size - 1


@dataclass(frozen=True)
class MarkedPoint:
    """A sphere point with multiplicity, optionally annotated with a multiplier."""

    point: SpherePoint
    multiplicity: int = 1
    multiplier: Optional[complex] = None

    @property
    def is_simple(self) -> bool:
        return self.multiplicity == 1

    def to_json(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"z": self.point.to_json(), "multiplicity": self.multiplicity}
        if self.multiplier is not None:
            data["multiplier"] = [self.multiplier.real, self.multiplier.imag]
        return data


class RationalMap:
    """
    R = P/Q with complex coefficients in ascending degree order.

    Instances are immutable; derivative coefficients are computed once at
    construction.
    """

    __slots__ = ("_num", "_den", "_num_d", "_den_d", "_crit_num", "_crit_num_d", "tolerance")

    def __init__(
        self,
        num: Sequence[Any],
        den: Sequence[Any] = (1.0,),
        tolerance: Optional[float] = None,
        check_common_roots: bool = True,
    ):
        self.tolerance = settings.root_tolerance if tolerance is None else tolerance
        num_arr = trim(_coerce_coefficients(num))
        den_arr = trim(_coerce_coefficients(den))

        if _degree(den_arr) < 0:
            raise InvalidMapError("denominator is identically zero")
        if max(_degree(num_arr), _degree(den_arr)) < 1:
            raise InvalidMapError("degree must be at least 1")

        self._num = num_arr
        self._den = den_arr
        self._num.setflags(write=False)
        self._den.setflags(write=False)
        self._num_d = P.polyder(num_arr) if num_arr.size > 1 else np.zeros(1, dtype=complex)
        self._den_d = P.polyder(den_arr) if den_arr.size > 1 else np.zeros(1, dtype=complex)
        # numerator of R' = (P'Q − PQ')/Q²
        self._crit_num = _clean(P.polysub(P.polymul(self._num_d, den_arr), P.polymul(num_arr, self._den_d)))
        self._crit_num_d = P.polyder(self._crit_num) if self._crit_num.size > 1 else np.zeros(1, dtype=complex)

        if check_common_roots:
            self._check_common_roots()

    # Construction helpers

    @classmethod
    def polynomial(cls, coeffs: Sequence[Any], **kwargs: Any) -> "RationalMap":
        return cls(coeffs, (1.0,), **kwargs)

    @classmethod
    def from_json(cls, data: Dict[str, Any], **kwargs: Any) -> "RationalMap":
        try:
            num = data["num"]
        except (KeyError, TypeError):
            raise InvalidMapError("map JSON requires a 'num' coefficient list")
        den = data.get("den", [[1.0, 0.0]])
        return cls(num, den, **kwargs)

    def to_json(self) -> Dict[str, List[List[float]]]:
        return {
            "num": [[float(c.real), float(c.imag)] for c in self._num],
            "den": [[float(c.real), float(c.imag)] for c in self._den],
        }

    def _check_common_roots(self) -> None:
        deg_p, deg_q = _degree(self._num), _degree(self._den)
        if deg_p < 0:
            raise InvalidMapError("numerator is identically zero (constant map)")
        if deg_p < 1 or deg_q < 1:
            return
        probe, other = (self._num, self._den) if deg_p <= deg_q else (self._den, self._num)
        threshold = math.sqrt(self.tolerance)
        for root in polynomial_roots(probe, tol=self.tolerance, seed=settings.seed):
            value = abs(P.polyval(root.value, other))
            scale = float(residual_scale(other, np.array([root.value]))[0])
            if value <= threshold * max(scale, 1e-300):
                raise InvalidMapError(
                    "numerator and denominator share a root",
                    {"root": [root.value.real, root.value.imag]},
                )

    # Shape

    @property
    def num(self) -> np.ndarray:
        return self._num

    @property
    def den(self) -> np.ndarray:
        return self._den

    @property
    def num_degree(self) -> int:
        return _degree(self._num)

    @property
    def den_degree(self) -> int:
        return _degree(self._den)

    @property
    def degree(self) -> int:
        return max(self.num_degree, self.den_degree)

    @property
    def is_polynomial(self) -> bool:
        return self.den_degree == 0

    @property
    def critical_numerator(self) -> np.ndarray:
        """Coefficients of P'Q − PQ'."""
        return self._crit_num

    def __repr__(self) -> str:
        return f"RationalMap(num={self._num.tolist()}, den={self._den.tolist()})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalMap):
            return NotImplemented
        return np.array_equal(self._num, other._num) and np.array_equal(self._den, other._den)

    def __hash__(self) -> int:
        return hash((self._num.tobytes(), self._den.tobytes()))

    # Evaluation

    def evaluate(self, z: PointLike) -> SpherePoint:
        """R(z) on the sphere; poles map to ∞."""
        point = as_point(z)
        if point.infinite:
            deg_p, deg_q = self.num_degree, self.den_degree
            if deg_p > deg_q:
                return INFINITY
            if deg_p < deg_q:
                return SpherePoint(0j)
            return SpherePoint(complex(self._num[-1] / self._den[-1]))

        x = point.value
        p = complex(P.polyval(x, self._num))
        q = complex(P.polyval(x, self._den))
        if q == 0:
            if p == 0:
                raise IndeterminateError("0/0 at evaluation point", {"z": [x.real, x.imag]})
            return INFINITY
        return SpherePoint(p / q)

    def value(self, z: complex) -> complex:
        """Finite-chart evaluation; poles give complex infinity."""
        q = P.polyval(z, self._den)
        if q == 0:
            return complex(math.inf, 0.0)
        return complex(P.polyval(z, self._num) / q)

    def values(self, z: np.ndarray) -> np.ndarray:
        """Vectorized finite-chart evaluation; poles give inf."""
        z = np.asarray(z, dtype=complex)
        p = P.polyval(z, self._num)
        q = P.polyval(z, self._den)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            out = p / q
        out = np.where(q == 0, complex(math.inf, 0.0), out)
        return out

    def derivative(self, z: PointLike) -> complex:
        """R'(z) by the quotient rule; z must be finite and not a pole."""
        point = as_point(z)
        if point.infinite:
            raise PoleError(complex(math.inf, 0.0))
        x = point.value
        q = P.polyval(x, self._den)
        if q == 0:
            raise PoleError(x)
        return complex(P.polyval(x, self._crit_num) / (q * q))

    def derivative_values(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        q = P.polyval(z, self._den)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            return P.polyval(z, self._crit_num) / (q * q)

    def second_derivative(self, z: PointLike) -> complex:
        """R''(z) = (W'Q − 2WQ')/Q³ with W = P'Q − PQ'."""
        point = as_point(z)
        if point.infinite:
            raise PoleError(complex(math.inf, 0.0))
        x = point.value
        q = P.polyval(x, self._den)
        if q == 0:
            raise PoleError(x)
        w = P.polyval(x, self._crit_num)
        dw = P.polyval(x, self._crit_num_d)
        dq = P.polyval(x, self._den_d)
        return complex((dw * q - 2.0 * w * dq) / (q ** 3))

    def multiplier(self, p: PointLike) -> complex:
        """Multiplier at a fixed point, including ∞ through the chart w = 1/z."""
        point = as_point(p)
        if not point.infinite:
            return self.derivative(point)
        deg_p, deg_q = self.num_degree, self.den_degree
        if deg_p <= deg_q:
            raise InvalidMapError("∞ is not a fixed point")
        if deg_p >= deg_q + 2:
            return 0j
        return complex(self._den[-1] / self._num[-1])

    # Special points

    @trace_operation("critical_points")
    def critical_points(self) -> List[MarkedPoint]:
        """Finite roots of P'Q − PQ' plus ∞ when critical, with multiplicities."""
        found = [
            MarkedPoint(SpherePoint(r.value), r.multiplicity)
            for r in polynomial_roots(self._crit_num, tol=self.tolerance, seed=settings.seed)
        ]
        at_infinity = 2 * self.degree - 2 - max(_degree(self._crit_num), 0)
        if _degree(self._crit_num) < 0:
            at_infinity = 0
        if at_infinity > 0:
            found.append(MarkedPoint(INFINITY, at_infinity))
        return found

    def finite_critical_points(self) -> List[MarkedPoint]:
        return [c for c in self.critical_points() if not c.point.infinite]

    def critical_values(self) -> List[SpherePoint]:
        """Images of the finite critical points."""
        return [self.evaluate(c.point) for c in self.finite_critical_points()]

    @trace_operation("fixed_points")
    def fixed_points(self) -> List[MarkedPoint]:
        """Roots of P − zQ plus ∞ when fixed, each with its multiplier."""
        shifted = np.concatenate(([0j], self._den))
        fixed_poly = _clean(P.polysub(self._num, shifted))
        points: List[MarkedPoint] = []
        if _degree(fixed_poly) >= 1:
            for r in polynomial_roots(fixed_poly, tol=self.tolerance, seed=settings.seed):
                q = P.polyval(r.value, self._den)
                multiplier = self.derivative(r.value) if q != 0 else None
                points.append(MarkedPoint(SpherePoint(r.value), r.multiplicity, multiplier))
        at_infinity = self.degree + 1 - max(_degree(fixed_poly), 0)
        if self.num_degree > self.den_degree and at_infinity > 0:
            points.append(MarkedPoint(INFINITY, at_infinity, self.multiplier(INFINITY)))
        return points

    @trace_operation("preimages")
    def preimages(self, w: PointLike) -> List[MarkedPoint]:
        """The deg(R) solutions of R(y) = w with multiplicity."""
        target = as_point(w)
        if target.infinite:
            poly = self._den
        else:
            poly = _clean(P.polysub(self._num, target.value * self._den))
        found: List[MarkedPoint] = []
        if _degree(poly) >= 1:
            found = [
                MarkedPoint(SpherePoint(r.value), r.multiplicity)
                for r in polynomial_roots(poly, tol=self.tolerance, seed=settings.seed)
            ]
        missing = self.degree - max(_degree(poly), 0)
        if missing > 0:
            found.append(MarkedPoint(INFINITY, missing))
        return found

    def preimage_array(self, w: np.ndarray) -> np.ndarray:
        """
        Finite preimages of many targets at once, shape (len(w), deg), from
        batched companion eigenvalues. Rows whose targets have fewer finite
        preimages are padded with NaN.
        """
        targets = np.asarray(w, dtype=complex).ravel()
        d = self.degree
        num = np.zeros(d + 1, dtype=complex)
        den = np.zeros(d + 1, dtype=complex)
        num[: self._num.size] = self._num
        den[: self._den.size] = self._den
        coeffs = num[None, :] - targets[:, None] * den[None, :]
        lead = coeffs[:, -1]
        out = np.full((targets.size, d), np.nan + 0j, dtype=complex)
        ok = np.abs(lead) > self.tolerance * np.max(np.abs(coeffs), axis=1)
        if not np.any(ok):
            return out
        monic = coeffs[ok, :-1] / lead[ok, None]
        companion = np.zeros((monic.shape[0], d, d), dtype=complex)
        if d > 1:
            companion[:, np.arange(1, d), np.arange(d - 1)] = 1.0
        companion[:, :, -1] = -monic
        out[ok] = np.linalg.eigvals(companion)
        return out


@dataclass(frozen=True)
class MoebiusTransform:
    """z ↦ (az + b)/(cz + d), stored with ad − bc = 1."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self) -> None:
        det = self.a * self.d - self.b * self.c
        if abs(det) <= settings.root_tolerance:
            raise InvalidMapError("Moebius determinant vanishes", {"det": [det.real, det.imag]})

    @classmethod
    def normalized(cls, a: complex, b: complex, c: complex, d: complex) -> "MoebiusTransform":
        det = complex(a * d - b * c)
        if abs(det) <= settings.root_tolerance:
            raise InvalidMapError("Moebius determinant vanishes", {"det": [det.real, det.imag]})
        s = np.sqrt(det)
        return cls(complex(a / s), complex(b / s), complex(c / s), complex(d / s))

    @classmethod
    def identity(cls) -> "MoebiusTransform":
        return cls(1 + 0j, 0j, 0j, 1 + 0j)

    @classmethod
    def from_triple(cls, p1: PointLike, p2: PointLike, p3: PointLike) -> "MoebiusTransform":
        """The transform sending (p1, p2, p3) to (0, 1, ∞)."""
        z1, z2, z3 = as_point(p1), as_point(p2), as_point(p3)
        if z3.infinite:
            return cls.normalized(1, -z1.value, 0, z2.value - z1.value)
        if z1.infinite:
            return cls.normalized(0, z2.value - z3.value, 1, -z3.value)
        if z2.infinite:
            return cls.normalized(1, -z1.value, 1, -z3.value)
        a, b = z2.value - z3.value, -z1.value * (z2.value - z3.value)
        c, d = z2.value - z1.value, -z3.value * (z2.value - z1.value)
        return cls.normalized(a, b, c, d)

    def apply(self, z: PointLike) -> SpherePoint:
        point = as_point(z)
        if point.infinite:
            return INFINITY if self.c == 0 else SpherePoint(self.a / self.c)
        den = self.c * point.value + self.d
        if den == 0:
            return INFINITY
        return SpherePoint((self.a * point.value + self.b) / den)

    def inverse(self) -> "MoebiusTransform":
        return MoebiusTransform(self.d, -self.b, -self.c, self.a)

    def is_identity(self, tol: float = 1e-12) -> bool:
        # ±I represent the same transform
        for sign in (1, -1):
            if (abs(sign * self.a - 1) <= tol and abs(self.b) <= tol
                    and abs(self.c) <= tol and abs(sign * self.d - 1) <= tol):
                return True
        return False

    def to_json(self) -> Dict[str, List[float]]:
        return {k: [getattr(self, k).real, getattr(self, k).imag] for k in ("a", "b", "c", "d")}


def conjugate(R: RationalMap, M: MoebiusTransform) -> RationalMap:
    """M ∘ R ∘ M⁻¹, with the denominator's leading coefficient scaled to 1."""
    n = R.degree
    # M⁻¹(w) = (d w − b)/(a − c w)
    top = np.array([-M.b, M.d], dtype=complex)
    bottom = np.array([M.a, -M.c], dtype=complex)
    top_powers = [np.array([1 + 0j])]
    bottom_powers = [np.array([1 + 0j])]
    for _ in range(n):
        top_powers.append(P.polymul(top_powers[-1], top))
        bottom_powers.append(P.polymul(bottom_powers[-1], bottom))

    def homogenize(coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros(n + 1, dtype=complex)
        for k, ck in enumerate(coeffs):
            if ck != 0:
                term = ck * P.polymul(top_powers[k], bottom_powers[n - k])
                out[: term.size] += term
        return out

    p_tilde = homogenize(R.num)
    q_tilde = homogenize(R.den)
    new_num = _clean(M.a * p_tilde + M.b * q_tilde)
    new_den = _clean(M.c * p_tilde + M.d * q_tilde)
    lead = new_den[-1]
    conjugated = RationalMap(new_num / lead, new_den / lead, tolerance=R.tolerance)
    if conjugated.degree != R.degree:
        raise InvalidMapError(
            "conjugation changed the degree",
            {"before": R.degree, "after": conjugated.degree},
        )
    return conjugated


def default_fixed_triple(R: RationalMap) -> Tuple[SpherePoint, SpherePoint, SpherePoint]:
    """Three fixed points with the largest minimum pairwise chordal separation."""
    points = sorted(
        {fp.point for fp in R.fixed_points()},
        key=lambda p: (p.infinite, p.value.real, p.value.imag),
    )
    if len(points) < 3:
        raise NormalizationError("three distinct fixed points", fixed_points=[p.to_json() for p in points])
    best: Optional[Tuple[SpherePoint, ...]] = None
    best_sep = -1.0
    for triple in itertools.combinations(points, 3):
        sep = min(spherical_distance(u, v) for u, v in itertools.combinations(triple, 2))
        if sep > best_sep + 1e-12:
            best, best_sep = triple, sep
    assert best is not None
    return best[0], best[1], best[2]


@trace_operation("moebius_normalize")
def moebius_normalize(
    R: RationalMap,
    fixed_triple: Optional[Sequence[PointLike]] = None,
) -> Tuple[RationalMap, MoebiusTransform]:
    """
    Conjugate R so that the given fixed points move to (0, 1, ∞).

    Args:
        R: the map
        fixed_triple: three distinct fixed points of R; defaults to
            default_fixed_triple(R)

    Returns:
        (M ∘ R ∘ M⁻¹, M)

    Raises:
        NormalizationError: a point is not fixed or two points coincide
    """
    if fixed_triple is None:
        triple = default_fixed_triple(R)
    else:
        if len(fixed_triple) != 3:
            raise NormalizationError("three points", given=len(fixed_triple))
        triple = tuple(as_point(p) for p in fixed_triple)

    tol = 10.0 * math.sqrt(R.tolerance)
    for u, v in itertools.combinations(triple, 2):
        if spherical_distance(u, v) <= tol:
            raise NormalizationError("pairwise distinct", points=[u.to_json(), v.to_json()])
    for p in triple:
        image = R.evaluate(p)
        if spherical_distance(image, p) > tol:
            raise NormalizationError("points fixed by the map", point=p.to_json(), image=image.to_json())

    M = MoebiusTransform.from_triple(*triple)
    if M.is_identity():
        return R, MoebiusTransform.identity()
    normalized = conjugate(R, M)

    for target in (SpherePoint(0j), SpherePoint(1 + 0j), INFINITY):
        if spherical_distance(normalized.evaluate(target), target) > tol:
            logger.warning("Normalized map misses a fixed target", target=target.to_json())
    return normalized, M


def is_normalized(R: RationalMap, tol: float = 1e-9) -> bool:
    """True when R fixes 0, 1 and ∞ to the given chordal tolerance."""
    for target in (SpherePoint(0j), SpherePoint(1 + 0j), INFINITY):
        try:
            image = R.evaluate(target)
        except IndeterminateError:
            return False
        if spherical_distance(image, target) > tol:
            return False
    return True


def select_critical_point(
    R: RationalMap,
    index: Optional[int] = None,
    value: Optional[complex] = None,
) -> SpherePoint:
    """
    A finite critical point by index into the critical points sorted by
    (re, im), or the one nearest to a given value.
    """
    finite = sorted((c.point.value for c in R.finite_critical_points()), key=lambda z: (z.real, z.imag))
    if not finite:
        raise InvalidMapError("map has no finite critical points")
    if (index is None) == (value is None):
        raise InvalidMapError("select a critical point by exactly one of index or value")
    if index is not None:
        if not 0 <= index < len(finite):
            raise InvalidMapError(
                "critical point index out of range", {"index": index, "available": len(finite)}
            )
        return SpherePoint(finite[index])
    target = complex(value)
    nearest = min(finite, key=lambda z: abs(z - target))
    if abs(nearest - target) > 10.0 * math.sqrt(R.tolerance) * (1.0 + abs(target)):
        raise InvalidMapError("value is not a critical point", {"value": [target.real, target.imag]})
    return SpherePoint(nearest)
