"""
Domain types shared across services: sphere points, precision settings and the
enumerations used by verdicts and reports.
"""

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Union

from pydantic import BaseModel, ConfigDict, Field

from critspec.core.config import Settings, settings as default_settings


class TrichotomyCase(str, enum.Enum):
    """Asymptotic regime of the derivative cocycle along a critical orbit."""
    DERIVATIVE_TO_ZERO = "derivative->0"
    SUBSEQUENCE_TO_INFINITY = "subsequence->inf"
    BOUNDED_LIMINF = "bounded-liminf"
    DEGENERATE = "degenerate"
    UNDECIDED = "undecided"


class PathKind(str, enum.Enum):
    """How λ approaches 1."""
    RADIAL = "radial"
    STOLZ = "stolz"
    EXPLICIT = "explicit"


class SummabilityMethod(str, enum.Enum):
    ABEL = "abel"
    CESARO = "cesaro"
    NORLUND = "norlund"


class ConvergenceVerdict(str, enum.Enum):
    CONVERGES_TO = "converges-to"
    DIVERGES = "diverges"
    OSCILLATES = "oscillates"
    UNDECIDED = "undecided"


class ScanVerdict(str, enum.Enum):
    NULL_LIMIT = "null-limit"
    NONNULL_LIMIT = "nonnull-limit"
    UNDECIDED = "undecided"


class MMeasureVerdict(str, enum.Enum):
    M_MEASURE = "M-measure"
    NOT_DETECTED = "not-detected"
    DEGENERATE = "degenerate"


class SeparationOutcome(str, enum.Enum):
    SEPARATED = "separated"
    NOT_SEPARATED = "not-separated-at-this-resolution"
    UNDECIDED = "undecided"


class CriterionId(str, enum.Enum):
    PROP_STABILITY_BOUND = "prop-stability-bound"
    COR_BULLET_1 = "cor-bullet-1"
    COR_BULLET_2 = "cor-bullet-2"
    BARYCENTRIC = "barycentric"
    ABEL_CONVERGENCE = "abel-convergence"
    BOUNDED_THM_1 = "bounded-thm-1"
    BOUNDED_THM_2 = "bounded-thm-2"
    NORLUND_REGULAR = "norlund-regular"
    SEPARATION = "separation"
    PC_AREA = "pc-area"


class CriterionStatus(str, enum.Enum):
    INSTABILITY_EVIDENCE = "instability-evidence"
    CONSISTENT_WITH_STABILITY = "consistent-with-stability"
    INAPPLICABLE = "inapplicable"
    UNDECIDED = "undecided"


@dataclass(frozen=True)
class SpherePoint:
    """A point of the Riemann sphere: a finite complex value or ∞."""

    value: complex = 0j
    infinite: bool = False

    def __post_init__(self) -> None:
        if self.infinite:
            object.__setattr__(self, "value", 0j)
            return
        value = complex(self.value)
        if math.isnan(value.real) or math.isnan(value.imag):
            raise ValueError("sphere point has a NaN component")
        if math.isinf(value.real) or math.isinf(value.imag):
            object.__setattr__(self, "value", 0j)
            object.__setattr__(self, "infinite", True)
            return
        object.__setattr__(self, "value", value)

    @classmethod
    def infinity(cls) -> "SpherePoint":
        return cls(infinite=True)

    @property
    def z(self) -> complex:
        """Finite value; raises for ∞."""
        if self.infinite:
            raise ValueError("point at infinity has no finite value")
        return self.value

    def to_json(self) -> Union[str, list]:
        return "inf" if self.infinite else [self.value.real, self.value.imag]

    def __repr__(self) -> str:
        return "SpherePoint(∞)" if self.infinite else f"SpherePoint({self.value!r})"


INFINITY = SpherePoint.infinity()

PointLike = Union[SpherePoint, complex, float, int]


def as_point(z: PointLike) -> SpherePoint:
    """Coerce numbers to sphere points; complex infinities map to ∞."""
    if isinstance(z, SpherePoint):
        return z
    return SpherePoint(complex(z))


def spherical_distance(z: PointLike, w: PointLike) -> float:
    """Chordal (spherical) distance, in [0, 2]."""
    p, q = as_point(z), as_point(w)
    if p.infinite and q.infinite:
        return 0.0
    if p.infinite:
        return 2.0 / math.sqrt(1.0 + abs(q.value) ** 2)
    if q.infinite:
        return 2.0 / math.sqrt(1.0 + abs(p.value) ** 2)
    return 2.0 * abs(p.value - q.value) / math.sqrt(
        (1.0 + abs(p.value) ** 2) * (1.0 + abs(q.value) ** 2)
    )


def polar(z: complex) -> tuple:
    """(log|z|, arg z) with arg in (−π, π]; log|0| is −inf."""
    modulus = abs(z)
    return (math.log(modulus) if modulus > 0 else -math.inf, cmath.phase(z) if modulus > 0 else 0.0)


class PrecisionConfig(BaseModel):
    """Numerical precision and truncation settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    mantissa_bits: int = Field(default=53, ge=53)
    series_truncation: int = Field(default=64, ge=1)
    root_tolerance: float = Field(default=1e-12, gt=0)
    grid_resolution: int = Field(default=64, ge=1)

    @classmethod
    def from_settings(cls, source: Settings = default_settings) -> "PrecisionConfig":
        return cls(
            mantissa_bits=source.mantissa_bits,
            series_truncation=source.series_truncation,
            root_tolerance=source.root_tolerance,
            grid_resolution=source.grid_resolution,
        )
