"""
Pydantic models for run configuration and grid specifications.
"""

from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from critspec.core.config import Thresholds
from critspec.models.domain import PathKind, PrecisionConfig

Coefficient = Union[float, Tuple[float, float]]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSpec(StrictModel):
    """Rectangular sample grid with exclusion disks around poles and support."""

    xmin: float = Field(-2.0, description="Left edge")
    xmax: float = Field(2.0, description="Right edge")
    ymin: float = Field(-2.0, description="Bottom edge")
    ymax: float = Field(2.0, description="Top edge")
    nx: int = Field(64, ge=1, description="Columns")
    ny: int = Field(64, ge=1, description="Rows")
    exclusion_radius: float = Field(1e-9, gt=0, description="Radius of exclusion disks")

    @model_validator(mode="after")
    def validate_extent(self):
        if not (self.xmin < self.xmax and self.ymin < self.ymax):
            raise ValueError("grid extent must satisfy xmin < xmax and ymin < ymax")
        return self

    @classmethod
    def square(cls, radius: float, n: int, exclusion_radius: float = 1e-9) -> "GridSpec":
        return cls(xmin=-radius, xmax=radius, ymin=-radius, ymax=radius, nx=n, ny=n,
                   exclusion_radius=exclusion_radius)

    @property
    def dx(self) -> float:
        return (self.xmax - self.xmin) / self.nx

    @property
    def dy(self) -> float:
        return (self.ymax - self.ymin) / self.ny

    @property
    def cell_area(self) -> float:
        return self.dx * self.dy

    def points(self) -> np.ndarray:
        """Cell centers, row-major with rows running bottom to top."""
        x = self.xmin + (np.arange(self.nx) + 0.5) * self.dx
        y = self.ymin + (np.arange(self.ny) + 0.5) * self.dy
        X, Y = np.meshgrid(x, y)
        return X + 1j * Y


class MapSpec(StrictModel):
    """Rational map P/Q by ascending coefficients, optionally Moebius-normalized."""

    num: List[Coefficient] = Field(..., min_length=1, description="Numerator coefficients")
    den: List[Coefficient] = Field(default_factory=lambda: [1.0], min_length=1,
                                   description="Denominator coefficients")
    normalize: bool = Field(False, description="Conjugate so that 0, 1, ∞ are fixed")
    fixed_triple: Optional[List[Optional[Tuple[float, float]]]] = Field(
        None, description="Fixed points sent to 0, 1, ∞; null stands for ∞"
    )

    @field_validator("fixed_triple")
    @classmethod
    def validate_triple(cls, v):
        if v is not None and len(v) != 3:
            raise ValueError("fixed_triple needs exactly three points")
        return v


class CriticalPointSelector(StrictModel):
    """Critical point by index into the sorted finite critical points, or by value."""

    index: Optional[int] = Field(None, ge=0)
    value: Optional[Tuple[float, float]] = None

    @model_validator(mode="after")
    def validate_choice(self):
        if (self.index is None) == (self.value is None):
            raise ValueError("give exactly one of index or value")
        return self


class PathSpec(StrictModel):
    kind: PathKind = PathKind.RADIAL
    K: int = Field(20, ge=1, le=52)
    alpha: float = Field(1.0, ge=1.0)
    samples: Optional[List[Tuple[float, float]]] = None

    @model_validator(mode="after")
    def validate_samples(self):
        if self.kind == PathKind.EXPLICIT and not self.samples:
            raise ValueError("explicit paths need samples")
        return self


class WeightSpec(StrictModel):
    """Named family (constant, arithmetic, geometric) or an explicit list q."""

    family: Optional[str] = Field("constant", description="constant | arithmetic | geometric")
    size: int = Field(1024, ge=1)
    r: Optional[float] = Field(None, gt=0)
    q: Optional[List[float]] = None
    lam: float = Field(0.5, ge=0, lt=1, description="λ for the Voronoi measure")

    @model_validator(mode="after")
    def validate_source(self):
        if self.family is None and not self.q:
            raise ValueError("weights need a family or an explicit q")
        if self.family is not None and self.family not in ("constant", "arithmetic", "geometric"):
            raise ValueError(f"unknown weight family '{self.family}'")
        return self


class GridsSpec(StrictModel):
    field: GridSpec = Field(default_factory=lambda: GridSpec.square(4.0, 48, 1e-3))
    separation: GridSpec = Field(default_factory=lambda: GridSpec.square(2.5, 96))
    separation_budget: int = Field(200, ge=0)


class IdentitySpec(StrictModel):
    enabled: bool = False
    lam: float = Field(0.2, gt=-1, lt=1)
    N: int = Field(4, ge=0, le=6)
    samples: int = Field(10, ge=1)


class RenderSpec(StrictModel):
    enabled: bool = False
    grid: GridSpec = Field(default_factory=lambda: GridSpec(xmin=-2.5, xmax=2.5, ymin=-2.5, ymax=2.5,
                                                            nx=256, ny=256))
    max_iter: int = Field(200, ge=1)
    png: bool = False


class RunConfig(StrictModel):
    """A complete batch run; unknown keys are rejected."""

    map: MapSpec
    critical_point: CriticalPointSelector = Field(default_factory=lambda: CriticalPointSelector(index=0))
    horizon: int = Field(64, ge=1)
    precision: PrecisionConfig = Field(default_factory=PrecisionConfig.from_settings)
    path: PathSpec = Field(default_factory=PathSpec)
    weights: WeightSpec = Field(default_factory=WeightSpec)
    grids: GridsSpec = Field(default_factory=GridsSpec)
    output: str = "out"
    seed: int = 0
    thresholds: Thresholds = Field(default_factory=Thresholds)
    identity: IdentitySpec = Field(default_factory=IdentitySpec)
    render: RenderSpec = Field(default_factory=RenderSpec)
