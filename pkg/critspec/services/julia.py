"""
Grid orbit classification and Julia set images.

Polynomials are shaded by escape time. Rational maps are shaded by the time
to converge to a detected attracting cycle; points that do neither within
the budget stay unresolved and render bright.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Optional

import numpy as np

from critspec.core.config import Thresholds, settings
from critspec.core.exceptions import InvalidMapError, PreconditionError
from critspec.core.observability import get_logger, trace_operation
from critspec.models.domain import INFINITY
from critspec.models.schemas import GridSpec
from critspec.services.riemann import RationalMap

logger = get_logger(__name__)

RATIONAL_ESCAPE = 1e8


def escape_radius(R: RationalMap) -> float:
    """2·max(2, max_k |a_k/a_d|) for a polynomial of degree d."""
    if not R.is_polynomial:
        raise InvalidMapError("escape radius is defined for polynomials")
    num = R.num / R.den[0]
    scale = float(np.max(np.abs(num[:-1] / num[-1]))) if num.size > 1 else 0.0
    return 2.0 * max(2.0, scale)


def infinity_attracting(R: RationalMap) -> bool:
    """True when ∞ is an attracting or superattracting fixed point."""
    if R.is_polynomial:
        return R.degree >= 2
    if R.num_degree <= R.den_degree:
        return False
    return abs(R.multiplier(INFINITY)) < 1


@trace_operation("escape_times")
def escape_times(R: RationalMap, points: np.ndarray, max_iter: int, radius: Optional[float] = None) -> np.ndarray:
    """First n with |Rⁿ(z)| > radius, or −1 when the orbit stays inside for max_iter steps."""
    radius = escape_radius(R) if radius is None else radius
    z = np.asarray(points, dtype=complex).ravel().copy()
    out = np.full(z.size, -1, dtype=np.int64)
    idx = np.arange(z.size)
    for n in range(max_iter + 1):
        gone = np.abs(z) > radius
        out[idx[gone]] = n
        keep = ~gone
        idx, z = idx[keep], z[keep]
        if not idx.size or n == max_iter:
            break
        with np.errstate(over="ignore", invalid="ignore"):
            z = R.values(z)
    return out.reshape(np.shape(points))


@dataclass(frozen=True)
class OrbitClasses:
    """Per-point outcome: Fatou-candidate flag and the iteration that decided it."""

    fatou: np.ndarray
    iterations: np.ndarray
    escaped: np.ndarray

    @property
    def resolved_fraction(self) -> float:
        return float(np.mean(self.fatou)) if self.fatou.size else 0.0


@trace_operation("classify_orbits")
def classify_orbits(
    R: RationalMap,
    points: np.ndarray,
    budget: int,
    thresholds: Optional[Thresholds] = None,
) -> OrbitClasses:
    """
    Mark points whose orbits escape to an attracting ∞ or converge to an
    attracting cycle of period p ≤ max_period.

    Convergence needs three consecutive returns within cycle_tolerance of a
    period-p point and a cycle multiplier of modulus below 1.
    """
    th = thresholds or settings.thresholds
    shape = np.shape(points)
    z = np.asarray(points, dtype=complex).ravel().copy()
    P = th.max_period
    depth = 3 * P + 1
    history = np.full((depth, z.size), np.nan + 0j, dtype=complex)
    fatou = np.zeros(z.size, dtype=bool)
    escaped = np.zeros(z.size, dtype=bool)
    iterations = np.full(z.size, -1, dtype=np.int64)
    active = np.isfinite(z)
    radius = None
    if infinity_attracting(R):
        radius = escape_radius(R) if R.is_polynomial else RATIONAL_ESCAPE

    for t in range(budget + 1):
        history[t % depth] = z
        if radius is not None:
            out = active & (np.abs(z) > radius)
            fatou |= out
            escaped |= out
            iterations[out] = t
            active &= ~out
        for p in range(1, min(P, t // 3) + 1):
            idx = np.flatnonzero(active)
            if not idx.size:
                break
            close = np.ones(idx.size, dtype=bool)
            for j in range(3):
                a = history[(t - j * p) % depth, idx]
                b = history[(t - (j + 1) * p) % depth, idx]
                close &= np.abs(a - b) < th.cycle_tolerance
            if not np.any(close):
                continue
            idx = idx[close]
            multiplier = np.ones(idx.size, dtype=complex)
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                for j in range(p):
                    multiplier *= R.derivative_values(history[(t - j) % depth, idx])
            hit = idx[np.abs(multiplier) < 1]
            fatou[hit] = True
            iterations[hit] = t
            active[hit] = False
        active &= np.isfinite(z)
        if t == budget or not np.any(active):
            break
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            z = np.where(active, R.values(z), z)

    return OrbitClasses(fatou.reshape(shape), iterations.reshape(shape), escaped.reshape(shape))


@dataclass(frozen=True)
class JuliaImage:
    """8-bit grayscale rows, top row first, with the iteration data behind it."""

    pixels: np.ndarray
    iterations: np.ndarray
    mode: str
    max_iter: int
    unresolved_fraction: float

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    def to_json(self) -> Dict[str, Any]:
        return {
            "mode": self.mode,
            "width": self.width,
            "height": self.height,
            "max_iter": self.max_iter,
            "unresolved_fraction": self.unresolved_fraction,
        }


def _shade(iterations: np.ndarray, max_iter: int) -> np.ndarray:
    """Slow orbits bright, undecided orbits white."""
    scale = max(max_iter, 1)
    levels = np.where(iterations < 0, 255, np.floor(255.0 * np.minimum(iterations, scale) / scale))
    # grid rows run bottom to top; images run top to bottom
    return np.flipud(levels.astype(np.uint8))


@trace_operation("render_julia")
def render_julia(
    R: RationalMap,
    grid: GridSpec,
    max_iter: int = 200,
    thresholds: Optional[Thresholds] = None,
) -> JuliaImage:
    """Escape-time image for polynomials, cycle-convergence image for rational maps."""
    points = grid.points()
    if R.is_polynomial:
        iterations = escape_times(R, points, max_iter)
        mode = "escape-time"
    else:
        classes = classify_orbits(R, points, max_iter, thresholds)
        iterations = np.where(classes.fatou, classes.iterations, -1)
        mode = "cycle-convergence"
        if not np.any(classes.fatou):
            logger.warning("No attracting behaviour detected; image shows the unresolved mask",
                           max_iter=max_iter)
    unresolved = float(np.mean(iterations < 0))
    logger.info("Julia image rendered", mode=mode, nx=grid.nx, ny=grid.ny,
                unresolved_fraction=round(unresolved, 6))
    return JuliaImage(_shade(iterations, max_iter), iterations, mode, max_iter, unresolved)


def pixel_of(grid: GridSpec, z: complex) -> tuple:
    """(row, col) of the grid cell containing z, rows as in grid.points()."""
    col = int(math.floor((z.real - grid.xmin) / grid.dx))
    row = int(math.floor((z.imag - grid.ymin) / grid.dy))
    if not (0 <= col < grid.nx and 0 <= row < grid.ny):
        raise PreconditionError("point inside the grid", z=[z.real, z.imag])
    return row, col
