"""
Critical orbits, derivative cocycles and the spectrum σ_n(c) = 1/(Rⁿ)'(R(c)).

Cocycles are accumulated in log-polar form (Σ log|R'|, Σ arg R') so products
over thousands of steps neither overflow nor underflow. Orbits are iterated
lazily; once a floating-point orbit revisits an earlier point it is periodic
forever and is extended exactly without further iteration.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import mpmath as mp
import numpy as np
import pandas as pd

from critspec.core.config import Thresholds, settings
from critspec.core.exceptions import PreconditionError
from critspec.core.observability import get_logger, trace_operation
from critspec.models.domain import (
    PointLike,
    PrecisionConfig,
    SpherePoint,
    TrichotomyCase,
    as_point,
    spherical_distance,
)
from critspec.services.riemann import RationalMap

logger = get_logger(__name__)

TWO_PI = 2.0 * math.pi


def wrap_angle(theta: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Reduce angles to (−π, π]."""
    return np.angle(np.exp(1j * np.asarray(theta)))


@dataclass(frozen=True)
class OrbitRecord:
    """
    Orbit z_0..z_m of a base point with per-step derivative factors R'(z_k)
    stored as (log-modulus, argument).
    """

    base: SpherePoint
    points: np.ndarray
    log_moduli: np.ndarray
    arguments: np.ndarray
    hit_critical: bool = False
    left_precision: bool = False
    approached_infinity: bool = False
    preperiod: Optional[int] = None
    period: Optional[int] = None

    @property
    def steps(self) -> int:
        return int(self.log_moduli.size)

    @property
    def truncated(self) -> bool:
        return self.hit_critical or self.left_precision or self.approached_infinity

    def derivative_factors(self) -> np.ndarray:
        return np.exp(self.log_moduli) * np.exp(1j * self.arguments)

    def flags(self) -> Dict[str, bool]:
        return {
            "hit_critical_point": self.hit_critical,
            "left_precision_envelope": self.left_precision,
            "approached_infinity": self.approached_infinity,
        }


class OrbitCocycle:
    """
    Incrementally iterated orbit with its derivative factors.

    Iteration stops on a critical hit, on approach to ∞ or on a non-finite
    derivative. An exact repeat of an earlier point fixes (preperiod, period)
    and ends iteration; later indices are served by periodic replication.
    """

    def __init__(
        self,
        R: RationalMap,
        z0: PointLike,
        precision: Optional[PrecisionConfig] = None,
        thresholds: Optional[Thresholds] = None,
        max_steps: Optional[int] = None,
    ):
        self.R = R
        self.base = as_point(z0)
        self.precision = precision or PrecisionConfig.from_settings()
        self.thresholds = thresholds or settings.thresholds
        self.max_steps = settings.max_orbit_steps if max_steps is None else max_steps

        self.points: List[complex] = []
        self.logs: List[float] = []
        self.args: List[float] = []
        self.hit_critical = False
        self.left_precision = False
        self.approached_infinity = False
        self.preperiod: Optional[int] = None
        self.period: Optional[int] = None
        self._seen: Dict[Any, int] = {}

        self._critical = np.array(
            [c.point.value for c in R.finite_critical_points()], dtype=complex
        )
        self._escape_modulus = 2.0 / self.thresholds.infinity_radius
        self._num_list = [complex(c) for c in R.num]
        self._den_list = [complex(c) for c in R.den]
        self._crit_list = [complex(c) for c in R.critical_numerator]

        self._mp_bits = self.precision.mantissa_bits
        self._mp_last: Any = None
        if self._mp_bits > 53:
            with mp.workprec(self._mp_bits):
                self._mp_num = [mp.mpc(c.real, c.imag) for c in R.num]
                self._mp_den = [mp.mpc(c.real, c.imag) for c in R.den]
                self._mp_crit = [mp.mpc(c.real, c.imag) for c in R.critical_numerator]

        if self.base.infinite:
            self.approached_infinity = True
            return
        self.points.append(self.base.value)
        self._seen[self._key_start()] = 0

    # Iteration

    @property
    def stopped(self) -> bool:
        return self.hit_critical or self.left_precision or self.approached_infinity

    @property
    def periodic(self) -> bool:
        return self.period is not None

    @property
    def exhausted(self) -> bool:
        """No further factors can be produced."""
        return self.stopped or (not self.periodic and len(self.logs) >= self.max_steps)

    def _key_start(self) -> Any:
        if self._mp_bits > 53:
            with mp.workprec(self._mp_bits):
                self._mp_last = mp.mpc(self.base.value.real, self.base.value.imag)
            return self._mp_last
        return self.base.value

    def _near_critical(self, z: complex) -> bool:
        if self._critical.size == 0:
            return False
        radius = self.thresholds.degeneracy_radius * (1.0 + np.abs(self._critical))
        return bool(np.any(np.abs(self._critical - z) <= radius))

    def _escaping(self, z: complex) -> bool:
        return not (math.isfinite(z.real) and math.isfinite(z.imag)) or abs(z) > self._escape_modulus

    @staticmethod
    def _horner(coeffs: List[Any], z: Any) -> Any:
        acc: Any = 0
        for c in reversed(coeffs):
            acc = acc * z + c
        return acc

    def _step_float(self, z: complex) -> Tuple[Optional[complex], Optional[complex], Any]:
        q = self._horner(self._den_list, z)
        if q == 0:
            return None, None, None
        nxt = self._horner(self._num_list, z) / q
        deriv = self._horner(self._crit_list, z) / (q * q)
        return nxt, deriv, nxt

    def _step_mp(self) -> Tuple[Optional[complex], Optional[complex], Any]:
        with mp.workprec(self._mp_bits):
            z = self._mp_last
            q = self._horner(self._mp_den, z)
            if q == 0:
                return None, None, None
            nxt = self._horner(self._mp_num, z) / q
            deriv = self._horner(self._mp_crit, z) / (q * q)
            return complex(nxt), complex(deriv), nxt

    def step(self) -> bool:
        """Advance one step; False when the orbit cannot continue."""
        if self.stopped or self.periodic:
            return False
        z = self.points[-1]
        if self._near_critical(z):
            self.hit_critical = True
            self.logs.append(-math.inf)
            self.args.append(0.0)
            image = self.R.value(z)
            if not self._escaping(image):
                self.points.append(image)
            return False

        if self._mp_bits > 53:
            nxt, deriv, key = self._step_mp()
        else:
            nxt, deriv, key = self._step_float(z)

        if nxt is None or self._escaping(nxt):
            self.approached_infinity = True
            return False
        if deriv == 0:
            self.hit_critical = True
            self.logs.append(-math.inf)
            self.args.append(0.0)
            self.points.append(nxt)
            return False
        if not (math.isfinite(deriv.real) and math.isfinite(deriv.imag)):
            self.left_precision = True
            return False

        self.logs.append(math.log(abs(deriv)))
        self.args.append(math.atan2(deriv.imag, deriv.real))
        self.points.append(nxt)
        if self._mp_bits > 53:
            self._mp_last = key

        index = len(self.points) - 1
        seen = self._seen.get(key)
        if seen is not None:
            self.preperiod = seen
            self.period = index - seen
            logger.debug("Orbit is eventually periodic", preperiod=seen, period=self.period)
        else:
            self._seen[key] = index
        return True

    def extend(self, factors: int) -> int:
        """Iterate until `factors` derivative factors exist or iteration stops."""
        target = min(factors, self.max_steps)
        while len(self.logs) < target and self.step():
            pass
        return self.available_factors()

    def available_factors(self) -> Optional[int]:
        """Number of derivative factors obtainable; None when unbounded (periodic)."""
        if self.periodic:
            return None
        return len(self.logs)

    # Periodic replication

    def _indices(self, count: int) -> np.ndarray:
        idx = np.arange(count)
        if self.periodic and count > len(self.logs):
            pre, per = self.preperiod, self.period
            tail = idx >= pre
            idx[tail] = pre + (idx[tail] - pre) % per
        return idx

    def factor_arrays(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        self.extend(count)
        available = self.available_factors()
        if available is not None:
            count = min(count, available)
        idx = self._indices(count)
        return np.asarray(self.logs)[idx], np.asarray(self.args)[idx]

    def point_array(self, count: int) -> np.ndarray:
        self.extend(max(count - 1, 0))
        if self.periodic:
            idx = self._indices(count)
            return np.asarray(self.points, dtype=complex)[idx]
        return np.asarray(self.points[:count], dtype=complex)

    def record(self, steps: int) -> OrbitRecord:
        logs, args = self.factor_arrays(steps)
        points = self.point_array(logs.size + 1)
        at_end = not self.periodic and logs.size == len(self.logs)
        return OrbitRecord(
            base=self.base,
            points=points,
            log_moduli=logs,
            arguments=args,
            hit_critical=self.hit_critical and at_end,
            left_precision=self.left_precision and at_end,
            approached_infinity=self.approached_infinity and at_end,
            preperiod=self.preperiod,
            period=self.period,
        )


@trace_operation("iterate_orbit")
def iterate_orbit(
    R: RationalMap,
    z0: PointLike,
    N: int,
    precision: Optional[PrecisionConfig] = None,
    thresholds: Optional[Thresholds] = None,
) -> OrbitRecord:
    """
    Iterate z0 for N steps.

    The record truncates with a flag when the orbit lands on a critical point,
    approaches ∞ or leaves the floating-point envelope.
    """
    if N < 1:
        raise PreconditionError("N >= 1", steps=N)
    cocycle = OrbitCocycle(R, z0, precision, thresholds, max_steps=max(N, 1))
    return cocycle.record(N)


class SequenceSource:
    """A complex sequence a_0, a_1, … served in index ranges."""

    name = "sequence"

    @property
    def length(self) -> Optional[int]:
        """Number of available terms; None when unbounded."""
        return None

    def log_polar(self, start: int, stop: int) -> Tuple[np.ndarray, np.ndarray]:
        values = self.values(start, stop)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(values)), np.angle(values)

    def values(self, start: int, stop: int) -> np.ndarray:
        logs, args = self.log_polar(start, stop)
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(logs) * np.exp(1j * args)

    def available(self, stop: int) -> bool:
        return self.length is None or stop <= self.length

    def materialize(self, count: int) -> np.ndarray:
        stop = count if self.length is None else min(count, self.length)
        return self.values(0, stop)


class ExplicitSequence(SequenceSource):
    """A finite sequence given by its values."""

    name = "explicit"

    def __init__(self, values: Sequence[complex]):
        self._values = np.asarray(values, dtype=complex)

    @property
    def length(self) -> Optional[int]:
        return int(self._values.size)

    def values(self, start: int, stop: int) -> np.ndarray:
        return self._values[start:stop]


class FormulaSequence(SequenceSource):
    """An unbounded sequence given by a vectorized formula in n."""

    name = "formula"

    def __init__(self, formula, name: str = "formula"):
        self._formula = formula
        self.name = name

    def values(self, start: int, stop: int) -> np.ndarray:
        n = np.arange(start, stop)
        return np.asarray(self._formula(n), dtype=complex) * np.ones(n.size)


class SpectrumSource(SequenceSource):
    """
    Lazily extended spectrum σ_n(c) of a critical point.

    Terms are produced in log-polar form from the derivative cocycle along the
    orbit of v = R(c); eventually periodic orbits yield an unbounded sequence.
    """

    name = "spectrum"

    def __init__(
        self,
        R: RationalMap,
        c: PointLike,
        precision: Optional[PrecisionConfig] = None,
        thresholds: Optional[Thresholds] = None,
        max_orbit_steps: Optional[int] = None,
    ):
        self.R = R
        self.critical_point = as_point(c)
        self.critical_value = R.evaluate(self.critical_point)
        self.cocycle = OrbitCocycle(R, self.critical_value, precision, thresholds, max_orbit_steps)

    @property
    def degenerate(self) -> bool:
        return self.cocycle.hit_critical

    @property
    def length(self) -> Optional[int]:
        if self.cocycle.periodic:
            return None
        if self.cocycle.exhausted:
            return self._finite_length()
        # not known until the orbit is iterated further
        return None

    def _finite_length(self) -> int:
        logs = self.cocycle.logs
        if self.cocycle.hit_critical:
            return len(logs)
        return len(logs) + 1

    def available(self, stop: int) -> bool:
        factors = self.cocycle.extend(max(stop - 1, 0))
        if factors is None:
            return True
        return stop <= self._finite_length()

    def _cumulative(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        logs = np.asarray(self.cocycle.logs[:count])
        args = np.asarray(self.cocycle.args[:count])
        cum_log = np.concatenate(([0.0], -np.cumsum(logs)))
        cum_arg = np.concatenate(([0.0], -np.cumsum(args)))
        return cum_log, cum_arg

    def log_polar(self, start: int, stop: int) -> Tuple[np.ndarray, np.ndarray]:
        if stop <= start:
            return np.empty(0), np.empty(0)
        self.cocycle.extend(stop - 1)
        n = np.arange(start, stop)
        if not self.cocycle.periodic:
            limit = self._finite_length()
            if stop > limit:
                raise PreconditionError(
                    "orbit horizon", f"spectrum available up to n = {limit - 1}",
                    requested=stop - 1, available=limit,
                )
            cum_log, cum_arg = self._cumulative(stop - 1)
            return cum_log[n], wrap_angle(cum_arg[n])

        pre, per = self.cocycle.preperiod, self.cocycle.period
        cum_log, cum_arg = self._cumulative(pre + per)
        cycle_log = cum_log[pre + per] - cum_log[pre]
        cycle_arg = math.fmod(cum_arg[pre + per] - cum_arg[pre], TWO_PI)
        out_log = np.empty(n.size)
        out_arg = np.empty(n.size)
        head = n <= pre + per
        out_log[head] = cum_log[n[head]]
        out_arg[head] = cum_arg[n[head]]
        tail = ~head
        if np.any(tail):
            q, r = np.divmod(n[tail] - pre, per)
            out_log[tail] = cum_log[pre + r] + q * cycle_log
            out_arg[tail] = cum_arg[pre + r] + np.fmod(q * cycle_arg, TWO_PI)
        return out_log, wrap_angle(out_arg)


@dataclass(frozen=True)
class Spectrum:
    """σ_0..σ_N in log-polar form with partial sums and barycenters on demand."""

    log_modulus: np.ndarray
    argument: np.ndarray
    critical_point: Optional[SpherePoint] = None
    critical_value: Optional[SpherePoint] = None
    degenerate: bool = False
    orbit: Optional[OrbitRecord] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @classmethod
    def from_sequence(cls, values: Sequence[complex]) -> "Spectrum":
        """Synthetic spectrum from explicit values (σ_0 need not be 1)."""
        arr = np.asarray(values, dtype=complex)
        with np.errstate(divide="ignore"):
            s = cls(np.log(np.abs(arr)), np.angle(arr))
        # exact values; the log-polar round trip leaves O(ε) imaginary parts on real input
        s.__dict__["sigma"] = arr
        return s

    @property
    def length(self) -> int:
        """N, the largest index present."""
        return int(self.log_modulus.size) - 1

    @cached_property
    def sigma(self) -> np.ndarray:
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.log_modulus) * np.exp(1j * self.argument)

    @cached_property
    def partial_sums(self) -> np.ndarray:
        return np.cumsum(self.sigma)

    @cached_property
    def barycenters(self) -> np.ndarray:
        """Entry k is b_{k+1} = S_k/(k+1)."""
        return self.partial_sums / np.arange(1, self.sigma.size + 1, dtype=float)

    def to_frame(self) -> pd.DataFrame:
        sigma = self.sigma
        partial = self.partial_sums
        return pd.DataFrame({
            "n": np.arange(sigma.size),
            "sigma_re": sigma.real,
            "sigma_im": sigma.imag,
            "log10_abs_sigma": self.log_modulus / math.log(10.0),
            "S_re": partial.real,
            "S_im": partial.imag,
            "abs_b": np.abs(self.barycenters),
        })

    @classmethod
    def from_frame(cls, frame: pd.DataFrame) -> "Spectrum":
        values = frame["sigma_re"].to_numpy() + 1j * frame["sigma_im"].to_numpy()
        log_modulus = frame["log10_abs_sigma"].to_numpy() * math.log(10.0)
        return cls(log_modulus, np.angle(values))


@trace_operation("spectrum")
def spectrum(
    R: RationalMap,
    c: PointLike,
    N: int,
    precision: Optional[PrecisionConfig] = None,
    thresholds: Optional[Thresholds] = None,
) -> Spectrum:
    """
    The spectrum σ_n(c), n = 0..N, of a finite critical point.

    Orbits that hit a critical point or approach ∞ truncate the spectrum; a
    critical hit marks it degenerate.
    """
    point = as_point(c)
    if point.infinite:
        raise PreconditionError("finite critical point", "∞ is excluded from spectrum analysis")
    tol = 10.0 * math.sqrt(R.tolerance)
    if not any(spherical_distance(cp.point, point) <= tol for cp in R.finite_critical_points()):
        raise PreconditionError("critical point", point=point.to_json())

    source = SpectrumSource(R, point, precision, thresholds, max_orbit_steps=max(N, 1))
    cocycle = source.cocycle
    cocycle.extend(N)
    orbit = cocycle.record(N)

    count = N + 1
    if not cocycle.periodic:
        count = min(count, source._finite_length())
    log_modulus, argument = source.log_polar(0, count)

    notes: List[str] = []
    if orbit.hit_critical:
        notes.append("orbit of the critical value lands on a critical point")
    if orbit.approached_infinity:
        notes.append("orbit of the critical value approaches infinity")
    if orbit.left_precision:
        notes.append("derivative left the floating-point envelope")
    if notes:
        logger.info("Spectrum truncated", length=count - 1, requested=N, reasons=notes)

    return Spectrum(
        log_modulus=log_modulus,
        argument=argument,
        critical_point=point,
        critical_value=source.critical_value,
        degenerate=orbit.hit_critical,
        orbit=orbit,
        notes=tuple(notes),
    )


def partial_sums_and_barycenters(
    s: Union[Spectrum, Sequence[complex]],
) -> Tuple[np.ndarray, np.ndarray]:
    """S_n and b_{n+1} = S_n/(n+1); accepts a Spectrum or any sequence."""
    if not isinstance(s, Spectrum):
        s = Spectrum.from_sequence(s)
    return s.partial_sums, s.barycenters


@dataclass(frozen=True)
class TrichotomyVerdict:
    case: TrichotomyCase
    evidence: Dict[str, float]
    window: int

    def to_json(self) -> Dict[str, Any]:
        return {"case": self.case.value, "window": self.window,
                "evidence": {k: _json_float(v) for k, v in self.evidence.items()}}


def _json_float(x: float) -> Union[float, str]:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return float(x)


def _finite_tail(s: Spectrum) -> np.ndarray:
    return s.log_modulus[np.isfinite(s.log_modulus)]


@trace_operation("trichotomy_classify")
def trichotomy_classify(
    s: Spectrum,
    window: Optional[int] = None,
    thresholds: Optional[Thresholds] = None,
) -> TrichotomyVerdict:
    """
    Label the asymptotic regime from trailing windows of log|σ_n|.

    derivative→0 when the trailing linear fit has slope ≥ ε; subsequence→∞
    when the window minimum drops by ≥ ε·window between the last two windows;
    bounded-liminf when the last two windows fit in a band of half-width δ.
    """
    th = thresholds or settings.thresholds
    window = window or th.trichotomy_window
    if s.degenerate:
        return TrichotomyVerdict(TrichotomyCase.DEGENERATE, {}, window)
    logs = _finite_tail(s)
    if logs.size < 2 * window:
        return TrichotomyVerdict(TrichotomyCase.UNDECIDED, {"length": float(logs.size)}, window)

    last = logs[-window:]
    previous = logs[-2 * window:-window]
    slope = float(np.polyfit(np.arange(window, dtype=float), last, 1)[0])
    drop = float(previous.min() - last.min())
    tail = logs[-2 * window:]
    half_band = float(tail.max() - tail.min()) / 2.0
    evidence = {
        "slope": slope,
        "window_min_drop": drop,
        "band_half_width": half_band,
        "liminf_abs_derivative": math.exp(-float(tail.max())),
        "limsup_abs_derivative": math.exp(-float(tail.min())) if tail.min() > -700 else math.inf,
    }

    if slope >= th.trichotomy_slope:
        case = TrichotomyCase.DERIVATIVE_TO_ZERO
    elif drop >= th.trichotomy_slope * window:
        case = TrichotomyCase.SUBSEQUENCE_TO_INFINITY
    elif half_band <= th.trichotomy_band:
        case = TrichotomyCase.BOUNDED_LIMINF
    else:
        case = TrichotomyCase.UNDECIDED
    return TrichotomyVerdict(case, evidence, window)


@dataclass(frozen=True)
class RadiusEstimate:
    radius: float
    error: float
    slope_radius: float

    def to_json(self) -> Dict[str, Any]:
        return {k: _json_float(getattr(self, k)) for k in ("radius", "error", "slope_radius")}


def radius_of_convergence(s: Spectrum) -> RadiusEstimate:
    """
    Cauchy–Hadamard estimate 1/limsup|σ_n|^{1/n} over the trailing half, with
    the linear-fit slope of log|σ_n| as a cross-check.
    """
    logs = _finite_tail(s)
    if logs.size < 16:
        raise PreconditionError("at least 16 non-degenerate entries", length=int(logs.size))
    n = np.arange(logs.size, dtype=float)
    half = logs.size // 2
    tail_n, tail_logs = n[half:], logs[half:]
    if np.all(np.isneginf(tail_logs)):
        return RadiusEstimate(math.inf, 0.0, math.inf)

    rates = tail_logs / tail_n
    radius = math.exp(-float(np.max(rates)))
    quarter = logs.size - logs.size // 4
    radius_quarter = math.exp(-float(np.max(logs[quarter:] / n[quarter:])))
    slope = float(np.polyfit(tail_n, tail_logs, 1)[0])
    return RadiusEstimate(radius, abs(radius - radius_quarter), math.exp(-slope))


@dataclass(frozen=True)
class OscillationStats:
    sup_ratio: float
    liminf_derivative: float

    def to_json(self) -> Dict[str, float]:
        return {"sup_ratio": _json_float(self.sup_ratio),
                "liminf_abs_derivative": _json_float(self.liminf_derivative)}


def oscillation_stats(s: Spectrum) -> Optional[OscillationStats]:
    """sup|σ_{n+1}/σ_n| and liminf|R'(Rⁿv)| (trailing half); None if degenerate."""
    if s.degenerate or s.length < 1:
        return None
    steps = -np.diff(s.log_modulus)
    trailing = steps[steps.size // 2:]
    return OscillationStats(
        sup_ratio=math.exp(-float(np.min(steps))),
        liminf_derivative=math.exp(float(np.min(trailing))),
    )


def lyapunov_estimate(s: Spectrum) -> float:
    """Mean of log|R'| along the critical-value orbit, −log|σ_N|/N."""
    logs = _finite_tail(s)
    if logs.size < 2:
        raise PreconditionError("at least two spectrum entries")
    return -float(logs[-1]) / (logs.size - 1)


def o_n_proxy(s: Spectrum) -> float:
    """max_{n > N/2} |σ_n|/n, the finite-horizon stand-in for σ_n = o(n)."""
    logs = _finite_tail(s)
    N = logs.size - 1
    if N < 2:
        raise PreconditionError("at least three spectrum entries")
    n = np.arange(N // 2 + 1, N + 1)
    with np.errstate(over="ignore"):
        return float(np.max(np.exp(logs[n]) / n))


@dataclass(frozen=True)
class PostcriticalSample:
    points: np.ndarray
    bounding_box: Tuple[float, float, float, float]
    bounded: bool
    diameter: float
    area_estimates: Dict[int, float]

    def to_json(self) -> Dict[str, Any]:
        return {
            "points": [[p.real, p.imag] for p in self.points],
            "bounding_box": list(self.bounding_box),
            "bounded": self.bounded,
            "diameter": self.diameter,
            "area_estimates": {str(k): v for k, v in self.area_estimates.items()},
        }


def _diameter(points: np.ndarray) -> float:
    best = 0.0
    for i in range(0, points.size, 1024):
        block = points[i:i + 1024]
        best = max(best, float(np.max(np.abs(block[:, None] - points[None, :]))))
    return best


def box_count_areas(points: np.ndarray, diameter: float, levels: Sequence[int] = range(4, 10)) -> Dict[int, float]:
    """Occupied-box area at box side 2⁻ᵏ·diameter for each level k."""
    if points.size == 0 or diameter == 0:
        return {k: 0.0 for k in levels}
    x0, y0 = points.real.min(), points.imag.min()
    areas = {}
    for k in levels:
        side = diameter * 2.0 ** (-k)
        cells = {(int(ix), int(iy)) for ix, iy in zip(
            np.floor((points.real - x0) / side), np.floor((points.imag - y0) / side))}
        areas[k] = len(cells) * side * side
    return areas


@trace_operation("postcritical_sample")
def postcritical_sample(
    R: RationalMap,
    c: PointLike,
    N: int,
    precision: Optional[PrecisionConfig] = None,
    thresholds: Optional[Thresholds] = None,
) -> PostcriticalSample:
    """Orbit sample of v = R(c) with boundedness, diameter and box-count areas."""
    v = R.evaluate(as_point(c))
    if v.infinite:
        return PostcriticalSample(np.empty(0, dtype=complex), (0.0, 0.0, 0.0, 0.0), False, math.inf, {})
    record = iterate_orbit(R, v, N, precision, thresholds)
    points = np.unique(record.points)
    box = (float(points.real.min()), float(points.real.max()),
           float(points.imag.min()), float(points.imag.max()))
    diameter = _diameter(points)
    return PostcriticalSample(
        points=points,
        bounding_box=box,
        bounded=not record.approached_infinity,
        diameter=diameter,
        area_estimates=box_count_areas(points, diameter),
    )
