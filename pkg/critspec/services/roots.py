"""
Polynomial root finding by Aberth-Ehrlich simultaneous iteration.

Failed runs are restarted from randomly perturbed initial circles (tenacity drives
the restarts); clustered roots are merged into multiple roots.
"""

from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from numpy.polynomial import polynomial as P
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from critspec.core.config import settings
from critspec.core.exceptions import RootFindingError
from critspec.core.observability import MetricsCollector, get_logger

logger = get_logger(__name__)

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class Root:
    """A finite polynomial root with its multiplicity."""

    value: complex
    multiplicity: int = 1

    @property
    def is_simple(self) -> bool:
        return self.multiplicity == 1


def trim(coeffs: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Drop vanishing leading (highest-degree) coefficients, keeping at least one."""
    c = np.asarray(coeffs, dtype=complex)
    scale = np.max(np.abs(c)) if c.size else 0.0
    n = c.size
    while n > 1 and abs(c[n - 1]) <= tol * scale:
        n -= 1
    return c[:n].copy()


def residual_scale(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Σ|c_k||x|^k, the natural scale of a polynomial residual."""
    return P.polyval(np.abs(x), np.abs(coeffs))


def _initial_guesses(coeffs: np.ndarray, rng: np.random.Generator, jitter: float) -> np.ndarray:
    n = coeffs.size - 1
    lead = coeffs[-1]
    # Cauchy bound on root moduli
    radius = 1.0 + np.max(np.abs(coeffs[:-1] / lead))
    # geometric mean of root moduli gives a tighter circle when |c_0| > 0
    if coeffs[0] != 0:
        radius = min(radius, max(abs(coeffs[0] / lead) ** (1.0 / n), 1e-3))
    angles = 2.0 * np.pi * (np.arange(n) + 0.25) / n + 0.4
    angles = angles + jitter * rng.uniform(-np.pi / n, np.pi / n, size=n)
    radii = radius * (1.0 + jitter * rng.uniform(-0.1, 0.1, size=n))
    return radii * np.exp(1j * angles)


def _aberth_once(
    coeffs: np.ndarray,
    tol: float,
    max_iter: int,
    rng: np.random.Generator,
    jitter: float,
) -> np.ndarray:
    deriv = P.polyder(coeffs)
    x = _initial_guesses(coeffs, rng, jitter)
    n = x.size
    # backward-error target: residual within tol of the evaluation scale
    target = max(tol, 8.0 * n * _EPS)

    for _ in range(max_iter):
        p = P.polyval(x, coeffs)
        residual = np.abs(p) / np.maximum(residual_scale(coeffs, x), np.finfo(float).tiny)
        if np.all(residual <= target):
            return x

        dp = P.polyval(x, deriv)
        diff = x[:, None] - x[None, :]
        np.fill_diagonal(diff, 1.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / diff
        np.fill_diagonal(inv, 0.0)
        s = inv.sum(axis=1)

        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            ratio = p / dp
            step = ratio / (1.0 - ratio * s)
        bad = ~np.isfinite(step)
        if np.any(bad):
            step[bad] = 1e-3 * (1.0 + np.abs(x[bad])) * np.exp(1j * rng.uniform(0, 2 * np.pi, bad.sum()))
        # converged roots stay put
        step[residual <= target] = 0.0
        x = x - step

    p = P.polyval(x, coeffs)
    residual = np.abs(p) / np.maximum(residual_scale(coeffs, x), np.finfo(float).tiny)
    worst = float(np.max(residual))
    if worst <= target:
        return x
    raise RootFindingError("simultaneous iteration did not converge", worst_residual=worst)


def cluster_roots(values: np.ndarray, tol: float) -> List[Root]:
    """Merge numerically coincident roots; a cluster's centroid is its value."""
    radius = 10.0 * max(tol, np.sqrt(tol))
    remaining = sorted(values.tolist(), key=lambda v: (v.real, v.imag))
    roots: List[Root] = []
    used = [False] * len(remaining)
    for i, v in enumerate(remaining):
        if used[i]:
            continue
        members = [v]
        used[i] = True
        for j in range(i + 1, len(remaining)):
            if not used[j] and abs(remaining[j] - v) <= radius * (1.0 + abs(v)):
                members.append(remaining[j])
                used[j] = True
        roots.append(Root(value=complex(np.mean(members)), multiplicity=len(members)))
    return roots


def polynomial_roots(
    coeffs: np.ndarray,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    attempts: Optional[int] = None,
    seed: int = 0,
) -> List[Root]:
    """
    All roots of a polynomial with multiplicity.

    Args:
        coeffs: coefficients in ascending degree order
        tol: relative residual tolerance (defaults to settings.root_tolerance)
        max_iter: iteration budget per attempt
        attempts: number of attempts, each from a freshly perturbed start
        seed: seed of the perturbation generator

    Returns:
        Roots sorted by (re, im), each with its multiplicity

    Raises:
        RootFindingError: no attempt converged; carries the worst residual
    """
    tol = settings.root_tolerance if tol is None else tol
    max_iter = settings.root_max_iterations if max_iter is None else max_iter
    attempts = settings.root_restart_attempts if attempts is None else attempts

    c = trim(coeffs)
    degree = c.size - 1
    if degree < 1:
        return []

    # zero roots are exact
    zeros = 0
    while zeros < degree and c[zeros] == 0:
        zeros += 1
    core = c[zeros:]
    roots: List[Root] = [Root(0j, zeros)] if zeros else []

    if core.size == 2:
        roots.append(Root(complex(-core[0] / core[1]), 1))
    elif core.size > 2:
        rng = np.random.default_rng(seed)
        values: Optional[np.ndarray] = None
        for attempt in Retrying(
            stop=stop_after_attempt(attempts),
            retry=retry_if_exception_type(RootFindingError),
            reraise=True,
        ):
            with attempt:
                number = attempt.retry_state.attempt_number
                if number > 1:
                    MetricsCollector.track_root_restart()
                    logger.debug("Restarting root finder", attempt=number, degree=core.size - 1)
                values = _aberth_once(core, tol, max_iter, rng, jitter=0.0 if number == 1 else 1.0)
        assert values is not None
        roots.extend(cluster_roots(values, tol))

    return sorted(_merge_zero(roots, tol), key=lambda r: (r.value.real, r.value.imag))


def _merge_zero(roots: List[Root], tol: float) -> List[Root]:
    """Fold roots clustered at 0 into the exact zero root."""
    zero = [r for r in roots if r.value == 0]
    if not zero:
        return roots
    radius = 10.0 * max(tol, np.sqrt(tol))
    near = [r for r in roots if r.value != 0 and abs(r.value) <= radius]
    if not near:
        return roots
    total = sum(r.multiplicity for r in zero + near)
    rest = [r for r in roots if r.value != 0 and abs(r.value) > radius]
    return rest + [Root(0j, total)]
