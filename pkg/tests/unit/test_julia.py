"""
Unit tests for orbit classification and Julia set rendering.
"""

import numpy as np
import pytest

from critspec.core.exceptions import InvalidMapError, PreconditionError
from critspec.models.schemas import GridSpec
from critspec.services.julia import (
    classify_orbits,
    escape_radius,
    escape_times,
    infinity_attracting,
    pixel_of,
    render_julia,
)


def distance_to_segment(z: np.ndarray) -> np.ndarray:
    x = np.clip(z.real, -2.0, 2.0)
    return np.abs(z - x)


class TestEscape:
    def test_escape_radius(self, chebyshev, test_map):
        assert escape_radius(chebyshev) == 4.0
        with pytest.raises(InvalidMapError):
            escape_radius(test_map)

    def test_infinity_attracting(self, chebyshev, test_map):
        assert infinity_attracting(chebyshev)
        assert infinity_attracting(test_map)

    def test_points_off_the_interval_escape(self, chebyshev, rng):
        """The filled Julia set of z² − 2 is [−2, 2]."""
        z = rng.uniform(-3, 3, size=2000) + 1j * rng.uniform(-3, 3, size=2000)
        z = z[distance_to_segment(z) > 0.1]
        times = escape_times(chebyshev, z, 50)
        assert np.mean(times >= 0) >= 0.95

    def test_critical_point_never_escapes(self, chebyshev):
        assert escape_times(chebyshev, np.array([0j]), 1000).tolist() == [-1]

    def test_escape_iteration(self, square_map):
        assert escape_times(square_map, np.array([5.0, 3.0, 0.5]), 10).tolist() == [0, 1, -1]


class TestClassify:
    def test_basins_of_test_map(self, test_map):
        """0 attracts with multiplier 2/3, 1 repels with 5/4, ∞ attracts."""
        classes = classify_orbits(test_map, np.array([0.1, 1.0, 50.0]), 200)
        assert classes.fatou.tolist() == [True, False, True]
        assert classes.escaped.tolist() == [False, False, True]
        assert classes.iterations[1] == -1

    def test_superattracting_fixed_point(self, square_map):
        classes = classify_orbits(square_map, np.array([0j, 0.5]), 100)
        assert classes.fatou.all()
        assert classes.resolved_fraction == 1.0

    def test_zero_budget_resolves_only_immediate_escapes(self, chebyshev):
        classes = classify_orbits(chebyshev, np.array([0j, 10.0]), 0)
        assert classes.fatou.tolist() == [False, True]


class TestRender:
    def test_escape_time_image(self, chebyshev):
        grid = GridSpec.square(2.5, 64)
        image = render_julia(chebyshev, grid, max_iter=50)
        assert image.mode == "escape-time"
        assert image.pixels.shape == (64, 64)
        assert image.pixels.dtype == np.uint8
        # top-left corner escapes after one step
        assert image.pixels[0, 0] == 5
        assert image.to_json()["width"] == 64

    def test_rows_run_top_to_bottom(self, chebyshev):
        grid = GridSpec(xmin=-2.5, xmax=2.5, ymin=0.0, ymax=2.5, nx=8, ny=4)
        image = render_julia(chebyshev, grid, max_iter=50)
        # grid row 3 is the top row: 0.3125 + 2.1875i escapes after one step
        assert image.iterations[3, 4] == 1
        assert image.pixels[0, 4] == 5
        assert image.pixels[-1, 4] > image.pixels[0, 4]

    def test_rational_map_uses_cycle_convergence(self, test_map):
        image = render_julia(test_map, GridSpec.square(2.0, 16), max_iter=200)
        assert image.mode == "cycle-convergence"
        assert 0.0 <= image.unresolved_fraction < 1.0

    def test_pixel_of(self):
        grid = GridSpec.square(2.5, 64)
        assert pixel_of(grid, 0.01 + 0.01j) == (32, 32)
        with pytest.raises(PreconditionError):
            pixel_of(grid, 3.0 + 0j)
