import os
from unittest.mock import patch

import pytest
from pydantic import ValidationError

from critspec.core.config import Settings, Thresholds


def test_settings_defaults():
    """Test default settings."""
    with patch.dict(os.environ, {}, clear=True):
        settings = Settings(_env_file=None)
        assert settings.app_name == "critspec"
        assert settings.mantissa_bits == 53
        assert settings.series_truncation == 64
        assert settings.max_terms == 2**25
        assert settings.threads == 1


def test_settings_override():
    """Test environment variable overrides, including nested thresholds."""
    env = {
        "CRITSPEC_LOG_LEVEL": "DEBUG",
        "CRITSPEC_THREADS": "4",
        "CRITSPEC_THRESHOLDS__SCAN_NULL": "0.01",
    }
    with patch.dict(os.environ, env, clear=True):
        settings = Settings(_env_file=None)
        assert settings.log_level == "DEBUG"
        assert settings.threads == 4
        assert settings.thresholds.scan_null == 0.01
        assert settings.thresholds.cauchy_window == 5


def test_threshold_defaults():
    th = Thresholds()
    assert (th.trichotomy_slope, th.trichotomy_band, th.trichotomy_window) == (0.01, 0.5, 8)
    assert (th.cauchy_window, th.cauchy_tolerance) == (5, 1e-4)
    assert th.kernel_exclusion == 1e-9
    assert th.max_period == 20


def test_thresholds_reject_unknown_and_invalid_fields():
    with pytest.raises(ValidationError):
        Thresholds(cauchy_windw=3)
    with pytest.raises(ValidationError):
        Thresholds(coherence_max=1.5)


def test_precision_floor():
    with patch.dict(os.environ, {"CRITSPEC_MANTISSA_BITS": "24"}, clear=True):
        with pytest.raises(ValidationError):
            Settings(_env_file=None)
