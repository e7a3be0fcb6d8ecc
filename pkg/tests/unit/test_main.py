import json

import pytest

from critspec.core.exceptions import ConfigError
from critspec.main import build_parser, load_config, run
from critspec.workers.pipeline import EXIT_ERROR


def test_load_config_with_seed_override(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"map": {"num": [-2, 0, 1]}, "horizon": 32, "seed": 1}))
    config = load_config(str(path), seed=7)
    assert config.seed == 7
    assert config.horizon == 32
    assert config.thresholds.cauchy_window == 5


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"map": {"num": [1]}, "horizon": 0}))
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_parser_rejects_unknown_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["explode", "--config", "x.json"])


def test_unknown_field_exits_with_error(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"map": {"num": [-2, 0, 1]}, "colour": "blue"}))
    assert run(["spectrum", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_ERROR
