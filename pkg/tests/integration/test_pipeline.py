"""
Integration tests for the batch pipeline and the command line.
"""

import json

import pytest

from critspec.main import run
from critspec.models.schemas import RunConfig
from critspec.storage.artifacts import read_json, read_pgm
from critspec.workers.pipeline import EXIT_ERROR, EXIT_EVIDENCE, EXIT_OK, PipelineRunner

CHEBYSHEV_CONFIG = {
    "map": {"num": [-2, 0, 1]},
    "critical_point": {"index": 0},
    "horizon": 64,
    "path": {"kind": "radial", "K": 12},
    "weights": {"family": "constant", "size": 128, "lam": 0.5},
    "grids": {
        "field": {"xmin": -3, "xmax": 3, "ymin": -3, "ymax": 3, "nx": 24, "ny": 24, "exclusion_radius": 1e-3},
        "separation": {"xmin": -2.5, "xmax": 2.5, "ymin": -2.5, "ymax": 2.5, "nx": 32, "ny": 32},
        "separation_budget": 50,
    },
    "seed": 0,
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(CHEBYSHEV_CONFIG))
    return path


def test_chebyshev_run_reports_evidence(config_file, tmp_path):
    out = tmp_path / "out"
    assert run(["all", "--config", str(config_file), "--out", str(out)]) == EXIT_EVIDENCE

    manifest = read_json(out / "run.json")
    assert manifest["artifacts"][:2] == ["spectrum.csv", "summability.json"]
    assert manifest["errors"] == []

    diagnostics = read_json(out / "diagnostics.json")
    statuses = {c["criterion"]: c["status"] for c in diagnostics["criteria"]}
    assert statuses["prop-stability-bound"] == "instability-evidence"
    assert statuses["cor-bullet-1"] == "instability-evidence"
    assert diagnostics["citations"] == ["spectrum.csv", "summability.json", "measures.json", "scan.csv"]


def test_constant_weights_write_cesaro_section(config_file, tmp_path):
    out = tmp_path / "out"
    run(["summability", "--config", str(config_file), "--out", str(out)])
    doc = read_json(out / "summability.json")
    assert doc["cesaro"]["equals_barycenters"] is True
    assert doc["norlund"]["method"] == "cesaro"


def test_output_does_not_depend_on_thread_count(config_file, tmp_path):
    single, pooled = tmp_path / "single", tmp_path / "pooled"
    assert run(["all", "--config", str(config_file), "--out", str(single), "--threads", "1"]) == EXIT_EVIDENCE
    assert run(["all", "--config", str(config_file), "--out", str(pooled), "--threads", "8"]) == EXIT_EVIDENCE
    names = sorted(p.name for p in single.iterdir())
    assert names == sorted(p.name for p in pooled.iterdir())
    for name in names:
        assert (single / name).read_bytes() == (pooled / name).read_bytes(), name


def test_malformed_config(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text("{\"map\": ")
    assert run(["all", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_ERROR


def test_identity_verification(tmp_path):
    config = RunConfig.model_validate({
        "map": {"num": [0, 2, 2], "den": [3, 1]},
        "critical_point": {"index": 1},
        "identity": {"enabled": True, "lam": 0.2, "N": 4, "samples": 5},
    })
    result = PipelineRunner(config, tmp_path / "out").run(["ruelle"])
    assert result.exit_code == EXIT_OK
    doc = read_json(tmp_path / "out" / "residuals.json")
    assert doc["identity"]["max_order_matched_residual"] <= 1e-8
    assert len(doc["identity"]["samples"]) == 5


def test_render(tmp_path):
    config = RunConfig.model_validate({
        "map": {"num": [-2, 0, 1]},
        "render": {
            "enabled": True,
            "grid": {"xmin": -2.5, "xmax": 2.5, "ymin": -2.5, "ymax": 2.5, "nx": 40, "ny": 30},
            "max_iter": 50,
        },
    })
    result = PipelineRunner(config, tmp_path / "out").run(["render"])
    assert result.artifacts == ["julia.pgm", "run.json"]
    assert read_pgm(tmp_path / "out" / "julia.pgm").shape == (30, 40)
