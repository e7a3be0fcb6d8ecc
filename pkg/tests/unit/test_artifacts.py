"""
Unit tests for artifact writers and readers.
"""

import json

import numpy as np
import pandas as pd
import pytest

from critspec.core.exceptions import CritspecError
from critspec.models.domain import CriterionStatus
from critspec.services.measures import AtomicMeasure
from critspec.services.spectrum import spectrum
from critspec.storage.artifacts import (
    ArtifactStore,
    dumps_json,
    measure_from_json,
    measure_to_json,
    read_csv,
    read_pgm,
    spectrum_from_csv,
    spectrum_to_csv,
    to_jsonable,
    write_csv,
    write_pgm,
)


class TestJson:
    def test_special_values(self):
        data = to_jsonable({
            "z": 1 + 2j,
            "inf": float("inf"),
            "nan": np.float64("nan"),
            "n": np.int64(3),
            "flag": np.bool_(True),
            "status": CriterionStatus.UNDECIDED,
            "arr": np.array([0.5, 1.5]),
        })
        assert data == {
            "z": [1.0, 2.0],
            "inf": "inf",
            "nan": "nan",
            "n": 3,
            "flag": True,
            "status": "undecided",
            "arr": [0.5, 1.5],
        }

    def test_key_order_and_line_endings(self):
        text = dumps_json({"b": 1, "a": 2})
        assert text.index('"b"') < text.index('"a"')
        assert text.endswith("}\n")
        assert "\r" not in text


class TestCsv:
    def test_float_format_round_trips(self, tmp_path):
        frame = pd.DataFrame({"x": [0.1, 1 / 3, 2.0 ** -60]})
        path = write_csv(tmp_path / "x.csv", frame)
        assert read_csv(path)["x"].tolist() == frame["x"].tolist()
        assert b"\r\n" not in path.read_bytes()

    def test_spectrum_round_trip(self, tmp_path, chebyshev):
        s = spectrum(chebyshev, 0, 20)
        back = spectrum_from_csv(spectrum_to_csv(s, tmp_path / "spectrum.csv"))
        assert np.allclose(back.sigma, s.sigma, rtol=1e-12, atol=0)

    def test_measure_round_trip(self, tmp_path):
        nu = AtomicMeasure([1j, -2], [0.5, 2 - 1j], tail_bound=1e-8)
        back = measure_from_json(measure_to_json(nu, tmp_path / "nu.json"))
        assert back.weights.tolist() == nu.weights.tolist()


class TestPgm:
    def test_round_trip(self, tmp_path):
        pixels = np.arange(12, dtype=np.uint8).reshape(3, 4)
        path = write_pgm(tmp_path / "img.pgm", pixels)
        assert path.read_bytes().startswith(b"P5\n4 3\n255\n")
        assert np.array_equal(read_pgm(path), pixels)

    def test_empty_image_rejected(self, tmp_path):
        with pytest.raises(CritspecError):
            write_pgm(tmp_path / "empty.pgm", np.zeros((0, 4)))


def test_artifact_store_records_order(tmp_path):
    store = ArtifactStore(tmp_path / "out")
    store.json("b.json", {"x": 1})
    store.csv("a.csv", pd.DataFrame({"x": [1.0]}))
    store.json("b.json", {"x": 2})
    assert store.manifest() == {"artifacts": ["b.json", "a.csv"]}
    assert json.loads((tmp_path / "out" / "b.json").read_text()) == {"x": 2}
