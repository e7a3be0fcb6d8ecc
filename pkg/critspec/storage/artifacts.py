"""
Artifact files: CSV tables, JSON documents and grayscale images.

Everything written here is a pure function of its input. Numbers are written
with 17 significant digits, JSON keys keep the producer's order and line
endings are always LF, so identical runs give byte-identical files.
"""

import enum
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import pandas as pd

from critspec.core.exceptions import CritspecError
from critspec.core.observability import get_logger
from critspec.services.measures import AtomicMeasure
from critspec.services.spectrum import Spectrum

logger = get_logger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"


def _float(x: float) -> Union[float, str]:
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def to_jsonable(obj: Any) -> Any:
    """Plain JSON values: numpy scalars unwrapped, complex as [re, im], non-finite floats as strings."""
    if hasattr(obj, "to_json") and callable(obj.to_json):
        return to_jsonable(obj.to_json())
    if isinstance(obj, dict):
        return {str(k.value if isinstance(k, enum.Enum) else k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _float(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        z = complex(obj)
        return [_float(z.real), _float(z.imag)]
    if isinstance(obj, Path):
        return obj.as_posix()
    return obj


def dumps_json(obj: Any) -> str:
    return json.dumps(to_jsonable(obj), indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def write_json(path: PathLike, obj: Any) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_json(obj))
    return target


def read_json(path: PathLike) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_csv(path: PathLike, frame: pd.DataFrame) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return target


def read_csv(path: PathLike) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def spectrum_to_csv(s: Spectrum, path: PathLike) -> Path:
    return write_csv(path, s.to_frame())


def spectrum_from_csv(path: PathLike) -> Spectrum:
    return Spectrum.from_frame(read_csv(path))


def measure_to_json(nu: AtomicMeasure, path: PathLike) -> Path:
    return write_json(path, nu.to_json())


def measure_from_json(path: PathLike) -> AtomicMeasure:
    return AtomicMeasure.from_json(read_json(path))


# Images

def write_pgm(path: PathLike, pixels: np.ndarray) -> Path:
    """Binary PGM (P5), 8-bit, rows top to bottom."""
    img = np.ascontiguousarray(pixels, dtype=np.uint8)
    if img.ndim != 2 or 0 in img.shape:
        raise CritspecError("PGM needs a non-empty 2-D image", {"shape": list(img.shape)})
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    header = f"P5\n{img.shape[1]} {img.shape[0]}\n255\n".encode("ascii")
    target.write_bytes(header + img.tobytes())
    return target


def read_pgm(path: PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    fields: List[bytes] = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    if fields[0] != b"P5" or int(fields[3]) != 255:
        raise CritspecError("not an 8-bit binary PGM", {"path": str(path)})
    width, height = int(fields[1]), int(fields[2])
    pos += 1
    return np.frombuffer(data[pos:pos + width * height], dtype=np.uint8).reshape(height, width)


def write_png(path: PathLike, pixels: np.ndarray) -> Optional[Path]:
    """PNG through OpenCV when it is installed; None otherwise."""
    try:
        import cv2
    except ImportError:
        logger.info("OpenCV not installed; PNG output skipped", path=str(path))
        return None
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    if not cv2.imwrite(str(target), np.ascontiguousarray(pixels, dtype=np.uint8)):
        raise CritspecError("PNG encoder failed", {"path": str(target)})
    return target


class ArtifactStore:
    """An output directory that remembers what was written to it, in order."""

    def __init__(self, root: PathLike):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.written: List[str] = []

    def path(self, name: str) -> Path:
        return self.root / name

    def _record(self, target: Optional[Path]) -> Optional[Path]:
        if target is not None:
            name = target.relative_to(self.root).as_posix()
            if name not in self.written:
                self.written.append(name)
            logger.debug("Artifact written", artifact=name)
        return target

    def json(self, name: str, obj: Any) -> Path:
        return self._record(write_json(self.path(name), obj))

    def csv(self, name: str, frame: pd.DataFrame) -> Path:
        return self._record(write_csv(self.path(name), frame))

    def pgm(self, name: str, pixels: np.ndarray) -> Path:
        return self._record(write_pgm(self.path(name), pixels))

    def png(self, name: str, pixels: np.ndarray) -> Optional[Path]:
        return self._record(write_png(self.path(name), pixels))

    def manifest(self) -> Dict[str, Any]:
        return {"artifacts": list(self.written)}
