"""Single-document JSON tensor files.

The on-disk format is ``{"shape": [...], "bitwidth": b, "signed": bool,
"data": [...]}`` with data flat in row-major order.  JSON over binary so
any language (and any test harness) can write fixtures by hand.  All
load errors carry the file path.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import PackConvError, RangeError, ShapeError
from .tensors import value_bounds

__all__ = ["TensorFile", "load_tensor", "save_tensor"]


@dataclass(frozen=True)
class TensorFile:
    """An integer tensor as read from (or about to become) a file."""

    shape: tuple
    bitwidth: int
    signed: bool
    data: np.ndarray  # flat, row-major

    @property
    def array(self):
        return self.data.reshape(self.shape)


def load_tensor(path):
    """Read and validate a tensor file.

    Raises
    ------
    PackConvError
        On unreadable files or malformed JSON (message includes the path).
    ShapeError / RangeError
        On structurally valid JSON with inconsistent contents.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise PackConvError(f"{path}: cannot read ({exc.strerror})") from exc
    except json.JSONDecodeError as exc:
        raise PackConvError(f"{path}: invalid JSON: {exc}") from exc

    if not isinstance(doc, dict):
        raise ShapeError(f"{path}: expected a JSON object, got {type(doc).__name__}")
    missing = {"shape", "bitwidth", "signed", "data"} - doc.keys()
    if missing:
        raise ShapeError(f"{path}: missing keys {sorted(missing)}")

    shape = doc["shape"]
    if (
        not isinstance(shape, list)
        or not shape
        or not all(isinstance(d, int) and d > 0 for d in shape)
    ):
        raise ShapeError(f"{path}: shape must be a non-empty list of positive ints")
    bitwidth = doc["bitwidth"]
    if not isinstance(bitwidth, int) or bitwidth < 1:
        raise RangeError(f"{path}: bitwidth must be a positive integer")
    signed = doc["signed"]
    if not isinstance(signed, bool):
        raise ShapeError(f"{path}: signed must be a boolean")
    data = doc["data"]
    if not isinstance(data, list) or not all(
        isinstance(v, int) and not isinstance(v, bool) for v in data
    ):
        raise ShapeError(f"{path}: data must be a flat list of integers")

    count = 1
    for d in shape:
        count *= d
    if count != len(data):
        raise ShapeError(
            f"{path}: shape {shape} implies {count} values, data has {len(data)}"
        )
    lo, hi = value_bounds(bitwidth, signed)
    for v in data:
        if not lo <= v <= hi:
            raise RangeError(
                f"{path}: value {v} outside "
                f"{'signed' if signed else 'unsigned'} {bitwidth}-bit range"
            )
    return TensorFile(
        shape=tuple(shape),
        bitwidth=bitwidth,
        signed=signed,
        data=np.array(data, dtype=np.int64),
    )


def save_tensor(path, array, bitwidth, signed):
    """Write an integer array as a tensor file (row-major flattening)."""
    arr = np.asarray(array, dtype=np.int64)
    doc = {
        "shape": list(arr.shape),
        "bitwidth": int(bitwidth),
        "signed": bool(signed),
        "data": [int(v) for v in arr.reshape(-1)],
    }
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh)
            fh.write("\n")
    except OSError as exc:
        raise PackConvError(f"{path}: cannot write ({exc.strerror})") from exc
