"""Integer tensor containers shared by the packed and reference paths.

These are thin validated wrappers around int64 arrays; none of the
arithmetic lives here.  Keeping them in a neutral module lets the
reference implementation return the same types as the fast path without
importing any of it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RangeError, ShapeError

__all__ = ["FeatureMap", "KernelTensor", "OutputMap", "value_bounds"]


def value_bounds(bitwidth, signed):
    """Inclusive (lo, hi) range of a ``bitwidth``-bit integer."""
    if bitwidth < 1:
        raise RangeError(f"bitwidth must be >= 1, got {bitwidth}")
    if signed:
        return -(1 << (bitwidth - 1)), (1 << (bitwidth - 1)) - 1
    return 0, (1 << bitwidth) - 1


def _check_range(arr, bitwidth, signed, what):
    lo, hi = value_bounds(bitwidth, signed)
    amin = int(arr.min())
    amax = int(arr.max())
    if amin < lo or amax > hi:
        raise RangeError(
            f"{what} values [{amin}, {amax}] exceed "
            f"{'signed' if signed else 'unsigned'} {bitwidth}-bit range [{lo}, {hi}]"
        )


@dataclass(frozen=True, eq=False)
class FeatureMap:
    """Quantized input activations, shape (C_i, H_i, W_i)."""

    data: np.ndarray
    bitwidth: int
    signed: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.int64)
        if arr.ndim != 3:
            raise ShapeError(f"feature map must be 3-D, got {arr.ndim}-D")
        if min(arr.shape) < 1:
            raise ShapeError(f"feature map dimensions must be >= 1, got {arr.shape}")
        _check_range(arr, self.bitwidth, self.signed, "feature map")
        object.__setattr__(self, "data", arr)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class KernelTensor:
    """Quantized layer weights, shape (C_o, C_i, K, K)."""

    data: np.ndarray
    bitwidth: int
    signed: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.int64)
        if arr.ndim != 4:
            raise ShapeError(f"kernel tensor must be 4-D, got {arr.ndim}-D")
        if min(arr.shape) < 1:
            raise ShapeError(f"kernel dimensions must be >= 1, got {arr.shape}")
        if arr.shape[2] != arr.shape[3]:
            raise ShapeError(f"kernel window must be square, got {arr.shape[2:]}")
        _check_range(arr, self.bitwidth, self.signed, "kernel")
        object.__setattr__(self, "data", arr)

    @property
    def shape(self):
        return self.data.shape


@dataclass(frozen=True, eq=False)
class OutputMap:
    """Layer output, shape (C_o, H_o, W_o), plus the wide-multiply tally."""

    data: np.ndarray
    wide_multiplies: int = 0

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.int64)
        if arr.ndim != 3:
            raise ShapeError(f"output map must be 3-D, got {arr.ndim}-D")
        object.__setattr__(self, "data", arr)

    @property
    def shape(self):
        return self.data.shape
