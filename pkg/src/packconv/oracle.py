"""Reference convolutions, written the slow and obvious way.

All arithmetic here runs on plain Python integers with schoolbook loops,
so there is no bit width to overflow and nothing shared with the packed
implementation.  Agreement between the two is therefore meaningful
evidence, not circularity.  Operation counters tally what a scalar
machine would do: one multiply per product term, one add per
accumulation into an existing partial sum.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensors import OutputMap

__all__ = ["OpCount", "naive_conv1d", "naive_conv_layer"]


@dataclass(frozen=True)
class OpCount:
    """Scalar work performed by a reference implementation."""

    scalar_multiplies: int
    scalar_adds: int


def _values(seq):
    """Accept a QuantSeq-like object or any plain sequence of ints."""
    vals = getattr(seq, "values", seq)
    return [int(v) for v in vals]


def naive_conv1d(f, g):
    """Full 1-D convolution of ``f`` and ``g`` by the definition.

    Parameters
    ----------
    f, g : sequence of int (or anything with a ``.values`` attribute)

    Returns
    -------
    (list of int, OpCount)
        The ``len(f) + len(g) - 1`` outputs and the scalar-op tally.
    """
    fv = _values(f)
    gv = _values(g)
    if not fv or not gv:
        raise ValueError("naive_conv1d needs non-empty inputs")
    out = [0] * (len(fv) + len(gv) - 1)
    for i, a in enumerate(fv):
        for j, b in enumerate(gv):
            out[i + j] += a * b
    mults = len(fv) * len(gv)
    return out, OpCount(scalar_multiplies=mults, scalar_adds=mults - len(out))


def naive_conv_layer(feature, kernel):
    """Valid (no padding, stride 1) convolution layer: six explicit loops.

    Parameters
    ----------
    feature : FeatureMap
        Shape (C_i, H_i, W_i).
    kernel : KernelTensor
        Shape (C_o, C_i, K, K) with matching C_i.

    Returns
    -------
    (OutputMap, OpCount)
        Output shaped (C_o, H_i - K + 1, W_i - K + 1); the OutputMap's
        wide-multiply tally is zero because nothing here is packed.
    """
    fdata = feature.data.tolist()  # python ints from here on
    wdata = kernel.data.tolist()
    c_i, h_i, w_i = feature.data.shape
    c_o, c_i_k, k, _ = kernel.data.shape
    if c_i_k != c_i:
        raise ValueError("kernel input-channel count does not match feature map")
    h_o = h_i - k + 1
    w_o = w_i - k + 1
    if h_o < 1 or w_o < 1:
        raise ValueError("kernel does not fit inside the feature map")

    out = [[[0] * w_o for _ in range(h_o)] for _ in range(c_o)]
    for co in range(c_o):
        taps = wdata[co]
        for h in range(h_o):
            row_out = out[co][h]
            for w in range(w_o):
                acc = 0
                for ci in range(c_i):
                    plane = fdata[ci]
                    tap_ci = taps[ci]
                    for kh in range(k):
                        frow = plane[h + kh]
                        trow = tap_ci[kh]
                        for kw in range(k):
                            acc += frow[w + kw] * trow[kw]
                row_out[w] = acc
    mults = c_o * h_o * w_o * c_i * k * k
    counts = OpCount(scalar_multiplies=mults, scalar_adds=mults - c_o * h_o * w_o)
    return OutputMap(np.array(out, dtype=np.int64), wide_multiplies=0), counts
