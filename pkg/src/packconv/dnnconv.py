"""DNN convolution layers decomposed into packed 1-D convolutions.

A (valid, stride-1) layer is a sum of row convolutions: for each output
channel, output row h collects, over input channels and kernel rows kh,
the 1-D convolution of input row h + kh with the reversed kernel row.
Output column w of that 1-D result sits at position w + K - 1, so one
pass of the extended multichannel machinery per (kernel row, channel
group) covers a whole output row at once.

The planner pins the kernel-side packing to the kernel width and then
maximizes N, because the layer's wide-multiply bill

    C_o * H_o * K * C_i * ceil(W_i / N)

depends on the geometry only through N.  Channel groups are then grown
to the largest m that keeps the geometry's guard bits affordable.  If
no geometry can hold a whole kernel row (huge operands on a narrow
multiplier), rows are cut into pieces the throughput-optimal geometry
can swallow, and each piece's contribution lands in the output shifted
by its offset.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import Infeasible, ShapeError
from .oracle import OpCount
from .packing import MAX_WORD_BITS, WIDE_MULTIPLIES, QuantSeq
from .params import (
    MAX_CHANNEL_GROUP,
    PackParams,
    QuantSpec,
    guard_bits,
    slice_width,
)
from .tensors import FeatureMap, KernelTensor, OutputMap

__all__ = [
    "FeatureMap",
    "KernelTensor",
    "OutputMap",
    "LayerPlan",
    "layer_plan",
    "conv_layer",
    "layer_op_counts",
]


@dataclass(frozen=True)
class LayerPlan:
    """How a layer maps onto the packed machinery."""

    params: PackParams
    pieces: tuple  # ((offset, length), ...) cuts of a reversed kernel row

    @property
    def group(self):
        """Channels accumulated per packed word (the geometry's m)."""
        return self.params.m

    def wide_multiplies(self, c_o, c_i, h_o, w_i, kernel_size):
        """Wide multiplies the plan spends on a layer of the given shape."""
        x_count = -(-w_i // self.params.n)
        return c_o * h_o * kernel_size * len(self.pieces) * c_i * x_count


def _fixed_k_geometry(spec, quant, m, k_fix, cap):
    """Max-N geometry with the kernel side pinned to k_fix taps, or None.

    ``cap`` bounds how high a segment read may reach
    (s * (n + k_fix - 1) <= cap): 128 for the exact path's accumulator,
    64 when the uint64 word kernels will do the reading.
    """
    # With N >= k_fix the guard bits depend on k_fix alone; grow N to
    # whatever input A and the readable-product cap allow.
    gb = guard_bits(m, k_fix, k_fix, quant)
    s = slice_width(quant, gb)
    if quant.q + (k_fix - 1) * s <= spec.bit_b:
        n = (spec.bit_a - quant.p) // s + 1
        n = min(n, cap // s - k_fix + 1)
        if n >= k_fix:
            return PackParams(spec=spec, quant=quant, m=m, gb=gb, s=s, n=n, k=k_fix)
    # Otherwise N < k_fix and the guard bits shrink with it; take the
    # largest self-consistent N.
    for n in range(k_fix - 1, 0, -1):
        gb = guard_bits(m, n, k_fix, quant)
        s = slice_width(quant, gb)
        if quant.p + (n - 1) * s > spec.bit_a:
            continue
        if quant.q + (k_fix - 1) * s > spec.bit_b:
            continue
        if s * (n + k_fix - 1) > cap:
            continue
        return PackParams(spec=spec, quant=quant, m=m, gb=gb, s=s, n=n, k=k_fix)
    return None


def layer_plan(spec, quant, c_i, kernel_size, max_read_bits=MAX_WORD_BITS):
    """Choose geometry, channel grouping, and row pieces for a layer.

    Whole kernel rows are preferred whenever any geometry holds them
    (that is what makes the wide-multiply bill exactly
    C_o*H_o*K*C_i*ceil(W_i/N)); pieces are a fallback, sized to minimize
    pieces-per-row divided by N.

    Raises
    ------
    Infeasible
        If not even single operands fit the multiplier.
    """
    base = _fixed_k_geometry(spec, quant, 1, kernel_size, max_read_bits)
    if base is not None:
        pieces = ((0, kernel_size),)
    else:
        best = None  # (piece count, geometry, length)
        for ln in range(kernel_size - 1, 0, -1):
            cand = _fixed_k_geometry(spec, quant, 1, ln, max_read_bits)
            if cand is None:
                continue
            n_pieces = -(-kernel_size // ln)
            if best is None or n_pieces * best[1].n < best[0] * cand.n:
                best = (n_pieces, cand, ln)
        if best is None:
            raise Infeasible(
                f"no packing of {quant.p}/{quant.q}-bit operands fits a "
                f"{spec.bit_a}x{spec.bit_b} multiplier"
            )
        base, step = best[1], best[2]
        pieces = tuple(
            (off, min(step, kernel_size - off))
            for off in range(0, kernel_size, step)
        )
    max_len = max(ln for _, ln in pieces)
    best = base
    for m in range(min(c_i, MAX_CHANNEL_GROUP), 1, -1):
        gb = guard_bits(m, base.n, base.k, quant)
        s = slice_width(quant, gb)
        if quant.p + (base.n - 1) * s > spec.bit_a:
            continue
        if quant.q + (base.k - 1) * s > spec.bit_b:
            continue
        if s * (base.n + max_len - 1) > max_read_bits:
            continue
        best = PackParams(
            spec=spec, quant=quant, m=m, gb=gb, s=s, n=base.n, k=base.k
        )
        break
    return LayerPlan(params=best, pieces=pieces)


def conv_layer(feature, kernel, spec, backend=None):
    """Run a valid stride-1 convolution layer through packed multiplies.

    Parameters
    ----------
    feature : FeatureMap
        (C_i, H_i, W_i) quantized activations.
    kernel : KernelTensor
        (C_o, C_i, K, K) quantized weights.
    spec : MultiplierSpec
    backend : str or None
        As in :func:`packconv.conv1d.conv_extended`.

    Returns
    -------
    OutputMap
        (C_o, H_i - K + 1, W_i - K + 1) outputs and the wide-multiply
        tally, which for a single-piece plan equals
        C_o * H_o * K * C_i * ceil(W_i / N).
    """
    c_i, h_i, w_i = feature.shape
    c_o, c_i_k, kk, _ = kernel.shape
    if c_i_k != c_i:
        raise ShapeError(
            f"kernel expects {c_i_k} input channels, feature map has {c_i}"
        )
    if kk > h_i or kk > w_i:
        raise ShapeError(
            f"{kk}x{kk} kernel does not fit inside {h_i}x{w_i} feature map"
        )
    quant = QuantSpec(
        p=feature.bitwidth,
        q=kernel.bitwidth,
        signed_f=feature.signed,
        signed_g=kernel.signed,
    )
    # Plan against the register the chosen backend reads: word kernels
    # decode from 64-bit products, the exact path from the full
    # accumulator.  Feasibility is identical either way (single operands
    # always fit), only the geometry shifts.
    name = kernels.resolve_backend(backend)
    cap = MAX_WORD_BITS if name == "exact" else 64
    plan = layer_plan(spec, quant, c_i, kk, max_read_bits=cap)
    h_o = h_i - kk + 1
    w_o = w_i - kk + 1

    if name == "exact":
        out, total = _layer_exact(feature, kernel, plan, h_o, w_o)
    else:
        out, total = _layer_words(feature, kernel, plan, h_o, w_o, name)
        WIDE_MULTIPLIES.add(total)
    return OutputMap(data=out, wide_multiplies=total)


def _layer_words(feature, kernel, plan, h_o, w_o, name):
    params = plan.params
    n, s = params.n, params.s
    c_i, h_i, w_i = feature.shape
    c_o = kernel.shape[0]
    kk = kernel.shape[2]
    x_count = -(-w_i // n)
    signed_out = params.quant.signed_f or params.quant.signed_g
    mod = kernels.get_module(name)

    a_flat = feature.data.reshape(c_i * h_i, w_i)
    a_words = mod.pack_words(a_flat, s, n, params.quant.signed_f)
    a_words = a_words.reshape(c_i, h_i, x_count)

    bounds = np.array(
        list(range(0, c_i, params.m)) + [c_i], dtype=np.int64
    )
    rev = kernel.data[:, :, :, ::-1]
    out = np.zeros((c_o, h_o, w_o), dtype=np.int64)
    total = 0
    for off, ln in plan.pieces:
        piece = np.ascontiguousarray(rev[:, :, :, off : off + ln])
        b_flat = piece.reshape(c_o * c_i * kk, ln)
        b_words = mod.pack_words(b_flat, s, ln, params.quant.signed_g)
        b_words = b_words[:, 0].reshape(c_o, c_i, kk)
        mod.layer_accum(
            a_words, b_words, bounds, s, n, n + ln - 1,
            signed_out, kk - 1 - off, out,
        )
        total += c_o * h_o * kk * c_i * x_count
    return out, total


def _layer_exact(feature, kernel, plan, h_o, w_o):
    from .conv1d import conv_multichannel

    params = plan.params
    quant = params.quant
    c_i, h_i, w_i = feature.shape
    c_o = kernel.shape[0]
    kk = kernel.shape[2]
    groups = [range(lo, min(lo + params.m, c_i)) for lo in range(0, c_i, params.m)]
    frows = [
        [QuantSeq(feature.data[ci, row], quant.p, quant.signed_f) for row in range(h_i)]
        for ci in range(c_i)
    ]
    rev = kernel.data[:, :, :, ::-1]
    out = np.zeros((c_o, h_o, w_o), dtype=np.int64)
    total = 0
    for co in range(c_o):
        for kh in range(kk):
            for off, ln in plan.pieces:
                shift = kk - 1 - off
                gs_all = [
                    QuantSeq(rev[co, ci, kh, off : off + ln], quant.q, quant.signed_g)
                    for ci in range(c_i)
                ]
                for h in range(h_o):
                    row = h + kh
                    for grp in groups:
                        res = conv_multichannel(
                            [frows[ci][row] for ci in grp],
                            [gs_all[ci] for ci in grp],
                            params,
                            backend="exact",
                        )
                        total += res.wide_multiplies
                        for w in range(w_o):
                            out[co, h, w] += res.values[w + shift]
    return out, total


def layer_op_counts(feature, kernel):
    """Scalar multiply/add bill of the naive layer, without running it."""
    c_i, h_i, w_i = feature.shape
    c_o = kernel.shape[0]
    k = kernel.shape[2]
    h_o, w_o = h_i - k + 1, w_i - k + 1
    mults = c_o * h_o * w_o * c_i * k * k
    return OpCount(scalar_multiplies=mults, scalar_adds=mults - c_o * h_o * w_o)
