"""1-D convolution carried by packed wide multiplications.

``conv_base`` is the single-multiply primitive: both operands fit one
packed word each and the product register already holds every output
segment.  ``conv_extended`` lifts the length limit on the feature side
by chunking it N values at a time and shift-accumulating the per-chunk
segments; ``conv_multichannel`` additionally sums channels in the packed
domain before segmentation, which is what the guard bits' m factor pays
for.

The extended forms take a ``backend`` argument: "numba"/"numpy" run the
uint64 word kernels, "exact" runs the unbounded-integer path below.
With no explicit choice the default backend applies, falling back to
exact when a geometry's segment reads spill past 64 bits; an explicit
word-backend request on such a geometry is refused rather than silently
rerouted, so benchmarks measure what they claim to.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import Overflow, PackConvError, RangeError, ShapeError
from .packing import (
    MAX_WORD_BITS,
    WIDE_MULTIPLIES,
    QuantSeq,
    accumulate,
    extend,
    multiply,
    pack_signed,
    pack_unsigned,
    unpack,
)

__all__ = ["Conv1DResult", "conv_base", "conv_extended", "conv_multichannel"]


@dataclass(frozen=True)
class Conv1DResult:
    """Convolution outputs plus the wide multiplies spent computing them."""

    values: tuple
    wide_multiplies: int


def _check_quant(seq, bitwidth, signed, side):
    if seq.bitwidth != bitwidth or seq.signed != signed:
        raise RangeError(
            f"{side} is declared {seq.bitwidth}-bit "
            f"{'signed' if seq.signed else 'unsigned'}, geometry expects "
            f"{bitwidth}-bit {'signed' if signed else 'unsigned'}"
        )


def _pack_seq(seq, s, width_bits):
    if seq.signed:
        return pack_signed(seq, s, width_bits)
    return pack_unsigned(seq, s, width_bits)


def _widen(prod, s, segments):
    """Give the product register enough bits to read every segment."""
    need = s * segments
    if need > MAX_WORD_BITS:
        raise Overflow(
            f"{segments} segments of {s} bits need {need} > "
            f"{MAX_WORD_BITS}-bit accumulator"
        )
    if need > prod.width_bits:
        return extend(prod, need)
    return prod


def conv_base(f, g, params):
    """One wide multiply: full convolution of up-to-N by up-to-K operands.

    Parameters
    ----------
    f, g : QuantSeq
        At most ``params.n`` and ``params.k`` values respectively,
        matching the geometry's bit widths and signedness.
    params : PackParams

    Returns
    -------
    Conv1DResult
        All ``params.n + params.k - 1`` segments (inputs shorter than the
        geometry behave as zero-padded), one wide multiply.
    """
    if len(f) > params.n:
        raise ShapeError(f"f has {len(f)} values, geometry packs at most {params.n}")
    if len(g) > params.k:
        raise ShapeError(f"g has {len(g)} values, geometry packs at most {params.k}")
    _check_quant(f, params.quant.p, params.quant.signed_f, "f")
    _check_quant(g, params.quant.q, params.quant.signed_g, "g")
    a = _pack_seq(f, params.s, params.spec.bit_a)
    b = _pack_seq(g, params.s, params.spec.bit_b)
    prod = _widen(multiply(a, b), params.s, params.segments)
    vals = unpack(prod, params.s, params.segments, f.signed or g.signed)
    return Conv1DResult(values=tuple(vals), wide_multiplies=1)


def _route(backend, s, segments):
    """Resolve a backend name, demoting implicit choices to exact."""
    explicit = backend is not None
    name = kernels.resolve_backend(backend)
    if name != "exact" and not kernels.fits_uint64(s, segments):
        if explicit:
            raise PackConvError(
                f"backend {name!r} reads segments up to bit {s * segments}, "
                "past the 64-bit word; use backend='exact'"
            )
        name = "exact"
    return name


def conv_extended(f, g, params, backend=None):
    """Convolve a feature sequence of any length with up to K taps.

    The feature is consumed ceil(len(f) / N) chunks at a time, one wide
    multiply per chunk, and chunk segments are shift-accumulated in the
    integer domain at offsets of N.

    Returns
    -------
    Conv1DResult
        The true ``len(f) + len(g) - 1`` outputs.
    """
    res = conv_multichannel([f], [g], params, backend=backend)
    return res


def conv_multichannel(fs, gs, params, backend=None):
    """Convolve channel pairs and sum them, packing the sum into words.

    All channels' products accumulate in the packed domain before any
    segmentation, so up to ``params.m`` channels ride one accumulator.

    Parameters
    ----------
    fs, gs : lists of QuantSeq
        Equal length (one g per f); all fs the same length, all gs the
        same length (at most ``params.k``).
    params : PackParams
    backend : str or None

    Returns
    -------
    Conv1DResult
        ``sum_i(fs[i] * gs[i])`` with the true output length, and the
        total wide multiplies (channels x chunks).

    Raises
    ------
    Overflow
        If more channels are given than the geometry's guard bits cover.
    """
    if not fs or len(fs) != len(gs):
        raise ShapeError(
            f"need matching non-empty channel lists, got {len(fs)} f / {len(gs)} g"
        )
    if len(fs) > params.m:
        raise Overflow(
            f"{len(fs)} channels exceed the geometry's accumulation "
            f"allowance m={params.m}"
        )
    l_f = len(fs[0])
    l_g = len(gs[0])
    for f in fs:
        _check_quant(f, params.quant.p, params.quant.signed_f, "f")
        if len(f) != l_f:
            raise ShapeError("all feature channels must share one length")
    for g in gs:
        _check_quant(g, params.quant.q, params.quant.signed_g, "g")
        if len(g) != l_g:
            raise ShapeError("all kernel channels must share one length")
    if l_g > params.k:
        raise ShapeError(f"g has {l_g} values, geometry packs at most {params.k}")

    segments = params.n + l_g - 1
    name = _route(backend, params.s, segments)
    signed_out = params.quant.signed_f or params.quant.signed_g
    out_len = l_f + l_g - 1
    x_count = -(-l_f // params.n)

    if name == "exact":
        y = _multichannel_exact(fs, gs, params, segments, out_len)
        return Conv1DResult(values=tuple(y), wide_multiplies=len(fs) * x_count)

    mod = kernels.get_module(name)
    a_rows = np.array([f.values for f in fs], dtype=np.int64)
    b_rows = np.array([g.values for g in gs], dtype=np.int64)
    a_words = mod.pack_words(a_rows, params.s, params.n, params.quant.signed_f)
    b_words = mod.pack_words(b_rows, params.s, l_g, params.quant.signed_g)[:, 0]
    y = mod.conv1d_accum(
        a_words, b_words, params.s, params.n, segments, signed_out
    )
    count = len(fs) * x_count
    WIDE_MULTIPLIES.add(count)
    return Conv1DResult(
        values=tuple(int(v) for v in y[:out_len]), wide_multiplies=count
    )


def _multichannel_exact(fs, gs, params, segments, out_len):
    """Unbounded-integer reference for the packed multichannel path."""
    n, s = params.n, params.s
    quant = params.quant
    signed_out = quant.signed_f or quant.signed_g
    b_words = [_pack_seq(g, s, params.spec.bit_b) for g in gs]
    l_f = len(fs[0])
    y = [0] * out_len
    for x in range(-(-l_f // n)):
        prods = []
        for f, b in zip(fs, b_words):
            chunk = QuantSeq(
                values=f.values[x * n : (x + 1) * n],
                bitwidth=quant.p,
                signed=quant.signed_f,
            )
            prods.append(multiply(_pack_seq(chunk, s, params.spec.bit_a), b))
        word = prods[0] if len(prods) == 1 else accumulate(prods)
        word = _widen(word, s, segments)
        for m, v in enumerate(unpack(word, s, segments, signed_out)):
            pos = x * n + m
            if pos < out_len:
                y[pos] += v
    return y
