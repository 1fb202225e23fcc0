"""Vectorized uint64 kernels (the no-JIT fallback path).

These operate on 64-bit register images.  Wraparound arithmetic mod 2**64
agrees with the exact wide-word semantics whenever every bit we later
read sits below bit 64, i.e. S * (number of segments) <= 64; the router
in the conv modules only sends work here under that condition.  Signed
payloads arrive sign-extended to the full 64 bits (see pack_words), which
is what makes products and sums congruent to their true values.
"""

from __future__ import annotations

import numpy as np

_U1 = np.uint64(1)
_U64_ALL = ~np.uint64(0)


def pack_words(vals, s, n, signed):
    """Pack rows of ``vals`` (int64, shape (R, L)) into uint64 words.

    Each row becomes ceil(L / n) words of n slices at stride ``s``,
    zero-padded at the tail.  Signed rows use per-slice two's complement
    with the borrow chain, then the whole word is sign-extended to 64
    bits so uint64 products wrap correctly.
    """
    vals = np.ascontiguousarray(vals, dtype=np.int64)
    r, l = vals.shape
    x = -(-l // n)
    padded = np.zeros((r, x * n), dtype=np.int64)
    padded[:, :l] = vals
    chunks = padded.reshape(r, x, n)
    mask = np.int64((1 << s) - 1)
    word = np.zeros((r, x), dtype=np.uint64)
    borrow = np.zeros((r, x), dtype=np.int64)
    for j in range(n):
        v = chunks[:, :, j] - borrow if signed else chunks[:, :, j]
        enc = (v & mask).astype(np.uint64)
        word |= enc << np.uint64(s * j)
        if signed:
            borrow = ((enc >> np.uint64(s - 1)) & _U1).astype(np.int64)
    if signed and s * n < 64:
        neg = ((word >> np.uint64(s * n - 1)) & _U1).astype(bool)
        word[neg] |= _U64_ALL << np.uint64(s * n)
    return word


def _segment(acc, s, m, signed_out):
    """Decode segment ``m`` of each accumulator in ``acc`` to int64."""
    mask = np.uint64((1 << s) - 1)
    val = ((acc >> np.uint64(s * m)) & mask).astype(np.int64)
    if signed_out:
        half = np.int64(1 << (s - 1))
        val = np.where(val >= half, val - np.int64(1 << s), val)
        if m > 0:
            val = val + ((acc >> np.uint64(s * m - 1)) & _U1).astype(np.int64)
    return val


def conv1d_accum(a_words, b_words, s, n, segs, signed_out):
    """Multiply-accumulate packed channels and shift-add the segments.

    Parameters
    ----------
    a_words : uint64 array, shape (M, X)
        Packed feature chunks, one row per channel.
    b_words : uint64 array, shape (M,)
        Packed kernel word per channel.
    s, n, segs : int
        Slice stride, slices per feature word, segments to read.
    signed_out : bool

    Returns
    -------
    int64 array of length X*n + segs; the true convolution occupies the
    first len(f) + len(g) - 1 entries.
    """
    x = a_words.shape[1]
    acc = (a_words * b_words[:, None]).sum(axis=0, dtype=np.uint64)
    y = np.zeros(x * n + segs, dtype=np.int64)
    for m in range(segs):
        y[m::n][:x] += _segment(acc, s, m, signed_out)
    return y


def layer_accum(a_words, b_words, bounds, s, n, segs, signed_out, read_offset, out):
    """Accumulate one kernel-column piece of a conv layer into ``out``.

    Parameters
    ----------
    a_words : uint64 array, shape (C_i, H_i, X)
        Packed feature rows.
    b_words : uint64 array, shape (C_o, C_i, K_h)
        Packed kernel-row words for this piece.
    bounds : int64 array, shape (G + 1,)
        Channel-group boundaries; products within a group accumulate in
        the packed domain, groups are summed after segment decode.
    read_offset : int
        Segment position holding output column 0 (kernel taps consumed
        so far); segment x*n + m lands in column x*n + m - read_offset.
    out : int64 array, shape (C_o, H_o, W_o), modified in place.
    """
    h_o, w_o = out.shape[1], out.shape[2]
    x = a_words.shape[2]
    k_h = b_words.shape[2]
    starts = np.asarray(bounds[:-1], dtype=np.intp)
    for kh in range(k_h):
        rows = a_words[:, kh:kh + h_o, :]
        prod = rows[None, :, :, :] * b_words[:, :, kh][:, :, None, None]
        acc = np.add.reduceat(prod, starts, axis=1)
        for m in range(segs):
            val = _segment(acc, s, m, signed_out).sum(axis=1)
            w0 = m - read_offset
            x_lo = 0 if w0 >= 0 else (-w0 + n - 1) // n
            x_hi = min(x, (w_o - w0 + n - 1) // n) if w_o > w0 else 0
            if x_hi <= x_lo:
                continue
            out[:, :, w0 + n * x_lo :: n][:, :, : x_hi - x_lo] += val[:, :, x_lo:x_hi]
