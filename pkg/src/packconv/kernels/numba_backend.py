"""JIT-compiled uint64 kernels.

Same contract as numpy_backend (see its module docstring for the
wraparound-correctness argument); explicit loops here compile to tight
machine code.  Importing this module requires numba.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def pack_words(vals, s, n, signed):
    r_count, l = vals.shape
    x_count = (l + n - 1) // n
    out = np.zeros((r_count, x_count), dtype=np.uint64)
    mask = np.int64((np.int64(1) << np.int64(s)) - np.int64(1))
    for r in range(r_count):
        for c in range(x_count):
            word = np.uint64(0)
            borrow = np.int64(0)
            for j in range(n):
                idx = c * n + j
                v = vals[r, idx] if idx < l else np.int64(0)
                if signed:
                    v -= borrow
                enc = v & mask
                word |= np.uint64(enc) << np.uint64(s * j)
                if signed:
                    borrow = (enc >> np.int64(s - 1)) & np.int64(1)
            if signed and s * n < 64:
                if (word >> np.uint64(s * n - 1)) & np.uint64(1):
                    word |= ~np.uint64(0) << np.uint64(s * n)
            out[r, c] = word
    return out


@njit(cache=True)
def conv1d_accum(a_words, b_words, s, n, segs, signed_out):
    m_count, x_count = a_words.shape
    y = np.zeros(x_count * n + segs, dtype=np.int64)
    mask = (np.uint64(1) << np.uint64(s)) - np.uint64(1)
    half = np.uint64(1) << np.uint64(s - 1)
    two_s = np.int64(1) << np.int64(s)
    for c in range(x_count):
        acc = np.uint64(0)
        for i in range(m_count):
            acc += a_words[i, c] * b_words[i]
        for m in range(segs):
            raw = (acc >> np.uint64(s * m)) & mask
            val = np.int64(raw)
            if signed_out:
                if raw >= half:
                    val -= two_s
                if m > 0:
                    val += np.int64((acc >> np.uint64(s * m - 1)) & np.uint64(1))
            y[c * n + m] += val
    return y


@njit(cache=True)
def layer_accum(a_words, b_words, bounds, s, n, segs, signed_out, read_offset, out):
    h_o = out.shape[1]
    w_o = out.shape[2]
    c_o = b_words.shape[0]
    k_h = b_words.shape[2]
    x_count = a_words.shape[2]
    n_groups = bounds.shape[0] - 1
    mask = (np.uint64(1) << np.uint64(s)) - np.uint64(1)
    half = np.uint64(1) << np.uint64(s - 1)
    two_s = np.int64(1) << np.int64(s)
    for co in range(c_o):
        for h in range(h_o):
            for kh in range(k_h):
                row = h + kh
                for g in range(n_groups):
                    lo = bounds[g]
                    hi = bounds[g + 1]
                    for c in range(x_count):
                        acc = np.uint64(0)
                        for ci in range(lo, hi):
                            acc += a_words[ci, row, c] * b_words[co, ci, kh]
                        for m in range(segs):
                            raw = (acc >> np.uint64(s * m)) & mask
                            val = np.int64(raw)
                            if signed_out:
                                if raw >= half:
                                    val -= two_s
                                if m > 0:
                                    val += np.int64(
                                        (acc >> np.uint64(s * m - 1)) & np.uint64(1)
                                    )
                            w = c * n + m - read_offset
                            if w >= 0 and w < w_o:
                                out[co, h, w] += val
