"""Packing quantized sequences into wide words, and taking them apart.

A packed word stores operands at a fixed slice stride S, so that one wide
multiplication of two packed words computes every segment of the operands'
1-D convolution at once.  Signed operands are stored in two's complement
per slice with a borrow rippling upward (the bit pattern of the word is
exactly the low bits of the value polynomial sum(v[n] * 2**(S*n))), which
is what lets a single signed multiply serve all segments.

Words remember the exact integer they encode alongside the truncated
register image.  Python integers make the exact form free, and it is what
an ideal signed multiplier of sufficient width would compute; the register
image (``value``) is the of-record bit pattern at the declared width.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from .errors import Overflow, RangeError
from .tensors import value_bounds

__all__ = [
    "MAX_WORD_BITS",
    "QuantSeq",
    "PackedWord",
    "WideMultiplyCounter",
    "WIDE_MULTIPLIES",
    "pack_unsigned",
    "pack_signed",
    "multiply",
    "accumulate",
    "extend",
    "unpack",
]

MAX_WORD_BITS = 128


class WideMultiplyCounter:
    """Thread-safe running count of emulated wide multiplications."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, n=1):
        with self._lock:
            self._count += n

    @property
    def count(self):
        with self._lock:
            return self._count

    def reset(self):
        with self._lock:
            self._count = 0


#: Process-wide tally; every :func:`multiply` call lands here.
WIDE_MULTIPLIES = WideMultiplyCounter()


@dataclass(frozen=True)
class QuantSeq:
    """A sequence of quantized integers with a declared element width."""

    values: tuple
    bitwidth: int
    signed: bool = False

    def __post_init__(self):
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise RangeError("QuantSeq cannot be empty")
        lo, hi = value_bounds(self.bitwidth, self.signed)
        for v in vals:
            if not lo <= v <= hi:
                raise RangeError(
                    f"value {v} outside {'signed' if self.signed else 'unsigned'} "
                    f"{self.bitwidth}-bit range [{lo}, {hi}]"
                )

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)


@dataclass(frozen=True)
class PackedWord:
    """A register image plus the exact integer it encodes.

    ``value`` is the stored bit pattern: ``0 <= value < 2**width_bits``.
    For a freshly packed signed sequence it is the payload's
    two's-complement image zero-filled up to the register; for products
    and sums it is the full-width image of the exact integer.  ``exact``
    is the authoritative untruncated integer (the value polynomial of the
    slices); value and exact always agree on the payload bits.  For
    unsigned payloads the two coincide.  ``signed`` records whether the
    bits are to be read as two's complement, which downstream
    multiplication must know.
    """

    value: int
    width_bits: int
    signed: bool = False
    exact: int | None = None

    def __post_init__(self):
        if not 1 <= self.width_bits <= MAX_WORD_BITS:
            raise Overflow(
                f"word width {self.width_bits} outside [1, {MAX_WORD_BITS}]"
            )
        if not 0 <= self.value < (1 << self.width_bits):
            raise RangeError(
                f"value {self.value:#x} does not fit {self.width_bits} bits"
            )
        if self.exact is None:
            object.__setattr__(self, "exact", self.value)


def pack_unsigned(seq, s, width_bits):
    """Pack an unsigned sequence at slice stride ``s`` into one word.

    Element n lands at bit offset ``s * n``; with s at least the element
    width plus guard bits, slices do not touch.

    Raises
    ------
    RangeError
        If the sequence is signed or ``s`` is narrower than its elements.
    Overflow
        If the top element would spill past ``width_bits``.
    """
    if seq.signed:
        raise RangeError("pack_unsigned needs an unsigned sequence")
    if s < seq.bitwidth:
        raise RangeError(
            f"slice stride {s} narrower than {seq.bitwidth}-bit elements"
        )
    _check_payload(seq, s, width_bits)
    word = 0
    for n, v in enumerate(seq.values):
        word |= v << (s * n)
    return PackedWord(value=word, width_bits=width_bits, signed=False)


def pack_signed(seq, s, width_bits):
    """Pack a signed sequence at stride ``s``, two's complement per slice.

    Slice 0 stores ``values[0]`` in s-bit two's complement; slice n
    stores ``values[n]`` minus the sign bit of slice n-1, so the borrows
    chain upward and the whole word's bit pattern equals the value
    polynomial ``sum(values[n] * 2**(s*n))`` reduced mod ``2**(s*len)``.
    Nonnegative values produce no borrows and take the unsigned layout.

    Needs one bit of headroom: ``s >= bitwidth + 1`` when the sequence
    has more than one element (the borrow can push a slice to its rim).
    """
    if not seq.signed:
        raise RangeError("pack_signed needs a signed sequence")
    need = seq.bitwidth + (1 if len(seq) > 1 else 0)
    if s < need:
        raise RangeError(
            f"slice stride {s} too narrow for borrow-chained "
            f"{seq.bitwidth}-bit elements (need >= {need})"
        )
    _check_payload(seq, s, width_bits)
    exact = 0
    for n, v in enumerate(seq.values):
        exact += v << (s * n)
    payload = s * len(seq)
    word = exact % (1 << min(payload, width_bits))
    return PackedWord(value=word, width_bits=width_bits, signed=True, exact=exact)


def _check_payload(seq, s, width_bits):
    if width_bits > MAX_WORD_BITS:
        raise Overflow(f"word width {width_bits} exceeds {MAX_WORD_BITS}")
    top = seq.bitwidth + (len(seq) - 1) * s
    if top > width_bits:
        raise Overflow(
            f"{len(seq)} elements at stride {s} need {top} bits, "
            f"word has {width_bits}"
        )


def multiply(a, b):
    """One wide multiplication of two packed words.

    The product register is ``a.width_bits + b.width_bits`` wide, as on a
    hardware multiplier, and the multiply is signed whenever either input
    is (an unsigned multiply of two's-complement images would corrupt the
    upper segments).  Increments :data:`WIDE_MULTIPLIES`.
    """
    width = a.width_bits + b.width_bits
    if width > MAX_WORD_BITS:
        raise Overflow(
            f"product needs {width} bits, accumulator caps at {MAX_WORD_BITS}"
        )
    exact = a.exact * b.exact
    WIDE_MULTIPLIES.add()
    return PackedWord(
        value=exact % (1 << width),
        width_bits=width,
        signed=a.signed or b.signed,
        exact=exact,
    )


def accumulate(words):
    """Sum packed products into one wider word (adders, not multipliers).

    The result gains ceil(log2(len(words))) bits over the widest input so
    the sum cannot wrap; exceeding the accumulator cap raises Overflow.
    """
    words = list(words)
    if not words:
        raise RangeError("accumulate needs at least one word")
    from .params import ceil_log2  # local import avoids a cycle at module load

    width = max(w.width_bits for w in words) + ceil_log2(len(words))
    if width > MAX_WORD_BITS:
        raise Overflow(
            f"accumulating {len(words)} words needs {width} bits, "
            f"cap is {MAX_WORD_BITS}"
        )
    exact = sum(w.exact for w in words)
    return PackedWord(
        value=exact % (1 << width),
        width_bits=width,
        signed=any(w.signed for w in words),
        exact=exact,
    )


def extend(word, width_bits):
    """Re-image a word's exact integer on a wider register.

    For signed words this is sign extension of the payload (negative
    integers gain set bits on top); for unsigned ones, zero extension.
    """
    if width_bits < word.width_bits:
        raise RangeError(
            f"cannot extend {word.width_bits}-bit word down to {width_bits}"
        )
    if width_bits > MAX_WORD_BITS:
        raise Overflow(f"word width {width_bits} exceeds {MAX_WORD_BITS}")
    return PackedWord(
        value=word.exact % (1 << width_bits),
        width_bits=width_bits,
        signed=word.signed,
        exact=word.exact,
    )


def unpack(word, s, count, signed_output):
    """Read ``count`` convolution segments of stride ``s`` from a word.

    Unsigned segments are plain slice reads.  With ``signed_output`` each
    slice is decoded as two's complement and segment m > 0 additionally
    absorbs the borrow bit just below its slice (bit ``s*m - 1``),
    undoing the chain that signed packing introduced.

    Raises
    ------
    RangeError
        If ``count * s`` exceeds the word width.
    """
    if count < 1:
        raise RangeError(f"segment count must be >= 1, got {count}")
    if count * s > word.width_bits:
        raise RangeError(
            f"{count} segments of {s} bits exceed a "
            f"{word.width_bits}-bit word"
        )
    v = word.value
    mask = (1 << s) - 1
    half = 1 << (s - 1)
    out = []
    for m in range(count):
        raw = (v >> (s * m)) & mask
        if signed_output:
            if raw >= half:
                raw -= 1 << s
            if m > 0:
                raw += (v >> (s * m - 1)) & 1
        out.append(raw)
    return out
