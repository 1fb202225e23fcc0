"""Packing geometry: guard bits, slice widths, and the (N, K) search.

A wide multiplier with ``bit_a`` x ``bit_b`` inputs can carry N low-bitwidth
operands in one input and K in the other, provided each operand sits in its
own slice of S bits and the slices carry enough guard bits that neighbouring
convolution segments cannot bleed into each other.  One wide multiply then
performs N*K scalar multiplies and (N-1)*(K-1) of the adds a 1-D convolution
needs, so the equivalent-op count of a geometry is

    ops = N*K + (N-1)*(K-1)

The search below maximizes that count subject to the slice constraints.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import Infeasible, RangeError

__all__ = [
    "MAX_ACCUMULATOR_BITS",
    "MAX_CHANNEL_GROUP",
    "MAX_QUANT_BITS",
    "MultiplierSpec",
    "QuantSpec",
    "PackParams",
    "ThroughputCell",
    "ceil_log2",
    "guard_bits",
    "slice_width",
    "search_optimal",
    "throughput_grid",
]

# Widest accumulator we model.  Multiplier inputs must leave 7 bits of
# headroom below this so that products can be summed 2**7 deep without
# further analysis.
MAX_ACCUMULATOR_BITS = 128

# Largest channel-group size M ever worth asking for: with the headroom
# invariant above, 128 packed products always fit one accumulator.
MAX_CHANNEL_GROUP = 128

MAX_QUANT_BITS = 8


def ceil_log2(x):
    """Smallest g >= 0 with 2**g >= x (x must be >= 1)."""
    if x < 1:
        raise ValueError(f"ceil_log2 needs x >= 1, got {x}")
    return (x - 1).bit_length()


@dataclass(frozen=True)
class MultiplierSpec:
    """Input widths of the wide multiplier being filled."""

    bit_a: int
    bit_b: int

    def __post_init__(self):
        if self.bit_a < 1 or self.bit_b < 1:
            raise RangeError("multiplier input widths must be >= 1")
        if self.bit_a + self.bit_b + 7 > MAX_ACCUMULATOR_BITS:
            raise RangeError(
                f"{self.bit_a}x{self.bit_b} multiplier leaves no accumulator "
                f"headroom (need bit_a + bit_b + 7 <= {MAX_ACCUMULATOR_BITS})"
            )


@dataclass(frozen=True)
class QuantSpec:
    """Operand bit widths and signedness for the two convolution inputs.

    ``p`` describes the feature operands packed into input A, ``q`` the
    kernel operands packed into input B.  1-bit operands are unsigned by
    definition (a signed 1-bit type has no usable range).
    """

    p: int
    q: int
    signed_f: bool = False
    signed_g: bool = False

    def __post_init__(self):
        for name, bits in (("p", self.p), ("q", self.q)):
            if not 1 <= bits <= MAX_QUANT_BITS:
                raise RangeError(
                    f"{name} must be in [1, {MAX_QUANT_BITS}], got {bits}"
                )
        if self.p == 1 and self.signed_f:
            raise RangeError("1-bit feature operands must be unsigned")
        if self.q == 1 and self.signed_g:
            raise RangeError("1-bit kernel operands must be unsigned")


def guard_bits(m, n, k, quant=None):
    """Guard bits needed when m channels of an (n, k) packing accumulate.

    Each output segment of one wide product sums at most min(n, k)
    operand products; stacking m channels multiplies that by m.  The
    segment therefore needs ceil(log2(m * min(n, k))) bits on top of a
    single product's width.

    Pass ``quant`` when the geometry will carry signed values.  A signed
    segment paired with a 1-bit operand on the other side can reach
    exactly -c * 2**(q-1) (c = m * min(n, k)); when c is a power of two
    that sits on the slice's two's-complement rim, and the borrow that
    signed packing chains through the slice needs one value below it.
    One extra guard bit restores the headroom.  Both-sides-wide
    geometries keep a factor-two margin and never need it.
    """
    if m < 1 or n < 1 or k < 1:
        raise RangeError("guard_bits arguments must all be >= 1")
    c = m * min(n, k)
    gb = ceil_log2(c)
    if (
        quant is not None
        and (quant.signed_f or quant.signed_g)
        and min(quant.p, quant.q) == 1
        and (1 << gb) == c
    ):
        gb += 1
    return gb


def slice_width(quant, gb):
    """Slice stride S for operand widths ``quant`` under ``gb`` guard bits.

    A segment holds products of a p-bit and a q-bit operand.  When either
    side is 1-bit the product is no wider than the other side, so the
    1-bit factor contributes nothing to the slice width.
    """
    if gb < 0:
        raise RangeError(f"guard bits must be >= 0, got {gb}")
    if quant.p == 1 and quant.q == 1:
        return 1 + gb
    if quant.p == 1:
        return quant.q + gb
    if quant.q == 1:
        return quant.p + gb
    return quant.p + quant.q + gb


@dataclass(frozen=True)
class PackParams:
    """A concrete packing geometry, as produced by :func:`search_optimal`."""

    spec: MultiplierSpec
    quant: QuantSpec
    m: int
    gb: int
    s: int
    n: int
    k: int

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.k < 1:
            raise ValueError("m, n, k must all be >= 1")
        want_gb = guard_bits(self.m, self.n, self.k, self.quant)
        if self.gb != want_gb:
            raise ValueError(
                f"gb={self.gb} inconsistent with guard_bits("
                f"{self.m}, {self.n}, {self.k})={want_gb}"
            )
        if self.s != slice_width(self.quant, self.gb):
            raise ValueError(
                f"s={self.s} inconsistent with slice_width(p={self.quant.p}, "
                f"q={self.quant.q}, gb={self.gb})={slice_width(self.quant, self.gb)}"
            )
        if self.quant.p + (self.n - 1) * self.s > self.spec.bit_a:
            raise ValueError(
                f"N={self.n} operands at stride S={self.s} overrun input A "
                f"({self.quant.p} + {self.n - 1}*{self.s} > {self.spec.bit_a})"
            )
        if self.quant.q + (self.k - 1) * self.s > self.spec.bit_b:
            raise ValueError(
                f"K={self.k} operands at stride S={self.s} overrun input B "
                f"({self.quant.q} + {self.k - 1}*{self.s} > {self.spec.bit_b})"
            )

    @property
    def ops(self):
        """Equivalent scalar ops per wide multiply."""
        return self.n * self.k + (self.n - 1) * (self.k - 1)

    @property
    def segments(self):
        """Convolution outputs carried by one wide product."""
        return self.n + self.k - 1


def _feasible_nk(spec, quant, m, cap):
    """Best (gb, s, n, k) pairs with min(n, k) == cap, or None.

    Returns the two corner candidates (n maximal, k clamped) and
    (n clamped, k maximal); every optimum with this cap is one of them
    because ops grows monotonically in whichever side is unclamped.
    """
    gb = guard_bits(m, cap, cap, quant)
    s = slice_width(quant, gb)
    max_n = (spec.bit_a - quant.p) // s + 1
    max_k = (spec.bit_b - quant.q) // s + 1
    if max_n < cap or max_k < cap:
        return None
    return gb, s, ((max_n, cap), (cap, max_k))


def search_optimal(spec, quant, m=1, min_k=1):
    """Find the packing geometry with the highest equivalent-op count.

    Scans every possible value of min(N, K); for a fixed minimum the
    guard-bit count (hence S) is fixed and the unclamped side is best
    grown to capacity, so this scan covers every (N, K) an exhaustive
    search would.  Ties are broken toward smaller S, then larger N,
    keeping the result deterministic.

    Parameters
    ----------
    spec : MultiplierSpec
    quant : QuantSpec
    m : int
        Channels accumulated into one wide product (guard bits grow with m).
    min_k : int
        Require K >= min_k (used when the kernel side must hold a whole
        kernel row).

    Returns
    -------
    PackParams

    Raises
    ------
    Infeasible
        If not even a single operand fits each multiplier input, or no
        geometry satisfies ``min_k``.
    """
    if not 1 <= m <= MAX_CHANNEL_GROUP:
        raise RangeError(f"m must be in [1, {MAX_CHANNEL_GROUP}], got {m}")
    best = None
    best_key = None
    for cap in range(1, min(spec.bit_a, spec.bit_b) + 1):
        found = _feasible_nk(spec, quant, m, cap)
        if found is None:
            break  # caps only get harder to satisfy as they grow
        gb, s, corners = found
        for n, k in corners:
            if k < min_k:
                continue
            ops = n * k + (n - 1) * (k - 1)
            key = (ops, -s, n)
            if best_key is None or key > best_key:
                best = PackParams(spec=spec, quant=quant, m=m, gb=gb, s=s, n=n, k=k)
                best_key = key
    if best is None:
        raise Infeasible(
            f"no packing of {quant.p}/{quant.q}-bit operands fits a "
            f"{spec.bit_a}x{spec.bit_b} multiplier"
            + (f" with K >= {min_k}" if min_k > 1 else "")
        )
    return best


@dataclass(frozen=True)
class ThroughputCell:
    """One (p, q) entry of the throughput table."""

    p: int
    q: int
    s: int | None
    gb: int | None
    n: int | None
    k: int | None
    ops: int
    feasible: bool


def throughput_grid(spec, pmax=MAX_QUANT_BITS, qmax=MAX_QUANT_BITS):
    """Equivalent-ops table over unsigned operand widths, single channel.

    Returns a row-major list of :class:`ThroughputCell`, p varying
    slowest, covering 1 <= p <= pmax and 1 <= q <= qmax at m=1.
    Infeasible cells (nothing fits) get ops=0 and None geometry.
    """
    cells = []
    for p in range(1, pmax + 1):
        for q in range(1, qmax + 1):
            quant = QuantSpec(p=p, q=q)
            try:
                params = search_optimal(spec, quant, m=1)
            except Infeasible:
                cells.append(
                    ThroughputCell(
                        p=p, q=q, s=None, gb=None, n=None, k=None,
                        ops=0, feasible=False,
                    )
                )
                continue
            cells.append(
                ThroughputCell(
                    p=p, q=q, s=params.s, gb=params.gb, n=params.n,
                    k=params.k, ops=params.ops, feasible=True,
                )
            )
    return cells
