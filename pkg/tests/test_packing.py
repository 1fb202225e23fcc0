"""Word packing, unpacking, and wide-word arithmetic."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from packconv import (
    WIDE_MULTIPLIES,
    Overflow,
    PackedWord,
    QuantSeq,
    RangeError,
    accumulate,
    extend,
    multiply,
    pack_signed,
    pack_unsigned,
    unpack,
)


class TestQuantSeq:
    def test_coerces_to_int_tuple(self):
        seq = QuantSeq([1, 2, 3], 4)
        assert seq.values == (1, 2, 3)
        assert len(seq) == 3
        assert list(seq) == [1, 2, 3]

    def test_rejects_empty(self):
        with pytest.raises(RangeError):
            QuantSeq([], 4)

    @pytest.mark.parametrize(
        "values, bitwidth, signed",
        [
            ([16], 4, False),
            ([-1], 4, False),
            ([8], 4, True),
            ([-9], 4, True),
            ([2], 1, False),
        ],
    )
    def test_rejects_out_of_range(self, values, bitwidth, signed):
        with pytest.raises(RangeError):
            QuantSeq(values, bitwidth, signed)


class TestPackedWord:
    def test_defaults_exact_to_value(self):
        word = PackedWord(5, 8)
        assert word.exact == 5
        assert not word.signed

    def test_rejects_value_wider_than_word(self):
        with pytest.raises(RangeError):
            PackedWord(256, 8)

    def test_rejects_bad_width(self):
        with pytest.raises(Overflow):
            PackedWord(0, 0)
        with pytest.raises(Overflow):
            PackedWord(0, 129)


class TestPackUnsigned:
    @pytest.mark.parametrize(
        "values, s, want",
        [
            ([5, 3], 10, 3077),
            ([3, 5, 7], 10, 7345155),
            ([2, 4, 6], 10, 6295554),
        ],
    )
    def test_reference_words(self, values, s, want):
        word = pack_unsigned(QuantSeq(values, 4), s, 32)
        assert word.value == want
        assert word.exact == want
        assert not word.signed

    def test_rejects_signed_sequence(self):
        with pytest.raises(RangeError):
            pack_unsigned(QuantSeq([1], 4, signed=True), 10, 32)

    def test_rejects_stride_below_bitwidth(self):
        with pytest.raises(RangeError):
            pack_unsigned(QuantSeq([1, 1], 4), 3, 32)

    def test_rejects_payload_overflow(self):
        # 14 slices at stride 10 put the top element past bit 128
        with pytest.raises(Overflow):
            pack_unsigned(QuantSeq([1] * 14, 4), 10, 128)


class TestPackSigned:
    def test_single_negative_element(self):
        word = pack_signed(QuantSeq([-8], 4, signed=True), 10, 32)
        assert word.value == 1016  # 10-bit two's complement of -8
        assert word.exact == -8
        assert word.signed

    def test_borrow_chain(self):
        # slice0 holds 1023 (-1); slice1 holds 2 - borrow = 1
        word = pack_signed(QuantSeq([-1, 2], 4, signed=True), 10, 32)
        assert word.value == 2047
        assert word.exact == -1 + 2 * 2**10

    def test_rejects_unsigned_sequence(self):
        with pytest.raises(RangeError):
            pack_signed(QuantSeq([1, 2], 4), 10, 32)

    def test_multi_element_needs_headroom_bit(self):
        with pytest.raises(RangeError):
            pack_signed(QuantSeq([-1, 1], 4, signed=True), 4, 32)
        # a single element has no borrow to absorb
        pack_signed(QuantSeq([-8], 4, signed=True), 4, 32)


class TestUnpack:
    def test_unsigned_slices(self):
        word = pack_unsigned(QuantSeq([3, 5, 7], 4), 10, 32)
        assert unpack(word, 10, 3, signed_output=False) == [3, 5, 7]

    def test_signed_decode_undoes_borrow(self):
        word = pack_signed(QuantSeq([-1, 2, 0], 4, signed=True), 10, 32)
        assert unpack(word, 10, 3, signed_output=True) == [-1, 2, 0]

    def test_rejects_reads_past_word(self):
        word = PackedWord(0, 32)
        with pytest.raises(RangeError):
            unpack(word, 10, 4, signed_output=False)
        with pytest.raises(RangeError):
            unpack(word, 10, 0, signed_output=False)


class TestMultiply:
    def test_product_convolves_segments(self):
        a = pack_unsigned(QuantSeq([3, 5, 7], 4), 10, 32)
        b = pack_unsigned(QuantSeq([2, 4, 6], 4), 10, 32)
        prod = multiply(a, b)
        assert prod.width_bits == 64
        assert unpack(prod, 10, 5, signed_output=False) == [6, 22, 52, 58, 42]

    def test_signed_product(self):
        a = pack_signed(QuantSeq([-1, 2, 0], 4, signed=True), 10, 32)
        b = pack_signed(QuantSeq([3, -2, 1], 4, signed=True), 10, 32)
        prod = multiply(a, b)
        assert prod.signed
        assert unpack(prod, 10, 5, signed_output=True) == [-3, 8, -5, 2, 0]

    def test_counts_wide_multiplies(self):
        WIDE_MULTIPLIES.reset()
        a = pack_unsigned(QuantSeq([1], 4), 10, 32)
        multiply(a, a)
        multiply(a, a)
        assert WIDE_MULTIPLIES.count == 2

    def test_rejects_oversized_product(self):
        a = PackedWord(0, 100)
        with pytest.raises(Overflow):
            multiply(a, a)


class TestAccumulate:
    def test_sums_exact_values(self):
        words = [
            pack_signed(QuantSeq([v], 4, signed=True), 10, 32)
            for v in (-3, 5, -1)
        ]
        total = accumulate(words)
        assert total.exact == 1
        assert total.width_bits == 34  # 32 + ceil(log2(3))

    def test_single_word_passthrough(self):
        word = pack_unsigned(QuantSeq([7], 4), 10, 32)
        assert accumulate([word]).exact == 7


class TestExtend:
    def test_sign_extends_negative_payload(self):
        word = pack_signed(QuantSeq([-8], 4, signed=True), 10, 10)
        wide = extend(word, 20)
        assert wide.exact == -8
        assert wide.value == (1 << 20) - 8
        assert unpack(wide, 10, 1, signed_output=True) == [-8]

    def test_zero_extends_unsigned(self):
        word = pack_unsigned(QuantSeq([9], 4), 10, 10)
        assert extend(word, 20).value == 9

    def test_rejects_narrowing(self):
        word = PackedWord(0, 32)
        with pytest.raises(RangeError):
            extend(word, 16)


# ---------------------------------------------------------------------
# Round-trip properties
# ---------------------------------------------------------------------

@st.composite
def _packing_case(draw, signed):
    bits = draw(st.integers(2 if signed else 1, 8))
    if signed:
        lo, hi = -(1 << (bits - 1)), (1 << (bits - 1)) - 1
    else:
        lo, hi = 0, (1 << bits) - 1
    count = draw(st.integers(1, 6))
    values = draw(st.lists(st.integers(lo, hi), min_size=count, max_size=count))
    s = draw(st.integers(bits + (1 if signed else 0), bits + 8))
    width = draw(st.integers(s * count, 128))
    return QuantSeq(values, bits, signed), s, width


@settings(deadline=None)
@given(_packing_case(signed=False))
def test_unsigned_round_trip(case):
    seq, s, width = case
    word = pack_unsigned(seq, s, width)
    assert unpack(word, s, len(seq), signed_output=False) == list(seq)
    # unsigned words are literally the slice polynomial
    assert word.value == sum(v << (s * i) for i, v in enumerate(seq))


@settings(deadline=None)
@given(_packing_case(signed=True))
def test_signed_round_trip(case):
    seq, s, width = case
    word = pack_signed(seq, s, width)
    assert unpack(word, s, len(seq), signed_output=True) == list(seq)
    # the register image is the exact polynomial reduced to the payload
    exact = sum(v << (s * i) for i, v in enumerate(seq))
    assert word.exact == exact
    payload = min(s * len(seq), width)
    assert word.value == exact % (1 << payload)
