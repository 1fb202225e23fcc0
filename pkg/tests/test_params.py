"""Geometry search, guard bits, and the throughput table."""

import pytest

from packconv import (
    Infeasible,
    MultiplierSpec,
    PackParams,
    QuantSpec,
    RangeError,
    ceil_log2,
    guard_bits,
    search_optimal,
    slice_width,
    throughput_grid,
)

DSP_27x18 = MultiplierSpec(27, 18)
DSP_32x32 = MultiplierSpec(32, 32)


@pytest.mark.parametrize(
    "x, want",
    [(1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (64, 6), (65, 7), (128, 7)],
)
def test_ceil_log2(x, want):
    assert ceil_log2(x) == want


@pytest.mark.parametrize(
    "m, n, k, want",
    [
        (1, 1, 1, 0),
        (1, 3, 3, 2),
        (1, 3, 2, 1),
        (1, 9, 4, 2),
        (5, 3, 3, 4),
        (128, 2, 2, 8),
    ],
)
def test_guard_bits(m, n, k, want):
    assert guard_bits(m, n, k) == want


def test_guard_bits_rejects_nonpositive():
    with pytest.raises(RangeError):
        guard_bits(0, 3, 3)


@pytest.mark.parametrize(
    "quant, m, n, k, want",
    [
        # signed segments next to a 1-bit operand need borrow headroom
        # whenever m * min(n, k) lands on a power of two
        (QuantSpec(1, 2, signed_g=True), 1, 14, 1, 1),
        (QuantSpec(1, 4, signed_g=True), 2, 9, 1, 2),
        (QuantSpec(4, 1, signed_f=True), 1, 1, 6, 1),
        # c = 3 sits below the rim and keeps its natural two bits
        (QuantSpec(1, 2, signed_g=True), 3, 9, 1, 2),
        # unsigned and both-sides-wide geometries are unaffected
        (QuantSpec(1, 2), 1, 14, 1, 0),
        (QuantSpec(4, 4, signed_f=True, signed_g=True), 1, 3, 3, 2),
    ],
)
def test_guard_bits_signed_borrow_headroom(quant, m, n, k, want):
    assert guard_bits(m, n, k, quant) == want


@pytest.mark.parametrize(
    "p, q, gb, want",
    [
        (1, 1, 3, 4),  # 1x1 products are single bits
        (1, 4, 2, 6),  # 1-bit factor adds no width
        (4, 1, 2, 6),
        (4, 4, 2, 10),
        (8, 8, 0, 16),
    ],
)
def test_slice_width(p, q, gb, want):
    assert slice_width(QuantSpec(p, q), gb) == want


def test_multiplier_spec_validation():
    with pytest.raises(RangeError):
        MultiplierSpec(0, 18)
    with pytest.raises(RangeError):
        MultiplierSpec(64, 64)  # no accumulator headroom left


def test_quant_spec_validation():
    with pytest.raises(RangeError):
        QuantSpec(0, 4)
    with pytest.raises(RangeError):
        QuantSpec(4, 9)
    with pytest.raises(RangeError):
        QuantSpec(1, 4, signed_f=True)
    with pytest.raises(RangeError):
        QuantSpec(4, 1, signed_g=True)
    # 1-bit unsigned is fine
    QuantSpec(1, 1)


class TestPackParams:
    def test_valid_geometry(self):
        params = PackParams(DSP_32x32, QuantSpec(4, 4), m=1, gb=2, s=10, n=3, k=3)
        assert params.ops == 13
        assert params.segments == 5

    def test_inconsistent_guard_bits(self):
        with pytest.raises(ValueError):
            PackParams(DSP_32x32, QuantSpec(4, 4), m=1, gb=3, s=11, n=3, k=3)

    def test_inconsistent_stride(self):
        with pytest.raises(ValueError):
            PackParams(DSP_32x32, QuantSpec(4, 4), m=1, gb=2, s=11, n=3, k=3)

    def test_operand_overrun(self):
        # four 4-bit operands at stride 10 need 34 > 32 bits
        with pytest.raises(ValueError):
            PackParams(DSP_32x32, QuantSpec(4, 4), m=1, gb=2, s=10, n=4, k=3)


@pytest.mark.parametrize(
    "spec, p, q, gb, s, n, k, ops",
    [
        (DSP_32x32, 4, 4, 2, 10, 3, 3, 13),
        (DSP_27x18, 4, 4, 1, 9, 3, 2, 8),
        (DSP_27x18, 1, 1, 2, 3, 9, 4, 60),
        (DSP_32x32, 1, 1, 3, 4, 8, 8, 113),
    ],
)
def test_search_optimal_reference_points(spec, p, q, gb, s, n, k, ops):
    params = search_optimal(spec, QuantSpec(p, q))
    assert (params.gb, params.s, params.n, params.k) == (gb, s, n, k)
    assert params.ops == ops


def _brute_force(spec, quant, m, min_k=1):
    """Exhaustive reference for the geometry search."""
    best = None
    for n in range(1, spec.bit_a + 1):
        for k in range(min_k, spec.bit_b + 1):
            gb = guard_bits(m, n, k, quant)
            s = slice_width(quant, gb)
            if quant.p + (n - 1) * s > spec.bit_a:
                continue
            if quant.q + (k - 1) * s > spec.bit_b:
                continue
            ops = n * k + (n - 1) * (k - 1)
            key = (ops, -s, n)
            if best is None or key > best[0]:
                best = (key, (n, k, s, gb))
    return best[1] if best else None


@pytest.mark.parametrize("spec", [DSP_27x18, DSP_32x32])
@pytest.mark.parametrize("m", [1, 5])
def test_search_optimal_matches_brute_force(spec, m):
    for p in range(1, 9):
        for q in range(1, 9):
            for signed_f in {False, p > 1}:
                for signed_g in {False, q > 1}:
                    quant = QuantSpec(p, q, signed_f=signed_f, signed_g=signed_g)
                    want = _brute_force(spec, quant, m)
                    if want is None:
                        with pytest.raises(Infeasible):
                            search_optimal(spec, quant, m=m)
                    else:
                        params = search_optimal(spec, quant, m=m)
                        assert (params.n, params.k, params.s, params.gb) == want
                        assert params.m == m


def test_search_optimal_min_k():
    params = search_optimal(DSP_32x32, QuantSpec(4, 4), min_k=3)
    assert params.k >= 3
    want = _brute_force(DSP_32x32, QuantSpec(4, 4), 1, min_k=3)
    assert (params.n, params.k, params.s, params.gb) == want


def test_search_optimal_infeasible():
    with pytest.raises(Infeasible):
        search_optimal(MultiplierSpec(4, 4), QuantSpec(5, 5))


def test_search_optimal_rejects_bad_m():
    with pytest.raises(RangeError):
        search_optimal(DSP_32x32, QuantSpec(4, 4), m=0)


def test_throughput_grid_layout():
    cells = throughput_grid(DSP_27x18, pmax=3, qmax=4)
    assert len(cells) == 12
    # row-major: p varies slowest
    assert [(c.p, c.q) for c in cells[:5]] == [
        (1, 1), (1, 2), (1, 3), (1, 4), (2, 1),
    ]
    for cell in cells:
        assert cell.feasible
        assert cell.ops == cell.n * cell.k + (cell.n - 1) * (cell.k - 1)


def test_throughput_grid_marks_infeasible():
    cells = throughput_grid(MultiplierSpec(4, 4))
    lookup = {(c.p, c.q): c for c in cells}
    assert len(cells) == 64
    cell = lookup[(5, 1)]
    assert not cell.feasible
    assert cell.ops == 0
    assert cell.n is None and cell.k is None
    assert lookup[(1, 1)].feasible


@pytest.mark.parametrize("spec", [DSP_27x18, DSP_32x32])
def test_throughput_grid_monotone(spec):
    cells = throughput_grid(spec)
    ops = {(c.p, c.q): c.ops for c in cells}
    for p in range(1, 9):
        for q in range(1, 9):
            if p > 1:
                assert ops[(p, q)] <= ops[(p - 1, q)]
            if q > 1:
                assert ops[(p, q)] <= ops[(p, q - 1)]
