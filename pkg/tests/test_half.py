import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import half_round_exact, half_round_frexp, half_value_exact
from tcemu.half import (
    HALF_MAX,
    QNAN_BITS,
    Half,
    half_epsilon,
    round_to_half,
    to_half,
    widen,
    widen_array,
)

ALL_BITS = np.arange(1 << 16, dtype=np.uint32).astype(np.uint16)
singles = st.floats(width=32, allow_nan=False, allow_infinity=False)


def f32_from_bits(u):
    return struct.unpack("<f", struct.pack("<I", u))[0]


def test_max_finite():
    h = round_to_half(65504.0)
    assert h.bits == 0x7BFF
    assert float(h) == HALF_MAX


def test_one():
    assert round_to_half(1.0).bits == 0x3C00
    assert widen(Half(0x3C00)) == 1.0


def test_tie_to_even_above_2048():
    # oracle: spacing is 2 above 2048, 2049 is a tie
    assert half_round_exact(2049.0) == 0x6800
    assert round_to_half(2049.0).bits == 0x6800
    assert float(round_to_half(2049.0)) == 2048.0
    assert float(round_to_half(2051.0)) == 2052.0


def test_overflow_to_infinity():
    assert round_to_half(100000.0).bits == 0x7C00
    assert round_to_half(-100000.0).bits == 0xFC00
    assert round_to_half(65519.99609375).bits == 0x7BFF
    assert round_to_half(65520.0).bits == 0x7C00


def test_min_subnormal_widens_exactly():
    assert half_value_exact(0x0001) == 2**-24
    assert widen(Half(0x0001)) == np.float32(2.0**-24)


def test_infinity_widens():
    assert widen(Half(0x7C00)) == np.float32(np.inf)
    assert widen(Half(0xFC00)) == np.float32(-np.inf)


def test_epsilon():
    assert half_epsilon() == np.float32(0.0009765625)
    assert round_to_half(1.0 + 2.0**-11).bits == 0x3C00
    assert float(round_to_half(1.0 + 2.0**-10)) == 1.0 + 2.0**-10


def test_underflow_keeps_sign():
    assert round_to_half(2.0**-26).bits == 0x0000
    assert round_to_half(-(2.0**-26)).bits == 0x8000
    assert round_to_half(2.0**-25).bits == 0x0000  # tie to even zero
    assert round_to_half(2.0**-25 * 1.5).bits == 0x0001


def test_nan_is_canonical():
    for pattern in (0x7FC00000, 0x7F800001, 0xFFFFFFFF, 0xFFC00001):
        assert round_to_half(f32_from_bits(pattern)).bits == QNAN_BITS
    assert math.isnan(widen(Half(0x7E01)))


def test_classification():
    assert Half(0x0000).classify() == "+zero"
    assert Half(0x8000).classify() == "-zero"
    assert Half(0x0001).classify() == "+subnormal"
    assert Half(0x0400).classify() == "+normal"
    assert Half(0xFC00).classify() == "-inf"
    assert Half(0x7E00).classify() == "nan"
    assert Half(0x3C00).is_normal and not Half(0x3C00).is_subnormal
    with pytest.raises(ValueError):
        Half(0x10000)


def test_round_trip_every_pattern():
    wide = widen_array(ALL_BITS)
    back = to_half(wide).view(np.uint16)
    nan = ((ALL_BITS & 0x7C00) == 0x7C00) & ((ALL_BITS & 0x3FF) != 0)
    assert np.array_equal(back[~nan], ALL_BITS[~nan])
    assert np.all(back[nan] == QNAN_BITS)


def test_widen_matches_exact_values():
    wide = widen_array(ALL_BITS)
    for bits in range(0, 1 << 16, 7):
        exact = half_value_exact(bits)
        if isinstance(exact, float) and math.isnan(exact):
            assert math.isnan(wide[bits])
        else:
            assert float(wide[bits]) == exact
            assert math.copysign(1.0, wide[bits]) == (-1.0 if bits & 0x8000 else 1.0)


def test_1024_values_per_binade():
    wide = widen_array(ALL_BITS).astype(np.float64)
    finite = wide[np.isfinite(wide)]
    for k in range(-14, 16):
        window = finite[(finite >= 2.0**k) & (finite < 2.0 ** (k + 1))]
        assert np.unique(window).size == 1024, k


def test_exact_oracle_on_boundaries():
    cases = []
    for bits in range(0, 0x7C00, 3):
        lo = float(half_value_exact(bits))
        hi = float(half_value_exact(bits + 1))
        mid = (lo + hi) / 2
        for v in (mid, np.nextafter(np.float32(mid), np.float32(0)),
                  np.nextafter(np.float32(mid), np.float32(np.inf))):
            cases.append(float(np.float32(v)))
    cases += [65504.0, 65519.0, 65520.0, 65536.0, 2.0**-24, 2.0**-25, 3 * 2.0**-26]
    xs = np.array(cases + [-c for c in cases], dtype=np.float32)
    got = to_half(xs).view(np.uint16)
    want = np.array([half_round_exact(float(v)) for v in xs], dtype=np.uint16)
    assert np.array_equal(got, want)


def test_dense_sample_matches_oracles():
    rng = np.random.default_rng(7)
    raw = rng.integers(0, 1 << 32, 200_000, dtype=np.uint64).astype(np.uint32)
    # bias half of the sample into the exponent window the half format covers
    exps = rng.integers(100, 145, raw.size // 2).astype(np.uint32)
    raw[: raw.size // 2] = (raw[: raw.size // 2] & 0x807FFFFF) | (exps << 23)
    xs = raw.view(np.float32)
    got = to_half(xs).view(np.uint16)
    assert np.array_equal(got, half_round_frexp(xs))
    finite = np.isfinite(xs)
    with np.errstate(over="ignore"):
        assert np.array_equal(got[finite], xs[finite].astype(np.float16).view(np.uint16))
    for v, g in zip(xs[:3000], got[:3000]):
        assert g == half_round_exact(float(v))


@settings(max_examples=300, deadline=None)
@given(singles, singles)
def test_monotone(x, y):
    x, y = sorted((x, y))
    hx, hy = to_half(np.array([x, y], dtype=np.float32))
    assert widen_array(np.array([hx]))[0] <= widen_array(np.array([hy]))[0]


@settings(max_examples=300, deadline=None)
@given(st.floats(min_value=2.0**-14, max_value=65504.0, width=32), st.booleans())
def test_half_ulp_error_bound(x, negative):
    x = -x if negative else x
    got = float(widen_array(to_half(np.array([x], dtype=np.float32)))[0])
    ulp = 2.0 ** (math.floor(math.log2(abs(x))) - 10)
    assert abs(got - x) <= ulp / 2


@settings(max_examples=200, deadline=None)
@given(singles)
def test_scalar_matches_exact_oracle(x):
    assert round_to_half(x).bits == half_round_exact(x)
