"""Independent reference implementations used only by the tests.

None of these share code with the package: rounding is done either with
exact rationals or with float64 frexp/rint arithmetic, never by bit
manipulation of the kind the kernels use.
"""

import math
import struct
from fractions import Fraction

import numpy as np

HALF = dict(mant_bits=10, emin=-14, emax=15)
SINGLE = dict(mant_bits=23, emin=-126, emax=127)


def round_fraction(q, mant_bits, emin, emax):
    """Round a rational to nearest-even in a binary format; returns Fraction or +-inf.

    The returned zero carries no sign; callers track signs themselves.
    """
    if q == 0:
        return Fraction(0)
    neg = q < 0
    q = abs(q)
    e = q.numerator.bit_length() - q.denominator.bit_length()
    while Fraction(2) ** e > q:
        e -= 1
    while Fraction(2) ** (e + 1) <= q:
        e += 1
    e = max(e, emin)
    quantum = Fraction(2) ** (e - mant_bits)
    scaled = q / quantum
    n = scaled.numerator // scaled.denominator
    rem = scaled - n
    if rem > Fraction(1, 2) or (rem == Fraction(1, 2) and n % 2 == 1):
        n += 1
    val = n * quantum
    if val >= Fraction(2) ** (emax + 1):
        return -math.inf if neg else math.inf
    return -val if neg else val


def half_bits_from_value(val, negative):
    """Encode an exactly representable half value (Fraction or inf) as bits."""
    sign = 0x8000 if negative else 0
    if val in (math.inf, -math.inf):
        return sign | 0x7C00
    v = abs(Fraction(val))
    if v == 0:
        return sign
    if v < Fraction(1, 2**14):
        n = v * 2**24
        assert n.denominator == 1
        return sign | int(n)
    e = v.numerator.bit_length() - v.denominator.bit_length()
    while Fraction(2) ** e > v:
        e -= 1
    while Fraction(2) ** (e + 1) <= v:
        e += 1
    frac = (v / Fraction(2) ** e - 1) * 1024
    assert frac.denominator == 1
    return sign | ((e + 15) << 10) | int(frac)


def half_round_exact(x):
    """Digit-exact single -> half bits for one Python float (already a single)."""
    if math.isnan(x):
        return 0x7E00
    negative = math.copysign(1.0, x) < 0
    if math.isinf(x):
        return (0x8000 if negative else 0) | 0x7C00
    return half_bits_from_value(round_fraction(Fraction(x), **HALF), negative)


def half_value_exact(bits):
    """Exact value of a half bit pattern as Fraction (or float inf/nan)."""
    sign = -1 if bits & 0x8000 else 1
    e = (bits >> 10) & 0x1F
    m = bits & 0x3FF
    if e == 31:
        return math.nan if m else sign * math.inf
    if e == 0:
        return sign * Fraction(m, 2**24)
    return sign * (1 + Fraction(m, 1024)) * Fraction(2) ** (e - 15)


@np.errstate(all="ignore")
def half_round_frexp(x):
    """Vectorized single -> half bits using float64 frexp/rint arithmetic."""
    x = np.asarray(x, dtype=np.float32).astype(np.float64)
    neg = np.signbit(x)
    ax = np.abs(x)
    finite = np.isfinite(ax)
    safe = np.where(finite, ax, 1.0)
    _, e = np.frexp(safe)
    k = np.maximum(e - 1, -14)
    q = np.rint(np.ldexp(safe, 10 - k))  # rint is round-half-even
    val = np.ldexp(q, k - 10)
    # re-derive the encoding from the rounded value
    _, e2 = np.frexp(np.where(val > 0, val, 1.0))
    e2 = e2 - 1
    normal = val >= 2.0**-14
    frac = np.where(normal, np.ldexp(val, -e2) - 1.0, 0.0) * 1024
    bits = np.where(
        normal,
        ((e2 + 15).astype(np.int64) << 10) + frac.astype(np.int64),
        np.ldexp(val, 24).astype(np.int64),
    )
    bits = np.where(val > 65504.0, 0x7C00, bits)
    bits = np.where(finite, bits, 0x7C00)
    bits = bits | np.where(neg, 0x8000, 0)
    bits = np.where(np.isnan(x), 0x7E00, bits)
    return bits.astype(np.uint16)


def f32(x):
    """Round a Python float/Fraction-exact value to the nearest single."""
    return struct.unpack("<f", struct.pack("<f", x))[0]


def fma32_exact(acc, a, b):
    """fl32(acc + a*b) with a single rounding, via exact rationals."""
    exact = Fraction(float(acc)) + Fraction(float(a)) * Fraction(float(b))
    val = round_fraction(exact, **SINGLE)
    return np.float32(float(val))


def fused_fold_exact(a, b, seed):
    """Ascending-k fused fold, entry by entry, in exact rational arithmetic."""
    m, k = a.shape
    n = b.shape[1]
    out = np.array(seed, dtype=np.float32, copy=True)
    for i in range(m):
        for j in range(n):
            acc = out[i, j]
            for p in range(k):
                acc = fma32_exact(acc, a[i, p], b[p, j])
            out[i, j] = acc
    return out


def mixed_fold_oracle(a_half, b_half, seed):
    """Ascending-k fold over exact half products, one row at a time in float32.

    Uses numpy's own float16 -> float32 cast; the product of two halves is
    exact in single precision, so ``row + a*b`` rounds exactly once.
    """
    a = np.asarray(a_half, dtype=np.float16).astype(np.float32)
    b = np.asarray(b_half, dtype=np.float16).astype(np.float32)
    out = np.array(seed, dtype=np.float32, copy=True)
    for i in range(a.shape[0]):
        row = out[i].copy()
        for p in range(a.shape[1]):
            row = row + a[i, p] * b[p]
        out[i] = row
    return out


def half_accum_oracle(a_half, b_half, seed):
    """Scalar half-accumulate GEMM: round the accumulator to half every 16 steps."""
    a = np.asarray(a_half, dtype=np.float16).astype(np.float32)
    b = np.asarray(b_half, dtype=np.float16).astype(np.float32)
    out = np.array(seed, dtype=np.float32, copy=True)
    for i in range(a.shape[0]):
        row = out[i].copy()
        for p in range(a.shape[1]):
            row = row + a[i, p] * b[p]
            if p % 16 == 15 or p == a.shape[1] - 1:
                row = row.astype(np.float16).astype(np.float32)
        out[i] = row
    return out


def bits32(x):
    return np.asarray(x, dtype=np.float32).view(np.uint32)


def bits_equal(x, y):
    x, y = np.asarray(x), np.asarray(y)
    return x.shape == y.shape and x.dtype == y.dtype and np.array_equal(
        x.view(np.uint8), y.view(np.uint8)
    )
