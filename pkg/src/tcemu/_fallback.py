"""Pure-Python (numpy) implementation of the kernel surface.

Bit-identical to the compiled kernels, just slower.  Used when the extension
is not built or when ``TCEMU_BACKEND=python`` is set.
"""

import numpy as np

NAME = "python"
SIMD = "numpy"

_F32_INF = np.float32(np.inf)
_CHUNK = 1 << 20


def _fused_step(c, x, y):
    """Return fl32(c + x*y) with a single rounding, elementwise.

    The product of two singles is exact in double; the double sum is exact
    up to a TwoSum error term, which is only needed to break the case where
    the double sum lands exactly on a single-precision midpoint.
    """
    c64 = c.astype(np.float64)
    p = x.astype(np.float64) * y.astype(np.float64)
    s = c64 + p
    bb = s - c64
    err = (c64 - (s - bb)) + (p - bb)
    f = s.astype(np.float32)
    d = s - f.astype(np.float64)
    toward = np.where(d > 0, _F32_INF, -_F32_INF)
    g = np.nextafter(f, toward)
    mid = (f.astype(np.float64) + g.astype(np.float64)) * 0.5
    tie = (d != 0) & (s == mid) & (err != 0)
    take_g = tie & ((err > 0) == (d > 0))
    return np.where(take_g, g, f)


def _check(a, b, c):
    for name, arr in (("a", a), ("b", b), ("c", c)):
        if arr.dtype != np.float32 or not arr.flags.c_contiguous:
            raise ValueError(f"{name} must be a C-contiguous float32 array")


def fold_fma(a, b, c, exact_products=False):
    _check(a, b, c)
    k = a.shape[1]
    if exact_products:
        tmp = np.empty_like(c)
        for p in range(k):
            np.multiply(a[:, p : p + 1], b[p : p + 1, :], out=tmp)
            np.add(c, tmp, out=c)
    else:
        for p in range(k):
            c[...] = _fused_step(c, a[:, p : p + 1], b[p : p + 1, :])


def fold_kahan(a, b, c):
    _check(a, b, c)
    comp = np.zeros_like(c)
    for p in range(a.shape[1]):
        y = a[:, p : p + 1] * b[p : p + 1, :] - comp
        t = c + y
        comp = (t - c) - y
        c[...] = t


def fold_half_accum(a, b, c):
    _check(a, b, c)
    k = a.shape[1]
    tmp = np.empty_like(c)
    for k0 in range(0, k, 16):
        for p in range(k0, min(k0 + 16, k)):
            np.multiply(a[:, p : p + 1], b[p : p + 1, :], out=tmp)
            np.add(c, tmp, out=c)
        c[...] = widen_half_bits(round_half_bits(c))


def fold_batched16(a, b, c, exact_products=False):
    _check(a, b, c)
    step = max(1, _CHUNK // 256)
    for lo in range(0, a.shape[0], step):
        aa, bb, cc = a[lo : lo + step], b[lo : lo + step], c[lo : lo + step]
        for p in range(a.shape[2]):
            x = aa[:, :, p : p + 1]
            y = bb[:, p : p + 1, :]
            if exact_products:
                cc += x * y
            else:
                cc[...] = _fused_step(cc, x, y)


def _chunked(fn, src, out_dtype):
    # bound the int64 temporaries of the bit-twiddling to _CHUNK elements at a time
    flat = src.reshape(-1)
    out = np.empty(flat.size, dtype=out_dtype)
    for lo in range(0, flat.size, _CHUNK):
        out[lo : lo + _CHUNK] = fn(flat[lo : lo + _CHUNK])
    return out.reshape(src.shape)


def round_half_bits(x):
    return _chunked(_round_half_chunk, np.ascontiguousarray(x, dtype=np.float32), np.uint16)


def widen_half_bits(bits):
    return _chunked(_widen_half_chunk, np.ascontiguousarray(bits, dtype=np.uint16), np.float32)


def _round_half_chunk(x):
    ax_full = x.view(np.uint32).astype(np.int64)
    sign = (ax_full >> 16) & 0x8000
    ax = ax_full & 0x7FFFFFFF

    normal = (((ax >> 23) - 112) << 10) | ((ax >> 13) & 0x3FF)
    rem = ax & 0x1FFF
    normal = normal + ((rem > 0x1000) | ((rem == 0x1000) & ((normal & 1) == 1)))

    mant = (ax & 0x7FFFFF) | 0x800000
    shift = np.clip(126 - (ax >> 23), 1, 40)
    sub = mant >> shift
    srem = mant & ((np.int64(1) << shift) - 1)
    halfway = np.int64(1) << (shift - 1)
    sub = sub + ((srem > halfway) | ((srem == halfway) & ((sub & 1) == 1)))

    out = np.select(
        [ax > 0x7F800000, ax >= 0x477FF000, ax >= 0x38800000, ax <= 0x33000000],
        [np.int64(0x7E00), sign | 0x7C00, sign | normal, sign],
        default=sign | sub,
    )
    return out.astype(np.uint16)


def _widen_half_chunk(bits):
    h = bits.astype(np.uint32)
    sign = (h & 0x8000) << 16
    e = (h >> 10) & 0x1F
    m = h & 0x3FF
    normal = (sign | ((e + 112) << 23) | (m << 13)).astype(np.uint32).view(np.float32)
    magnitude = m.astype(np.float32) * np.float32(2.0**-24)
    subnormal = np.where(sign != 0, -magnitude, magnitude)
    special = np.where(
        m != 0, np.float32(np.nan), np.where(sign != 0, -_F32_INF, _F32_INF)
    ).astype(np.float32)
    out = np.where(e == 0, subnormal, np.where(e == 31, special, normal))
    return out.astype(np.float32)
