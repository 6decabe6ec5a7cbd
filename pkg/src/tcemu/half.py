"""IEEE-754 binary16 emulation.

Halves are carried as their 16-bit patterns.  Conversion from single
precision rounds to nearest, ties to even, keeps subnormals, saturates to
infinity at 65520 and canonicalizes every NaN to ``QNAN_BITS``.  Widening is
exact.  Arrays of halves use numpy's ``float16`` dtype purely as a container;
all conversions go through the kernels in :mod:`tcemu._backend`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backend import kernels

__all__ = [
    "HALF_MAX",
    "HALF_MIN_NORMAL",
    "HALF_MIN_SUBNORMAL",
    "QNAN_BITS",
    "Half",
    "half_epsilon",
    "round_to_half",
    "to_half",
    "widen",
    "widen_array",
]

HALF_MAX = 65504.0
HALF_MIN_NORMAL = 2.0**-14
HALF_MIN_SUBNORMAL = 2.0**-24
QNAN_BITS = 0x7E00
POS_INF_BITS = 0x7C00
NEG_INF_BITS = 0xFC00

_SIGN = 0x8000
_EXP = 0x7C00
_FRAC = 0x03FF


@dataclass(frozen=True, order=False)
class Half:
    """A binary16 value: 1 sign bit, 5 exponent bits, 10 fraction bits."""

    bits: int

    def __post_init__(self):
        if not 0 <= int(self.bits) <= 0xFFFF:
            raise ValueError(f"half bit pattern out of range: {self.bits!r}")
        object.__setattr__(self, "bits", int(self.bits))

    @classmethod
    def from_float(cls, x) -> Half:
        return round_to_half(x)

    @property
    def sign(self) -> int:
        return self.bits >> 15

    @property
    def exponent_field(self) -> int:
        return (self.bits & _EXP) >> 10

    @property
    def fraction_field(self) -> int:
        return self.bits & _FRAC

    @property
    def is_nan(self) -> bool:
        return self.exponent_field == 0x1F and self.fraction_field != 0

    @property
    def is_inf(self) -> bool:
        return self.exponent_field == 0x1F and self.fraction_field == 0

    @property
    def is_finite(self) -> bool:
        return self.exponent_field != 0x1F

    @property
    def is_zero(self) -> bool:
        return self.bits & ~_SIGN == 0

    @property
    def is_subnormal(self) -> bool:
        return self.exponent_field == 0 and self.fraction_field != 0

    @property
    def is_normal(self) -> bool:
        return 0 < self.exponent_field < 0x1F

    def classify(self) -> str:
        """One of ``nan``, ``inf``, ``normal``, ``subnormal``, ``zero``, signed for non-NaN."""
        if self.is_nan:
            return "nan"
        kind = (
            "inf" if self.is_inf
            else "zero" if self.is_zero
            else "subnormal" if self.is_subnormal
            else "normal"
        )
        return ("-" if self.sign else "+") + kind

    def __float__(self) -> float:
        return float(widen(self))

    def __repr__(self) -> str:
        return f"Half(0x{self.bits:04x} = {float(self)!r})"


def round_to_half(x) -> Half:
    """Nearest binary16 to the single-precision value ``x``."""
    bits = kernels.round_half_bits(np.array([x], dtype=np.float32))
    return Half(int(bits[0]))


def widen(h: Half) -> np.float32:
    """Exact single-precision value of ``h``."""
    return kernels.widen_half_bits(np.array([h.bits], dtype=np.uint16))[0]


def half_epsilon() -> np.float32:
    """Spacing between 1.0 and the next larger half."""
    return np.float32(math.ldexp(1.0, -10))


def to_half(x) -> np.ndarray:
    """Round a single-precision array entry-wise; returns a ``float16`` array.

    Non-float32 input is first converted to float32 by numpy.
    """
    x = np.asarray(x, dtype=np.float32)
    return kernels.round_half_bits(x).view(np.float16)


def widen_array(h) -> np.ndarray:
    """Widen a ``float16`` (or raw ``uint16`` pattern) array to float32, exactly."""
    h = np.asarray(h)
    if h.dtype == np.float16:
        h = h.view(np.uint16)
    elif h.dtype != np.uint16:
        raise TypeError(f"expected float16 or uint16 array, got {h.dtype}")
    return kernels.widen_half_bits(h)
