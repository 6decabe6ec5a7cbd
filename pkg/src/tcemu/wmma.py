"""Value-level emulation of the WMMA fragment API.

Fragments are immutable 16x16 tiles.  Operand fragments (``MATRIX_A`` and
``MATRIX_B``) hold halves, accumulators hold singles.  :func:`mma_sync`
computes, for every output entry, the ascending-k fold

    acc <- fl32(acc + widen(a[i, k]) * widen(b[k, j]))

seeded with ``c[i, j]``.  Products of halves are exact in single precision,
so each step rounds once, which is the fused multiply-add contract.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import DimensionMismatch, RoleMismatch
from .half import to_half, widen_array

__all__ = [
    "TILE",
    "Fragment",
    "Layout",
    "MmaMode",
    "Role",
    "fill_fragment",
    "load_fragment",
    "mma_sync",
    "store_fragment",
]

TILE = 16


class Role(enum.Enum):
    MATRIX_A = "matrix_a"
    MATRIX_B = "matrix_b"
    ACCUMULATOR = "accumulator"

    @property
    def is_operand(self) -> bool:
        return self is not Role.ACCUMULATOR


class Layout(enum.Enum):
    ROW_MAJOR = "row_major"
    COL_MAJOR = "col_major"


class MmaMode(enum.Enum):
    """Output precision of the accumulator."""

    FP32 = "fp32"
    FP16 = "fp16"


@dataclass(frozen=True)
class Fragment:
    role: Role
    data: np.ndarray
    layout: Layout | None = None

    def __post_init__(self):
        want = np.float16 if self.role.is_operand else np.float32
        if self.data.shape != (TILE, TILE):
            raise DimensionMismatch(f"fragment must be {TILE}x{TILE}, got {self.data.shape}")
        if self.data.dtype != want:
            raise TypeError(f"{self.role.value} fragment needs {np.dtype(want)} data")
        if not self.role.is_operand and self.layout is not None:
            raise ValueError("accumulator fragments carry no layout")
        data = np.array(self.data, copy=True)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def widened(self) -> np.ndarray:
        """Entries as float32 (a fresh, writable array)."""
        if self.role.is_operand:
            return widen_array(self.data)
        return self.data.copy()


def _operand_layout(role: Role, layout: Layout | None) -> Layout | None:
    if role.is_operand:
        return layout or Layout.ROW_MAJOR
    return None


def fill_fragment(role: Role, value: float, layout: Layout | None = None) -> Fragment:
    """Fragment with all 256 entries equal to ``value`` (rounded to half for operands)."""
    if not np.isfinite(value):
        raise ValueError("fill value must be finite")
    grid = np.full((TILE, TILE), value, dtype=np.float32)
    if role.is_operand:
        return Fragment(role, to_half(grid), _operand_layout(role, layout))
    return Fragment(role, grid)


def load_fragment(src, role: Role, layout: Layout = Layout.ROW_MAJOR) -> Fragment:
    """Load a 16x16 region.

    ``layout`` says how ``src`` is laid out in memory: with ``COL_MAJOR`` the
    region's row ``j`` holds logical column ``j``, so the fragment sees the
    transpose.  float32 sources are rounded to half for operand roles; a
    float16 source may not be loaded as an accumulator.
    """
    src = np.asarray(src)
    if src.shape != (TILE, TILE):
        raise DimensionMismatch(f"fragment region must be {TILE}x{TILE}, got {src.shape}")
    logical = src.T if layout is Layout.COL_MAJOR else src
    if role.is_operand:
        if logical.dtype != np.float16:
            logical = to_half(logical.astype(np.float32))
        return Fragment(role, np.ascontiguousarray(logical), layout)
    if src.dtype == np.float16:
        logical = widen_array(np.ascontiguousarray(logical))
    return Fragment(role, np.ascontiguousarray(logical, dtype=np.float32))


def store_fragment(d: Fragment, layout: Layout = Layout.ROW_MAJOR) -> np.ndarray:
    """Copy an accumulator out as a 16x16 float32 array in the given memory layout."""
    if d.role is not Role.ACCUMULATOR:
        raise RoleMismatch("only accumulator fragments can be stored")
    out = d.data.T if layout is Layout.COL_MAJOR else d.data
    return np.array(out, dtype=np.float32, order="C")


def mma_sync(a: Fragment, b: Fragment, c: Fragment, mode: MmaMode = MmaMode.FP32) -> Fragment:
    """D = A*B + C over one 16x16x16 tile; see the module docstring for the fold."""
    if a.role is not Role.MATRIX_A:
        raise RoleMismatch(f"first operand must be matrix_a, got {a.role.value}")
    if b.role is not Role.MATRIX_B:
        raise RoleMismatch(f"second operand must be matrix_b, got {b.role.value}")
    if c.role is not Role.ACCUMULATOR:
        raise RoleMismatch(f"third operand must be an accumulator, got {c.role.value}")
    acc = c.widened()
    kernels.fold_fma(a.widened(), b.widened(), acc, exact_products=True)
    if mode is MmaMode.FP16:
        acc = widen_array(to_half(acc))
    return Fragment(Role.ACCUMULATOR, acc)
