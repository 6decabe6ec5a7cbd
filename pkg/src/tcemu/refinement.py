"""Residual precision refinement for mixed-precision GEMM.

A single-precision matrix is split into its half rounding and the residual
left over by that rounding.  Because the rounding is within a factor of two
of the original entry, the single-precision subtraction that produces the
residual is exact.  The residual is then itself rounded to half so it can be
fed to the tensor path.

Refined products are evaluated as a pipeline of mixed GEMMs.  Each stage's
output seeds the next stage's accumulator; the first stage starts from zero
and beta*C is added to the seed of the last stage.  Stage order:

    one-sided:  R_A B_h,  A_h B_h
    two-sided:  R_A R_B,  A_h R_B,  R_A B_h,  A_h B_h
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, RangeOverflow
from .gemm import GemmConfig, _matrix, gemm_mixed, round_matrix
from .half import widen_array

__all__ = [
    "RefinementMode",
    "ResidualPair",
    "refined_gemm",
    "refined_gemm_one_sided",
    "refined_gemm_two_sided",
    "run_pipeline",
    "split",
]


class RefinementMode(enum.Enum):
    NONE = "none"
    ONE_SIDED = "one-sided"
    TWO_SIDED = "two-sided"

    @property
    def stages(self) -> int:
        return {"none": 1, "one-sided": 2, "two-sided": 4}[self.value]


@dataclass(frozen=True)
class ResidualPair:
    half_part: np.ndarray
    residual: np.ndarray
    residual_f32: np.ndarray

    def reconstruct(self) -> np.ndarray:
        """widen(half_part) + widen(residual), summed in double."""
        return widen_array(self.half_part).astype(np.float64) + widen_array(self.residual)


def split(a) -> ResidualPair:
    a = _matrix(a, np.float32, "A")
    if not np.isfinite(a).all():
        raise RangeOverflow("matrix has non-finite entries")
    half_part = round_matrix(a)
    wide = widen_array(half_part)
    if np.isinf(wide).any():
        i, j = np.argwhere(np.isinf(wide))[0]
        raise RangeOverflow(f"entry ({i}, {j}) = {a[i, j]!r} rounds to half infinity")
    residual_f32 = a - wide
    return ResidualPair(half_part, round_matrix(residual_f32), residual_f32)


def run_pipeline(stages, c=None, beta: float = 1.0) -> np.ndarray:
    """Chain ``(a_half, b_half)`` products, each seeding the next accumulator."""
    acc = None
    last = len(stages) - 1
    for idx, (a_half, b_half) in enumerate(stages):
        seed = acc
        if idx == last and c is not None and beta != 0:
            bc = np.asarray(c, dtype=np.float32) * np.float32(beta)
            seed = bc if seed is None else seed + bc
        acc = gemm_mixed(a_half, b_half, seed, GemmConfig(beta=1.0))
    return acc


def _pipeline_for(mode: RefinementMode, pa: ResidualPair, b) -> list:
    if mode is RefinementMode.NONE:
        b_half = b.half_part if isinstance(b, ResidualPair) else b
        return [(pa.half_part, b_half)]
    if mode is RefinementMode.ONE_SIDED:
        b_half = b.half_part if isinstance(b, ResidualPair) else b
        return [(pa.residual, b_half), (pa.half_part, b_half)]
    return [
        (pa.residual, b.residual),
        (pa.half_part, b.residual),
        (pa.residual, b.half_part),
        (pa.half_part, b.half_part),
    ]


def _check(a, b, c):
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"inner dimensions differ: {a.shape} @ {b.shape}")
    if c is not None and np.shape(c) != (a.shape[0], b.shape[1]):
        raise DimensionMismatch(f"C has shape {np.shape(c)}, expected {(a.shape[0], b.shape[1])}")


def refined_gemm_one_sided(a, b_half, c=None, *, alpha: float = 1.0, beta: float = 1.0):
    """alpha*A*B_h + beta*C with A refined by its residual (two GEMM stages)."""
    a = _matrix(a, np.float32, "A")
    b_half = _matrix(b_half, np.float16, "B")
    _check(a, b_half, c)
    if alpha != 1:
        a = np.float32(alpha) * a
    return run_pipeline(_pipeline_for(RefinementMode.ONE_SIDED, split(a), b_half), c, beta)


def refined_gemm_two_sided(a, b, c=None, *, alpha: float = 1.0, beta: float = 1.0):
    """alpha*A*B + beta*C with both operands refined (four GEMM stages)."""
    a = _matrix(a, np.float32, "A")
    b = _matrix(b, np.float32, "B")
    _check(a, b, c)
    if alpha != 1:
        a = np.float32(alpha) * a
    return run_pipeline(_pipeline_for(RefinementMode.TWO_SIDED, split(a), split(b)), c, beta)


def refined_gemm(a, b, c=None, mode: RefinementMode = RefinementMode.TWO_SIDED,
                 *, alpha: float = 1.0, beta: float = 1.0):
    """Single-precision A, B in; ``mode`` picks how much of the rounding is recovered."""
    a = _matrix(a, np.float32, "A")
    b = _matrix(b, np.float32, "B")
    _check(a, b, c)
    if alpha != 1:
        a = np.float32(alpha) * a
    return run_pipeline(_pipeline_for(mode, split(a), split(b)), c, beta)
