"""GEMM, C' = alpha*A*B + beta*C, in four arithmetic modes.

All modes fold each output entry over k in ascending order, seeded with
beta*C, so differences between modes come from precision alone:

* ``FP32_ORACLE``: single-precision inputs, fused multiply-add per step.
* ``MIXED``: half inputs, exact products, one single rounding per step.
  Identical to visiting 16x16 tiles along k with :func:`tcemu.wmma.mma_sync`.
* ``FP16_ACCUM``: as ``MIXED`` but the accumulator is rounded to half after
  every 16-deep k tile.
* ``FP32_KAHAN``: half inputs, exact products, compensated summation.

alpha scales A (for half inputs, alpha*A is rounded back to half before the
products).  Work can be split across threads by output rows; each entry is
still folded by one thread, so results do not depend on ``workers``.
"""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._backend import kernels
from .errors import ConfigError, DimensionMismatch, LengthMismatch
from .half import to_half, widen_array
from .wmma import TILE, MmaMode, Role, load_fragment, mma_sync, store_fragment

__all__ = [
    "AccumMode",
    "GemmConfig",
    "gemm",
    "gemm_batched",
    "gemm_half_accum",
    "gemm_kahan",
    "gemm_mixed",
    "gemm_mixed_tiled",
    "gemm_oracle",
    "round_matrix",
]


class AccumMode(enum.Enum):
    FP32_ORACLE = "fp32-oracle"
    MIXED = "mixed"
    FP16_ACCUM = "fp16-accum"
    FP32_KAHAN = "kahan"


@dataclass(frozen=True)
class GemmConfig:
    alpha: float = 1.0
    beta: float = 1.0
    accum_mode: AccumMode = AccumMode.MIXED
    tile: int = TILE
    workers: int = 1

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise ConfigError("alpha and beta must be finite")
        if self.tile != TILE:
            raise ConfigError(f"tile edge is fixed at {TILE}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


DEFAULT = GemmConfig()


def _matrix(x, dtype, name) -> np.ndarray:
    x = np.asarray(x)
    if x.ndim != 2 or 0 in x.shape:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D matrix, got shape {x.shape}")
    if dtype == np.float16 and x.dtype != np.float16:
        raise TypeError(f"{name} must be a float16 (half) matrix; use round_matrix first")
    return np.ascontiguousarray(x, dtype=dtype)


def _check_dims(a, b, c):
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"inner dimensions differ: {a.shape} @ {b.shape}")
    if c is not None and c.shape != (a.shape[0], b.shape[1]):
        raise DimensionMismatch(f"C has shape {c.shape}, expected {(a.shape[0], b.shape[1])}")


def _seed(c, beta, shape) -> np.ndarray:
    if c is None or beta == 0:
        return np.zeros(shape, dtype=np.float32)
    if beta == 1:
        return np.array(c, dtype=np.float32, order="C")
    return np.float32(beta) * c


def _scaled_half(a_half, alpha) -> np.ndarray:
    wide = widen_array(a_half)
    if alpha == 1:
        return wide
    return widen_array(to_half(np.float32(alpha) * wide))


def _run_rows(fold, a, b, acc, workers, **kw):
    m = a.shape[0]
    if workers <= 1 or m < 2 * workers:
        fold(a, b, acc, **kw)
        return acc
    bounds = np.linspace(0, m, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        jobs = [
            pool.submit(fold, a[lo:hi], b, acc[lo:hi], **kw)
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        for job in jobs:
            job.result()
    return acc


def round_matrix(a) -> np.ndarray:
    """Entry-wise round a single-precision matrix to half."""
    return to_half(_matrix(a, np.float32, "A"))


def gemm_oracle(a, b, c=None, cfg: GemmConfig = DEFAULT) -> np.ndarray:
    """Single-precision reference: fused multiply-add fold in ascending k."""
    a = _matrix(a, np.float32, "A")
    b = _matrix(b, np.float32, "B")
    c = None if c is None else _matrix(c, np.float32, "C")
    _check_dims(a, b, c)
    if cfg.alpha != 1:
        a = np.float32(cfg.alpha) * a
    acc = _seed(c, cfg.beta, (a.shape[0], b.shape[1]))
    return _run_rows(kernels.fold_fma, a, b, acc, cfg.workers, exact_products=False)


def gemm_mixed(a_half, b_half, c=None, cfg: GemmConfig = DEFAULT) -> np.ndarray:
    """Half inputs, single-precision accumulation (the tensor-core contract)."""
    a_half = _matrix(a_half, np.float16, "A")
    b_half = _matrix(b_half, np.float16, "B")
    c = None if c is None else _matrix(c, np.float32, "C")
    _check_dims(a_half, b_half, c)
    acc = _seed(c, cfg.beta, (a_half.shape[0], b_half.shape[1]))
    a = _scaled_half(a_half, cfg.alpha)
    b = widen_array(b_half)
    return _run_rows(kernels.fold_fma, a, b, acc, cfg.workers, exact_products=True)


def gemm_half_accum(a_half, b_half, c_half=None, cfg: GemmConfig = DEFAULT) -> np.ndarray:
    """Half inputs, accumulator rounded to half after every k tile; returns float16."""
    a_half = _matrix(a_half, np.float16, "A")
    b_half = _matrix(b_half, np.float16, "B")
    c_half = None if c_half is None else _matrix(c_half, np.float16, "C")
    _check_dims(a_half, b_half, c_half)
    c = None if c_half is None else widen_array(c_half)
    acc = _seed(c, cfg.beta, (a_half.shape[0], b_half.shape[1]))
    a = _scaled_half(a_half, cfg.alpha)
    b = widen_array(b_half)
    _run_rows(kernels.fold_half_accum, a, b, acc, cfg.workers)
    return to_half(acc)


def gemm_kahan(a_half, b_half, c=None, cfg: GemmConfig = DEFAULT) -> np.ndarray:
    """Half inputs, exact products, Kahan-compensated single-precision sums."""
    a_half = _matrix(a_half, np.float16, "A")
    b_half = _matrix(b_half, np.float16, "B")
    c = None if c is None else _matrix(c, np.float32, "C")
    _check_dims(a_half, b_half, c)
    acc = _seed(c, cfg.beta, (a_half.shape[0], b_half.shape[1]))
    a = _scaled_half(a_half, cfg.alpha)
    b = widen_array(b_half)
    return _run_rows(kernels.fold_kahan, a, b, acc, cfg.workers)


def gemm(a, b, c=None, cfg: GemmConfig = DEFAULT) -> np.ndarray:
    """Dispatch on ``cfg.accum_mode``.  Inputs are single precision and are
    rounded to half here for the half-input modes; output is float32."""
    mode = cfg.accum_mode
    if mode is AccumMode.FP32_ORACLE:
        return gemm_oracle(a, b, c, cfg)
    a_half, b_half = round_matrix(a), round_matrix(b)
    if mode is AccumMode.MIXED:
        return gemm_mixed(a_half, b_half, c, cfg)
    if mode is AccumMode.FP32_KAHAN:
        return gemm_kahan(a_half, b_half, c, cfg)
    c_half = None if c is None else round_matrix(c)
    return widen_array(gemm_half_accum(a_half, b_half, c_half, cfg))


def gemm_mixed_tiled(a_half, b_half, c=None, cfg: GemmConfig = DEFAULT,
                     mode: MmaMode = MmaMode.FP32) -> np.ndarray:
    """Literal tile-by-tile evaluation through WMMA fragments.

    Zero-pads every dimension to a multiple of 16, runs one ``mma_sync`` per
    16x16x16 tile product with k tiles in ascending order, and crops.  Slow;
    it exists to pin down what :func:`gemm_mixed` and
    :func:`gemm_half_accum` compute.
    """
    a_half = _matrix(a_half, np.float16, "A")
    b_half = _matrix(b_half, np.float16, "B")
    c = None if c is None else _matrix(c, np.float32, "C")
    _check_dims(a_half, b_half, c)
    m, k = a_half.shape
    n = b_half.shape[1]

    def pad(x, rows, cols, dtype):
        out = np.zeros((-(-rows // TILE) * TILE, -(-cols // TILE) * TILE), dtype=dtype)
        out[:rows, :cols] = x
        return out

    a_p = pad(to_half(_scaled_half(a_half, cfg.alpha)), m, k, np.float16)
    b_p = pad(b_half, k, n, np.float16)
    c_p = pad(_seed(c, cfg.beta, (m, n)), m, n, np.float32)
    out = np.empty_like(c_p)
    for i in range(0, c_p.shape[0], TILE):
        for j in range(0, c_p.shape[1], TILE):
            acc = load_fragment(c_p[i : i + TILE, j : j + TILE], Role.ACCUMULATOR)
            for p in range(0, a_p.shape[1], TILE):
                fa = load_fragment(a_p[i : i + TILE, p : p + TILE], Role.MATRIX_A)
                fb = load_fragment(b_p[p : p + TILE, j : j + TILE], Role.MATRIX_B)
                acc = mma_sync(fa, fb, acc, mode)
            out[i : i + TILE, j : j + TILE] = store_fragment(acc)
    return out[:m, :n].copy()


def _batch(x, dtype, name) -> np.ndarray:
    x = np.asarray(x) if not isinstance(x, (list, tuple)) else np.stack([np.asarray(t) for t in x])
    if x.ndim != 3 or x.shape[1:] != (TILE, TILE):
        raise DimensionMismatch(f"{name} must hold {TILE}x{TILE} matrices, got shape {x.shape}")
    if dtype == np.float16 and x.dtype != np.float16:
        raise TypeError(f"{name} must hold float16 (half) matrices")
    return np.ascontiguousarray(x, dtype=dtype)


def gemm_batched(a_batch, b_batch, c_batch, cfg: GemmConfig = DEFAULT) -> np.ndarray:
    """Independent 16x16 mixed-precision GEMMs; entry i equals
    ``gemm_mixed(a_batch[i], b_batch[i], c_batch[i], cfg)``.

    Accepts lists of matrices or stacked (count, 16, 16) arrays and returns a
    stacked float32 array.
    """
    lengths = {len(a_batch), len(b_batch), len(c_batch)}
    if len(lengths) != 1:
        raise LengthMismatch(
            f"batch lengths differ: {len(a_batch)}, {len(b_batch)}, {len(c_batch)}"
        )
    if lengths == {0}:
        raise LengthMismatch("batch must contain at least one triple")
    a = _batch(a_batch, np.float16, "a_batch")
    b = _batch(b_batch, np.float16, "b_batch")
    c = _batch(c_batch, np.float32, "c_batch")
    acc = _seed(c, cfg.beta, c.shape)
    a_wide = _scaled_half(a, cfg.alpha)
    b_wide = widen_array(b)
    return _fold_batches(a_wide, b_wide, acc, cfg.workers, exact_products=True)


def gemm_batched_oracle(a_batch, b_batch, c_batch, cfg: GemmConfig = DEFAULT) -> np.ndarray:
    """Single-precision counterpart of :func:`gemm_batched` (per-entry ``gemm_oracle``)."""
    a = _batch(a_batch, np.float32, "a_batch")
    b = _batch(b_batch, np.float32, "b_batch")
    c = _batch(c_batch, np.float32, "c_batch")
    if not a.shape[0] == b.shape[0] == c.shape[0]:
        raise LengthMismatch("batch lengths differ")
    if cfg.alpha != 1:
        a = np.float32(cfg.alpha) * a
    acc = _seed(c, cfg.beta, c.shape)
    return _fold_batches(a, b, acc, cfg.workers, exact_products=False)


def _fold_batches(a, b, acc, workers, exact_products):
    count = a.shape[0]
    if workers <= 1 or count < 2 * workers:
        kernels.fold_batched16(a, b, acc, exact_products=exact_products)
        return acc
    bounds = np.linspace(0, count, workers + 1).astype(int)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        jobs = [
            pool.submit(kernels.fold_batched16, a[lo:hi], b[lo:hi], acc[lo:hi],
                        exact_products=exact_products)
            for lo, hi in zip(bounds[:-1], bounds[1:])
        ]
        for job in jobs:
            job.result()
    return acc
