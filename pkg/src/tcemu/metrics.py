"""Error and throughput bookkeeping."""

from __future__ import annotations

import statistics
from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyInput

__all__ = [
    "ErrorReport",
    "SummaryStats",
    "error_matrix",
    "error_matrix_f64",
    "flops_gemm",
    "max_norm",
    "summarize",
]


@dataclass(frozen=True)
class ErrorReport:
    n: int
    mode: str
    trial: int
    max_norm_error: float
    flops: int
    wall_time_s: float
    seed: int

    def __post_init__(self):
        if not self.max_norm_error >= 0:
            raise ValueError("max_norm_error must be non-negative")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SummaryStats:
    harmonic_mean_flops_per_s: float
    arithmetic_mean_time: float
    min_time: float
    max_time: float
    min_flops_per_s: float
    max_flops_per_s: float
    trials: int


def error_matrix(c_test, c_ref) -> np.ndarray:
    """e = c_test - c_ref, computed in single precision."""
    c_test = np.asarray(c_test, dtype=np.float32)
    c_ref = np.asarray(c_ref, dtype=np.float32)
    if c_test.shape != c_ref.shape:
        raise DimensionMismatch(f"shapes differ: {c_test.shape} vs {c_ref.shape}")
    return c_test - c_ref


def error_matrix_f64(c_test, c_ref) -> np.ndarray:
    """Diagnostic error in double precision; never used for reported numbers."""
    c_test = np.asarray(c_test, dtype=np.float64)
    c_ref = np.asarray(c_ref, dtype=np.float64)
    if c_test.shape != c_ref.shape:
        raise DimensionMismatch(f"shapes differ: {c_test.shape} vs {c_ref.shape}")
    return c_test - c_ref


def max_norm(e) -> float:
    """Largest absolute entry (0.0 for an empty matrix)."""
    e = np.asarray(e)
    if e.size == 0:
        return 0.0
    return float(np.max(np.abs(e)))


def flops_gemm(m: int, n: int, k: int, stages: int = 1, beta_nonzero: bool = False) -> int:
    """Naive operation count: 2*m*n*k per stage, plus 2*m*n for the beta*C update."""
    if min(m, n, k) < 1 or stages < 1:
        raise ValueError("dimensions and stage count must be positive")
    return stages * 2 * m * n * k + (2 * m * n if beta_nonzero else 0)


def summarize(trials) -> SummaryStats:
    """Harmonic mean of per-trial flops/s and arithmetic mean of times.

    ``trials`` is an iterable of ``(wall_time_s, flops)`` pairs.
    """
    trials = list(trials)
    if not trials:
        raise EmptyInput("summarize needs at least one trial")
    times = [float(t) for t, _ in trials]
    if min(times) <= 0:
        raise ValueError("trial times must be positive")
    rates = [f / t for t, f in trials]
    return SummaryStats(
        harmonic_mean_flops_per_s=statistics.harmonic_mean(rates),
        arithmetic_mean_time=statistics.fmean(times),
        min_time=min(times),
        max_time=max(times),
        min_flops_per_s=min(rates),
        max_flops_per_s=max(rates),
        trials=len(trials),
    )
