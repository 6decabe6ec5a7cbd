"""Precision-loss experiments: matrix generation and sweeps.

Random matrices come from numpy's Philox4x64 counter-based generator, keyed
by ``(stream_id << 64) | seed``.  Philox output is defined bit-for-bit and
does not depend on platform, so a (seed, stream) pair always yields the same
matrix.  Stream ids used by the sweeps:

    error sweep:   n << 20 | trial << 4 | role     (role 0 = A, 1 = B, 2 = C)
    batched runs:  BATCH_STREAM | role             (shared by every batch size)

Batched runs draw every batch from the front of the same streams, so a larger
batch contains every triple of a smaller one.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .gemm import (
    AccumMode,
    GemmConfig,
    gemm_batched,
    gemm_batched_oracle,
    gemm_half_accum,
    gemm_kahan,
    gemm_mixed,
    gemm_oracle,
    round_matrix,
)
from .half import to_half, widen_array
from .metrics import ErrorReport, error_matrix, flops_gemm, max_norm
from .refinement import RefinementMode, _pipeline_for, run_pipeline, split

__all__ = [
    "BATCH_STREAM",
    "DESK_SIZE_CAP",
    "ExperimentConfig",
    "ModeSpec",
    "Uniform",
    "generate_batch",
    "generate_matrix",
    "parse_mode",
    "run_batched_experiment",
    "run_error_sweep",
]

_MASK64 = (1 << 64) - 1
BATCH_STREAM = 1 << 62
DESK_SIZE_CAP = 4096


@dataclass(frozen=True)
class Uniform:
    lo: float = -1.0
    hi: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi) and self.lo < self.hi):
            raise ConfigError(f"uniform distribution needs finite lo < hi, got {self.lo}, {self.hi}")

    @classmethod
    def parse(cls, text: str) -> Uniform:
        """Parse ``uniform:LO:HI``."""
        parts = text.split(":")
        if len(parts) != 3 or parts[0] != "uniform":
            raise ConfigError(f"distribution must look like uniform:LO:HI, got {text!r}")
        try:
            return cls(float(parts[1]), float(parts[2]))
        except ValueError as exc:
            raise ConfigError(f"bad distribution bounds in {text!r}") from exc

    def __str__(self) -> str:
        return f"uniform:{self.lo:g}:{self.hi:g}"

    def sample(self, gen: np.random.Generator, count: int) -> np.ndarray:
        lo, hi = np.float32(self.lo), np.float32(self.hi)
        u = gen.random(count, dtype=np.float32)
        x = lo + (hi - lo) * u
        # lo + (hi - lo) * u can round up to hi for some bounds
        return np.where(x >= hi, np.nextafter(hi, lo), x).astype(np.float32)


def _generator(seed: int, stream_id: int) -> np.random.Generator:
    key = (int(stream_id) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def generate_matrix(n: int, distribution: Uniform, seed: int, stream_id: int,
                    cols: int | None = None) -> np.ndarray:
    """Deterministic n x cols (default square) float32 matrix."""
    cols = n if cols is None else cols
    if n < 1 or cols < 1:
        raise ConfigError("matrix dimensions must be >= 1")
    gen = _generator(seed, stream_id)
    return distribution.sample(gen, n * cols).reshape(n, cols)


def generate_batch(count: int, distribution: Uniform, seed: int, role: int) -> np.ndarray:
    """``count`` 16x16 float32 matrices, prefix-stable in ``count``."""
    gen = _generator(seed, BATCH_STREAM | role)
    return distribution.sample(gen, count * 256).reshape(count, 16, 16)


def _stream(n: int, trial: int, role: int) -> int:
    return (n << 20) | (trial << 4) | role


@dataclass(frozen=True)
class ModeSpec:
    accum: AccumMode = AccumMode.MIXED
    refinement: RefinementMode = RefinementMode.NONE

    def __post_init__(self):
        if self.refinement is not RefinementMode.NONE and self.accum is not AccumMode.MIXED:
            raise ConfigError(
                f"refinement {self.refinement.value} only applies to the mixed mode, "
                f"not {self.accum.value}"
            )

    @property
    def label(self) -> str:
        return f"{self.accum.value}:{self.refinement.value}"

    @property
    def stages(self) -> int:
        return self.refinement.stages

    def __str__(self) -> str:
        return self.label


def parse_mode(text: str) -> ModeSpec:
    """Parse ``ACCUM[:REFINEMENT]``, e.g. ``mixed:two-sided`` or ``kahan``."""
    accum, _, refine = text.strip().partition(":")
    try:
        accum_mode = AccumMode(accum)
        refinement = RefinementMode(refine or "none")
    except ValueError as exc:
        raise ConfigError(f"unknown mode {text!r}") from exc
    return ModeSpec(accum_mode, refinement)


@dataclass
class ExperimentConfig:
    sizes: list[int] = field(default_factory=lambda: [256, 512, 1024, 2048, 4096])
    modes: list[ModeSpec] = field(default_factory=lambda: [ModeSpec()])
    distribution: Uniform = field(default_factory=Uniform)
    trials: int = 20
    seed: int = 0
    alpha: float = 1.0
    beta: float = 1.0
    random_c: bool = False
    batch_sizes: list[int] | None = None
    output: str = "csv"
    output_path: str | None = None
    workers: int = 1
    allow_large: bool = False

    def validate(self) -> None:
        if not self.sizes or min(self.sizes) < 1:
            raise ConfigError("sizes must be a non-empty list of positive integers")
        if max(self.sizes) > DESK_SIZE_CAP and not self.allow_large:
            raise ConfigError(f"sizes above {DESK_SIZE_CAP} are opt-in (allow_large)")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.modes:
            raise ConfigError("at least one mode is required")
        if self.output not in ("csv", "json"):
            raise ConfigError(f"output must be csv or json, got {self.output!r}")
        if self.batch_sizes is not None and (not self.batch_sizes or min(self.batch_sizes) < 1):
            raise ConfigError("batch sizes must be positive")
        if not (0 <= self.seed <= _MASK64):
            raise ConfigError("seed must fit in 64 bits")
        GemmConfig(alpha=self.alpha, beta=self.beta, workers=self.workers)


def _run_mode(spec: ModeSpec, a, b, c, parts, gcfg: GemmConfig):
    """Return (result, seconds); conversion to half is done beforehand and not timed."""
    if spec.accum is AccumMode.FP32_ORACLE:
        t0 = time.perf_counter()
        out = gemm_oracle(a, b, c, gcfg)
        return out, time.perf_counter() - t0
    if spec.accum is AccumMode.FP16_ACCUM:
        a_h, b_h = parts["a"], parts["b"]
        c_h = None if c is None else round_matrix(c)
        t0 = time.perf_counter()
        out = gemm_half_accum(a_h, b_h, c_h, gcfg)
        return widen_array(out), time.perf_counter() - t0
    if spec.accum is AccumMode.FP32_KAHAN:
        t0 = time.perf_counter()
        out = gemm_kahan(parts["a"], parts["b"], c, gcfg)
        return out, time.perf_counter() - t0
    if spec.refinement is RefinementMode.NONE:
        t0 = time.perf_counter()
        out = gemm_mixed(parts["a"], parts["b"], c, gcfg)
        return out, time.perf_counter() - t0
    stages = _pipeline_for(spec.refinement, parts["a_split"], parts["b_split"])
    t0 = time.perf_counter()
    out = run_pipeline(stages, c, gcfg.beta)
    return out, time.perf_counter() - t0


def run_error_sweep(cfg: ExperimentConfig, progress=None) -> list[ErrorReport]:
    """Max-norm error of every mode against the single-precision reference.

    For each size and trial, fresh A and B (and C with ``random_c``) are
    generated and the reference is computed once; reports come back ordered
    by (size, mode, trial).
    """
    cfg.validate()
    gcfg = GemmConfig(alpha=cfg.alpha, beta=cfg.beta, workers=cfg.workers)
    rows = []
    refined = any(m.refinement is not RefinementMode.NONE for m in cfg.modes)
    for size_idx, n in enumerate(cfg.sizes):
        for trial in range(cfg.trials):
            a = generate_matrix(n, cfg.distribution, cfg.seed, _stream(n, trial, 0))
            b = generate_matrix(n, cfg.distribution, cfg.seed, _stream(n, trial, 1))
            c = (generate_matrix(n, cfg.distribution, cfg.seed, _stream(n, trial, 2))
                 if cfg.random_c else None)
            ref = gemm_oracle(a, b, c, gcfg)
            halves = {"a": round_matrix(a), "b": round_matrix(b)}
            if refined:
                # alpha is folded into A before the split; the pipeline runs with alpha = 1
                a_in = a if cfg.alpha == 1 else np.float32(cfg.alpha) * a
                halves["a_split"], halves["b_split"] = split(a_in), split(b)
            for mode_idx, spec in enumerate(cfg.modes):
                out, seconds = _run_mode(spec, a, b, c, halves, gcfg)
                err = max_norm(error_matrix(out, ref))
                flops = flops_gemm(n, n, n, spec.stages,
                                   beta_nonzero=c is not None and cfg.beta != 0)
                report = ErrorReport(
                    n=n, mode=spec.label, trial=trial, max_norm_error=err,
                    flops=flops, wall_time_s=seconds, seed=cfg.seed,
                )
                rows.append((size_idx, mode_idx, trial, report))
                if progress is not None:
                    progress(report)
    rows.sort(key=lambda r: r[:3])
    return [r[3] for r in rows]


def run_batched_experiment(cfg: ExperimentConfig, progress=None) -> list[ErrorReport]:
    """Worst-case error of batched 16x16 mixed GEMMs, one report per batch size.

    Every triple is checked against the single-precision reference.  The
    timing is repeated ``cfg.trials`` times on the same data and the
    arithmetic mean is reported.
    """
    cfg.validate()
    if not cfg.batch_sizes:
        raise ConfigError("batched experiment needs batch_sizes")
    gcfg = GemmConfig(alpha=cfg.alpha, beta=cfg.beta, workers=cfg.workers)
    largest = max(cfg.batch_sizes)
    a_all = generate_batch(largest, cfg.distribution, cfg.seed, 0)
    b_all = generate_batch(largest, cfg.distribution, cfg.seed, 1)
    c_all = (generate_batch(largest, cfg.distribution, cfg.seed, 2) if cfg.random_c
             else np.zeros_like(a_all))
    reports = []
    for size in cfg.batch_sizes:
        a, b, c = a_all[:size], b_all[:size], c_all[:size]
        ref = gemm_batched_oracle(a, b, c, gcfg)
        a_h, b_h = to_half(a), to_half(b)
        times = []
        for _ in range(cfg.trials):
            t0 = time.perf_counter()
            out = gemm_batched(a_h, b_h, c, gcfg)
            times.append(time.perf_counter() - t0)
        err = max_norm(error_matrix(out, ref))
        flops = size * flops_gemm(16, 16, 16, 1, beta_nonzero=cfg.random_c and cfg.beta != 0)
        report = ErrorReport(
            n=16, mode=f"batched:{size}", trial=0, max_norm_error=err,
            flops=flops, wall_time_s=float(np.mean(times)), seed=cfg.seed,
        )
        reports.append(report)
        if progress is not None:
            progress(report)
    return reports
