"""Command-line entry point: ``tcemu <subcommand> [options]``.

Every option can also be set through the environment as ``TCEMU_<OPTION>``
with dashes turned into underscores (``TCEMU_SEED=7``, ``TCEMU_BATCH_SIZES=1024,4096``).
Flags given on the command line win over the environment.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import _backend
from .errors import ConfigError, TcemuError
from .experiments import (
    ExperimentConfig,
    Uniform,
    parse_mode,
    run_batched_experiment,
    run_error_sweep,
)
from .gemm import AccumMode, GemmConfig, gemm, gemm_oracle
from .half import to_half, widen_array
from .matio import read_matrix, write_matrix, write_report
from .metrics import error_matrix, max_norm, summarize
from .refinement import RefinementMode, refined_gemm, split

ENV_PREFIX = "TCEMU_"


def _env(name, default):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _int_list(text):
    try:
        values = [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc
    if not values:
        raise argparse.ArgumentTypeError("list must not be empty")
    return values


def _mode_list(text):
    try:
        return [parse_mode(v) for v in str(text).split(",") if v.strip()]
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _dist(text):
    try:
        return Uniform.parse(text)
    except ConfigError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _add(parser, flag, **kw):
    name = flag.lstrip("-")
    if "default" in kw:
        # argparse runs ``type`` over string defaults, so env values get validated too
        kw["default"] = _env(name, kw["default"])
    parser.add_argument(flag, **kw)


def _experiment_flags(p, *, trials_default):
    _add(p, "--dist", type=_dist, default="uniform:-1:1", help="input distribution uniform:LO:HI")
    _add(p, "--trials", type=int, default=str(trials_default))
    _add(p, "--seed", type=int, default="0")
    _add(p, "--alpha", type=float, default="1.0")
    _add(p, "--beta", type=float, default="1.0")
    p.add_argument("--random-c", action="store_true",
                   default=_env("random-c", "0") not in ("0", "", "false"),
                   help="initialize C randomly instead of zero")
    _add(p, "--format", choices=["csv", "json"], default="csv")
    _add(p, "--out", default="-", help="report path (default stdout)")
    _add(p, "--workers", type=int, default="1")
    p.add_argument("--quiet", action="store_true", help="no progress on stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tcemu", description=__doc__.splitlines()[0])
    parser.add_argument("--backend-info", action="store_true", help="print kernel backend and exit")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("sweep", help="max-norm error vs matrix size and mode")
    _add(p, "--sizes", type=_int_list, default="256,512,1024,2048,4096")
    _add(p, "--modes", type=_mode_list, default="mixed:none,mixed:one-sided,mixed:two-sided",
         help="comma list of ACCUM[:REFINEMENT]; ACCUM in fp32-oracle, mixed, fp16-accum, kahan; "
              "REFINEMENT in none, one-sided, two-sided")
    p.add_argument("--allow-large", action="store_true", help="permit sizes above 4096")
    _experiment_flags(p, trials_default=20)

    p = sub.add_parser("batched", help="batched 16x16 GEMM error and timing")
    _add(p, "--batch-sizes", type=_int_list, default="1024,4096,16384,65536,262144")
    _experiment_flags(p, trials_default=5)

    p = sub.add_parser("split-demo", help="show the half/residual decomposition of a matrix file")
    p.add_argument("matrix")
    _add(p, "--limit", type=int, default="8", help="number of entries to print")
    p.add_argument("--half-out", help="write the half part to this matrix file")
    p.add_argument("--residual-out", help="write the rounded residual to this matrix file")

    p = sub.add_parser("gemm", help="one GEMM on matrix files")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--c", help="C matrix file (default zero)")
    _add(p, "--mode", default="mixed:none", help="ACCUM[:REFINEMENT]")
    _add(p, "--alpha", type=float, default="1.0")
    _add(p, "--beta", type=float, default="1.0")
    p.add_argument("--out", required=True, help="result matrix file (float32)")
    p.add_argument("--report-error", action="store_true",
                   help="print the max-norm error against the single-precision reference")

    p = sub.add_parser("convert", help="convert a matrix file between single and half")
    p.add_argument("src")
    p.add_argument("dst")
    p.add_argument("--to", choices=["half", "single"], required=True)
    return parser


def _progress(quiet):
    if quiet:
        return None

    def show(report):
        print(f"  n={report.n:<6} {report.mode:<22} trial={report.trial:<3} "
              f"err={report.max_norm_error:.6g} t={report.wall_time_s:.3f}s", file=sys.stderr)

    return show


def _config(args, **extra) -> ExperimentConfig:
    return ExperimentConfig(
        distribution=args.dist, trials=args.trials, seed=args.seed,
        alpha=args.alpha, beta=args.beta, random_c=args.random_c,
        output=args.format, output_path=args.out, workers=args.workers, **extra,
    )


def _print_summary(reports):
    groups = {}
    for r in reports:
        groups.setdefault((r.n, r.mode), []).append(r)
    print(f"{'n':>6} {'mode':<22} {'mean err':>12} {'max err':>12} {'hmean flop/s':>14}",
          file=sys.stderr)
    for (n, mode), rs in groups.items():
        errs = [r.max_norm_error for r in rs]
        timed = [(r.wall_time_s, r.flops) for r in rs if r.wall_time_s > 0]
        rate = summarize(timed).harmonic_mean_flops_per_s if timed else float("nan")
        print(f"{n:>6} {mode:<22} {np.mean(errs):>12.5g} {max(errs):>12.5g} {rate:>14.4g}",
              file=sys.stderr)


def cmd_sweep(args):
    cfg = _config(args, sizes=args.sizes, modes=args.modes, allow_large=args.allow_large)
    reports = run_error_sweep(cfg, progress=_progress(args.quiet))
    write_report(reports, cfg.output, cfg.output_path)
    if not args.quiet:
        _print_summary(reports)


def cmd_batched(args):
    cfg = _config(args, sizes=[16], batch_sizes=args.batch_sizes)
    reports = run_batched_experiment(cfg, progress=_progress(args.quiet))
    write_report(reports, cfg.output, cfg.output_path)
    if not args.quiet:
        _print_summary(reports)


def cmd_split_demo(args):
    m = read_matrix(args.matrix)
    if m.dtype != np.float32:
        raise ConfigError("split-demo needs a single-precision matrix file")
    pair = split(m)
    half = widen_array(pair.half_part).ravel()
    res = widen_array(pair.residual).ravel()
    flat = m.ravel()
    print(f"{'index':>7} {'single':>16} {'half':>16} {'residual':>16} {'recon err':>12}")
    for idx in range(min(args.limit, flat.size)):
        recon = float(half[idx]) + float(res[idx])
        print(f"{idx:>7} {flat[idx]:>16.9g} {half[idx]:>16.9g} {res[idx]:>16.9g} "
              f"{recon - float(flat[idx]):>12.3g}")
    recon_err = np.abs(pair.reconstruct() - flat.reshape(m.shape).astype(np.float64))
    print(f"entries: {flat.size}  max |residual|: {np.max(np.abs(pair.residual_f32)):.6g}  "
          f"max |reconstruction error|: {recon_err.max():.6g}  "
          f"zero residuals: {int(np.count_nonzero(pair.residual_f32 == 0))}")
    if args.half_out:
        write_matrix(pair.half_part, args.half_out)
    if args.residual_out:
        write_matrix(pair.residual, args.residual_out)


def cmd_gemm(args):
    spec = parse_mode(args.mode)
    a, b = read_matrix(args.a), read_matrix(args.b)
    c = read_matrix(args.c) if args.c else None
    a32 = widen_array(a) if a.dtype == np.float16 else a
    b32 = widen_array(b) if b.dtype == np.float16 else b
    c32 = None if c is None else (widen_array(c) if c.dtype == np.float16 else c)
    if spec.refinement is RefinementMode.NONE:
        cfg = GemmConfig(alpha=args.alpha, beta=args.beta, accum_mode=spec.accum)
        out = gemm(a32, b32, c32, cfg)
    else:
        out = refined_gemm(a32, b32, c32, spec.refinement, alpha=args.alpha, beta=args.beta)
    write_matrix(out, args.out)
    if args.report_error:
        ref = gemm_oracle(a32, b32, c32, GemmConfig(alpha=args.alpha, beta=args.beta,
                                                    accum_mode=AccumMode.FP32_ORACLE))
        print(f"max_norm_error={max_norm(error_matrix(out, ref))!r}")


def cmd_convert(args):
    m = read_matrix(args.src)
    if args.to == "half":
        out = m if m.dtype == np.float16 else to_half(m)
    else:
        out = widen_array(m) if m.dtype == np.float16 else m
    write_matrix(out, args.dst)


COMMANDS = {
    "sweep": cmd_sweep,
    "batched": cmd_batched,
    "split-demo": cmd_split_demo,
    "gemm": cmd_gemm,
    "convert": cmd_convert,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.backend_info:
        print(f"backend={_backend.NAME} simd={_backend.kernels.SIMD}")
        return 0
    if args.command is None:
        parser.print_help(sys.stderr)
        return 2
    try:
        COMMANDS[args.command](args)
    except (TcemuError, OSError) as exc:
        print(f"tcemu: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
