"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_backends.py --sizes 128,256,512 --repeats 3

Each kernel runs on the same inputs under both backends; the results are
checked for bit equality before the timings are reported.
"""

import argparse
import csv
import sys
import time

import numpy as np

from tcemu import _backend

KERNELS = ("fold_fma", "fold_fma_exact", "fold_kahan", "fold_half_accum", "batched16", "round_half")


def _inputs(n, rng):
    # half-representable data so every kernel's input contract holds
    a = rng.uniform(-1, 1, (n, n)).astype(np.float16).astype(np.float32)
    b = rng.uniform(-1, 1, (n, n)).astype(np.float16).astype(np.float32)
    c = rng.uniform(-1, 1, (n, n)).astype(np.float32)
    return a, b, c


def _call(mod, kernel, a, b, c):
    """Run one kernel; returns (seconds, result bytes, flops)."""
    n = a.shape[0]
    out = c.copy()
    t0 = time.perf_counter()
    if kernel == "fold_fma":
        mod.fold_fma(a, b, out)
    elif kernel == "fold_fma_exact":
        mod.fold_fma(a, b, out, exact_products=True)
    elif kernel == "fold_kahan":
        mod.fold_kahan(a, b, out)
    elif kernel == "fold_half_accum":
        mod.fold_half_accum(a, b, out)
    elif kernel == "batched16":
        count = max(1, n * n // 256)
        ab = np.ascontiguousarray(a.reshape(-1)[: count * 256].reshape(count, 16, 16))
        bb = np.ascontiguousarray(b.reshape(-1)[: count * 256].reshape(count, 16, 16))
        out = c.reshape(-1)[: count * 256].reshape(count, 16, 16).copy()
        t0 = time.perf_counter()
        mod.fold_batched16(ab, bb, out, exact_products=True)
        return time.perf_counter() - t0, out.tobytes(), count * 2 * 16**3
    elif kernel == "round_half":
        out = mod.round_half_bits(c)
        return time.perf_counter() - t0, out.tobytes(), n * n
    return time.perf_counter() - t0, out.tobytes(), 2 * n**3


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="64,128,256")
    parser.add_argument("--kernels", default=",".join(KERNELS))
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--csv", help="also write rows to this CSV file")
    args = parser.parse_args(argv)

    backends = {name: _backend.load(name) for name in _backend.available()}
    if "compiled" not in backends:
        print("compiled extension not built; only the fallback will be timed", file=sys.stderr)
    rng = np.random.default_rng(args.seed)
    rows = []
    print(f"{'kernel':<16} {'n':>5} {'backend':<9} {'best s':>10} {'rate/s':>10} {'speedup':>8}")
    for n in (int(s) for s in args.sizes.split(",")):
        a, b, c = _inputs(n, rng)
        for kernel in args.kernels.split(","):
            best, results = {}, {}
            for name, mod in backends.items():
                runs = [_call(mod, kernel, a, b, c) for _ in range(args.repeats)]
                best[name] = min(r[0] for r in runs)
                results[name] = runs[0][1]
                work = runs[0][2]
            if len(set(results.values())) != 1:
                print(f"MISMATCH: {kernel} n={n} differs between backends", file=sys.stderr)
                return 1
            ref = best.get("python")
            for name, secs in best.items():
                speedup = ref / secs if ref and secs > 0 else float("nan")
                rate = work / secs if secs > 0 else float("inf")
                print(f"{kernel:<16} {n:>5} {name:<9} {secs:>10.4g} {rate:>10.3g} {speedup:>8.1f}")
                rows.append(dict(kernel=kernel, n=n, backend=name, best_s=secs, rate=rate,
                                 speedup_vs_python=speedup))
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
