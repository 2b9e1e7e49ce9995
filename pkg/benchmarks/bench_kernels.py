"""Micro and end-to-end benchmarks of the compiled kernels vs the fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Kernel timings run in-process against both backends; the end-to-end solver
comparison re-runs the standard circle instance in subprocesses, once per
backend (the backend is fixed at import time).
"""
import argparse
import json
import os
import subprocess
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from airsched import _kernels


def bench(fn, *args, repeat):
    fn(*args)                      # warm up
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def feasible(rng, n, m, t):
    a = rng.uniform(size=(n, m, t))
    for s in range(t):
        slot = a[:, :, s]
        slot /= max(slot.sum(axis=0).max(), slot.sum(axis=1).max(), 1.0)
    return np.ascontiguousarray(a)


def kernel_benchmarks(repeat):
    backends = {name: _kernels.get_backend(name) for name in _kernels.available_backends()}
    if "compiled" not in backends:
        print("compiled extension not available; only the fallback is timed")
    rng = np.random.default_rng(0)
    shapes = [(4, 2, 10), (12, 4, 40)]
    rows = []
    for n, m, t in shapes:
        a = feasible(rng, n, m, t)
        pr = np.ascontiguousarray(rng.uniform(1e-4, 1e-2, size=(n, m, t)))
        w = np.ascontiguousarray(rng.normal(size=(n, m, t)))
        d0 = np.ascontiguousarray(rng.uniform(0.5, 2.0, size=n * m * t))
        ed = np.ascontiguousarray(rng.uniform(-0.4, 1.0, size=n * m * t) * d0)
        cases = [
            ("interference", lambda b: b.interference(a, pr)),
            ("rates", lambda b: b.rates(a, pr, 1e-9)),
            ("concave_grad", lambda b: b.concave_grad(a, pr, 1e-9)),
            ("tangent_row_slopes", lambda b: b.tangent_row_slopes(a, pr, 1e-9)),
            ("fw_line_search", lambda b: b.fw_line_search(d0, ed, -1.0)),
            ("matching_batch", lambda b: b.max_weight_matching_batch(w)),
        ]
        for name, call in cases:
            timings = {bname: bench(lambda: call(b), repeat=repeat)
                       for bname, b in backends.items()}
            rows.append(((n, m, t), name, timings))
    print(f"\n{'shape':>12} {'kernel':<20} " +
          " ".join(f"{b:>12}" for b in backends) +
          ("  speedup" if len(backends) == 2 else ""))
    for shape, name, timings in rows:
        cells = " ".join(f"{timings[b] * 1e6:>10.1f}us" for b in backends)
        extra = ""
        if len(timings) == 2:
            extra = f"  {timings['python'] / timings['compiled']:>6.1f}x"
        print(f"{str(shape):>12} {name:<20} {cells}{extra}")


def end_to_end():
    from airsched.config import default_config

    with tempfile.TemporaryDirectory() as tmp:
        cfg_path = Path(tmp) / "config.json"
        cfg_path.write_text(json.dumps(default_config()))
        timings = {}
        for backend, env_value in (("compiled", "0"), ("python", "1")):
            if backend == "compiled" and "compiled" not in _kernels.available_backends():
                continue
            env = dict(os.environ, AIRSCHED_PURE_PYTHON=env_value)
            start = time.perf_counter()
            subprocess.run(
                [sys.executable, "-m", "airsched.cli", "solve",
                 "--config", str(cfg_path), "--out", str(Path(tmp) / backend)],
                check=True, env=env, capture_output=True)
            timings[backend] = time.perf_counter() - start
        print("\nend-to-end solve (standard circle instance, subprocess incl. startup):")
        for backend, seconds in timings.items():
            print(f"  {backend:>9}: {seconds:.2f}s")
        if len(timings) == 2:
            print(f"  speedup: {timings['python'] / timings['compiled']:.2f}x")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=200)
    parser.add_argument("--skip-end-to-end", action="store_true")
    args = parser.parse_args()
    print(f"active backend: {_kernels.BACKEND}; available: {_kernels.available_backends()}")
    kernel_benchmarks(args.repeat)
    if not args.skip_end_to_end:
        end_to_end()


if __name__ == "__main__":
    main()
