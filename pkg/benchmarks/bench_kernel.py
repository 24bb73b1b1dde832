"""Timing comparison of the compiled and pure-Python stepper kernels.

Runs the same section-to-section passage with both backends and reports
median wall time, accepted steps, and the speedup. The two kernels take
identical step sequences, so the step counts must agree exactly.

Usage: python benchmarks/bench_kernel.py [--eps 0.005] [--repeat 7]
"""
import argparse
import os
import statistics
import time

from turnpike.integrate import compiled_kernel_available, dulac_map_numeric
from turnpike.model import ddr_model


def time_backend(backend: str, eps: float, repeat: int):
    os.environ["TURNPIKE_KERNEL"] = backend
    model = ddr_model()
    dulac_map_numeric(model, 1.016, eps)  # warm up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        x_out, diag = dulac_map_numeric(model, 1.016, eps)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), x_out, diag.n_steps


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", type=float, default=0.005)
    ap.add_argument("--repeat", type=int, default=7)
    args = ap.parse_args()

    t_py, x_py, n_py = time_backend("python", args.eps, args.repeat)
    print(f"python   : {t_py * 1e3:9.3f} ms  ({n_py} steps, x_out = {x_py:.15g})")
    if not compiled_kernel_available():
        print("compiled : not built")
        return 0
    t_c, x_c, n_c = time_backend("compiled", args.eps, args.repeat)
    print(f"compiled : {t_c * 1e3:9.3f} ms  ({n_c} steps, x_out = {x_c:.15g})")
    print(f"speedup  : {t_py / t_c:.1f}x")
    if n_py != n_c:
        print("WARNING: backends disagree on the step sequence")
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
