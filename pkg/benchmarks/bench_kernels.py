"""Time the compiled batch-rate kernel against the numpy fallback.

Usage::

    python3 benchmarks/bench_kernels.py [--trials 1000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from ftn_mccr import kernels
from ftn_mccr.ensemble import TrialConfig, _draw_sigma_h2, default_cache


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    backends = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])
    if len(backends) == 1:
        print("compiled kernel not built; timing the numpy fallback only")

    print(f"{'N':>6} {'K=M':>4} {'mode':>14} " + " ".join(f"{b + ' ms':>11}" for b in backends) + f" {'speedup':>8} {'max|dc|':>9}")
    for N in (100, 500, 2000):
        for KM in (2, 4):
            cfg = TrialConfig(K=KM, M=KM, N=N, trials=args.trials)
            sp, _ = default_cache().get(N, cfg.delta, cfg.beta, cfg.L)
            sh2 = _draw_sigma_h2(cfg, range(cfg.trials))
            for mode in ("optimal", "uniform", "uniform_power"):
                call = {
                    b: (lambda b=b: kernels.batch_rates(sh2, sp**2, N, cfg.power, cfg.noise_var, cfg.delta, cfg.T, mode, backend=b))
                    for b in backends
                }
                ms = [1e3 * best_of(call[b], args.repeat) for b in backends]
                if len(backends) == 2:
                    diff = float(np.max(np.abs(call["python"]()[0] - call["cython"]()[0])))
                    speed = f"{ms[0] / ms[1]:8.1f}"
                else:
                    diff, speed = 0.0, f"{'-':>8}"
                print(f"{N:>6} {KM:>4} {mode:>14} " + " ".join(f"{t:11.3f}" for t in ms) + f" {speed} {diff:9.1e}")


if __name__ == "__main__":
    main()
