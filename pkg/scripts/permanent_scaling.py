"""Timing and accuracy of the exact permanent and conditional-weight paths.

Prints, per n, the method chosen by the auto path, its amplification
estimate, wall time, and the error against log(n!) on the all-ones matrix.

    python3 scripts/permanent_scaling.py [--max-n 18]
"""
import argparse
import math
import time

import numpy as np

from wexch.permanent import MAX_WEIGHT_N, conditional_weights, permanent_info
from wexch.weights import BoundedRatio


def main(max_n: int) -> None:
    rng = np.random.default_rng(0)
    print(f"{'n':>3} {'method':>8} {'amp':>9} {'sec':>7} {'ones err':>9} {'weights sec':>11}")
    lam = BoundedRatio(((1.0, 0.3, 4.0), (2.0, 1.0, 0.25), (0.5, 3.0, 1.0)))
    for n in range(2, max_n + 1):
        L = rng.uniform(-3, 0, (n, n))
        t = time.perf_counter()
        info = permanent_info(L)
        dt = time.perf_counter() - t
        err = abs(permanent_info(np.zeros((n, n))).log_value - math.lgamma(n + 1))
        wdt = float("nan")
        if n <= MAX_WEIGHT_N:
            t = time.perf_counter()
            conditional_weights(lam, rng.integers(0, 3, n), 1)
            wdt = time.perf_counter() - t
        print(f"{n:>3} {info.method:>8} {info.amplification:>9.2e} {dt:>7.3f} {err:>9.1e} {wdt:>11.3f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--max-n", type=int, default=18)
    main(ap.parse_args().max_n)
