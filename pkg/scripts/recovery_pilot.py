"""Pilot run for the recovery protocol constants.

Sweeps n and reports, over seeded replicates, the distribution of the TV
distance from the recovered component to the drawn one and to the other one.
The thresholds in configs/recover_two_component.json were set from this.

    python3 scripts/recovery_pilot.py [--replicates 50]
"""
import argparse

import numpy as np

from wexch.core import Dist, RandomSource, total_variation
from wexch.recovery import recover_component
from wexch.sampler import MixtureSpec, sample_mixture
from wexch.weights import BoundedRatio


def main(reps: int) -> None:
    lam = BoundedRatio(((1.0, 0.5, 2.0), (2.0, 1.0, 0.5), (0.5, 2.0, 1.0)))
    comps = (Dist.normalize([0.6, 0.3, 0.1]), Dist.normalize([0.1, 0.3, 0.6]))
    mu = MixtureSpec(comps, (0.5, 0.5))
    print(f"{'n':>7} {'drawn q50':>9} {'drawn q95':>9} {'drawn max':>9} {'other min':>9}")
    for n in (1_000, 10_000, 100_000):
        drawn, other = [], []
        for s in range(reps):
            run = sample_mixture(mu, lam, n, RandomSource(5000 + s))
            rc = recover_component(run.symbols, lam)
            drawn.append(total_variation(rc.tilde_star, comps[run.drawn_component]))
            other.append(total_variation(rc.tilde_star, comps[1 - run.drawn_component]))
        d = np.array(drawn)
        print(f"{n:>7} {np.median(d):>9.4f} {np.quantile(d, 0.95):>9.4f} {d.max():>9.4f} {min(other):>9.4f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--replicates", type=int, default=50)
    main(ap.parse_args().replicates)
