"""Calibration study for the joint-rank selection rule.

Counts selected ranks over repeated draws for three regimes: duplicated
blocks (every signal direction shared), independent Gaussian blocks (nothing
shared), and a planted model with a known joint rank.

    python scripts/rank_null_calibration.py --runs 50
"""

import argparse
import collections

import numpy as np

from embedjive.rank_select import select_joint_rank
from embedjive.synthetic import make_planted


def tally(label, decisions):
    counts = collections.Counter(d.joint_rank for d in decisions)
    taus = [d.tau for d in decisions]
    pretty = ", ".join(f"r={r}: {c}" for r, c in sorted(counts.items()))
    print(f"{label:<22} {pretty}   (tau mean {np.mean(taus):.3f})")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--runs", type=int, default=50)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--resamples", type=int, default=100)
    parser.add_argument("--mode", choices=("wedin", "null"), default="null")
    args = parser.parse_args()

    duplicated = []
    for run in range(args.runs):
        rng = np.random.default_rng(1000 + run)
        block = rng.standard_normal((12, args.n))
        duplicated.append(
            select_joint_rank([block, block.copy()], (5, 5), resamples=args.resamples,
                              seed=2000 + run, mode=args.mode)
        )
    tally("duplicated blocks", duplicated)

    independent = []
    for run in range(args.runs):
        rng = np.random.default_rng(3000 + run)
        blocks = [rng.standard_normal((20, args.n)), rng.standard_normal((20, args.n))]
        independent.append(
            select_joint_rank(blocks, (5, 5), resamples=args.resamples, seed=4000 + run, mode=args.mode)
        )
    tally("independent blocks", independent)

    planted = []
    for run in range(args.runs):
        model = make_planted((15, 18), args.n, 2, (2, 2), joint_scales=(2.0, 1.8),
                             individual_scales=((1.0, 0.9), (1.0, 0.9)), noise_sigma=0.01, seed=5000 + run)
        planted.append(
            select_joint_rank(model.blocks, (4, 4), resamples=args.resamples, seed=6000 + run, mode=args.mode)
        )
    tally("planted joint rank 2", planted)


if __name__ == "__main__":
    main()
