"""Signal and interference levels of ZF, RZF, TR and ITR for 2 and 4 antennas."""

import argparse

from trdma.experiments import ExperimentConfig, compare_precoders


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=10_000)
    ap.add_argument("--tau", type=float, default=5.0)
    ap.add_argument("--seed", type=int, default=11)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = ExperimentConfig(
        num_users=2, num_antennas=[2, 4], decay_times=[args.tau], rate_backoffs=[1],
        precoders=["zf", "rzf:0.1", "rzf:0.3", "tr", "itr:10", "itr:20"],
        sigma=0.1, trials=args.trials, seed=args.seed, workers=args.workers,
    )
    table = compare_precoders(cfg)
    print(table.format())
    print()
    for (title, M), e in sorted(table.wraparound.items()):
        print(f"{title}, M={M}: mean linear wrap-around energy per user {e:.3e}")


if __name__ == "__main__":
    main()
