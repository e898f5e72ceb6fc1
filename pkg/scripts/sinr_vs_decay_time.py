"""Mean SINR after 200 ITR iterations against the decay time, for D = 1 and 2."""

import argparse

from trdma.experiments import ExperimentConfig, run_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--taus", type=float, nargs="+", default=[2.0, 5.0, 10.0, 20.0])
    ap.add_argument("--iterations", type=int, default=200)
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=77)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    name = f"itr:{args.iterations}"
    cfg = ExperimentConfig(
        num_users=2, num_antennas=[8], decay_times=args.taus, rate_backoffs=[1, 2], precoders=["tr", name],
        normalize_realization=True, sigma=0.1, trials=args.trials, seed=args.seed, workers=args.workers,
        curve=False,
    )
    res = run_sweep(cfg)
    print("tau,L,D,tr_sinr_db,itr_sinr_db")
    for tau in args.taus:
        for D in (1, 2):
            tr = res.aggregate("tr", M=8, tau=tau, D=D)
            it = res.aggregate(name, M=8, tau=tau, D=D, iterations=args.iterations)
            print(f"{tau:g},{tr['L']},{D},{tr['sinr_db']:.3f},{it['sinr_db']:.3f}")


if __name__ == "__main__":
    main()
