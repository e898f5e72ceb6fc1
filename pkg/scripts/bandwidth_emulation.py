"""SINR gain of ITR over TR when the bandwidth, and with it the tap count, grows.

Synthetic emulation: the physical decay time is held fixed, so the decay time
in taps scales with the bandwidth.  No hardware effects are modelled.
"""

import argparse

from trdma.experiments import ExperimentConfig, bandwidth_emulation


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--bandwidths", type=float, nargs="+", default=[20.0, 50.0, 100.0])
    ap.add_argument("--decay-ns", type=float, default=100.0)
    ap.add_argument("--iterations", type=int, nargs="+", default=[20, 50, 100])
    ap.add_argument("--trials", type=int, default=200)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    cfg = ExperimentConfig(num_users=2, num_antennas=[8], rate_backoffs=[1], sigma=0.1,
                           trials=args.trials, seed=args.seed)
    rows = bandwidth_emulation(cfg, args.bandwidths, args.decay_ns, args.iterations)
    print("bandwidth_mhz,tau,L,iterations,tr_sinr_db,itr_sinr_db,gain_db")
    for r in rows:
        print(f"{r['bandwidth_mhz']:g},{r['tau']:g},{r['L']},{r['iterations']},"
              f"{r['tr_sinr_db']:.3f},{r['itr_sinr_db']:.3f},{r['gain_db']:.3f}")


if __name__ == "__main__":
    main()
