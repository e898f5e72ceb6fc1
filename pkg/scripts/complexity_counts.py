"""Multiplication counts of ITR (direct and FFT) and RZF over the number of users."""

import argparse

from trdma.cli import complexity_rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--M", type=int, default=8)
    ap.add_argument("--L", type=int, default=64)
    ap.add_argument("--iterations", type=int, default=100)
    ap.add_argument("--max-users", type=int, default=1024)
    args = ap.parse_args()

    Ns = [2**k for k in range(args.max_users.bit_length()) if 2**k <= args.max_users]
    rows = complexity_rows([args.M], Ns, [args.L], [args.iterations])
    print("N,itr_direct,itr_fft,rzf,rzf_over_itr_fft")
    for r in rows:
        print(f"{r['N']},{r['itr-direct']},{r['itr-fft']},{r['rzf']},{r['rzf/itr-fft']:.4f}")


if __name__ == "__main__":
    main()
