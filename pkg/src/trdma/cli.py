"""Command-line entry point: ``trdma <subcommand> ...``.

Exit codes: 0 success, 1 configuration error, 2 too many numerical failures,
3 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import channel as chmod
from .errors import FileFormatError, NumericalError, ParameterError, TrdmaError
from .experiments import (
    ExperimentConfig,
    bandwidth_emulation,
    compare_precoders,
    emit,
    load_config,
    run_sweep,
)
from .itr import ItrConfig, itr_precode_all
from .linksim import equivalent_channel
from .metrics import CSV_COLUMNS, complexity, compute_metrics
from .rzf import RzfConfig, rzf_precode
from .trcore import PrecodeFilter, tr_precode

log = logging.getLogger("trdma")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def _common(p):
    p.add_argument("--config", type=Path, help="JSON experiment config; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--workers", type=int)


def _int_list(text):
    return [int(v) for v in text.split(",") if v]


def _float_list(text):
    return [float(v) for v in text.split(",") if v]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="trdma", description="TRDMA link-level simulation (TR / ITR / ZF / RZF)")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-channel", help="draw one channel realization and save it")
    _common(p)
    p.add_argument("--users", type=int, default=2)
    p.add_argument("--antennas", type=int, default=8)
    p.add_argument("--taps", type=int)
    p.add_argument("--tau", type=float, default=5.0)
    p.add_argument("--no-ensemble-norm", action="store_true")
    p.add_argument("--unit-energy", action="store_true", help="scale each user channel to unit energy")

    for name, help_ in (("precode", "compute precoding filters for a saved channel"),
                        ("evaluate", "metrics of a precoder on a saved channel")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("--channel", type=Path, required=True)
        p.add_argument("--precoder", choices=("tr", "itr", "zf", "rzf"), default="itr")
        p.add_argument("--D", dest="rate_backoff", type=int, default=1)
        p.add_argument("--n-max", type=int, default=400)
        p.add_argument("--eps", type=float, default=1e-3)
        p.add_argument("--alpha", type=float, default=0.0)
        p.add_argument("--fft-size", type=int)
        if name == "precode":
            p.add_argument("--trace", type=Path, help="write ITR iteration records as JSON lines")
        else:
            p.add_argument("--filter", type=Path, help="filter file from `precode` (else computed)")
            p.add_argument("--sigma", type=float, default=0.1)
            p.add_argument("--linear", action="store_true", help="evaluate ZF/RZF by linear convolution")

    p = sub.add_parser("sweep", help="Monte Carlo sweep over antennas, decay times and back-offs")
    _common(p)
    p.add_argument("--mode", choices=("standard", "bandwidth"), default="standard")
    p.add_argument("--bandwidths", type=_float_list, default=[20.0, 50.0, 100.0],
                   help="MHz values for --mode bandwidth (emulation)")
    p.add_argument("--decay-ns", type=float, default=100.0)
    p.add_argument("--iterations", type=_int_list, default=[20, 50, 100])

    p = sub.add_parser("compare", help="signal / interference table across precoders")
    _common(p)

    p = sub.add_parser("complexity", help="scalar multiplication counts of ITR and RZF")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json", "table"), default="table")
    p.add_argument("--M", type=_int_list, default=[8])
    p.add_argument("--N", type=_int_list, default=[1, 2, 4, 8, 16, 32, 64, 128, 256, 512])
    p.add_argument("--L", type=_int_list, default=[64])
    p.add_argument("--iterations", type=_int_list, default=[100])
    return ap


def _config(args, **defaults) -> ExperimentConfig:
    overrides = dict(seed=args.seed, trials=args.trials, workers=args.workers,
                     format=args.format, out=str(args.out) if args.out else None)
    if args.config is not None:
        return load_config(args.config, **overrides)
    defaults.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**defaults)


def _write(text, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _csv_text(rows, fieldnames):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=fieldnames, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _load_filter(path) -> PrecodeFilter:
    with np.load(path) as z:
        return PrecodeFilter(z["g"], int(z["center"]), int(z["rate_backoff"]), str(z["label"]))


def _precode(args, ch):
    if args.precoder == "tr":
        return tr_precode(ch, args.rate_backoff), None
    if args.precoder in ("zf", "rzf"):
        alpha = 0.0 if args.precoder == "zf" else args.alpha
        return rzf_precode(ch, RzfConfig(alpha, args.fft_size, args.rate_backoff)), None
    return itr_precode_all(ch, ItrConfig(args.n_max, args.eps, args.rate_backoff))


def cmd_gen_channel(args):
    params = chmod.ChannelParams(
        num_users=args.users, num_antennas=args.antennas, num_taps=args.taps,
        decay_time=args.tau, normalize_ensemble=not args.no_ensemble_norm,
        normalize_realization=args.unit_energy, seed=args.seed or 0,
    )
    if args.out is None:
        raise CliError("gen-channel needs --out", EXIT_CONFIG)
    chmod.save(chmod.generate(params), args.out)


def cmd_precode(args):
    ch = chmod.load(args.channel)
    f, traces = _precode(args, ch)
    if args.out is None:
        raise CliError("precode needs --out", EXIT_CONFIG)
    with open(args.out, "wb") as fh:
        np.savez(fh, g=f.g, center=f.center, rate_backoff=f.rate_backoff, label=f.label)
    if traces and args.trace:
        with open(args.trace, "w") as fh:
            for t in traces:
                t.to_jsonl(fh)


def cmd_evaluate(args):
    ch = chmod.load(args.channel)
    f = _load_filter(args.filter) if args.filter else _precode(args, ch)[0]
    circular = f.label in ("zf", "rzf") and not args.linear
    rep = compute_metrics(equivalent_channel(f, ch, circular=circular), args.sigma)
    p = ch.params
    iters = args.n_max if f.label == "itr" else 0
    meta = dict(precoder=f.label, M=ch.num_antennas, N=ch.num_users, L=ch.num_taps, tau=p.decay_time,
                D=f.rate_backoff, sigma=args.sigma, iterations=iters, seed=p.seed)
    rep = dataclasses.replace(rep, meta=meta)
    if (args.format or "csv") == "json":
        _write(json.dumps(rep.to_dict(), indent=1) + "\n", args.out)
    else:
        _write(_csv_text(rep.rows(), CSV_COLUMNS), args.out)


def _check_failures(res):
    cfg = res.config
    total = max(1, len(res.rows) + res.skipped)
    if res.skipped:
        log.warning("skipped %d precoder runs after numerical failures", res.skipped)
    if res.skipped / total > cfg.max_failure_fraction:
        raise CliError(f"{res.skipped} numerical failures exceed the allowed fraction", EXIT_NUMERIC)


def cmd_sweep(args):
    cfg = _config(args)
    if args.mode == "bandwidth":
        rows = bandwidth_emulation(cfg, args.bandwidths, args.decay_ns, args.iterations)
        if cfg.format == "json":
            _write(json.dumps({"mode": "bandwidth-emulation", "rows": rows}, indent=1) + "\n", cfg.out)
        else:
            _write(_csv_text(rows, list(rows[0])), cfg.out)
        return
    res = run_sweep(cfg)
    _write(emit(res, cfg.format), cfg.out)
    _check_failures(res)


def cmd_compare(args):
    cfg = _config(args, num_antennas=[2, 4], precoders=["zf", "rzf:0.1", "rzf:0.3", "tr", "itr:10", "itr:20"],
                  trials=1000)
    table = compare_precoders(cfg)
    print(table.format())
    for (title, M), e in sorted(table.wraparound.items()):
        print(f"# {title}, M={M}: linear-convolution wrap-around energy per user {e:.3e}")
    if cfg.out is not None:
        emit(table.result, cfg.format, cfg.out)
    _check_failures(table.result)


def complexity_rows(Ms, Ns, Ls, iterations):
    rows = []
    for M in Ms:
        for N in Ns:
            for L in Ls:
                for n in iterations:
                    row = dict(M=M, N=N, L=L, iterations=n)
                    for scheme in ("itr-direct", "itr-fft", "rzf"):
                        row[scheme] = complexity(scheme, M, N, L, n).multiplications
                    row["rzf/itr-fft"] = row["rzf"] / row["itr-fft"]
                    rows.append(row)
    return rows


def cmd_complexity(args):
    rows = complexity_rows(args.M, args.N, args.L, args.iterations)
    if args.format == "json":
        _write(json.dumps(rows, indent=1) + "\n", args.out)
        return
    if args.format == "csv":
        _write(_csv_text(rows, list(rows[0])), args.out)
        return
    buf = io.StringIO()
    buf.write(f"{'M':>4} {'N':>4} {'L':>6} {'n':>6} {'ITR direct':>14} {'ITR fft':>14} {'RZF':>14} {'RZF/ITR':>8}\n")
    for r in rows:
        buf.write(f"{r['M']:>4} {r['N']:>4} {r['L']:>6} {r['iterations']:>6} {r['itr-direct']:>14} "
                  f"{r['itr-fft']:>14} {r['rzf']:>14} {r['rzf/itr-fft']:>8.2f}\n")
    _write(buf.getvalue(), args.out)


COMMANDS = {
    "gen-channel": cmd_gen_channel,
    "precode": cmd_precode,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "complexity": cmd_complexity,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except CliError as exc:
        log.error("%s", exc)
        return exc.code
    except (FileFormatError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_IO
    except NumericalError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    except (ParameterError, TrdmaError, TypeError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
