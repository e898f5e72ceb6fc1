"""Monte Carlo sweeps, precoder comparison tables and result files.

A trial is keyed by its index alone: every sweep point sharing the array and
channel sizes sees the same channel draws (common random numbers), and the
channel of trial ``t`` is fully determined by ``trial_seed(seed, t)``.
Trials are farmed out to a process pool and reassembled in key order, so
output does not depend on the worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelParams, default_tap_count, generate, trial_seed
from .errors import ParameterError, TrdmaError
from .itr import ItrConfig, combine_streams, itr_precode
from .linksim import equivalent_channel
from .metrics import CSV_COLUMNS, compute_metrics, db
from .rzf import RzfConfig, rzf_precode, wraparound_energy
from .trcore import finalize_energy, tr_precode

log = logging.getLogger(__name__)

__all__ = [
    "CompareTable",
    "ExperimentConfig",
    "PrecoderSpec",
    "SweepResult",
    "bandwidth_emulation",
    "compare_precoders",
    "default_checkpoints",
    "emit",
    "iterations_to_plateau",
    "load_config",
    "run_sweep",
]

INTERFERENCE_FLOOR_DB = -100.0


@dataclass(frozen=True)
class PrecoderSpec:
    """One precoder variant: ``kind`` is tr, itr, zf or rzf."""

    kind: str
    n_max: int = 400
    eps: float = 1e-3
    alpha: float = 0.0
    fft_size: int | None = None

    def __post_init__(self):
        if self.kind not in ("tr", "itr", "zf", "rzf"):
            raise ParameterError(f"unknown precoder {self.kind!r}")
        if self.kind == "zf" and self.alpha != 0:
            raise ParameterError("zf has alpha = 0; use rzf for regularization")
        ItrConfig(self.n_max, self.eps)
        RzfConfig(self.alpha, self.fft_size)

    @classmethod
    def parse(cls, value) -> "PrecoderSpec":
        """Accept a spec, a dict of fields, or shorthand like ``"itr:20"`` / ``"rzf:0.3"``."""
        if isinstance(value, PrecoderSpec):
            return value
        if isinstance(value, dict):
            return cls(**value)
        kind, _, arg = str(value).partition(":")
        kind = kind.strip().lower()
        if not arg:
            return cls(kind)
        try:
            if kind == "itr":
                return cls(kind, n_max=int(arg))
            if kind == "rzf":
                return cls(kind, alpha=float(arg))
        except ValueError:
            pass
        raise ParameterError(f"cannot parse precoder {value!r}")

    @property
    def name(self) -> str:
        if self.kind == "itr":
            return f"itr:{self.n_max}"
        if self.kind == "rzf":
            return f"rzf:{self.alpha:g}"
        return self.kind

    @property
    def title(self) -> str:
        if self.kind == "itr":
            return f"ITR ({self.n_max} iterations)"
        if self.kind == "rzf":
            return f"RZF (alpha={self.alpha:g})"
        return self.kind.upper()


def default_checkpoints(n_max: int, dense_until: int = 50, every: int = 10) -> list[int]:
    """Iteration counts at which ITR curves are sampled: every one up to 50, then every 10."""
    pts = set(range(0, min(n_max, dense_until) + 1))
    pts.update(range(dense_until, n_max + 1, every))
    pts.add(n_max)
    return sorted(pts)


@dataclass
class ExperimentConfig:
    num_users: int = 2
    num_antennas: list = field(default_factory=lambda: [8])
    num_taps: int | None = None
    decay_times: list = field(default_factory=lambda: [5.0])
    rate_backoffs: list = field(default_factory=lambda: [1])
    precoders: list = field(default_factory=lambda: ["tr", "itr"])
    normalize_ensemble: bool = True
    normalize_realization: bool = False
    sigma: float = 0.1
    trials: int = 100
    seed: int = 0
    workers: int = 1
    curve: bool = True
    checkpoint_dense_until: int = 50
    checkpoint_every: int = 10
    max_failure_fraction: float = 0.05
    out: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if isinstance(self.num_antennas, int):
            self.num_antennas = [self.num_antennas]
        if isinstance(self.decay_times, (int, float)):
            self.decay_times = [self.decay_times]
        if isinstance(self.rate_backoffs, int):
            self.rate_backoffs = [self.rate_backoffs]
        if isinstance(self.precoders, (str, dict)):
            self.precoders = [self.precoders]
        self.num_antennas = [int(m) for m in self.num_antennas]
        self.decay_times = [float(t) for t in self.decay_times]
        self.rate_backoffs = [int(d) for d in self.rate_backoffs]
        self.precoders = [PrecoderSpec.parse(p) for p in self.precoders]
        for name in ("num_antennas", "decay_times", "rate_backoffs", "precoders"):
            if not getattr(self, name):
                raise ParameterError(f"{name} must not be empty")
        if int(self.trials) < 1:
            raise ParameterError("trials must be >= 1")
        if int(self.workers) < 1:
            raise ParameterError("workers must be >= 1")
        if self.sigma < 0:
            raise ParameterError("sigma must be >= 0")
        if self.format not in ("csv", "json"):
            raise ParameterError(f"format must be csv or json, got {self.format!r}")
        if any(d < 1 for d in self.rate_backoffs):
            raise ParameterError("rate back-offs must be >= 1")
        # validates sizes and decay times up front
        for m in self.num_antennas:
            for tau in self.decay_times:
                self.channel_params(m, tau, 0)

    def channel_params(self, M: int, tau: float, seed: int) -> ChannelParams:
        return ChannelParams(
            num_users=self.num_users,
            num_antennas=M,
            num_taps=self.num_taps if self.num_taps is not None else default_tap_count(tau),
            decay_time=tau,
            normalize_ensemble=self.normalize_ensemble,
            normalize_realization=self.normalize_realization,
            seed=seed,
        )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["precoders"] = [dataclasses.asdict(p) for p in self.precoders]
        return d


def load_config(path, **overrides) -> ExperimentConfig:
    """Read a JSON config whose keys are :class:`ExperimentConfig` field names.

    Keyword overrides whose value is not ``None`` replace file values.
    """
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParameterError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ParameterError(f"{path}: config must be a JSON object")
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ParameterError(f"{path}: unknown config keys {sorted(unknown)}")
    data.update({k: v for k, v in overrides.items() if v is not None})
    return ExperimentConfig(**data)


# --- per-trial work ---------------------------------------------------------


def _metric_rows(report, spec_name, M, L, tau, D, sigma, iterations, seed):
    meta = dict(precoder=spec_name, M=M, N=report.num_users, L=L, tau=tau, D=D,
                sigma=sigma, iterations=iterations, seed=seed)
    rows = []
    for i, row in enumerate(report.rows()):
        row.update(meta)
        row["_lin"] = (float(report.signal[i]), float(report.isi[i]),
                       float(report.iui[i]), float(report.sinr[i]))
        rows.append(row)
    return rows


def _itr_groups(specs):
    # ITR variants differing only in n_max share one run sampled at each n_max
    groups = defaultdict(list)
    for s in specs:
        if s.kind == "itr":
            groups[s.eps].append(s)
    return groups


def _run_unit(cfg: ExperimentConfig, M: int, tau: float, trial: int, circular_rzf: bool):
    seed = trial_seed(cfg.seed, trial)
    params = cfg.channel_params(M, tau, seed)
    rows, failures = [], []
    try:
        ch = generate(params)
    except TrdmaError as exc:
        return rows, [(M, tau, None, None, trial, str(exc))]
    L = ch.num_taps
    for D in cfg.rate_backoffs:
        for spec in cfg.precoders:
            if spec.kind == "itr":
                continue
            try:
                if spec.kind == "tr":
                    f = tr_precode(ch, D)
                    circ = False
                else:
                    f = rzf_precode(ch, RzfConfig(spec.alpha, spec.fft_size, D))
                    circ = circular_rzf
                rep = compute_metrics(equivalent_channel(f, ch, circular=circ), cfg.sigma)
                rows += _metric_rows(rep, spec.name, M, L, tau, D, cfg.sigma, 0, seed)
            except TrdmaError as exc:
                failures.append((M, tau, D, spec.name, trial, str(exc)))
        for eps, specs in _itr_groups(cfg.precoders).items():
            n_max = max(s.n_max for s in specs)
            if cfg.curve:
                points = default_checkpoints(n_max, cfg.checkpoint_dense_until, cfg.checkpoint_every)
            else:
                points = [0]
            points = sorted(set(points) | {s.n_max for s in specs})
            try:
                runs = [
                    itr_precode(ch, ItrConfig(n_max, eps, D, i), snapshot_at=points)[1]
                    for i in range(ch.num_users)
                ]
                for n in points:
                    names = {s.name for s in specs if s.n_max == n}
                    if cfg.curve:
                        names.add(f"itr:{n_max}")
                    if not names:
                        continue
                    f = finalize_energy(combine_streams(t.snapshots[n] for t in runs))
                    rep = compute_metrics(equivalent_channel(f, ch), cfg.sigma)
                    for name in sorted(names):
                        rows += _metric_rows(rep, name, M, L, tau, D, cfg.sigma, n, seed)
            except TrdmaError as exc:
                for s in specs:
                    failures.append((M, tau, D, s.name, trial, str(exc)))
    return rows, failures


def _unit_star(args):
    return _run_unit(*args)


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    failures: list = field(default_factory=list)

    @property
    def skipped(self) -> int:
        """Precoder runs dropped after a numerical failure."""
        return len(self.failures)

    def aggregate(self, precoder, M=None, tau=None, D=None, iterations=None) -> dict | None:
        for a in self.aggregates:
            if (a["precoder"] == precoder and (M is None or a["M"] == M)
                    and (tau is None or a["tau"] == tau) and (D is None or a["D"] == D)
                    and (iterations is None or a["iterations"] == iterations)):
                return a
        return None

    def curve(self, precoder, M, tau, D):
        """``(iterations, mean SINR dB)`` arrays of one ITR sweep point."""
        pts = sorted(
            (a["iterations"], a["sinr_db"]) for a in self.aggregates
            if a["precoder"] == precoder and a["M"] == M and a["tau"] == tau and a["D"] == D
        )
        return np.array([p[0] for p in pts]), np.array([p[1] for p in pts])


def _aggregate(rows, failures):
    groups = defaultdict(list)
    for r in rows:
        key = (r["precoder"], r["M"], r["N"], r["L"], r["tau"], r["D"], r["sigma"], r["iterations"])
        groups[key].append(r)
    out = []
    for key, rs in groups.items():
        lin = np.array([r["_lin"] for r in rs])
        mean = lin.mean(axis=0)
        precoder, M, N, L, tau, D, sigma, iterations = key
        skipped = sum(1 for f in failures if f[0] == M and f[1] == tau and f[2] in (D, None)
                      and f[3] in (precoder, None))
        out.append(dict(
            precoder=precoder, M=M, N=N, L=L, tau=tau, D=D, sigma=sigma, iterations=iterations,
            signal_db=float(db(mean[0])), isi_db=float(db(mean[1])), iui_db=float(db(mean[2])),
            interference_db=float(db(mean[1] + mean[2])), sinr_db=float(db(mean[3])),
            samples=len(rs), trials=len({r["seed"] for r in rs}), skipped=skipped,
        ))
    return out


def run_sweep(cfg: ExperimentConfig, circular_rzf: bool = True) -> SweepResult:
    """Run every (antennas, decay time, trial) unit and aggregate mean-then-dB.

    ZF/RZF metrics use the circular equivalent channel unless ``circular_rzf``
    is false; the linear wrap-around energy is reported by :func:`compare_precoders`.
    """
    units = [(cfg, M, tau, t, circular_rzf)
             for M in cfg.num_antennas for tau in cfg.decay_times for t in range(cfg.trials)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_unit_star, units, chunksize=max(1, len(units) // (4 * cfg.workers))))
    else:
        results = [_run_unit(*u) for u in units]
    rows, failures = [], []
    for r, f in results:
        rows += r
        failures += f
    if failures:
        log.warning("%d precoder runs failed numerically and were skipped", len(failures))
    return SweepResult(cfg, rows, _aggregate(rows, failures), failures)


def iterations_to_plateau(iterations, sinr_db, tol_db: float = 0.1):
    """First sampled iteration whose mean SINR is within ``tol_db`` of the final value."""
    iterations = np.asarray(iterations)
    sinr_db = np.asarray(sinr_db)
    target = sinr_db[-1] - tol_db
    return int(iterations[int(np.argmax(sinr_db >= target))])


# --- precoder comparison table -------------------------------------------------


@dataclass
class CompareTable:
    antennas: list
    rows: list  # (title, {M: (S_dB, I_dB)})
    wraparound: dict = field(default_factory=dict)  # (title, M) -> mean linear tail energy
    result: SweepResult | None = None

    def value(self, title, M):
        for t, cols in self.rows:
            if t == title:
                return cols[M]
        raise KeyError(title)

    def format(self) -> str:
        def cell(x):
            if x <= INTERFERENCE_FLOOR_DB:
                return "-inf"
            return f"{x:.2f}"

        head = ["Precoding scheme"] + [f"{lab} M={m}" for m in self.antennas for lab in ("S[dB]", "I[dB]")]
        lines = [head]
        for title, cols in self.rows:
            line = [title]
            for m in self.antennas:
                s, i = cols[m]
                line += [cell(s), cell(i)]
            lines.append(line)
        widths = [max(len(r[c]) for r in lines) for c in range(len(head))]
        return "\n".join("  ".join(v.rjust(w) if c else v.ljust(w) for c, (v, w) in enumerate(zip(r, widths)))
                         for r in lines)


def compare_precoders(cfg: ExperimentConfig) -> CompareTable:
    """Mean-then-dB signal and interference (ISI + IUI) per precoder and array size.

    Every precoder is scaled to unit energy per user.  Interference at or
    below -100 dB prints as ``-inf``.
    """
    if len(cfg.precoders) < 2:
        raise ParameterError("compare needs at least two precoders")
    cfg = dataclasses.replace(cfg, curve=False, rate_backoffs=cfg.rate_backoffs[:1])
    res = run_sweep(cfg)
    D = cfg.rate_backoffs[0]
    tau = cfg.decay_times[0]
    rows = []
    for spec in cfg.precoders:
        cols = {}
        for M in cfg.num_antennas:
            it = spec.n_max if spec.kind == "itr" else 0
            a = res.aggregate(spec.name, M=M, tau=tau, D=D, iterations=it)
            cols[M] = (a["signal_db"], a["interference_db"]) if a else (math.nan, math.nan)
        rows.append((spec.title, cols))
    wrap = {}
    for spec in cfg.precoders:
        if spec.kind in ("zf", "rzf"):
            for M in cfg.num_antennas:
                tails = []
                for t in range(min(cfg.trials, 200)):
                    ch = generate(cfg.channel_params(M, tau, trial_seed(cfg.seed, t)))
                    try:
                        f = rzf_precode(ch, RzfConfig(spec.alpha, spec.fft_size, D))
                    except TrdmaError:
                        continue
                    tails.append(float(wraparound_energy(f, ch).sum() / ch.num_users))
                wrap[(spec.title, M)] = float(np.mean(tails)) if tails else math.nan
    return CompareTable(cfg.num_antennas, rows, wrap, res)


# --- bandwidth emulation ----------------------------------------------------


def bandwidth_emulation(cfg: ExperimentConfig, bandwidths_mhz, decay_ns: float, iterations):
    """Emulate a bandwidth sweep at fixed physical decay time.

    Tap duration is ``1/B``, so the decay time in taps is ``decay_ns * B``
    (and ``L`` follows).  This is a synthetic-channel emulation only, not a
    model of any measurement setup.  Returns rows with the mean SINR gain of
    ITR over TR, in dB, for each bandwidth and iteration count.
    """
    iterations = sorted(int(n) for n in iterations)
    taus = [decay_ns * b / 1000.0 for b in bandwidths_mhz]  # ns x MHz = 1e-3 taps
    sweep = dataclasses.replace(
        cfg, decay_times=taus, num_taps=None,
        precoders=["tr"] + [PrecoderSpec("itr", n_max=n) for n in iterations], curve=False,
    )
    res = run_sweep(sweep)
    out = []
    for b, tau in zip(bandwidths_mhz, taus):
        for D in sweep.rate_backoffs:
            for M in sweep.num_antennas:
                tr = res.aggregate("tr", M=M, tau=tau, D=D)
                for n in iterations:
                    it = res.aggregate(f"itr:{n}", M=M, tau=tau, D=D, iterations=n)
                    out.append(dict(bandwidth_mhz=b, tau=tau, L=default_tap_count(tau), M=M, D=D,
                                    iterations=n, tr_sinr_db=tr["sinr_db"], itr_sinr_db=it["sinr_db"],
                                    gain_db=it["sinr_db"] - tr["sinr_db"]))
    return out


# --- output -----------------------------------------------------------------


def _public(row):
    return {k: row[k] for k in CSV_COLUMNS}


def _aggregate_csv_rows(result):
    out = []
    for a in result.aggregates:
        r = {k: a.get(k) for k in CSV_COLUMNS}
        r["user"] = "mean"
        r["seed"] = result.config.seed
        out.append(r)
    return out


def emit(result: SweepResult | None, fmt: str, path=None) -> str:
    """Write ``result`` as CSV (metrics schema) or JSON (config echo + rows).

    CSV holds one row per (point, trial, user) followed by aggregate rows with
    ``user = "mean"``.  Returns the text; writes it when ``path`` is given.
    """
    rows = [] if result is None else [_public(r) for r in result.rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        if result is not None:
            w.writerows(_aggregate_csv_rows(result))
        text = buf.getvalue()
    elif fmt == "json":
        doc = {
            "config": None if result is None else result.config.to_dict(),
            "rows": rows,
            "aggregates": [] if result is None else result.aggregates,
            "skipped": 0 if result is None else result.skipped,
            "failures": [] if result is None else [list(f) for f in result.failures],
        }
        text = json.dumps(doc, indent=1, allow_nan=True) + "\n"
    else:
        raise ParameterError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text)
    return text
