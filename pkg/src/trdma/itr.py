"""Iterative time reversal (ITR): greedy cancellation of symbol-grid leakage.

For a target user ``i`` the filter starts as the unit-peak TR pulse of ``i``.
Each iteration finds the largest deviation of the grid response from the
ideal ``delta[k] * delta[j - i]``, across all users ``j`` and grid offsets
``k``, then subtracts the unit-peak TR pulse of the selected user, delayed by
``k*D`` and scaled by that deviation.  This zeroes the selected grid tap
exactly.  Only grid taps are looked at.  For ``D > 1`` the samples between
grid points are left alone.

Pulses are placed at offsets ``|k| <= K = floor((L-1)/D)``, so the filter
has ``L + 2*K*D`` taps and its focus sits at index ``K*D + L - 1`` of the
composed response.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet
from .errors import DimensionError, NumericalError, ParameterError
from .linksim import equivalent_channel
from .trcore import PrecodeFilter, correlate, finalize_energy

__all__ = [
    "IterationRecord",
    "ItrConfig",
    "ItrTrace",
    "argmax_deviation",
    "combine_streams",
    "deviation_map",
    "itr_precode",
    "itr_precode_all",
]


@dataclass(frozen=True)
class ItrConfig:
    n_max: int = 400
    eps: float = 1e-3
    rate_backoff: int = 1
    target_user: int = 0

    def __post_init__(self):
        if int(self.n_max) < 1:
            raise ParameterError(f"n_max must be >= 1, got {self.n_max}")
        if not self.eps > 0:
            raise ParameterError(f"eps must be positive, got {self.eps}")
        if int(self.rate_backoff) < 1:
            raise ParameterError(f"rate back-off must be >= 1, got {self.rate_backoff}")
        if int(self.target_user) < 0:
            raise ParameterError(f"target_user must be >= 0, got {self.target_user}")


@dataclass(frozen=True)
class IterationRecord:
    iter: int
    j_hat: int
    k_hat: int
    delta_abs: float
    max_dev: float


@dataclass
class ItrTrace:
    """What ITR did.  ``max_dev`` of a record is measured after that iteration's update."""

    target_user: int
    initial_max_dev: float
    records: list[IterationRecord] = field(default_factory=list)
    converged: bool = False
    snapshots: dict[int, PrecodeFilter] = field(default_factory=dict, repr=False)

    @property
    def iterations_run(self) -> int:
        return len(self.records)

    def to_jsonl(self, fh) -> None:
        """Write one JSON object per iteration to the text stream ``fh``."""
        for r in self.records:
            fh.write(
                json.dumps(
                    {
                        "iter": r.iter,
                        "j_hat": r.j_hat,
                        "k_hat": r.k_hat,
                        "delta_abs": r.delta_abs,
                        "max_dev": r.max_dev,
                    }
                )
                + "\n"
            )

    @staticmethod
    def read_jsonl(fh) -> list[IterationRecord]:
        return [IterationRecord(**json.loads(line)) for line in fh if line.strip()]


def _search_order(offsets: np.ndarray) -> np.ndarray:
    # column order 0, -1, +1, -2, +2, ... so a row-major first-max scan applies the tie rule
    return np.array(sorted(range(offsets.size), key=lambda n: (abs(offsets[n]), offsets[n])))


def argmax_deviation(delta, offsets=None):
    """Largest-modulus entry of ``delta[j, n]`` as ``(j, offset, value)``.

    Ties go to the smallest user index, then the smallest ``|offset|``, then
    the negative offset.  ``offsets`` defaults to a symmetric ``-K .. K`` grid.
    """
    delta = np.asarray(delta)
    if delta.ndim != 2 or delta.size == 0:
        raise DimensionError("deviation map must be a non-empty [user, offset] matrix")
    if offsets is None:
        if delta.shape[1] % 2 != 1:
            raise DimensionError("offsets must be given for an even-width map")
        K = delta.shape[1] // 2
        offsets = np.arange(-K, K + 1)
    offsets = np.asarray(offsets)
    order = _search_order(offsets)
    flat = int(np.argmax(np.abs(delta[:, order])))
    j, col = divmod(flat, order.size)
    n = order[col]
    return j, int(offsets[n]), complex(delta[j, n])


def deviation_map(f: PrecodeFilter, ch: ChannelSet, i: int, rate_backoff: int | None = None, stream=None):
    """Grid response of one stream minus the ideal focus on user ``i``.

    Returns ``(delta, offsets)`` over every representable grid offset.
    ``stream`` selects the filter row (default ``i``, or 0 for one-row filters).
    """
    if rate_backoff is not None and rate_backoff != f.rate_backoff:
        f = PrecodeFilter(f.g, f.center, rate_backoff, f.label)
    if stream is None:
        stream = 0 if f.num_users == 1 else i
    if not 0 <= i < ch.num_users:
        raise DimensionError(f"user {i} not in channel with {ch.num_users} users")
    single = PrecodeFilter(f.g[stream : stream + 1], f.center, f.rate_backoff, f.label)
    eq = equivalent_channel(single, ch)
    delta = np.array(eq.f[:, 0, :])
    delta[i, eq.zero_index] -= 1.0
    return delta, np.array(eq.offsets)


def itr_precode(ch: ChannelSet, cfg: ItrConfig, snapshot_at=()):
    """Run ITR for ``cfg.target_user``.

    Returns a one-stream :class:`PrecodeFilter` normalized to unit energy and
    the :class:`ItrTrace`.  For each iteration count in ``snapshot_at`` the
    trace keeps the filter as it stood after that many iterations (or the last
    one if ITR stopped earlier), before energy normalization.
    """
    i = int(cfg.target_user)
    if not 0 <= i < ch.num_users:
        raise ParameterError(f"target user {i} not in channel with {ch.num_users} users")
    corr = correlate(ch)  # raises on degenerate channels
    N, M, L = ch.h.shape
    D = int(cfg.rate_backoff)
    K = (L - 1) // D
    S = K * D
    offsets = np.arange(-K, K + 1)
    order = _search_order(offsets)

    # step[j, jh, d + 2K]: grid response at user j of jh's unit-peak pulse, d grid steps away
    lags = np.arange(-2 * K, 2 * K + 1) * D
    step = np.zeros((N, N, lags.size), dtype=np.complex128)
    valid = np.abs(lags) <= L - 1
    step[:, :, valid] = corr.R[:, :, lags[valid] + L - 1] / ch.norms[np.newaxis, :, np.newaxis]

    pulses = np.conj(ch.h[:, :, ::-1]) / (ch.norms**2)[:, np.newaxis, np.newaxis]
    g = np.zeros((M, L + 2 * S), dtype=np.complex128)
    g[:, S : S + L] = pulses[i]

    delta = step[:, i, offsets + 2 * K].copy()
    delta[i, K] -= 1.0
    center = S + L - 1

    wanted = sorted({int(n) for n in snapshot_at})
    snapshots = {}

    def snap(n):
        while wanted and wanted[0] <= n:
            snapshots[wanted.pop(0)] = PrecodeFilter(g[np.newaxis], center, D, "itr")

    mag = np.abs(delta)
    trace = ItrTrace(target_user=i, initial_max_dev=float(mag.max()))
    snap(0)
    converged = False
    for n in range(1, int(cfg.n_max) + 1):
        if mag.max() < cfg.eps:
            converged = True
            break
        flat = int(np.argmax(mag[:, order]))
        jh, col = divmod(flat, order.size)
        kh = int(order[col])
        c = delta[jh, kh]
        start = S + int(offsets[kh]) * D
        g[:, start : start + L] -= c * pulses[jh]
        delta -= c * step[:, jh, offsets - offsets[kh] + 2 * K]
        if not (np.isfinite(c) and np.all(np.isfinite(delta))):
            raise NumericalError(f"non-finite values at ITR iteration {n}")
        mag = np.abs(delta)
        trace.records.append(IterationRecord(n, jh, int(offsets[kh]), float(abs(c)), float(mag.max())))
        snap(n)
    else:
        converged = bool(mag.max() < cfg.eps)
    trace.converged = converged
    snap(10**18)
    trace.snapshots = snapshots
    if not np.all(np.isfinite(g)):
        raise NumericalError("ITR produced a non-finite filter")
    return finalize_energy(PrecodeFilter(g[np.newaxis], center, D, "itr")), trace


def combine_streams(filters) -> PrecodeFilter:
    """Stack one-stream filters (same length and center) into a multi-user filter."""
    filters = list(filters)
    first = filters[0]
    for f in filters[1:]:
        if f.g.shape[1:] != first.g.shape[1:] or f.center != first.center:
            raise DimensionError("streams must share filter length and center")
    g = np.concatenate([f.g for f in filters], axis=0)
    return PrecodeFilter(g, first.center, first.rate_backoff, first.label)


def itr_precode_all(ch: ChannelSet, cfg: ItrConfig, snapshot_at=()):
    """ITR for every user in turn; returns the TRDMA filter and one trace per user."""
    filters, traces = [], []
    for i in range(ch.num_users):
        f, t = itr_precode(
            ch, ItrConfig(cfg.n_max, cfg.eps, cfg.rate_backoff, i), snapshot_at=snapshot_at
        )
        filters.append(f)
        traces.append(t)
    return combine_streams(filters), traces
