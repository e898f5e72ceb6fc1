"""Conventional time-reversal precoding primitives.

Index conventions (0-based): a channel has taps ``0 .. L-1``.  The TR filter
of user ``i`` is ``conj(h[i, m, L-1-k]) / ||h_i||``, so the focus of
``sum_m (g_m * h_m)`` sits at full-resolution index ``L-1`` of the
``2L-1`` long convolution.  Correlation lags run over ``-(L-1) .. L-1`` and
are stored at array index ``lag + L - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .conv import convolve
from .errors import DegenerateChannelError, DimensionError, ParameterError

__all__ = [
    "CorrelationTable",
    "PrecodeFilter",
    "correlate",
    "finalize_energy",
    "tr_atom",
    "tr_filter",
    "tr_precode",
]


@dataclass(frozen=True)
class PrecodeFilter:
    """Per-user, per-antenna transmit filters ``g[user, antenna, tap]``.

    ``center`` is the full-resolution index, in ``sum_m g[i, m] * h[j, m]``,
    where the intended focus of every stream lands.
    """

    g: np.ndarray
    center: int
    rate_backoff: int = 1
    label: str = "custom"

    def __post_init__(self):
        g = np.array(self.g, dtype=np.complex128, copy=True)
        if g.ndim != 3:
            raise DimensionError(f"filter must be a 3-D array [user, antenna, tap], got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ParameterError("filter taps must be finite")
        if int(self.rate_backoff) < 1:
            raise ParameterError(f"rate back-off must be >= 1, got {self.rate_backoff}")
        g.flags.writeable = False
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "center", int(self.center))
        object.__setattr__(self, "rate_backoff", int(self.rate_backoff))

    @property
    def num_users(self) -> int:
        return self.g.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.g.shape[1]

    @property
    def filter_len(self) -> int:
        return self.g.shape[2]

    def energies(self) -> np.ndarray:
        return np.sum(np.abs(self.g) ** 2, axis=(1, 2))


@dataclass(frozen=True)
class CorrelationTable:
    """``R[j, i, lag + L - 1]``: normalized cross-correlation of user ``i``'s CIR into user ``j``."""

    R: np.ndarray

    @property
    def max_lag(self) -> int:
        return (self.R.shape[2] - 1) // 2

    def at(self, j: int, i: int, lag: int) -> complex:
        if abs(lag) > self.max_lag:
            return 0j
        return complex(self.R[j, i, lag + self.max_lag])


def _require_energy(ch: ChannelSet, users=None):
    users = range(ch.num_users) if users is None else users
    for i in users:
        if not ch.norms[i] > 0:
            raise DegenerateChannelError(f"user {i} has a zero-energy channel")


def correlate(ch: ChannelSet) -> CorrelationTable:
    """Cross-correlate every pair of user channels, summed over antennas."""
    _require_energy(ch)
    h = ch.h
    flipped = np.conj(h[:, :, ::-1])
    # full[j, i, m, t] = (h_j,m * conj(flip(h_i,m)))[t], lag t - (L-1)
    full = convolve(h[:, np.newaxis], flipped[np.newaxis])
    R = full.sum(axis=2) / ch.norms[np.newaxis, :, np.newaxis]
    R.flags.writeable = False
    return CorrelationTable(R)


def tr_filter(ch: ChannelSet, i: int) -> np.ndarray:
    """Normalized TR filter of user ``i``, shape ``(M, L)``."""
    _require_energy(ch, [i])
    return np.conj(ch.h[i, :, ::-1]) / ch.norms[i]


def tr_atom(ch: ChannelSet, j: int, shift: int = 0, span: int | None = None) -> np.ndarray:
    """Unit-peak TR pulse of user ``j`` delayed by ``shift`` taps.

    The returned ``(M, L + 2*span)`` array holds the unshifted pulse at
    columns ``span .. span+L-1``; ``span`` defaults to ``|shift|``.  Its
    focused sample ``sum_m (a_m * h[j, m])[span + L - 1 + shift]`` equals 1.
    """
    _require_energy(ch, [j])
    span = abs(shift) if span is None else int(span)
    if abs(shift) > span:
        raise ParameterError(f"shift {shift} exceeds span {span}")
    L = ch.num_taps
    out = np.zeros((ch.num_antennas, L + 2 * span), dtype=np.complex128)
    start = span + shift
    out[:, start : start + L] = np.conj(ch.h[j, :, ::-1]) / ch.norms[j] ** 2
    return out


def tr_precode(ch: ChannelSet, rate_backoff: int = 1) -> PrecodeFilter:
    """Conventional TRDMA: every user gets its own normalized TR filter."""
    _require_energy(ch)
    g = np.conj(ch.h[:, :, ::-1]) / ch.norms[:, np.newaxis, np.newaxis]
    return PrecodeFilter(g, center=ch.num_taps - 1, rate_backoff=rate_backoff, label="tr")


def finalize_energy(f: PrecodeFilter) -> PrecodeFilter:
    """Scale each user's filter to unit transmit energy."""
    energy = f.energies()
    bad = np.flatnonzero(~(energy > 0))
    if bad.size:
        raise DegenerateChannelError(f"filter of user {int(bad[0])} has zero energy")
    g = f.g / np.sqrt(energy)[:, np.newaxis, np.newaxis]
    return PrecodeFilter(g, f.center, f.rate_backoff, f.label)
