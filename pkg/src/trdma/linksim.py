"""Sample-level downlink simulation and the symbol-grid equivalent channel.

Symbol ``l`` (0-based) of stream ``i`` is launched with filter ``g[i]``
delayed by ``l*D`` taps, so its focus reaches the receivers at full-resolution
index ``l*D + center``.  A single-tap receiver reads one sample per symbol on
that grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .channel import ChannelSet
from .conv import convolve
from .errors import DimensionError, ParameterError
from .trcore import PrecodeFilter

__all__ = [
    "EquivalentChannel",
    "GridSamples",
    "SymbolFrame",
    "apply_equivalent_channel",
    "equivalent_channel",
    "random_frame",
    "receive",
    "sample_grid",
    "transmit_signal",
]


@dataclass(frozen=True)
class SymbolFrame:
    """Symbols ``x[user, l]`` for ``l = 0 .. P-1``."""

    x: np.ndarray
    symbol_power: float = 1.0

    def __post_init__(self):
        x = np.array(self.x, dtype=np.complex128, copy=True)
        if x.ndim == 1:
            x = x[np.newaxis]
        if x.ndim != 2:
            raise DimensionError(f"symbols must be a [user, symbol] matrix, got {x.shape}")
        if not self.symbol_power > 0:
            raise ParameterError("symbol_power must be positive")
        x.flags.writeable = False
        object.__setattr__(self, "x", x)

    @property
    def num_users(self) -> int:
        return self.x.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.x.shape[1]


def random_frame(num_users, num_symbols, seed=None, symbol_power=1.0, kind="qpsk") -> SymbolFrame:
    """Random unit-power (times ``symbol_power``) QPSK or complex Gaussian symbols."""
    rng = np.random.default_rng(seed)
    shape = (num_users, num_symbols)
    if kind == "qpsk":
        x = (rng.choice([-1.0, 1.0], size=shape) + 1j * rng.choice([-1.0, 1.0], size=shape)) / np.sqrt(2)
    elif kind == "gaussian":
        x = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    else:
        raise ParameterError(f"unknown symbol kind {kind!r}")
    return SymbolFrame(x * np.sqrt(symbol_power), symbol_power)


@dataclass(frozen=True)
class EquivalentChannel:
    """Precoder-plus-channel responses.

    ``response[j, i, t]`` is the full-resolution response of stream ``i`` at
    receiver ``j``; ``f[j, i, n]`` samples it at ``center + offsets[n] * D``.
    With ``circular=True`` the response is periodic in its length and the
    grid wraps.
    """

    response: np.ndarray
    center: int
    rate_backoff: int
    circular: bool = False

    def __post_init__(self):
        T = self.response.shape[2]
        D = int(self.rate_backoff)
        if D < 1:
            raise ParameterError("rate back-off must be >= 1")
        if not 0 <= self.center < T:
            raise DimensionError(f"center {self.center} outside response of length {T}")
        if self.circular:
            lo = -((T // 2) // D)
            hi = (T - 1 - T // 2) // D
            offsets = np.arange(lo, hi + 1)
            idx = (self.center + offsets * D) % T
        else:
            offsets = np.arange(-(self.center // D), (T - 1 - self.center) // D + 1)
            idx = self.center + offsets * D
        f = self.response[:, :, idx]
        for arr in (f, offsets):
            arr.flags.writeable = False
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "f", f)

    @property
    def num_receivers(self) -> int:
        return self.response.shape[0]

    @property
    def num_streams(self) -> int:
        return self.response.shape[1]

    @property
    def zero_index(self) -> int:
        return int(-self.offsets[0])

    def at(self, j: int, i: int, k: int) -> complex:
        n = k - self.offsets[0]
        if 0 <= n < self.offsets.size:
            return complex(self.f[j, i, n])
        return 0j


def _check_antennas(f: PrecodeFilter, ch: ChannelSet):
    if f.num_antennas != ch.num_antennas:
        raise DimensionError(
            f"filter has {f.num_antennas} antennas but channel has {ch.num_antennas}"
        )


def equivalent_channel(
    f: PrecodeFilter, ch: ChannelSet, circular: bool = False, method: str = "auto"
) -> EquivalentChannel:
    """Compose filters with the channel: ``e[j, i] = sum_m g[i, m] * h[j, m]``."""
    _check_antennas(f, ch)
    if circular:
        n = f.filter_len
        if n < ch.num_taps:
            raise DimensionError("circular evaluation needs a filter at least as long as the channel")
        G = np.fft.fft(f.g, n)
        H = np.fft.fft(ch.h, n)
        e = np.fft.ifft(np.einsum("imf,jmf->jif", G, H), axis=-1)
    else:
        e = convolve(f.g[np.newaxis], ch.h[:, np.newaxis], method=method).sum(axis=2)
    e.flags.writeable = False
    return EquivalentChannel(e, f.center, f.rate_backoff, circular)


def transmit_signal(f: PrecodeFilter, frame: SymbolFrame, method: str = "auto") -> np.ndarray:
    """Per-antenna baseband stream ``s[m, t] = sum_i sum_l x[i, l] g[i, m, t - l D]``."""
    if frame.num_users != f.num_users:
        raise DimensionError(f"frame has {frame.num_users} streams, filter has {f.num_users}")
    D = f.rate_backoff
    P = frame.num_symbols
    up = np.zeros((f.num_users, (P - 1) * D + 1), dtype=np.complex128)
    up[:, ::D] = frame.x
    return convolve(up[:, np.newaxis], f.g, method=method).sum(axis=0)


def receive(s, ch: ChannelSet, sigma: float = 0.0, seed=None, method: str = "auto") -> np.ndarray:
    """Received streams ``y[j, t] = sum_m (s_m * h[j, m])[t] + n_j[t]``.

    The noise is circular complex Gaussian with total variance ``sigma**2``.
    """
    if sigma < 0:
        raise ParameterError(f"noise standard deviation must be >= 0, got {sigma}")
    s = np.asarray(s, dtype=np.complex128)
    if s.ndim != 2 or s.shape[0] != ch.num_antennas:
        raise DimensionError(f"stream shape {s.shape} does not match {ch.num_antennas} antennas")
    y = convolve(s[np.newaxis], ch.h, method=method).sum(axis=1)
    if sigma > 0:
        rng = np.random.default_rng(seed)
        y = y + (sigma / np.sqrt(2)) * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    return y


class GridSamples(NamedTuple):
    values: np.ndarray
    offsets: np.ndarray
    clipped: bool


def sample_grid(y, rate_backoff: int, center: int, offsets=None) -> GridSamples:
    """Single-tap receiver: read ``y`` at ``center + k*D``.

    Without ``offsets`` every in-range grid point is returned.  Requested
    offsets that fall outside the stream are dropped and ``clipped`` is set.
    """
    y = np.asarray(y)
    T = y.shape[-1]
    D = int(rate_backoff)
    if D < 1:
        raise ParameterError("rate back-off must be >= 1")
    if not 0 <= center < T:
        raise ParameterError(f"center {center} outside stream of length {T}")
    if offsets is None:
        offsets = np.arange(-(center // D), (T - 1 - center) // D + 1)
        clipped = False
    else:
        offsets = np.asarray(offsets, dtype=int)
        idx = center + offsets * D
        keep = (idx >= 0) & (idx < T)
        clipped = not bool(keep.all())
        offsets = offsets[keep]
    return GridSamples(y[..., center + offsets * D], offsets, clipped)


def apply_equivalent_channel(eq: EquivalentChannel, frame: SymbolFrame):
    """Symbol-level model ``y[j, l] = sum_i sum_k f[j, i, l - k] x[i, k]`` (noiseless).

    Returns ``(y, first)`` where column 0 of ``y`` is grid position ``first``
    relative to symbol 0's focus.
    """
    if frame.num_users != eq.num_streams:
        raise DimensionError("frame streams do not match equivalent channel")
    if eq.circular:
        raise ParameterError("the symbol-level model uses the linear equivalent channel")
    y = convolve(eq.f, frame.x[np.newaxis], method="direct").sum(axis=1)
    return y, int(eq.offsets[0])
