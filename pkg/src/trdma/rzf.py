"""Frequency-domain zero-forcing / regularized zero-forcing baseline.

Per subcarrier ``f`` the precoder is ``W(f) = H(f)^H (H(f) H(f)^H + alpha I_N)^-1``
(``M x N``), where ``H(f)`` is the ``N x M`` channel gain matrix.  Time
filters are the inverse transforms of the columns of ``W``, rotated by half
the transform length so the acausal part of the response comes before the
focus.  Filters keep all ``fft_size`` taps.

Transform convention: ``fft`` is the unnormalized forward DFT
``X[f] = sum_k x[k] exp(-2j pi f k / n)`` and ``ifft`` carries the ``1/n``.
With it, ``H(f)`` of a unit-energy CIR has unit mean power across subcarriers.
Pass ``norm="ortho"`` for the unitary pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .errors import ConditioningError, DimensionError, ParameterError
from .linksim import equivalent_channel
from .trcore import PrecodeFilter, finalize_energy

__all__ = [
    "FreqChannel",
    "RzfConfig",
    "fft",
    "freq_channel",
    "ifft",
    "next_pow2",
    "rzf_precode",
    "solve_regularized",
    "wraparound_energy",
]

# 1/cond(A) below this counts as singular when alpha == 0
_RCOND = 1e-12


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _check_pow2(n: int):
    if n < 1 or n & (n - 1):
        raise ParameterError(f"transform length must be a power of two, got {n}")


def fft(x, n=None, norm="backward"):
    """Forward DFT over the last axis; ``n`` (default: input length) must be a power of two."""
    x = np.asarray(x)
    n = x.shape[-1] if n is None else int(n)
    _check_pow2(n)
    return np.fft.fft(x, n, axis=-1, norm=norm)


def ifft(X, n=None, norm="backward"):
    """Inverse of :func:`fft` under the same ``norm``."""
    X = np.asarray(X)
    n = X.shape[-1] if n is None else int(n)
    _check_pow2(n)
    return np.fft.ifft(X, n, axis=-1, norm=norm)


@dataclass(frozen=True)
class RzfConfig:
    alpha: float = 0.0
    fft_size: int | None = None
    rate_backoff: int = 1

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ParameterError(f"regularization must be >= 0, got {self.alpha}")
        if self.fft_size is not None:
            _check_pow2(int(self.fft_size))
        if int(self.rate_backoff) < 1:
            raise ParameterError("rate back-off must be >= 1")

    def size_for(self, num_taps: int) -> int:
        if self.fft_size is None:
            return next_pow2(2 * num_taps)
        if self.fft_size < num_taps:
            raise ParameterError(f"fft_size {self.fft_size} shorter than the channel ({num_taps} taps)")
        return int(self.fft_size)


@dataclass(frozen=True)
class FreqChannel:
    """``H[f, j, m]``: channel gain matrix per subcarrier."""

    H: np.ndarray

    @property
    def fft_size(self) -> int:
        return self.H.shape[0]

    def to_taps(self) -> np.ndarray:
        """Back to ``h[j, m, t]`` over ``fft_size`` taps (the zero-padded CIR)."""
        return ifft(np.moveaxis(self.H, 0, -1))


def freq_channel(ch: ChannelSet, fft_size: int) -> FreqChannel:
    _check_pow2(fft_size)
    if fft_size < ch.num_taps:
        raise ParameterError("fft_size shorter than the channel")
    return FreqChannel(np.moveaxis(fft(ch.h, fft_size), -1, 0))


def solve_regularized(H, alpha: float):
    """``H^H (H H^H + alpha I)^-1`` for one ``N x M`` matrix or a stack of them.

    Solved as a linear system, never through an explicit inverse.
    """
    H = np.asarray(H, dtype=np.complex128)
    if H.ndim < 2:
        raise DimensionError("H must be at least 2-D")
    if alpha < 0:
        raise ParameterError("alpha must be >= 0")
    N = H.shape[-2]
    A = H @ np.conj(np.swapaxes(H, -1, -2)) + alpha * np.eye(N)
    if alpha == 0:
        stack = A.reshape((-1, N, N))
        s = np.linalg.svd(stack, compute_uv=False)
        rc = s[:, -1] / s[:, 0] if N > 0 else np.ones(1)
        bad = np.flatnonzero(~(rc > _RCOND))
        if bad.size:
            raise ConditioningError(
                f"H H^H is rank deficient at subcarrier {int(bad[0])} (1/cond = {rc[bad[0]]:.3g})",
                subcarrier=int(bad[0]),
            )
    X = np.linalg.solve(A, H)
    return np.conj(np.swapaxes(X, -1, -2))


def rzf_precode(ch: ChannelSet, cfg: RzfConfig) -> PrecodeFilter:
    """RZF (ZF for ``alpha = 0``) filters, each user normalized to unit energy."""
    if ch.num_users > ch.num_antennas and cfg.alpha == 0:
        raise ConditioningError(
            f"zero forcing needs N <= M (got N={ch.num_users}, M={ch.num_antennas})", subcarrier=0
        )
    n = cfg.size_for(ch.num_taps)
    fc = freq_channel(ch, n)
    W = solve_regularized(fc.H, cfg.alpha)  # [f, m, i]
    w = ifft(np.transpose(W, (2, 1, 0)))  # [i, m, t]
    g = np.roll(w, n // 2, axis=-1)
    label = "zf" if cfg.alpha == 0 else "rzf"
    return finalize_energy(PrecodeFilter(g, n // 2, cfg.rate_backoff, label))


def wraparound_energy(f: PrecodeFilter, ch: ChannelSet) -> np.ndarray:
    """Per-(receiver, stream) energy of the linear response beyond the filter length.

    That tail is what circular evaluation folds back onto the start of the
    period, i.e. the discrepancy between linear and circular equivalent channels.
    """
    e = equivalent_channel(f, ch).response
    return np.sum(np.abs(e[:, :, f.filter_len :]) ** 2, axis=-1)
