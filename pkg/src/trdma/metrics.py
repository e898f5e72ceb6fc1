"""Signal, ISI, IUI and SINR on the symbol grid, plus operation counts.

Stream ``i`` is intended for receiver ``i``.  With ``E = E{|x|^2}``::

    signal_i = E |f[i, i, 0]|^2
    ISI_i    = E sum_{k != 0} |f[i, i, k]|^2
    IUI_i    = E sum_{j != i} sum_k |f[j, i, k]|^2      (k = 0 included)
    SINR_i   = signal_i / (ISI_i + IUI_i + sigma^2)

Interference is counted where stream ``i`` lands (leakage form), over every
grid offset the equivalent channel represents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, ParameterError
from .linksim import EquivalentChannel

__all__ = [
    "CSV_COLUMNS",
    "ComplexityEstimate",
    "MetricsReport",
    "complexity",
    "compute_metrics",
    "db",
    "mean_db",
    "to_db",
]

CSV_COLUMNS = (
    "precoder",
    "M",
    "N",
    "L",
    "tau",
    "D",
    "sigma",
    "iterations",
    "user",
    "signal_db",
    "isi_db",
    "iui_db",
    "sinr_db",
    "seed",
)


def to_db(x: float) -> float:
    if not x > 0:
        raise ParameterError(f"to_db needs a positive value, got {x!r}")
    return 10.0 * math.log10(x)


def mean_db(values) -> float:
    """``10 log10`` of the linear mean (not the mean of per-draw dB values)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ParameterError("mean_db of an empty ensemble")
    return to_db(float(values.mean()))


def db(x):
    """Elementwise dB that maps zero power to ``-inf`` instead of raising."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


@dataclass(frozen=True)
class MetricsReport:
    signal: np.ndarray
    isi: np.ndarray
    iui: np.ndarray
    sinr: np.ndarray
    noise_var: float
    symbol_power: float = 1.0
    meta: dict = field(default_factory=dict)

    @property
    def num_users(self) -> int:
        return self.signal.size

    @property
    def interference(self) -> np.ndarray:
        return self.isi + self.iui

    @property
    def signal_db(self):
        return db(self.signal)

    @property
    def isi_db(self):
        return db(self.isi)

    @property
    def iui_db(self):
        return db(self.iui)

    @property
    def sinr_db(self):
        return db(self.sinr)

    def rows(self) -> list[dict]:
        """One CSV-schema row per user."""
        out = []
        for i in range(self.num_users):
            row = {k: self.meta.get(k) for k in CSV_COLUMNS}
            row.update(
                user=i,
                sigma=self.meta.get("sigma", math.sqrt(self.noise_var)),
                signal_db=float(self.signal_db[i]),
                isi_db=float(self.isi_db[i]),
                iui_db=float(self.iui_db[i]),
                sinr_db=float(self.sinr_db[i]),
            )
            out.append(row)
        return out

    def to_dict(self) -> dict:
        return {
            "signal": self.signal.tolist(),
            "isi": self.isi.tolist(),
            "iui": self.iui.tolist(),
            "sinr": self.sinr.tolist(),
            "noise_var": self.noise_var,
            "symbol_power": self.symbol_power,
            "meta": dict(self.meta),
        }


def compute_metrics(eq: EquivalentChannel, sigma: float, ex2: float = 1.0, meta=None) -> MetricsReport:
    if eq.offsets[0] > 0 or eq.offsets[-1] < 0:
        raise DimensionError("equivalent channel grid does not contain offset 0")
    if eq.num_receivers < eq.num_streams:
        raise DimensionError("every stream needs its own receiver")
    if sigma < 0 or ex2 <= 0:
        raise ParameterError("need sigma >= 0 and a positive symbol power")
    N = eq.num_streams
    z = eq.zero_index
    p = np.abs(eq.f) ** 2  # [j, i, k]
    users = np.arange(N)
    own = p[users, users, :]  # [i, k]
    signal = ex2 * own[:, z]
    isi = ex2 * (own.sum(axis=1) - own[:, z])
    iui = ex2 * (p.sum(axis=(0, 2)) - own.sum(axis=1))
    iui = np.maximum(iui, 0.0)
    isi = np.maximum(isi, 0.0)
    noise = float(sigma) ** 2
    with np.errstate(divide="ignore"):
        sinr = signal / (isi + iui + noise)  # inf for a perfect noiseless link
    meta = dict(meta or {})
    meta.setdefault("sigma", float(sigma))
    return MetricsReport(signal, isi, iui, sinr, noise, ex2, meta)


@dataclass(frozen=True)
class ComplexityEstimate:
    scheme: str
    multiplications: int
    formula: str


def _log2_exact(L: int) -> int:
    if L < 1 or L & (L - 1):
        raise ParameterError(f"L must be a power of two for the FFT terms, got {L}")
    return L.bit_length() - 1


def complexity(scheme: str, M: int, N: int, L: int, n_iter: int = 0) -> ComplexityEstimate:
    """Scalar multiplications to build the precoders.

    ``itr-direct``: ``n'ML + MN^2 L^2``; ``itr-fft``: ``n'ML + MN^2 L (1 + 2 log2 L)``;
    ``rzf``: ``2L log2 L + L (N^3 + MN)``.
    """
    for name, v in (("M", M), ("N", N), ("L", L)):
        if int(v) < 1:
            raise ParameterError(f"{name} must be a positive integer")
    if int(n_iter) < 0:
        raise ParameterError("iteration count must be >= 0")
    M, N, L, n = int(M), int(N), int(L), int(n_iter)
    if scheme == "itr-direct":
        count = n * M * L + M * N**2 * L**2
        formula = "n'ML + MN^2L^2"
    elif scheme == "itr-fft":
        count = n * M * L + M * N**2 * L * (1 + 2 * _log2_exact(L))
        formula = "n'ML + MN^2L(1 + 2log2 L)"
    elif scheme == "rzf":
        count = 2 * L * _log2_exact(L) + L * (N**3 + M * N)
        formula = "2L log2 L + L(N^3 + MN)"
    else:
        raise ParameterError(f"unknown scheme {scheme!r} (itr-direct, itr-fft, rzf)")
    return ComplexityEstimate(scheme, count, formula)
