"""Synthetic Rayleigh multipath channels with exponential power decay.

Taps are indexed ``h[user, antenna, tap]`` with ``tap = 0 .. L-1``.  Tap
``k`` (0-based) carries expected power ``exp(-(k + 1) / tau)`` before any
normalization, so the first tap sits one step into the decay.

Every (user, antenna) row is drawn from its own Philox stream keyed by
``(seed, user, antenna)``.  Trials get their own seed through
:func:`trial_seed`, so a trial's channel never depends on which other trials
ran, or in what order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError, FileFormatError, ParameterError, TruncatedFileError

__all__ = [
    "ChannelParams",
    "ChannelSet",
    "default_tap_count",
    "generate",
    "load",
    "save",
    "tap_power_profile",
    "trial_seed",
]

_U64 = 2**64


def default_tap_count(tau: float) -> int:
    """Number of taps kept when ``L`` is not given: ``ceil(8 tau)``."""
    if not tau > 0 or not math.isfinite(tau):
        raise ParameterError(f"decay time must be positive and finite, got {tau!r}")
    return math.ceil(8 * tau)


def trial_seed(seed: int, trial: int) -> int:
    """Derive the 64-bit channel seed of Monte Carlo trial ``trial``."""
    state = np.random.SeedSequence([int(seed), int(trial)]).generate_state(2, np.uint32)
    return int(state[0]) | (int(state[1]) << 32)


@dataclass(frozen=True)
class ChannelParams:
    """Ensemble description for :func:`generate`.

    ``normalize_ensemble`` divides every tap by ``sqrt(sum_k exp(-k/tau))`` so
    one antenna-to-user link has unit *expected* energy.
    ``normalize_realization`` rescales each drawn user channel to unit energy
    over all antennas and taps; it is applied last and makes the ensemble flag
    irrelevant for the resulting taps.
    """

    num_users: int
    num_antennas: int
    num_taps: int | None = None
    decay_time: float = 5.0
    normalize_ensemble: bool = True
    normalize_realization: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.num_taps is None:
            object.__setattr__(self, "num_taps", default_tap_count(self.decay_time))
        for name in ("num_users", "num_antennas", "num_taps"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ParameterError(f"{name} must be a positive integer, got {value!r}")
        if not self.decay_time > 0:
            raise ParameterError(f"decay_time must be positive, got {self.decay_time!r}")
        if not 0 <= int(self.seed) < _U64:
            raise ParameterError(f"seed must fit in an unsigned 64-bit integer, got {self.seed!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.num_users, self.num_antennas, self.num_taps)


def tap_power_profile(decay_time: float, num_taps: int) -> np.ndarray:
    """Expected power per tap, ``exp(-k/tau)`` for ``k = 1 .. L``."""
    k = np.arange(1, num_taps + 1)
    if math.isinf(decay_time):
        return np.ones(num_taps)
    return np.exp(-k / decay_time)


@dataclass(frozen=True)
class ChannelSet:
    """Complex CIR tensor ``h[user, antenna, tap]`` plus the parameters that made it."""

    h: np.ndarray
    params: ChannelParams
    norms: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        h = np.array(self.h, dtype=np.complex128, copy=True)
        if h.ndim != 3:
            raise DimensionError(f"channel taps must be a 3-D array, got shape {h.shape}")
        if h.shape != self.params.shape:
            raise DimensionError(f"taps shape {h.shape} does not match params {self.params.shape}")
        if not np.all(np.isfinite(h)):
            raise ParameterError("channel taps must be finite")
        h.flags.writeable = False
        norms = np.sqrt(np.sum(np.abs(h) ** 2, axis=(1, 2)))
        norms.flags.writeable = False
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "norms", norms)

    @classmethod
    def from_taps(cls, h, decay_time: float = math.inf, seed: int = 0) -> "ChannelSet":
        """Wrap a hand-built tap array (1-D, 2-D or 3-D; missing leading axes are users, antennas)."""
        h = np.asarray(h, dtype=np.complex128)
        while h.ndim < 3:
            h = h[np.newaxis]
        params = ChannelParams(
            num_users=h.shape[0],
            num_antennas=h.shape[1],
            num_taps=h.shape[2],
            decay_time=decay_time,
            normalize_ensemble=False,
            seed=seed,
        )
        return cls(h, params)

    @property
    def num_users(self) -> int:
        return self.h.shape[0]

    @property
    def num_antennas(self) -> int:
        return self.h.shape[1]

    @property
    def num_taps(self) -> int:
        return self.h.shape[2]

    def __eq__(self, other):
        if not isinstance(other, ChannelSet):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.h, other.h)

    __hash__ = None


def _row(seed: int, user: int, antenna: int, amplitude: np.ndarray) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, user, antenna])))
    z = rng.standard_normal((2, amplitude.size))
    return (z[0] + 1j * z[1]) * (amplitude / math.sqrt(2.0))


def generate(params: ChannelParams) -> ChannelSet:
    """Draw one channel realization for every (user, antenna) pair."""
    if not isinstance(params, ChannelParams):
        raise ParameterError("generate() expects ChannelParams")
    profile = tap_power_profile(params.decay_time, params.num_taps)
    amplitude = np.sqrt(profile)
    if params.normalize_ensemble:
        amplitude = amplitude / math.sqrt(profile.sum())
    h = np.empty(params.shape, dtype=np.complex128)
    for i in range(params.num_users):
        for m in range(params.num_antennas):
            h[i, m] = _row(int(params.seed), i, m, amplitude)
    if params.normalize_realization:
        h /= np.sqrt(np.sum(np.abs(h) ** 2, axis=(1, 2), keepdims=True))
    return ChannelSet(h, params)


# --- binary CIR files -------------------------------------------------------

_HEADER_KEYS = ("n", "m", "l", "tau", "seed", "normalized")


def save(ch: ChannelSet, path) -> None:
    """Write ``ch`` as a JSON header line followed by little-endian (re, im) float64 pairs."""
    p = ch.params
    header = {
        "n": ch.num_users,
        "m": ch.num_antennas,
        "l": ch.num_taps,
        "tau": p.decay_time,
        "seed": int(p.seed),
        "normalized": bool(p.normalize_ensemble),
        "unit_energy": bool(p.normalize_realization),
    }
    payload = np.ascontiguousarray(ch.h).view(np.float64).astype("<f8", copy=False)
    with open(Path(path), "wb") as fh:
        fh.write(json.dumps(header, separators=(",", ":")).encode("utf-8") + b"\n")
        fh.write(payload.tobytes())


def load(path) -> ChannelSet:
    """Read a file written by :func:`save`; the result compares equal to the original."""
    raw = Path(path).read_bytes()
    newline = raw.find(b"\n")
    if newline < 0:
        raise FileFormatError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:newline].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"{path}: header is not valid JSON ({exc})") from None
    if not isinstance(header, dict) or any(k not in header for k in _HEADER_KEYS):
        raise FileFormatError(f"{path}: header must contain keys {_HEADER_KEYS}")
    try:
        n, m, l = (int(header[k]) for k in ("n", "m", "l"))
        params = ChannelParams(
            num_users=n,
            num_antennas=m,
            num_taps=l,
            decay_time=float(header["tau"]),
            normalize_ensemble=bool(header["normalized"]),
            normalize_realization=bool(header.get("unit_energy", False)),
            seed=int(header["seed"]),
        )
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: bad header values ({exc})") from None

    body = raw[newline + 1 :]
    expected = n * m * l * 16
    if len(body) < expected:
        raise TruncatedFileError(f"{path}: payload has {len(body)} bytes, header needs {expected}")
    if len(body) > expected:
        raise DimensionError(f"{path}: payload has {len(body) - expected} bytes beyond n*m*l values")
    h = np.frombuffer(body, dtype="<f8").astype(np.float64).view(np.complex128).reshape(n, m, l)
    return ChannelSet(h, params)
