"""Linear convolution along the last axis, direct or FFT-based.

Both routes broadcast over leading axes.  The direct route is a plain
multiply-accumulate and serves as the reference for the FFT route.
"""

import numpy as np
from scipy import signal

__all__ = ["convolve", "convolve_direct", "convolve_fft"]

_AUTO_DIRECT_LIMIT = 64


def convolve_direct(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    la, lb = a.shape[-1], b.shape[-1]
    lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    out = np.zeros(lead + (la + lb - 1,), dtype=np.result_type(a, b, np.complex128))
    if lb <= la:
        for k in range(lb):
            out[..., k : k + la] += a * b[..., k : k + 1]
    else:
        for k in range(la):
            out[..., k : k + lb] += b * a[..., k : k + 1]
    return out


def convolve_fft(a, b):
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
    a = np.broadcast_to(a, lead + a.shape[-1:])
    b = np.broadcast_to(b, lead + b.shape[-1:])
    return signal.fftconvolve(a, b, axes=-1)


def convolve(a, b, method="auto"):
    """Full linear convolution of ``a`` and ``b`` over their last axis.

    ``method`` is ``"direct"``, ``"fft"`` or ``"auto"`` (direct when the
    shorter operand has at most 64 samples).
    """
    if method == "auto":
        method = "direct" if min(np.shape(a)[-1], np.shape(b)[-1]) <= _AUTO_DIRECT_LIMIT else "fft"
    if method == "direct":
        return convolve_direct(a, b)
    if method == "fft":
        return convolve_fft(a, b)
    raise ValueError(f"unknown convolution method {method!r}")
