"""Standard Gaussian tail Q(x) = P(N(0,1) >= x) and its base-2 logarithm."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc

SWITCH_POINT = 8.0
_LN2 = math.log(2.0)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_finite(x):
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError("Gaussian tail requires finite input")
    return arr


def q_tail(x):
    """Complementary CDF of the standard normal, ``0.5 * erfc(x / sqrt(2))``.

    Accepts scalars or arrays; scalars come back as Python floats.
    """
    arr = _check_finite(x)
    out = 0.5 * erfc(arr / math.sqrt(2.0))
    return float(out) if out.ndim == 0 else out


def _log_q_series(x: np.ndarray) -> np.ndarray:
    """ln Q(x) for x >= SWITCH_POINT from the asymptotic Mills-ratio series.

    ln Q(x) = -x^2/2 - ln(x sqrt(2 pi)) + ln(1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)
    The divergent series is cut at its smallest term (below 1e-14 at x = 8).
    """
    inv2 = 1.0 / (x * x)
    total = np.ones_like(x)
    term = np.ones_like(x)
    for j in range(1, 64):
        nxt = -term * (2 * j - 1) * inv2
        if np.all(np.abs(nxt) < 1e-17) or np.any(np.abs(nxt) > np.abs(term)):
            break
        term = nxt
        total = total + term
    return -0.5 * x * x - np.log(x) - _HALF_LOG_2PI + np.log(total)


def log2_q_tail(x):
    """log2 Q(x), accurate where Q itself underflows.

    Below zero the value is ``log1p(-Q(-x))``; on [0, 8] it is the log of
    :func:`q_tail`; above 8 it comes from the asymptotic series.
    """
    arr = _check_finite(x)
    flat = np.atleast_1d(arr).astype(np.float64)
    out = np.empty_like(flat)

    neg = flat < 0
    mid = (flat >= 0) & (flat <= SWITCH_POINT)
    big = flat > SWITCH_POINT
    if neg.any():
        out[neg] = np.log1p(-0.5 * erfc(-flat[neg] / math.sqrt(2.0))) / _LN2
    if mid.any():
        out[mid] = np.log2(0.5 * erfc(flat[mid] / math.sqrt(2.0)))
    if big.any():
        out[big] = _log_q_series(flat[big]) / _LN2

    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


def ln_q_tail(x):
    """Natural-log counterpart of :func:`log2_q_tail`."""
    val = log2_q_tail(x)
    return val * _LN2
