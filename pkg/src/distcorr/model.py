"""Samplers for the correlated source under both hypotheses.

Gaussian source:   X ~ N(0, I_d),  Y = rho^T X + sqrt(1 - |rho|_2^2) Z.
Rademacher source: X uniform on {-1, +1}^d,  Y = +1 w.p. (1 + rho^T X) / 2.

Stream consumption is fixed so that a block of ``n`` rows is the same as
``n`` pairs when ``n == 1``: first all ``n * d`` X-variates (row-major), then
``n`` variates for Y.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SpecError
from .rng import CounterStream

GAUSSIAN = "gaussian"
RADEMACHER = "rademacher"
SOURCE_KINDS = (GAUSSIAN, RADEMACHER)

_NORM_SLACK = 1e-12


@dataclass(frozen=True)
class CorrelationVector:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.atleast_1d(np.asarray(self.rho, dtype=np.float64))
        if rho.ndim != 1 or rho.size < 1:
            raise SpecError("rho must be a non-empty vector")
        if not np.all(np.isfinite(rho)) or np.any(np.abs(rho) > 1.0):
            raise SpecError("rho entries must lie in [-1, 1]")
        if np.linalg.norm(rho) > 1.0 + _NORM_SLACK:
            raise SpecError(f"|rho|_2 = {np.linalg.norm(rho):.6g} exceeds 1")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def null(cls, d: int) -> CorrelationVector:
        return cls(np.zeros(d))

    @classmethod
    def equal(cls, tau: float, d: int) -> CorrelationVector:
        """Equal coordinates tau / sqrt(d), the extremal point of the lower bounds."""
        return cls(np.full(d, tau / np.sqrt(d)))

    @property
    def d(self) -> int:
        return self.rho.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.rho))

    @property
    def is_null(self) -> bool:
        return not np.any(self.rho)


@dataclass(frozen=True)
class SamplePair:
    x: np.ndarray
    y: float


@dataclass(frozen=True)
class SampleBlock:
    xs: np.ndarray
    ys: np.ndarray

    def __post_init__(self):
        if self.xs.ndim != 2 or self.ys.ndim != 1 or self.xs.shape[0] != self.ys.size:
            raise SpecError("xs must be n x d and ys length n")

    @property
    def n(self) -> int:
        return self.ys.size


def _noise_scale(rho: CorrelationVector) -> float:
    return float(np.sqrt(max(0.0, 1.0 - float(rho.rho @ rho.rho))))


def _check_rademacher(rho: CorrelationVector):
    if np.abs(rho.rho).sum() > 1.0 + _NORM_SLACK:
        raise SpecError("Rademacher source requires |rho|_1 <= 1")


def _gaussian_rows(rho: CorrelationVector, n: int, stream: CounterStream):
    xs = stream.normals(n * rho.d).reshape(n, rho.d)
    z = stream.normals(n)
    ys = xs @ rho.rho + _noise_scale(rho) * z
    return xs, ys


def _rademacher_rows(rho: CorrelationVector, n: int, stream: CounterStream):
    _check_rademacher(rho)
    xs = stream.signs(n * rho.d).reshape(n, rho.d)
    u = stream.uniforms(n)
    p_plus = 0.5 * (1.0 + xs @ rho.rho)
    ys = np.where(u < p_plus, 1.0, -1.0)
    return xs, ys


def sample_pair_gaussian(rho: CorrelationVector, stream: CounterStream) -> SamplePair:
    xs, ys = _gaussian_rows(rho, 1, stream)
    return SamplePair(xs[0], float(ys[0]))


def sample_pair_rademacher(rho: CorrelationVector, stream: CounterStream) -> SamplePair:
    xs, ys = _rademacher_rows(rho, 1, stream)
    return SamplePair(xs[0], float(ys[0]))


def sample_block(rho: CorrelationVector, n: int, kind: str, stream: CounterStream) -> SampleBlock:
    """Draw ``n`` i.i.d. pairs from the ``kind`` source."""
    if n < 1:
        raise SpecError("n must be >= 1")
    if kind == GAUSSIAN:
        xs, ys = _gaussian_rows(rho, n, stream)
    elif kind == RADEMACHER:
        xs, ys = _rademacher_rows(rho, n, stream)
    else:
        raise SpecError(f"unknown source kind {kind!r}")
    return SampleBlock(xs, ys)
