"""Counter-based random streams shared by both parties and by the harness.

Every random quantity in the package is drawn from a :class:`CounterStream`.
The generator is SplitMix64 evaluated at an explicit counter::

    word(key, i) = mix64(key + (i + 1) * GOLDEN)      (mod 2**64)

    mix64(z):  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
               z = (z ^ (z >> 27)) * 0x94D049BB133111EB
               return z ^ (z >> 31)

with ``GOLDEN = 0x9E3779B97F4A7C15``.  For a fixed key this is exactly the
SplitMix64 output sequence started from state ``key``, but any position can
be computed without generating its predecessors.

Frozen variate mappings (replayed by the acceptance tests):

* uniform   ``u = (w >> 11) * 2**-53``                 in [0, 1)
* normal    ``z = ndtri(((w >> 11) + 0.5) * 2**-53)``  (inverse CDF)
* sign      ``+1`` if the top bit of ``w`` is 0 else ``-1``

Seeds for independent roles are derived with :func:`derive_seed`, which packs
``(tag, index, rep)`` into 64 bits and mixes it with the master seed through
the bijection ``mix64``; for a fixed master seed the mapping is injective.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtri

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_S30, _S27, _S31, _S11 = (np.uint64(s) for s in (30, 27, 31, 11))
_TWO_M53 = 2.0**-53

# role tags for derive_seed (8 bits)
TAG_SOURCE = 1
TAG_CODEBOOK = 2
TAG_PROJECTION = 3
TAG_LIMIT = 4
TAG_TRIAL = 5
TAG_ROW = 6

_INDEX_BITS = 32
_REP_BITS = 24


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a Python int (reference, scalar)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized :func:`mix64`; ``z`` must be a uint64 array (wraps mod 2**64)."""
    z = np.asarray(z, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _S30)) * _U_M1
        z = (z ^ (z >> _S27)) * _U_M2
    return z ^ (z >> _S31)


def counter_words(key: int, start: int, count: int) -> np.ndarray:
    """Words ``start, ..., start + count - 1`` of the stream keyed by ``key``."""
    idx = np.arange(start + 1, start + 1 + count, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(key & MASK64) + idx * _U_GOLDEN
    return mix64_array(z)


def derive_seed(master: int, tag: int, index: int = 0, rep: int = 0) -> int:
    """Seed for one role of one trial/repetition.

    ``tag < 2**8``, ``index < 2**32`` and ``rep < 2**24``; within those ranges
    distinct tuples give distinct seeds for the same master.
    """
    if not 0 <= tag < 1 << 8:
        raise ValueError(f"tag out of range: {tag}")
    if not 0 <= index < 1 << _INDEX_BITS:
        raise ValueError(f"index out of range: {index}")
    if not 0 <= rep < 1 << _REP_BITS:
        raise ValueError(f"rep out of range: {rep}")
    packed = (tag << (_INDEX_BITS + _REP_BITS)) | (index << _REP_BITS) | rep
    return mix64(mix64(master) ^ packed)


class CounterStream:
    """Sequential reader over the counter-based generator.

    The only state is the read position, so two readers created with the same
    key see the same values in the same order.
    """

    def __init__(self, key: int, position: int = 0):
        self.key = int(key) & MASK64
        self.position = int(position)

    def __repr__(self):
        return f"CounterStream(key={self.key:#x}, position={self.position})"

    def words(self, count: int) -> np.ndarray:
        out = counter_words(self.key, self.position, count)
        self.position += count
        return out

    def uniforms(self, count: int) -> np.ndarray:
        return (self.words(count) >> _S11).astype(np.float64) * _TWO_M53

    def uniform(self) -> float:
        return float(self.uniforms(1)[0])

    def normals(self, count: int) -> np.ndarray:
        u = ((self.words(count) >> _S11).astype(np.float64) + 0.5) * _TWO_M53
        return ndtri(u)

    def normal(self) -> float:
        return float(self.normals(1)[0])

    def signs(self, count: int) -> np.ndarray:
        top = (self.words(count) >> np.uint64(63)).astype(np.float64)
        return 1.0 - 2.0 * top
