"""Shared-randomness sign codebook, generated lazily column by column.

Column ``j`` (1-based) of the n x 2^k matrix is a function of ``(seed, j)``:

    col_key(j)  = mix64(mix64(seed ^ SALT) + j * GOLDEN)
    word(j, w)  = mix64(col_key(j) + (w + 1) * GOLDEN),   w = 0 .. ceil(n/64) - 1
    U[i, j]     = +1 if bit (i-1) % 64 of word(j, (i-1) // 64) is 0 else -1

so either party can rebuild any single column without touching the others.
Dot products unpack each 64-entry word into signs and reduce every column
with numpy's pairwise summation along a contiguous row, which gives the same
value for a column whether it is evaluated alone or inside a scan block.
"""

from __future__ import annotations

import numpy as np

from .errors import ResourceRefusal, SpecError
from .rng import GOLDEN, MASK64, mix64, mix64_array

SALT = 0xC0DEB00C5EED5A17
HARD_SCAN_LIMIT = 2**40
# entries materialized per scan block
_BLOCK_ENTRIES = 1 << 21

_U_GOLDEN = np.uint64(GOLDEN)


class Codebook:
    """The n x 2^k matrix of i.i.d. uniform +-1 entries held by both parties."""

    def __init__(self, seed: int, n: int, k: int):
        if n < 1:
            raise SpecError("codebook column length must be >= 1")
        if k < 1:
            raise SpecError("codebook needs k >= 1")
        self.seed = int(seed) & MASK64
        self.n = int(n)
        self.k = int(k)
        self.n_words = (self.n + 63) // 64
        self._base = mix64(self.seed ^ SALT)

    def __repr__(self):
        return f"Codebook(seed={self.seed:#x}, n={self.n}, k={self.k})"

    @property
    def size(self) -> int:
        return 1 << self.k

    def _check_index(self, j: int):
        if not 1 <= j <= self.size:
            raise IndexError(f"column {j} outside [1, 2^{self.k}]")

    def column_words(self, cols: np.ndarray) -> np.ndarray:
        """Packed words, shape (len(cols), n_words), for 1-based column indices."""
        cols = np.asarray(cols, dtype=np.uint64)
        with np.errstate(over="ignore"):
            keys = mix64_array(np.uint64(self._base) + cols * _U_GOLDEN)
            offs = np.arange(1, self.n_words + 1, dtype=np.uint64) * _U_GOLDEN
            return mix64_array(keys[:, None] + offs[None, :])

    def column_signs(self, cols) -> np.ndarray:
        """Float +-1 matrix of shape (len(cols), n)."""
        words = np.ascontiguousarray(self.column_words(np.atleast_1d(cols)).astype("<u8"))
        bits = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")[:, : self.n]
        return 1.0 - 2.0 * bits

    def column(self, j: int) -> np.ndarray:
        self._check_index(j)
        return self.column_signs([j])[0]

    def _dots(self, cols, x: np.ndarray) -> np.ndarray:
        return (self.column_signs(cols) * x).sum(axis=1)

    def column_dot(self, j: int, x) -> float:
        """U_j . x without materializing the matrix."""
        self._check_index(j)
        x = self._check_vector(x)
        return float(self._dots([j], x)[0])

    def _check_vector(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise SpecError(f"vector length {x.shape} does not match codebook n={self.n}")
        return x

    def scan_limit(self, scan_cap: int | None = None, allow_huge: bool = False) -> int:
        limit = self.size if scan_cap is None else min(int(scan_cap), self.size)
        if limit > HARD_SCAN_LIMIT and not allow_huge:
            raise ResourceRefusal(
                f"scan of {limit} columns exceeds 2^40; pass allow_huge=True to force it")
        return limit

    def find_first_hit(self, x, threshold: float, scan_cap: int | None = None,
                       allow_huge: bool = False) -> int | None:
        """Least j in 1..min(2^k, scan_cap) with U_j . x >= threshold, else None."""
        x = self._check_vector(x)
        limit = self.scan_limit(scan_cap, allow_huge)
        if threshold > np.abs(x).sum():
            return None
        block = max(1, min(4096, _BLOCK_ENTRIES // self.n))
        start = 1
        while start <= limit:
            stop = min(limit, start + block - 1)
            cols = np.arange(start, stop + 1, dtype=np.uint64)
            hits = np.flatnonzero(self._dots(cols, x) >= threshold)
            if hits.size:
                return start + int(hits[0])
            start = stop + 1
        return None
