"""The codebook tests without the codebook scan, for message lengths too large to scan.

A literal scan visits about 1/Q(r) columns, which is 2^70 and more for
ordinary specs.  The scan is replaced by what it produces: given the
(projected) observations ``x``, the columns are i.i.d. uniform sign vectors,
so

* some column among the 2^k reaches ``t = r sqrt(n)`` with probability
  ``1 - (1 - p)^(2^k)``, where ``p = P(U . x >= t)`` for one uniform column;
* the first column that does is distributed as a uniform column conditioned
  on ``U . x >= t``, independently of ``y`` given ``x``.

Two routes implement this.

``n <= EXACT_N_MAX``: the data block is drawn exactly as for the scan engine
(same seeds).  ``p`` comes from the Lugannani-Rice saddlepoint formula in
Barndorff-Nielsen's r* form, with a continuity correction on lattices, or
from the exact binomial tail when all ``|x_i|`` are equal.  The hit column is
sampled exactly by rejection from the exponentially tilted sign law: propose
``P(U_i = 1) = 1 / (1 + exp(-2 s x_i))`` and accept a proposal with
``U . x = v >= t`` with probability ``exp(-s (v - t))``.  P2 then evaluates
``U . y`` on the real ``y``.  The saddlepoint value of ``p`` is the only
approximation.

``n > EXACT_N_MAX``: only sufficient statistics are simulated.  ``|x|^2 / n``
is drawn from its law, ``U . x`` is replaced by its Gaussian limit, and P2's
statistic is ``rho_eff s + sqrt(1 - rho_eff^2) g`` (all scaled by
``1/sqrt(n)``).  For the Gaussian source the only approximation is the
Gaussian limit of ``U . x``, whose relative tail error is of order
``r^4 / n``.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc, gammaincinv, ndtri
from scipy.stats import binom

from .model import GAUSSIAN, RADEMACHER, CorrelationVector, sample_block
from .numerics import ln_q_tail
from .params import BoostPlan, DerivedParams
from .protocol import BitLedger, ProjectionState, Verdict, message_bits, repetition_seeds, vote
from .rng import TAG_LIMIT, TAG_SOURCE, CounterStream, derive_seed

EXACT_N_MAX = 2**15

_LN2 = math.log(2.0)
_TINY_P = math.log(1e-8)
_HALF_ULP = 2.0**-54
# rejection-sampling proposals drawn per batch
_PROPOSALS = 64
_MAX_BATCHES = 100_000


# --------------------------------------------------------------------------
# tail of one uniform column

def _log_cosh(z: np.ndarray) -> np.ndarray:
    z = np.abs(z)
    return z + np.log1p(np.exp(-2.0 * z)) - _LN2


def _saddle(a: np.ndarray, t: float) -> float:
    """Root s > 0 of sum a_i tanh(s a_i) = t, for 0 < t < sum a_i."""
    def f(s):
        return float(np.dot(a, np.tanh(s * a))) - t
    hi = max(t / float(np.dot(a, a)), 1e-12)
    while f(hi) < 0.0:
        hi *= 2.0
    return brentq(f, 0.0, hi, xtol=1e-15, rtol=1e-13, maxiter=500)


def column_tail_log(x, t: float, unit: float | None = None) -> float:
    """ln P(U . x >= t) for a uniform sign vector U.

    ``unit`` is given when every ``x_i`` is an integer multiple of it; the
    support of ``U . x`` is then a lattice and a continuity correction is
    applied.  ``None`` means non-lattice.
    """
    a = np.abs(np.asarray(x, dtype=np.float64))
    a = a[a > 0.0]
    total = float(a.sum())
    if a.size == 0:
        return 0.0 if t <= 0.0 else -math.inf
    if t > total * (1.0 + 1e-12):
        return -math.inf
    if t >= total * (1.0 - 1e-12):
        # only the column matching every sign reaches the l1 mass
        return -a.size * _LN2
    if np.all(a == a[0]):
        # U . x = a0 (2B - m) with B ~ Bin(m, 1/2)
        m = a.size
        need = math.ceil((t / a[0] + m) / 2.0 - 1e-9)
        return float(binom.logsf(need - 1, m, 0.5))
    sigma = math.sqrt(float(np.dot(a, a)))
    lattice = None
    if unit is not None:
        ints = np.rint(a / unit).astype(np.int64)
        lattice = 2.0 * unit * float(np.gcd.reduce(ints))
        # smallest attainable value >= t, then step half a span back
        top = math.ceil((t - total) / lattice - 1e-9) * lattice + total
        t = top - 0.5 * lattice
    if t < 0.5 * sigma:
        return float(ln_q_tail(t / sigma))
    s = _saddle(a, t)
    k0 = float(_log_cosh(s * a).sum())
    k2 = float(np.dot(a * a, 1.0 / np.cosh(s * a) ** 2))
    w = math.sqrt(max(2.0 * (s * t - k0), 0.0))
    if lattice is None:
        u = s * math.sqrt(k2)
    else:
        u = 2.0 * math.sinh(0.5 * s * lattice) * math.sqrt(k2) / lattice
    if w < 1e-6:
        return float(ln_q_tail(t / sigma))
    return float(ln_q_tail(w + math.log(u / w) / w))


def hit_probability_from_log(log_p: float, k: int) -> float:
    """1 - (1 - p)^(2^k) from ln p."""
    if log_p == -math.inf:
        return 0.0
    if log_p < _TINY_P:
        log_miss = -math.exp(min(k * _LN2 + log_p, 700.0))
    else:
        log_miss = 2.0**k * math.log1p(-math.exp(log_p))
    return -math.expm1(log_miss)


def sample_hit_column(x, t: float, stream: CounterStream, s: float | None = None) -> np.ndarray:
    """A uniform sign vector conditioned on U . x >= t, exactly.

    Any tilt ``s >= 0`` gives the exact law; the saddlepoint tilt keeps the
    acceptance rate reasonable.
    """
    x = np.asarray(x, dtype=np.float64)
    if s is None:
        a = np.abs(x)
        a = a[a > 0]
        s = _saddle(a, min(t, 0.999 * float(a.sum()))) if t > 0 else 0.0
    p_plus = 1.0 / (1.0 + np.exp(-2.0 * s * x))
    for _ in range(_MAX_BATCHES):
        u = stream.uniforms(_PROPOSALS * x.size).reshape(_PROPOSALS, x.size)
        cols = np.where(u < p_plus, 1.0, -1.0)
        v = (cols * x).sum(axis=1)
        acc = stream.uniforms(_PROPOSALS)
        ok = np.flatnonzero((v >= t) & (acc < np.exp(-s * np.maximum(v - t, 0.0))))
        if ok.size:
            return cols[ok[0]]
    raise RuntimeError("rejection sampler did not accept a column")


def _lattice_unit(kind: str, d: int) -> float | None:
    # projected sign inputs are integer multiples of 1/sqrt(d)
    return 1.0 / math.sqrt(d) if kind == RADEMACHER else None


def exact_vote(xt: np.ndarray, y: np.ndarray, params: DerivedParams, kind: str, d: int,
               stream: CounterStream, two_sided: bool) -> Verdict:
    """One inner test on a real data block, the scan replaced by its law."""
    n = y.size
    t = params.r * math.sqrt(n)
    log_p = column_tail_log(xt, t, _lattice_unit(kind, d))
    if stream.uniform() >= hit_probability_from_log(log_p, params.k):
        return Verdict.DECLARE_NULL
    col = sample_hit_column(xt, t, stream)
    stat = float((col * y).sum())
    level = params.theta * params.r * math.sqrt(n)
    accept = abs(stat) >= level if two_sided else stat >= level
    return Verdict.DECLARE_CORRELATED if accept else Verdict.DECLARE_NULL


# --------------------------------------------------------------------------
# sufficient-statistic route for large n (all values scaled by 1/sqrt(n))

def norm_ratio(n: int, d: int, kind: str, stream: CounterStream) -> float:
    """Draw |x_tilde|^2 / n for n projected observations."""
    u = stream.uniform() + _HALF_ULP
    if kind == GAUSSIAN:
        return float(gammaincinv(0.5 * n, u)) * 2.0 / n
    if kind == RADEMACHER:
        if d == 1:
            return 1.0
        # x_tilde^2 has mean 1 and variance 2 - 2/d for sign inputs
        nu = 1.0 + math.sqrt((2.0 - 2.0 / d) / n) * float(ndtri(u))
        return max(nu, 1e-3)
    raise ValueError(f"unknown source kind {kind!r}")


def hit_probability(params: DerivedParams, nu: float) -> float:
    """P(some column among 2^k reaches r sqrt(n)) given |x|^2 = n nu, Gaussian limit."""
    return hit_probability_from_log(float(ln_q_tail(params.r / math.sqrt(nu))), params.k)


def normal_tail(c: float, stream: CounterStream) -> float:
    """Standard normal conditioned on being >= c."""
    if c < 1.0:
        u = stream.uniform() + _HALF_ULP
        return float(-ndtri(u * 0.5 * erfc(c / math.sqrt(2.0))))
    # Marsaglia's tail method: propose from x e^{-x^2/2} on [c, inf), accept w.p. c/x
    while True:
        u1, u2 = stream.uniforms(2)
        x = math.sqrt(c * c - 2.0 * math.log1p(-u1))
        if u2 * x <= c:
            return x


def p2_statistic(rho_eff: float, params: DerivedParams, nu: float,
                 stream: CounterStream) -> float | None:
    """P2's scaled statistic U_j . y / sqrt(n), or None when P1 found no column."""
    if stream.uniform() >= hit_probability(params, nu):
        return None
    root = math.sqrt(nu)
    s = root * normal_tail(params.r / root, stream)
    g = stream.normal()
    return rho_eff * s + math.sqrt(max(0.0, 1.0 - rho_eff * rho_eff)) * g


def decide(stat: float | None, params: DerivedParams, two_sided: bool) -> Verdict:
    if stat is None:
        return Verdict.DECLARE_NULL
    level = params.theta * params.r
    accept = abs(stat) >= level if two_sided else stat >= level
    return Verdict.DECLARE_CORRELATED if accept else Verdict.DECLARE_NULL


# --------------------------------------------------------------------------
# protocol runners

def limit_vote(rho: CorrelationVector, r_vec: np.ndarray, params: DerivedParams, n: int,
               kind: str, master_seed: int, trial: int, rep: int,
               two_sided: bool = True) -> Verdict:
    """One inner test with projection ``r_vec``, for repetition ``rep`` of ``trial``."""
    stream = CounterStream(derive_seed(master_seed, TAG_LIMIT, trial, rep))
    if n <= EXACT_N_MAX:
        src = CounterStream(derive_seed(master_seed, TAG_SOURCE, trial, rep))
        block = sample_block(rho, n, kind, src)
        xt = block.xs @ r_vec
        return exact_vote(xt, block.ys, params, kind, rho.d, stream, two_sided)
    rho_eff = float(np.dot(rho.rho, r_vec))
    nu = norm_ratio(n, rho.d, kind, stream)
    return decide(p2_statistic(rho_eff, params, nu, stream), params, two_sided)


def ddim_repetition_limit(rho: CorrelationVector, inner: DerivedParams, n: int, kind: str,
                          master_seed: int, rep: int, *, trial: int = 0) -> Verdict:
    _, proj_seed = repetition_seeds(master_seed, rep, trial)
    proj = ProjectionState.draw(proj_seed, rho.d)
    return limit_vote(rho, proj.r_vec, inner, n, kind, master_seed, trial, rep)


def run_1d_limit(rho: float, params: DerivedParams, n: int, kind: str, master_seed: int, *,
                 trial: int = 0, two_sided: bool = True,
                 strict: bool = False) -> tuple[Verdict, BitLedger]:
    """Scalar test; for n <= EXACT_N_MAX it sees the same data as the scan engine."""
    verdict = limit_vote(CorrelationVector([rho]), np.ones(1), params, n, kind,
                         master_seed, trial, 0, two_sided)
    return verdict, BitLedger(message_bits(params.k, strict), 1)


def run_ddim_limit(rho: CorrelationVector, plan: BoostPlan, inner: DerivedParams, n: int,
                   kind: str, master_seed: int, *, trial: int = 0,
                   strict: bool = False) -> tuple[Verdict, BitLedger]:
    """Counterpart of :func:`distcorr.protocol.run_ddim` with the same projections."""
    votes = [ddim_repetition_limit(rho, inner, n, kind, master_seed, rep, trial=trial)
             for rep in range(plan.m)]
    return vote(votes, plan), BitLedger(plan.m * message_bits(inner.k, strict), plan.m)
