"""Closed-form protocol parameters, boosting plans and lower bounds.

All logarithms written ``log`` below are base 2 and ``ln`` is natural, as in
the formulas being implemented; every bit count is in base 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .errors import SpecError
from .numerics import log2_q_tail

LN2 = math.log(2.0)

INNER_ALPHA = 1.0 / 56.0
INNER_BETA = 1.0 / 112.0
# lower bound on P(R in good set) for the random sign projection
PROJECTION_SUCCESS = 1.0 / 28.0


class OutOfRegimeWarning(UserWarning):
    """A bound was evaluated outside the hypotheses it was derived under."""


@dataclass(frozen=True)
class TestSpec:
    tau: float
    delta: float
    epsilon: float
    d: int = 1

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise SpecError(f"tau must be in (0, 1], got {self.tau}")
        if not 0.0 < self.delta < 1.0:
            raise SpecError(f"delta must be in (0, 1), got {self.delta}")
        if not 0.0 < self.epsilon < 1.0:
            raise SpecError(f"epsilon must be in (0, 1), got {self.epsilon}")
        if int(self.d) != self.d or self.d < 1:
            raise SpecError(f"d must be a positive integer, got {self.d}")


@dataclass(frozen=True)
class DerivedParams:
    r: float
    theta: float
    k: int

    def __post_init__(self):
        if not self.r > 0:
            raise SpecError("r must be positive")
        if self.k < 1:
            raise SpecError("k must be at least 1")

    @property
    def r_sq(self) -> float:
        return self.r * self.r

    def threshold(self, n: int) -> float:
        """P1's acceptance threshold r * sqrt(n)."""
        return self.r * math.sqrt(n)

    def hit_mass_log2(self) -> float:
        """log2(2^k Q(r)), the expected number of codebook hits under the null."""
        return self.k + log2_q_tail(self.r)


@dataclass(frozen=True)
class BoostPlan:
    alpha: float
    beta: float
    m: int
    t: float

    def __post_init__(self):
        if not self.alpha + self.beta < 1.0:
            raise SpecError("boosting needs alpha + beta < 1")
        if not self.alpha < self.t < 1.0 - self.beta:
            raise SpecError("vote threshold must lie in (alpha, 1 - beta)")
        if self.m < 1:
            raise SpecError("at least one repetition is required")

    def with_repetitions(self, m: int) -> BoostPlan:
        return BoostPlan(self.alpha, self.beta, m, self.t)


def _k_from(r: float, delta: float) -> int:
    return max(1, math.ceil(-log2_q_tail(r) + math.log2(math.log(3.0 / delta))))


def _check_one_sided_args(tau, delta, epsilon):
    if not 0.0 < tau <= 1.0:
        raise SpecError(f"tau must be in (0, 1], got {tau}")
    if not 0.0 < delta < 3.0:
        raise SpecError(f"delta must be in (0, 3), got {delta}")
    if not 0.0 < epsilon < 1.0:
        raise SpecError(f"epsilon must be in (0, 1), got {epsilon}")


def one_sided_params(tau: float, delta: float, epsilon: float) -> DerivedParams:
    """Threshold, acceptance fraction and message length for the one-sided test.

    a = log(1/eps) + log ln(3/delta) + 1,  b = (1 - tau^2) log(3/delta)
    r^2 = (2 ln 2 / tau^2) (sqrt a + sqrt b)^2,  theta = tau sqrt a / (sqrt a + sqrt b)
    k = ceil(log 1/Q(r) + log ln(3/delta))
    """
    _check_one_sided_args(tau, delta, epsilon)
    a = math.log2(1.0 / epsilon) + math.log2(math.log(3.0 / delta)) + 1.0
    if a <= 0:
        raise SpecError("log(1/eps) + log ln(3/delta) + 1 must be positive")
    b = (1.0 - tau * tau) * math.log2(3.0 / delta)
    sa, sb = math.sqrt(a), math.sqrt(b)
    r = math.sqrt(2.0 * LN2 / (tau * tau)) * (sa + sb)
    theta = tau * sa / (sa + sb)
    return DerivedParams(r=r, theta=theta, k=_k_from(r, delta))


def binary_params(rho0: float, rho1: float, delta: float, epsilon: float) -> DerivedParams:
    """Parameters for testing correlation rho0 against rho1 (0 < rho1 < rho0 < 1)."""
    if not 0.0 < rho1 < rho0 < 1.0:
        raise SpecError("binary test needs 0 < rho1 < rho0 < 1")
    _check_one_sided_args(rho0, delta, epsilon)
    a = (1.0 - rho1 * rho1) * math.log2(1.0 / epsilon) + math.log2(math.log(3.0 / delta)) + 1.0
    if a <= 0:
        raise SpecError("degenerate binary specification")
    b = (1.0 - rho0 * rho0) * math.log2(3.0 / delta)
    sa, sb = math.sqrt(a), math.sqrt(b)
    gap = rho0 - rho1
    r = math.sqrt(2.0 * LN2) * (sa + sb) / gap
    theta = rho1 + gap * sa / (sa + sb)
    return DerivedParams(r=r, theta=theta, k=_k_from(r, delta))


def k_sandwich(params: DerivedParams, delta: float) -> tuple[float, float, float]:
    """``(ln(3/delta), 2^k Q(r), 2 ln(3/delta))``; the middle should sit between."""
    lo = math.log(3.0 / delta)
    return lo, 2.0 ** params.hit_mass_log2(), 2.0 * lo


def median_plan(alpha: float, beta: float, delta: float, epsilon: float, *,
                printed_constant: bool = False) -> BoostPlan:
    """Repetitions and vote threshold amplifying an (alpha, beta) test to (delta, eps).

    The repetition count uses ``2 / (1 - beta - alpha)^2``, which is what the
    Hoeffding steps ``exp(-2m(t - alpha)^2)`` need with ``t = (1 - beta + alpha)/2``.
    ``printed_constant=True`` uses ``(1 - beta + alpha)^2`` instead.
    """
    if not (0.0 <= alpha < 1.0 and 0.0 <= beta < 1.0):
        raise SpecError("alpha and beta must lie in [0, 1)")
    if alpha + beta >= 1.0:
        raise SpecError("boosting needs alpha + beta < 1")
    if not (0.0 < delta < 1.0 and 0.0 < epsilon < 1.0):
        raise SpecError("delta and epsilon must lie in (0, 1)")
    gap = 1.0 - beta + alpha if printed_constant else 1.0 - beta - alpha
    log_term = max(math.log(1.0 / delta), math.log(1.0 / epsilon))
    m = max(1, math.ceil(2.0 / (gap * gap) * log_term))
    return BoostPlan(alpha=alpha, beta=beta, m=m, t=(1.0 - beta + alpha) / 2.0)


def ddim_inner_spec(tau: float, d: int, alpha: float = INNER_ALPHA,
                    beta: float = INNER_BETA) -> TestSpec:
    """One-dimensional spec run after the random sign projection."""
    if not 0.0 < tau <= 1.0 or int(d) != d or d < 1:
        raise SpecError("invalid tau or d")
    return TestSpec(tau / math.sqrt(2.0 * d), alpha, beta, 1)


def composite_errors(inner_alpha: float = INNER_ALPHA, inner_beta: float = INNER_BETA):
    """Pre-boost errors of project-then-test: (inner_alpha + 27/28, inner_beta)."""
    return inner_alpha + (1.0 - PROJECTION_SUCCESS), inner_beta


# --------------------------------------------------------------------------
# lower bounds

def _radical_gap(first: float, second: float) -> tuple[float, bool]:
    diff = math.sqrt(first) - math.sqrt(second)
    if diff < 0:
        return 0.0, True
    return diff * diff, False


def oneway_eps_in_regime(tau: float, delta: float, epsilon: float) -> bool:
    return delta + epsilon ** ((1.0 - tau) / (1.0 + tau)) <= 1.0


def _bound_args(tau, delta, epsilon, d=1):
    if not 0.0 < tau <= 1.0:
        raise SpecError(f"tau must be in (0, 1], got {tau}")
    if not (0.0 < delta < 1.0 and 0.0 < epsilon < 1.0):
        raise SpecError("delta and epsilon must lie in (0, 1)")
    if int(d) != d or d < 1:
        raise SpecError("d must be a positive integer")


def _lb_eps_raw(d, tau, delta, epsilon):
    rho_sq = tau * tau / d
    val, clamped = _radical_gap(math.log2(1.0 / epsilon),
                                (1.0 - rho_sq) * math.log2(1.0 / (1.0 - delta)))
    return val / rho_sq, clamped


def _lb_delta_raw(d, tau, delta, epsilon):
    rho_sq = tau * tau / d
    val, clamped = _radical_gap(math.log2(1.0 / (1.0 - epsilon)),
                                (1.0 - rho_sq) * math.log2(1.0 / delta))
    return val / rho_sq, clamped


def lb_oneway_eps(tau: float, delta: float, epsilon: float) -> float:
    """(1/tau^2)(sqrt(log 1/eps) - sqrt((1 - tau^2) log 1/(1-delta)))^2, clamped at 0.

    Warns with :class:`OutOfRegimeWarning` when delta + eps^((1-tau)/(1+tau)) > 1.
    """
    _bound_args(tau, delta, epsilon)
    if not oneway_eps_in_regime(tau, delta, epsilon):
        warnings.warn("delta + eps^((1-tau)/(1+tau)) > 1", OutOfRegimeWarning, stacklevel=2)
    return _lb_eps_raw(1, tau, delta, epsilon)[0]


def lb_oneway_delta(tau: float, delta: float, epsilon: float) -> float:
    """(1/tau^2)(sqrt(log 1/(1-eps)) - sqrt((1 - tau^2) log 1/delta))^2, clamped at 0."""
    _bound_args(tau, delta, epsilon)
    return _lb_delta_raw(1, tau, delta, epsilon)[0]


def lb_ddim(d: int, tau: float, delta: float, epsilon: float, which: str = "eps") -> float:
    """d-dimensional one-way bounds; ``tau^2`` becomes ``tau^2 / d`` throughout."""
    _bound_args(tau, delta, epsilon, d)
    if which == "eps":
        return _lb_eps_raw(d, tau, delta, epsilon)[0]
    if which == "delta":
        return _lb_delta_raw(d, tau, delta, epsilon)[0]
    raise SpecError(f"which must be 'eps' or 'delta', got {which!r}")


def lb_interactive(d: int, tau: float, delta: float, epsilon: float) -> float:
    """(d/tau^2)((1 - delta) log(1/eps) - 1), clamped at 0; holds for any rounds."""
    if not 0.0 < tau <= 1.0 or int(d) != d or d < 1:
        raise SpecError("invalid tau or d")
    if not (0.0 <= delta < 1.0 and 0.0 < epsilon < 1.0):
        raise SpecError("delta must lie in [0, 1) and epsilon in (0, 1)")
    return max(0.0, d / (tau * tau) * ((1.0 - delta) * math.log2(1.0 / epsilon) - 1.0))


def lb_estimation(d: int, tau: float, delta: float | None = None,
                  epsilon: float | None = None) -> float:
    """Communication needed to estimate rho to mean-squared error tau^2.

    For ``d >= 12`` this is ``d^2 / (768 tau^2)``.  Below 12 the constant is
    not available and the testing bound :func:`lb_interactive` at
    ``(delta, epsilon)`` is returned instead, so those must be given.
    """
    if not 0.0 < tau <= 1.0 or int(d) != d or d < 1:
        raise SpecError("invalid tau or d")
    if d >= 12:
        return d * d / (768.0 * tau * tau)
    if delta is None or epsilon is None:
        raise SpecError("d < 12: pass delta and epsilon to get the testing bound")
    return lb_interactive(d, tau, delta, epsilon)


@dataclass(frozen=True)
class RibbonPoint:
    """An exponent pair (p, q); hyper needs 1 <= q <= p, reverse needs p <= q <= 1."""

    p: float
    q: float
    kind: str = "hyper"

    def __post_init__(self):
        if self.kind == "hyper" and not 1.0 <= self.q <= self.p:
            raise SpecError("hypercontractivity needs 1 <= q <= p")
        if self.kind == "reverse" and not self.p <= self.q <= 1.0:
            raise SpecError("reverse hypercontractivity needs p <= q <= 1")
        if self.kind not in ("hyper", "reverse"):
            raise SpecError(f"unknown ribbon kind {self.kind!r}")

    def contains(self, rho: float) -> bool:
        return ribbon_check(self.p, self.q, rho, self.kind)


def ribbon_check(p: float, q: float, rho: float, kind: str = "hyper", *,
                 rtol: float = 1e-12) -> bool:
    """Membership of (p, q) in the Gaussian (reverse) hypercontractivity ribbon.

    hyper (1 <= q <= p):    (q - 1)/(p - 1) >= rho^2
    reverse (p <= q <= 1):  (1 - q)/(1 - p) >= rho^2
    Evaluated cross-multiplied with a tolerance of ``rtol`` times the size of
    the exponents, so boundary points such as p = 1 + w, q = 1 + rho^2 w
    count as members despite rounding in q - 1.
    """
    rho_sq = rho * rho
    if kind == "hyper":
        if not 1.0 <= q <= p:
            raise SpecError("hypercontractivity needs 1 <= q <= p")
        lhs, rhs = q - 1.0, rho_sq * (p - 1.0)
    elif kind == "reverse":
        if not p <= q <= 1.0:
            raise SpecError("reverse hypercontractivity needs p <= q <= 1")
        lhs, rhs = 1.0 - q, rho_sq * (1.0 - p)
    else:
        raise SpecError(f"unknown ribbon kind {kind!r}")
    return lhs >= rhs - rtol * max(abs(p), abs(q), 1.0)


def default_n(params: DerivedParams, cap: int = 10**6) -> int:
    """Heuristic sample size 10 * ceil(1/Q(r)), capped."""
    log2_inv = -log2_q_tail(params.r)
    if log2_inv > math.log2(cap):
        return cap
    return min(cap, 10 * math.ceil(2.0**log2_inv))
