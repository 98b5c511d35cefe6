import itertools
import math

import numpy as np
import pytest
from scipy import stats

from distcorr.codebook import Codebook
from distcorr.model import GAUSSIAN, RADEMACHER, CorrelationVector, sample_block
from distcorr.params import BoostPlan, one_sided_params
from distcorr.limit import (
    column_tail_log,
    hit_probability,
    hit_probability_from_log,
    normal_tail,
    norm_ratio,
    p2_statistic,
    run_1d_limit,
    run_ddim_limit,
    sample_hit_column,
)
from distcorr.protocol import BitLedger, Verdict, repetition_seeds, run_two_sided
from distcorr.rng import TAG_SOURCE, CounterStream, derive_seed


def all_columns(n):
    return np.array(list(itertools.product([-1.0, 1.0], repeat=n)))


def exact_tail(x, t):
    return float(np.mean(all_columns(len(x)) @ x >= t - 1e-9))


@pytest.mark.parametrize("seed", range(4))
def test_continuous_tail_against_enumeration(seed):
    x = np.random.default_rng(seed).normal(size=16)
    for frac in (0.2, 0.35, 0.5, 0.65, 0.8):
        t = frac * np.abs(x).sum()
        exact = exact_tail(x, t)
        approx = math.exp(column_tail_log(x, t))
        # saddlepoint relative error shrinks with n; 10% is loose for n = 16
        assert approx == pytest.approx(exact, rel=0.1)


@pytest.mark.parametrize("d", [2, 3, 4])
def test_lattice_tail_against_enumeration(d):
    rng = np.random.default_rng(d)
    xs = rng.choice([-1.0, 1.0], size=(14, d))
    xt = xs @ (rng.choice([-1.0, 1.0], size=d) / math.sqrt(d))
    for frac in (0.1, 0.3, 0.5, 0.7):
        t = frac * np.abs(xt).sum()
        exact = exact_tail(xt, t)
        assert math.exp(column_tail_log(xt, t, 1 / math.sqrt(d))) == pytest.approx(exact, rel=0.08)


def test_equal_magnitudes_use_exact_binomial():
    x = np.full(30, 0.7)
    for t in (0.0, 3.5, 7.0, 14.7, 21.0):
        need = math.ceil((t / 0.7 + 30) / 2 - 1e-9)
        assert column_tail_log(x, t) == pytest.approx(stats.binom.logsf(need - 1, 30, 0.5), rel=1e-12)


def test_tail_beyond_l1_mass_is_impossible():
    x = np.array([1.0, -2.0, 0.5])
    assert column_tail_log(x, 3.6) == -math.inf
    assert column_tail_log(x, 3.5) == pytest.approx(math.log(1 / 8))


def test_tail_matches_gaussian_for_large_n():
    x = np.random.default_rng(1).normal(size=20000)
    sigma = np.linalg.norm(x)
    t = 2.0 * sigma
    assert math.exp(column_tail_log(x, t)) == pytest.approx(stats.norm.sf(2.0), rel=0.01)


def test_hit_probability_from_log():
    assert hit_probability_from_log(-math.inf, 10) == 0.0
    p = 1e-3
    assert hit_probability_from_log(math.log(p), 10) == pytest.approx(1 - (1 - p) ** 1024, rel=1e-12)
    tiny = -60.0
    assert hit_probability_from_log(tiny, 80) == pytest.approx(
        -math.expm1(-math.exp(80 * math.log(2) + tiny)), rel=1e-12)


@pytest.mark.parametrize("kind", ["continuous", "signs"])
def test_hit_column_has_exact_conditional_law(kind):
    rng = np.random.default_rng(7)
    n = 10
    x = rng.normal(size=n) if kind == "continuous" else rng.choice([-1.0, 1.0], size=n)
    cols = all_columns(n)
    t = 0.5 * np.abs(x).sum()
    ok = cols @ x >= t - 1e-12
    support = {tuple(c) for c in cols[ok]}
    stream = CounterStream(3)
    draws = [tuple(sample_hit_column(x, t, stream)) for _ in range(6000)]
    assert set(draws) <= support
    counts = np.array([draws.count(c) for c in support])
    # uniform over the qualifying columns
    res = stats.chisquare(counts)
    assert res.pvalue > 1e-3


def test_normal_tail_sampler():
    stream = CounterStream(11)
    for c in (-1.0, 0.5, 2.0, 6.0):
        draws = np.array([normal_tail(c, stream) for _ in range(4000)])
        assert draws.min() >= c
        ref = stats.truncnorm(c, np.inf)
        assert stats.kstest(draws, ref.cdf).pvalue > 1e-3


def test_norm_ratio_laws():
    stream = CounterStream(2)
    g = np.array([norm_ratio(50, 1, GAUSSIAN, stream) for _ in range(4000)])
    assert stats.kstest(g * 50, stats.chi2(50).cdf).pvalue > 1e-3
    assert norm_ratio(50, 1, RADEMACHER, stream) == 1.0
    r = np.array([norm_ratio(10**5, 4, RADEMACHER, stream) for _ in range(2000)])
    assert r.mean() == pytest.approx(1.0, abs=1e-3)


def test_null_statistic_is_standard_normal_given_hit():
    p = one_sided_params(0.9, 0.9, 0.5)
    stream = CounterStream(5)
    stats_ = [p2_statistic(0.0, p, 1.0, stream) for _ in range(5000)]
    hits = np.array([s for s in stats_ if s is not None])
    assert len(hits) / 5000 == pytest.approx(hit_probability(p, 1.0), abs=0.03)
    assert stats.kstest(hits, "norm").pvalue > 1e-3


@pytest.mark.parametrize("kind", [GAUSSIAN, RADEMACHER])
@pytest.mark.parametrize("rho", [0.0, 0.9, -0.9])
def test_limit_engine_agrees_with_scan(kind, rho):
    p = one_sided_params(0.9, 0.9, 0.25)
    n, trials = 300, 400
    scan = limit = 0
    for i in range(trials):
        block = sample_block(CorrelationVector([rho]), n, kind,
                             CounterStream(derive_seed(17, TAG_SOURCE, i, 0)))
        book = Codebook(repetition_seeds(17, 0, i)[0], n, p.k)
        scan += int(run_two_sided(block.xs[:, 0], block.ys, book, p)[0])
        limit += int(run_1d_limit(rho, p, n, kind, 17, trial=i)[0])
    a, b = scan / trials, limit / trials
    pooled = math.sqrt(2 * max(a * (1 - a), 1e-3) / trials)
    assert abs(a - b) <= 4 * pooled


def test_large_n_route_runs():
    p = one_sided_params(0.5, 0.2, 0.1)
    v, ledger = run_1d_limit(0.5, p, 10**6, GAUSSIAN, 1, two_sided=False)
    assert v in (Verdict.DECLARE_CORRELATED, Verdict.DECLARE_NULL)
    assert ledger == BitLedger(74, 1)


def test_ddim_limit_ledger_and_determinism():
    inner = one_sided_params(0.9, 0.9, 0.25)
    plan = BoostPlan(0.3, 0.1, 5, 0.6)
    rho = CorrelationVector([0.6, 0.0, 0.0])
    a = run_ddim_limit(rho, plan, inner, 200, GAUSSIAN, 4, trial=2)
    b = run_ddim_limit(rho, plan, inner, 200, GAUSSIAN, 4, trial=2)
    assert a == b
    assert a[1] == BitLedger(5 * inner.k, 5)
    assert run_ddim_limit(rho, plan, inner, 200, GAUSSIAN, 4, trial=2, strict=True)[1].total_bits == 5 * (inner.k + 1)
