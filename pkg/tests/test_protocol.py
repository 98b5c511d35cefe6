import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import naive
from distcorr.codebook import Codebook
from distcorr.errors import InsufficientSamples, SpecError
from distcorr.model import GAUSSIAN, RADEMACHER, CorrelationVector, sample_block
from distcorr.params import BoostPlan, DerivedParams, TestSpec, binary_params, one_sided_params
from distcorr.protocol import (
    BitLedger,
    Message,
    ProjectionState,
    Verdict,
    ddim_repetition,
    message_bits,
    p1_encode_one_sided,
    p2_decide_one_sided,
    project_ddim,
    repetition_seeds,
    run_binary,
    run_ddim,
    run_one_sided,
    run_two_sided,
    vote,
)
from distcorr.rng import CounterStream
from test_codebook import ref_matrix


def instance(i):
    """Seeded small instance: n <= 16, k <= 6."""
    rng = np.random.default_rng(1000 + i)
    n = int(rng.integers(1, 17))
    k = int(rng.integers(1, 7))
    rho = float(rng.uniform(-1, 1))
    block = sample_block(CorrelationVector([rho]), n, [GAUSSIAN, RADEMACHER][i % 2],
                         CounterStream(i))
    params = DerivedParams(r=float(rng.uniform(0.05, 1.5)), theta=float(rng.uniform(0.05, 1)), k=k)
    return block.xs[:, 0], block.ys, Codebook(int(rng.integers(0, 2**63)), n, k), params


@pytest.mark.parametrize("i", range(200))
def test_parties_match_full_matrix_reference(i):
    x, y, book, p = instance(i)
    mat = ref_matrix(book.seed, book.n, book.k)
    msg = p1_encode_one_sided(x, book, p.r)
    assert msg.index == naive.p1(x, mat, p.r)
    assert int(p2_decide_one_sided(y, msg, book, p.theta, p.r)) == naive.p2(y, msg.index, mat, p.theta, p.r)
    verdict, ledger = run_two_sided(x, y, book, p)
    assert int(verdict) == naive.two_sided(x, y, mat, p.theta, p.r)
    assert ledger == BitLedger(book.k, 1)


def test_sentinel_forces_null():
    book = Codebook(1, 4, 2)
    msg = Message(None, 2)
    assert msg.is_sentinel
    assert p2_decide_one_sided(np.ones(4), msg, book, 0.1, 0.1) is Verdict.DECLARE_NULL


def test_impossible_threshold_sends_sentinel():
    book = Codebook(1, 4, 3)
    x = np.array([0.1, 0.2, -0.1, 0.3])
    assert p1_encode_one_sided(x, book, r=10.0).is_sentinel


def test_bit_costs():
    assert message_bits(7) == 7 and message_bits(7, strict=True) == 8
    assert Message(3, 5).bit_cost == 5 and Message(None, 5, strict=True).bit_cost == 6
    assert BitLedger(3, 1) + BitLedger(4, 1) == BitLedger(7, 2)
    x, y, book, p = instance(3)
    assert run_one_sided(x, y, book, p, strict=True)[1].total_bits == book.k + 1


def test_verdict_encoding():
    assert int(Verdict.DECLARE_CORRELATED) == 0 and int(Verdict.DECLARE_NULL) == 1


def test_two_sided_is_symmetric_in_y():
    for i in range(50):
        x, y, book, p = instance(i)
        assert run_two_sided(x, y, book, p) == run_two_sided(x, -y, book, p)


def test_two_sided_accepts_whenever_one_sided_does():
    for i in range(100):
        x, y, book, p = instance(i)
        one = run_one_sided(x, y, book, p)[0]
        two = run_two_sided(x, y, book, p)[0]
        assert two <= one


def test_binary_runs_one_sided_mechanics():
    p = binary_params(0.9, 0.3, 0.5, 0.5)
    for i in range(20):
        x, y, book, _ = instance(i)
        assert run_binary(x, y, book, p) == run_one_sided(x, y, book, p)


def test_projection_state():
    proj = ProjectionState.draw(42, 9)
    assert proj.d == 9
    assert np.allclose(np.abs(proj.r_vec), 1 / 3)
    assert np.linalg.norm(proj.r_vec) == pytest.approx(1.0)
    xs = np.arange(18.0).reshape(2, 9)
    np.testing.assert_allclose(project_ddim(xs, proj), xs @ proj.r_vec)
    with pytest.raises(SpecError):
        project_ddim(np.ones((3, 4)), proj)


def small_ddim_case(seed, d, m, rho_scale):
    rng = np.random.default_rng(seed)
    rho = rng.uniform(-1, 1, size=d)
    rho *= rho_scale / np.linalg.norm(rho)
    n = int(rng.integers(4, 13))
    blocks = [sample_block(CorrelationVector(rho), n, GAUSSIAN, CounterStream(seed * 100 + rep))
              for rep in range(m)]
    inner = DerivedParams(r=0.6, theta=0.4, k=int(rng.integers(2, 6)))
    plan = BoostPlan(0.3, 0.1, m, 0.6)
    return blocks, inner, plan


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 5), st.integers(1, 5), st.floats(0, 0.95))
def test_ddim_matches_independent_reimplementation(seed, d, m, scale):
    blocks, inner, plan = small_ddim_case(seed, d, m, scale)
    master = seed * 7 + 1
    seeds = [repetition_seeds(master, rep) for rep in range(m)]
    want = naive.ddim([(b.xs, b.ys) for b in blocks], d, plan, inner,
                      [s[0] for s in seeds], [s[1] for s in seeds])
    verdict, ledger = run_ddim((b.xs for b in blocks), (b.ys for b in blocks),
                               TestSpec(0.5, 0.1, 0.1, d), plan, inner, master)
    assert int(verdict) == want
    assert ledger == BitLedger(m * inner.k, m)


def test_ddim_repetitions_compose():
    blocks, inner, plan = small_ddim_case(5, 3, 4, 0.8)
    votes = [ddim_repetition(b.xs, b.ys, 3, inner, 9, rep)[0] for rep, b in enumerate(blocks)]
    verdict, _ = run_ddim((b.xs for b in blocks), (b.ys for b in blocks),
                          TestSpec(0.5, 0.1, 0.1, 3), plan, inner, 9)
    assert verdict == vote(votes, plan)


def test_ddim_runs_out_of_samples():
    blocks, inner, plan = small_ddim_case(1, 2, 3, 0.5)
    with pytest.raises(InsufficientSamples):
        run_ddim((b.xs for b in blocks[:2]), (b.ys for b in blocks[:2]),
                 TestSpec(0.5, 0.1, 0.1, 2), plan, inner, 0)
    with pytest.raises(InsufficientSamples):
        vote([Verdict.DECLARE_NULL], plan)


def test_ddim_rejects_wrong_width():
    blocks, inner, plan = small_ddim_case(1, 2, 1, 0.5)
    with pytest.raises(SpecError):
        run_ddim((b.xs for b in blocks), (b.ys for b in blocks),
                 TestSpec(0.5, 0.1, 0.1, 3), plan, inner, 0)


def test_vote_threshold_is_strict():
    plan = BoostPlan(0.2, 0.2, 4, 0.5)
    N, C = Verdict.DECLARE_NULL, Verdict.DECLARE_CORRELATED
    assert vote([N, N, C, C], plan) is C
    assert vote([N, N, N, C], plan) is N


def test_scan_engine_separates_hypotheses():
    p = one_sided_params(0.9, 0.9, 0.5)
    n = 400

    def accepted(rho):
        hits = 0
        for i in range(40):
            block = sample_block(CorrelationVector([rho]), n, GAUSSIAN, CounterStream(i))
            verdict, _ = run_two_sided(block.xs[:, 0], block.ys, Codebook(i + 1, n, p.k), p)
            hits += verdict is Verdict.DECLARE_CORRELATED
        return hits

    # about 80% against 2.5% on this spec
    assert accepted(0.95) >= 24
    assert accepted(0.0) <= 6
