import numpy as np
import pytest

from distcorr.errors import SpecError
from distcorr.model import (
    GAUSSIAN,
    RADEMACHER,
    CorrelationVector,
    SampleBlock,
    sample_block,
    sample_pair_gaussian,
    sample_pair_rademacher,
)
from distcorr.rng import CounterStream


def test_correlation_vector_validation():
    with pytest.raises(SpecError):
        CorrelationVector([0.8, 0.8])
    with pytest.raises(SpecError):
        CorrelationVector([1.5])
    with pytest.raises(SpecError):
        CorrelationVector([])
    rho = CorrelationVector([0.6, 0.8])
    assert rho.d == 2 and rho.norm == pytest.approx(1.0)
    assert CorrelationVector.null(3).is_null
    assert CorrelationVector.equal(0.5, 4).norm == pytest.approx(0.5)


def test_correlation_vector_is_read_only():
    rho = CorrelationVector([0.1, 0.2])
    with pytest.raises(ValueError):
        rho.rho[0] = 0.5


def test_gaussian_full_correlation_copies_x():
    s = CounterStream(1)
    for _ in range(20):
        pair = sample_pair_gaussian(CorrelationVector([1.0]), s)
        assert pair.y == pair.x[0]


def test_rademacher_full_correlation_copies_x():
    block = sample_block(CorrelationVector([1.0]), 1000, RADEMACHER, CounterStream(2))
    assert np.array_equal(block.xs[:, 0], block.ys)


def test_rademacher_requires_l1_at_most_one():
    with pytest.raises(SpecError):
        sample_pair_rademacher(CorrelationVector([0.6, 0.6]), CounterStream(0))


@pytest.mark.parametrize("kind", [GAUSSIAN, RADEMACHER])
def test_null_is_uncorrelated(kind):
    n = 100_000
    block = sample_block(CorrelationVector.null(3), n, kind, CounterStream(3))
    for i in range(3):
        corr = np.corrcoef(block.xs[:, i], block.ys)[0, 1]
        assert abs(corr) <= 4 / np.sqrt(n)


@pytest.mark.parametrize("kind, rho", [(GAUSSIAN, [0.6, 0.0]), (RADEMACHER, [0.3, 0.2])])
def test_cross_moment(kind, rho):
    block = sample_block(CorrelationVector(rho), 100_000, kind, CounterStream(4))
    moments = block.xs.T @ block.ys / block.n
    np.testing.assert_allclose(moments, rho, atol=0.02)


def test_rademacher_outputs_are_signs():
    block = sample_block(CorrelationVector([0.3, -0.4]), 5000, RADEMACHER, CounterStream(5))
    assert set(np.unique(block.ys)) <= {-1.0, 1.0}
    assert set(np.unique(block.xs)) <= {-1.0, 1.0}


def test_gaussian_second_moment():
    block = sample_block(CorrelationVector([0.5]), 10**6, GAUSSIAN, CounterStream(6))
    assert np.mean(block.ys**2) == pytest.approx(1.0, abs=0.005)


@pytest.mark.parametrize("kind", [GAUSSIAN, RADEMACHER])
def test_block_of_one_is_a_pair(kind):
    rho = CorrelationVector([0.2, 0.3])
    block = sample_block(rho, 1, kind, CounterStream(8))
    sampler = sample_pair_gaussian if kind == GAUSSIAN else sample_pair_rademacher
    pair = sampler(rho, CounterStream(8))
    assert np.array_equal(block.xs[0], pair.x) and block.ys[0] == pair.y


@pytest.mark.parametrize("kind", [GAUSSIAN, RADEMACHER])
def test_same_seed_same_block(kind):
    rho = CorrelationVector([0.2, 0.3])
    a = sample_block(rho, 500, kind, CounterStream(9))
    b = sample_block(rho, 500, kind, CounterStream(9))
    assert a.xs.tobytes() == b.xs.tobytes() and a.ys.tobytes() == b.ys.tobytes()


def test_block_shape_checks():
    with pytest.raises(SpecError):
        SampleBlock(np.zeros((3, 2)), np.zeros(4))
    with pytest.raises(SpecError):
        sample_block(CorrelationVector([0.1]), 0, GAUSSIAN, CounterStream(0))
    with pytest.raises(SpecError):
        sample_block(CorrelationVector([0.1]), 5, "uniform", CounterStream(0))
