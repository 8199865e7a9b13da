"""Stream determinism and sampler distribution checks."""

import math

import numpy as np
import pytest
import scipy.stats as st

from randmark.rand_core import (
    beta_block,
    gaussian_block,
    is_permutation,
    make_rng,
    random_permutation,
    rank_randomizer,
    sample_ar1_toeplitz,
    sample_beta,
    sample_gaussian,
    substream,
    uniform01,
    uniform_block,
)


def test_same_seed_same_sequence():
    a = uniform_block(make_rng(7), 50)
    b = uniform_block(make_rng(7), 50)
    assert a.tolist() == b.tolist()


def test_substream_same_label_identical():
    r = make_rng(123)
    s1 = substream(r, 1)
    s2 = substream(r, 1)
    assert uniform_block(s1, 20).tolist() == uniform_block(s2, 20).tolist()


def test_substream_independent_of_parent_position():
    fresh = substream(make_rng(9), 4)
    parent = make_rng(9)
    uniform_block(parent, 777)
    later = substream(parent, 4)
    assert uniform_block(fresh, 8).tolist() == uniform_block(later, 8).tolist()
    assert later.label_path == (4,)
    assert later.origin_seed == 9


def test_block_equals_scalar_draws():
    block = uniform_block(make_rng(11), 32)
    r = make_rng(11)
    assert [uniform01(r) for _ in range(32)] == block.tolist()
    gblock = gaussian_block(make_rng(11), 1)
    assert sample_gaussian(make_rng(11)) == gblock[0]


def test_seeds_42_43_disagree():
    a = uniform_block(make_rng(42), 100)
    b = uniform_block(make_rng(43), 100)
    assert int(np.count_nonzero(a != b)) >= 95


def test_uniform_open_interval():
    u = uniform_block(make_rng(3), 10**6)
    assert u.min() > 0.0
    assert u.max() < 1.0
    assert np.isfinite(np.log(u)).all()


def test_uniform_ks():
    u = uniform_block(make_rng(17), 10**5)
    assert st.kstest(u, "uniform").pvalue > 0.01


def test_substream_label_pairs_uncorrelated():
    r = make_rng(100)
    a = uniform_block(substream(r, 1), 10**4)
    b = uniform_block(substream(r, 2), 10**4)
    assert abs(np.corrcoef(a, b)[0, 1]) < 0.03


def test_gaussian_distribution():
    g = gaussian_block(make_rng(5), 10**5)
    assert abs(g.mean()) < 0.012
    assert abs(g.std() - 1.0) < 0.012
    assert st.kstest(g, "norm").pvalue > 0.01


def test_beta_means():
    b1 = beta_block(make_rng(21), 20.0, 20.0, 10**5)
    assert abs(b1.mean() - 0.5) < 0.005
    b2 = beta_block(make_rng(22), 20.0, 21.0, 10**5)
    assert abs(b2.mean() - 20.0 / 41.0) < 0.005
    assert b1.min() > 0.0 and b1.max() < 1.0


def test_beta_ks_against_scipy():
    b = beta_block(make_rng(23), 20.0, 19.4, 2 * 10**4)
    assert st.kstest(b, st.beta(20.0, 19.4).cdf).pvalue > 0.01
    small = beta_block(make_rng(24), 0.7, 2.3, 2 * 10**4)
    assert st.kstest(small, st.beta(0.7, 2.3).cdf).pvalue > 0.01


def test_beta_rejects_bad_shapes():
    with pytest.raises(ValueError):
        sample_beta(make_rng(1), 0.0, 2.0)
    with pytest.raises(ValueError):
        sample_beta(make_rng(1), 2.0, -1.0)


@pytest.mark.parametrize("rho", [0.3, 0.9])
def test_ar1_covariance(rho):
    k, reps = 5, 20000
    r = make_rng(int(rho * 10))
    xs = np.stack([sample_ar1_toeplitz(r, k, rho) for _ in range(reps)])
    target = rho ** np.abs(np.subtract.outer(np.arange(k), np.arange(k)))
    prods = xs[:, :, None] * xs[:, None, :]
    emp = prods.mean(axis=0)
    se = prods.std(axis=0) / math.sqrt(reps)
    assert (np.abs(emp - target) < 3.2 * se + 1e-12).all()


def test_ar1_edge_cases():
    x = sample_ar1_toeplitz(make_rng(8), 6, 1.0, mu=3.0)
    assert np.allclose(x, x[0])
    with pytest.raises(ValueError):
        sample_ar1_toeplitz(make_rng(8), 0, 0.5)
    with pytest.raises(ValueError):
        sample_ar1_toeplitz(make_rng(8), 5, 1.5)
    single = sample_ar1_toeplitz(make_rng(8), 1, 0.7, mu=-1.0)
    assert single.shape == (1,)


def test_ar1_marginal_mean():
    r = make_rng(31)
    xs = np.stack([sample_ar1_toeplitz(r, 4, 0.5, mu=2.0) for _ in range(20000)])
    assert np.abs(xs.mean(axis=0) - 2.0).max() < 0.03


def test_permutation_uniform_n3():
    r = make_rng(6)
    counts = {}
    for _ in range(60000):
        key = tuple(random_permutation(r, 3))
        counts[key] = counts.get(key, 0) + 1
    assert len(counts) == 6
    for c in counts.values():
        assert abs(c / 60000 - 1 / 6) < 0.01


def test_permutation_basics():
    assert random_permutation(make_rng(1), 1).tolist() == [0]
    p = random_permutation(make_rng(2), 200)
    assert is_permutation(p, 200)
    with pytest.raises(ValueError):
        random_permutation(make_rng(1), 0)


def test_rank_randomizer_values():
    bag = np.array([1.0, 3.0, 2.0, 5.0])
    assert rank_randomizer(1.0, bag) == 0.25
    assert rank_randomizer(5.0, bag) == 1.0
    with pytest.raises(ValueError):
        rank_randomizer(4.0, bag)
    with pytest.raises(ValueError):
        rank_randomizer(1.0, np.array([]))


@pytest.mark.parametrize("n", [5, 10, 50])
def test_rank_randomizer_uniform_on_grid(n):
    reps = 10**5
    m = gaussian_block(make_rng(40 + n), reps * n).reshape(reps, n)
    ranks = (m <= m[:, -1:]).sum(axis=1)
    observed = np.bincount(ranks, minlength=n + 1)[1:]
    expected = reps / n
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    assert chi2 < st.chi2.ppf(0.99, n - 1)


def test_rank_randomizer_dominates_uniform():
    # P(rank <= t) = floor(n t)/n <= t for continuous iid data
    n, reps = 10, 10**5
    m = gaussian_block(make_rng(77), reps * n).reshape(reps, n)
    ranks = (m <= m[:, -1:]).sum(axis=1) / n
    for t in [0.05, 0.1, 0.25, 0.5, 0.9]:
        freq = float(np.mean(ranks <= t))
        assert freq <= t + 3.0 * math.sqrt(t * (1 - t) / reps)


def test_make_rng_rejects_non_int():
    with pytest.raises(ValueError):
        make_rng(1.5)  # type: ignore[arg-type]
