"""Combination rules: exact subset averages, p-value duality, levels."""

import math

import numpy as np
import pytest

from randmark.evalues import CombinationRule, combine_dependent, mway_reject, mway_ustat
from randmark.rand_core import make_rng, random_permutation, substream, uniform_block


def _elementary_symmetric(xs: np.ndarray, m: int) -> float:
    """DP oracle: e_m via the Newton-style recurrence, independent of the
    enumeration in mway_ustat."""
    e = np.zeros(m + 1)
    e[0] = 1.0
    for x in xs:
        for j in range(min(m, 1 + int(np.count_nonzero(e[1:]))), 0, -1):
            e[j] += x * e[j - 1]
    return float(e[m])


def test_mway_ustat_example():
    assert mway_ustat([2.0, 3.0, 4.0], 2) == pytest.approx(26.0 / 3.0, abs=1e-12)
    assert mway_ustat([2.0, 3.0, 4.0], 1) == pytest.approx(3.0, abs=1e-12)
    assert mway_ustat([2.0, 3.0, 4.0], 3) == pytest.approx(24.0, abs=1e-12)


def test_mway_ustat_matches_dp_oracle():
    r = make_rng(20)
    for k in range(2, 9):
        es = -np.log(uniform_block(r, k))
        for m in range(1, k + 1):
            expected = _elementary_symmetric(es, m) / math.comb(k, m)
            assert mway_ustat(es, m) == pytest.approx(expected, rel=1e-10)


def test_mway_ustat_errors():
    with pytest.raises(ValueError):
        mway_ustat([1.0, 2.0], 3)
    with pytest.raises(ValueError):
        mway_ustat([1.0, -1.0], 1)
    with pytest.raises(ValueError):
        mway_ustat(np.ones(50), 10)  # C(50,10) ~ 1e10 over the cap


def test_mway_umi_u1_equals_mi():
    r = make_rng(21)
    for _ in range(100):
        es = -3.0 * np.log(uniform_block(r, 6))
        a = mway_reject(es, 2, 0.1, substream(r, 1), CombinationRule.MWAY_USTAT_MI)
        b = mway_reject(es, 2, 0.1, substream(r, 1), CombinationRule.MWAY_USTAT_UMI, u=1.0)
        assert a.reject == b.reject


def test_mway_sequential_crossing():
    # all e-values huge: the first sampled product already crosses
    d = mway_reject(np.full(10, 50.0), 2, 0.05, make_rng(22),
                    CombinationRule.MWAY_SEQUENTIAL_EMI, max_draws=10)
    assert d.reject and d.crossing_index == 1
    d2 = mway_reject(np.ones(10), 2, 0.05, make_rng(22),
                     CombinationRule.MWAY_SEQUENTIAL_EMI, max_draws=10)
    assert not d2.reject


def test_mway_sequential_level():
    # iid Exp(1) e-values; sampled subset products are exchangeable with
    # mean <= 1, so the crossing frequency must stay below alpha
    r = make_rng(23)
    reps, k, alpha = 2000, 20, 0.1
    rejections = 0
    for i in range(reps):
        es = -np.log(uniform_block(r, k))
        d = mway_reject(es, 2, alpha, substream(r, 1000 + i),
                        CombinationRule.MWAY_SEQUENTIAL_EMI, max_draws=50)
        rejections += d.reject
    freq = rejections / reps
    assert freq <= alpha + 3.0 * math.sqrt(alpha * (1 - alpha) / reps)


def test_combine_rules_match_kernels():
    es = np.array([30.0, 1.0, 2.0])
    u = 0.9
    d_av, p_av = combine_dependent(es, 0.05, rule=CombinationRule.AVMI)
    assert not d_av.reject and p_av == pytest.approx(3.0 / 33.0)
    d_umi, p_umi = combine_dependent(es, 0.05, u=0.5, rule=CombinationRule.UMI)
    assert d_umi.reject  # mean 11 >= 0.5/0.05 = 10
    assert p_umi == pytest.approx(0.5 / 11.0)
    d_emi, p_emi = combine_dependent(es, 0.05, rule=CombinationRule.EMI)
    assert d_emi.reject and d_emi.crossing_index == 1  # first prefix avg 30 >= 20
    assert p_emi == pytest.approx(1.0 / 30.0)
    d_eumi, p_eumi = combine_dependent(es, 0.05, u=u, rule=CombinationRule.EUMI)
    assert d_eumi.reject
    assert p_eumi == pytest.approx(min(1.0 / 30.0, u / 30.0))


def test_combine_decision_p_duality():
    # p <= alpha exactly when the decision rejects, across random inputs
    r = make_rng(24)
    for _ in range(400):
        k = 2 + int(6 * uniform_block(r, 1)[0])
        es = -2.0 * np.log(uniform_block(r, k)) * (0.5 + 4.0 * uniform_block(r, 1)[0])
        alpha = float(0.02 + 0.3 * uniform_block(r, 1)[0])
        u = float(uniform_block(r, 1)[0])
        for rule in (CombinationRule.AVMI, CombinationRule.UMI,
                     CombinationRule.EMI, CombinationRule.EUMI):
            d, p = combine_dependent(es, alpha, u=u, rule=rule)
            assert d.reject == (p <= alpha)


def test_combine_permutation_applied():
    es = np.array([1.0, 100.0, 1.0])
    pi = np.array([1, 0, 2])
    d, _ = combine_dependent(es, 0.05, rule=CombinationRule.EMI, pi=pi)
    assert d.crossing_index == 1  # permuted first entry is 100
    with pytest.raises(ValueError):
        combine_dependent(es, 0.05, rule=CombinationRule.EMI, pi=np.array([0, 0, 2]))


def test_combine_zero_evalues():
    d, p = combine_dependent(np.zeros(5), 0.05, rule=CombinationRule.AVMI)
    assert not d.reject and p == 1.0
    d2, p2 = combine_dependent(np.zeros(5), 0.05, u=0.5, rule=CombinationRule.EUMI)
    assert not d2.reject and p2 == 1.0


def test_combine_requires_u_for_randomized_rules():
    with pytest.raises(ValueError):
        combine_dependent([1.0, 2.0], 0.05, rule=CombinationRule.UMI)
    with pytest.raises(ValueError):
        combine_dependent([1.0, 2.0], 0.05, rule=CombinationRule.EUMI)
    with pytest.raises(ValueError):
        combine_dependent([1.0], 0.05, rule=CombinationRule.MWAY_USTAT_MI)


def test_combine_type_one_exchangeable():
    # iid Exp(1) inputs, all four averaging rules at alpha = 0.05
    r = make_rng(25)
    reps, k, alpha = 10**4, 10, 0.05
    es = -np.log(uniform_block(r, reps * k)).reshape(reps, k)
    us = uniform_block(r, reps)
    means = es.mean(axis=1)
    prefix = np.cumsum(es, axis=1) / np.arange(1, k + 1)
    sup = prefix.max(axis=1)
    freqs = {
        "AvMI": np.mean(means >= 1 / alpha),
        "UMI": np.mean(means >= us / alpha),
        "EMI": np.mean(sup >= 1 / alpha),
        "EUMI": np.mean((es[:, 0] >= us / alpha) | (sup >= 1 / alpha)),
    }
    bound = alpha + 3.0 * math.sqrt(alpha * (1 - alpha) / reps)
    for name, freq in freqs.items():
        assert freq <= bound, name


def test_permutation_reuse_gives_identical_decisions():
    # the same pi and u must lead to identical randomized decisions when
    # a rule is evaluated twice (shared-randomness discipline)
    r = make_rng(26)
    es = -np.log(uniform_block(r, 8))
    pi = random_permutation(substream(r, 1), 8)
    u = 0.37
    first = combine_dependent(es, 0.05, u=u, pi=pi, rule=CombinationRule.EUMI)
    second = combine_dependent(es, 0.05, u=u, pi=pi, rule=CombinationRule.EUMI)
    assert first == second
