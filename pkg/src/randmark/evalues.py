"""Combining dependent e-values into one rejection decision.

Everything here assumes only that the inputs are individually valid
e-values (nonnegative, unit-mean bound under the null); arbitrary
dependence is allowed.  Averaging preserves validity, prefix averaging
under exchangeability buys a time-uniform rule, and one uniform draw
buys the randomized bars.  The m-way forms exploit independence in
small groups through averages of m-fold products.
"""

from __future__ import annotations

import itertools
import math
from enum import Enum
from typing import Optional

import numpy as np

from .markov import Decision, emi_reject, eumi_reject, mi_reject, umi_reject
from .rand_core import RngStream, random_permutation, uniform01


class CombinationRule(str, Enum):
    AVMI = "AvMI"
    UMI = "UMI"
    EMI = "EMI"
    EUMI = "EUMI"
    MWAY_USTAT_MI = "mway_ustat_MI"
    MWAY_USTAT_UMI = "mway_ustat_UMI"
    MWAY_SEQUENTIAL_EMI = "mway_sequential_EMI"


_AVERAGE_RULES = {
    CombinationRule.AVMI,
    CombinationRule.UMI,
    CombinationRule.EMI,
    CombinationRule.EUMI,
}


def _as_evalues(es) -> np.ndarray:
    arr = np.asarray(es, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("es must be a nonempty 1-d sequence")
    if (arr < 0).any():
        raise ValueError("e-values must be nonnegative")
    return arr


def combine_dependent(es, alpha: float, u: Optional[float] = None,
                      pi: Optional[np.ndarray] = None,
                      rule: CombinationRule = CombinationRule.AVMI,
                      ) -> tuple[Decision, float]:
    """Apply one of the averaging rules; returns (decision, p-value).

    pi reorders the e-values first: pass None when the inputs are
    already exchangeable by assumption, otherwise supply a uniformly
    random permutation so the prefix-average rules are licensed.  The
    returned p-value is the calibrated companion of the decision
    (p <= alpha if and only if reject).
    """
    rule = CombinationRule(rule)
    if rule not in _AVERAGE_RULES:
        raise ValueError(f"rule {rule.value} is not an averaging rule")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    arr = _as_evalues(es)
    if pi is not None:
        pi = np.asarray(pi)
        if sorted(pi.tolist()) != list(range(arr.size)):
            raise ValueError("pi must be a permutation of 0..K-1")
        arr = arr[pi]
    needs_u = rule in (CombinationRule.UMI, CombinationRule.EUMI)
    if needs_u:
        if u is None:
            raise ValueError(f"rule {rule.value} requires a uniform draw u")
        if not 0.0 < u <= 1.0:
            raise ValueError(f"u must be in (0,1], got {u}")

    mean = float(arr.mean())
    prefix_avgs = np.cumsum(arr) / np.arange(1, arr.size + 1)
    sup_avg = float(prefix_avgs.max())

    if rule is CombinationRule.AVMI:
        decision = mi_reject(mean, alpha)
        p = 1.0 if mean == 0.0 else min(1.0 / mean, 1.0)
    elif rule is CombinationRule.UMI:
        decision = umi_reject(mean, alpha, u)
        p = 1.0 if mean == 0.0 else min(u / mean, 1.0)
    elif rule is CombinationRule.EMI:
        decision = emi_reject(arr, alpha)
        p = 1.0 if sup_avg == 0.0 else min(1.0 / sup_avg, 1.0)
    else:
        decision = eumi_reject(arr, alpha, u)
        p = 1.0 if sup_avg == 0.0 else min(1.0 / sup_avg, 1.0)
        if arr[0] > 0.0:
            p = min(p, u / arr[0])
    return decision, p


def mway_ustat(es, m: int) -> float:
    """Average of products over all size-m subsets of the e-values.

    Exact enumeration; refuses more than 10^6 subsets, which is far
    beyond any regime where the exact average is preferable to the
    sequential sampled form.
    """
    arr = _as_evalues(es)
    k = arr.size
    if not 1 <= m <= k:
        raise ValueError(f"m must be in 1..{k}, got {m}")
    n_subsets = math.comb(k, m)
    if n_subsets > 10**6:
        raise ValueError(f"C({k},{m}) = {n_subsets} subsets exceeds the 10^6 enumeration cap")
    total = 0.0
    for idx in itertools.combinations(range(k), m):
        total += math.prod(arr[list(idx)])
    return total / n_subsets


def mway_reject(es, m: int, alpha: float, rng: RngStream,
                rule: CombinationRule = CombinationRule.MWAY_USTAT_MI,
                max_draws: int = 10000, u: Optional[float] = None) -> Decision:
    """m-way combination rules.

    The ustat forms compare the exact subset-product average against
    1/alpha (or u/alpha with a uniform drawn from rng when u is not
    supplied).  The sequential form samples subsets with replacement
    and rejects at the first crossing of the running product average,
    which is licensed because the sampled products are exchangeable;
    it stops after max_draws subsets without rejecting.
    """
    rule = CombinationRule(rule)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    arr = _as_evalues(es)
    k = arr.size
    if not 1 <= m <= k:
        raise ValueError(f"m must be in 1..{k}, got {m}")

    if rule is CombinationRule.MWAY_USTAT_MI:
        return mi_reject(mway_ustat(arr, m), alpha)
    if rule is CombinationRule.MWAY_USTAT_UMI:
        if u is None:
            u = uniform01(rng)
        return umi_reject(mway_ustat(arr, m), alpha, u)
    if rule is not CombinationRule.MWAY_SEQUENTIAL_EMI:
        raise ValueError(f"rule {rule.value} is not an m-way rule")

    if max_draws < 1:
        raise ValueError(f"max_draws must be at least 1, got {max_draws}")
    bar = 1.0 / alpha
    total = 0.0
    for s in range(1, max_draws + 1):
        subset = random_permutation(rng, k)[:m]
        total += math.prod(arr[subset])
        if total / s >= bar:
            return Decision(reject=True, crossing_index=s)
    return Decision(reject=False)
