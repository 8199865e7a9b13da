"""Betting tests for the mean of a [0,1]-valued random variable.

A gambler starts with wealth 1 and bets a predictable fraction against
the hypothesized mean m0 on each observation; the wealth stays a
nonnegative martingale under the null, so large wealth is evidence
against it.  Two one-sided processes (betting on mean above and below
m0) are averaged so either direction of deviation grows the combined
wealth.  Rejection can watch the whole trajectory (Ville), the final
wealth over many random orderings (averaging rules), or randomized
tightenings of both.  Confidence intervals come from inverting the
chosen rule over a grid of candidate means with one shared uniform.

The recursion is written once over rows, so one path, a batch of B
permuted passes, and a full grid-by-permutation sweep all produce
bitwise-identical numbers for the same data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .markov import Decision, emi_reject, eumi_reject, mi_reject, umi_reject
from .rand_core import RngStream, substream, uniform01, uniform_block
from .tail_bounds import ConfidenceInterval
from .ville import WealthPath, randomized_ville_reject, ville_first_crossing

# labels for the per-replication substreams every rule shares
U_LABEL = 2
PERM_LABEL = 3

Strategy = Callable[..., np.ndarray]


class BettingRule(str, Enum):
    VILLE = "Ville"
    RAND_VILLE = "RandVille"
    AVMI = "AvMI"
    UMI = "UMI"
    EMI = "EMI"
    EUMI = "EUMI"


_PERMUTATION_RULES = frozenset(
    {BettingRule.AVMI, BettingRule.UMI, BettingRule.EMI, BettingRule.EUMI})
_RULES_NEEDING_U = frozenset(
    {BettingRule.RAND_VILLE, BettingRule.UMI, BettingRule.EUMI})


@dataclass
class TwoSidedWealth:
    """Paired wealth processes with their exact average.

    combined.values[t] equals (m_plus.values[t] + m_minus.values[t]) / 2
    with no rounding beyond that single mean.
    """

    m_plus: WealthPath
    m_minus: WealthPath
    combined: WealthPath
    lambdas_plus: np.ndarray
    lambdas_minus: np.ndarray


def default_strategy_lambda(mu_hat, sigma2_hat, t: int, alpha: float, m0):
    """Approximate-Kelly bet from regularized running moments.

    lambda = clip((mu_hat - m0)+ / (sigma2_hat + (mu_hat - m0)^2), 0, 1/(2 m0)).
    The half-feasibility cap keeps every wealth factor at least 1/2, so
    a single adversarial observation can never bankrupt the process.
    Accepts scalars or arrays (broadcast elementwise); t and alpha are
    part of the strategy contract but unused by this rule.
    """
    sigma2 = np.asarray(sigma2_hat, dtype=np.float64)
    if np.any(sigma2 <= 0.0):
        raise ValueError("sigma2_hat must be positive")
    m0_arr = np.asarray(m0, dtype=np.float64)
    edge = np.maximum(np.asarray(mu_hat, dtype=np.float64) - m0_arr, 0.0)
    raw = edge / (sigma2 + edge * edge)
    with np.errstate(divide="ignore"):
        cap = np.where(m0_arr > 0.0, 0.5 / np.where(m0_arr > 0.0, m0_arr, 1.0), np.inf)
    lam = np.minimum(raw, cap)
    return float(lam) if lam.ndim == 0 else lam


def _as_unit_data(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("data must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)) or (arr < 0.0).any() or (arr > 1.0).any():
        raise ValueError("data must lie in [0,1]")
    return arr


def _one_sided_engine(rows: np.ndarray, m0, alpha: float, strategy: Strategy,
                      full: bool):
    """Wealth recursion for one betting direction, vectorized over rows.

    rows has shape (r, n); m0 is a scalar or an array broadcastable
    against (r,) (e.g. a (G, 1) grid column against (1, n)-like rows).
    With full=True returns (paths, lambdas) carrying the whole
    trajectory; otherwise returns (final_wealths, None) and keeps no
    history.  The running moments are the regularized mean and variance:
    both start from a phantom half observation, and each spread
    increment measures the new point against the mean after absorbing it.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    n = rows.shape[1]
    m0_arr = np.asarray(m0, dtype=np.float64)
    shape = np.broadcast_shapes(m0_arr.shape, rows[:, 0].shape)
    s = np.full(shape, 0.5)
    ssd = np.full(shape, 0.25)
    wealth = np.ones(shape)
    paths = lams = None
    if full:
        paths = np.empty(shape + (n + 1,))
        paths[..., 0] = 1.0
        lams = np.empty(shape + (n,))
    # the default rule inlines with its cap hoisted out of the loop; the
    # running variance never drops below 0.25/t, so its positivity check
    # can do nothing here and the numbers are identical either way
    fast_default = strategy is default_strategy_lambda
    if fast_default:
        with np.errstate(divide="ignore"):
            cap = np.where(m0_arr > 0.0,
                           0.5 / np.where(m0_arr > 0.0, m0_arr, 1.0), np.inf)
    for t in range(1, n + 1):
        mu_hat = s / t
        sig2 = ssd / t
        if fast_default:
            edge = np.maximum(mu_hat - m0_arr, 0.0)
            lam = np.minimum(edge / (sig2 + edge * edge), cap)
        else:
            lam = strategy(mu_hat, sig2, t, alpha, m0_arr)
        y = rows[:, t - 1]
        wealth = wealth * (1.0 + lam * (y - m0_arr))
        s = s + y
        new_mean = s / (t + 1)
        d = y - new_mean
        ssd = ssd + d * d
        if full:
            paths[..., t] = wealth
            lams[..., t - 1] = lam
    return (paths, lams) if full else (wealth, None)


def _combined_finals(rows: np.ndarray, m0, alpha: float,
                     strategy: Strategy) -> np.ndarray:
    plus, _ = _one_sided_engine(rows, m0, alpha, strategy, full=False)
    minus, _ = _one_sided_engine(1.0 - np.atleast_2d(rows), 1.0 - np.asarray(m0),
                                 alpha, strategy, full=False)
    return 0.5 * (plus + minus)


def wealth_paths(ys, m0: float, strategy: Optional[Strategy] = None,
                 alpha: float = 0.05) -> TwoSidedWealth:
    """Both one-sided wealth trajectories and their average for one pass.

    The minus process is the plus process run on the mirrored data
    1 - y against the mirrored target 1 - m0, so its bets are capped
    and regularized by the same rule.
    """
    arr = _as_unit_data(ys)
    if not 0.0 < m0 < 1.0:
        raise ValueError(f"m0 must be in (0,1), got {m0}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    strategy = strategy if strategy is not None else default_strategy_lambda
    rows = arr[None, :]
    plus, lam_p = _one_sided_engine(rows, m0, alpha, strategy, full=True)
    minus, lam_m = _one_sided_engine(1.0 - rows, 1.0 - m0, alpha, strategy, full=True)
    combined = 0.5 * (plus + minus)
    return TwoSidedWealth(
        m_plus=WealthPath(plus[0]),
        m_minus=WealthPath(minus[0]),
        combined=WealthPath(combined[0]),
        lambdas_plus=lam_p[0],
        lambdas_minus=lam_m[0],
    )


def _draw_permutations(rng: RngStream, n_perms: int, n: int) -> np.ndarray:
    keys = uniform_block(substream(rng, PERM_LABEL), n_perms * n).reshape(n_perms, n)
    # introsort, not stable: distinct keys (probability one) sort the same
    # either way and the unstable kind is several times faster
    return np.argsort(keys, axis=1)


def betting_reject(data, m0: float, alpha: float, B: int, rng: RngStream,
                   rule: BettingRule, u: Optional[float] = None,
                   strategy: Optional[Strategy] = None) -> Decision:
    """One of the six rejection rules for H0: mean = m0.

    Ville and RandVille make a single pass in the given data order and
    ignore B.  The other rules run B independently permuted passes and
    judge the final wealths: their average (AvMI), the randomized
    average (UMI), the running-average crossing (EMI), or the first
    final against the randomized bar plus the crossing rule (EUMI).

    The uniform and the permutations are derived from fixed labels of
    rng, not its current position, so calling this once per rule with
    the same stream gives every rule the same shared randomness.
    """
    arr = _as_unit_data(data)
    if not 0.0 < m0 < 1.0:
        raise ValueError(f"m0 must be in (0,1), got {m0}")
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    if B < 1:
        raise ValueError(f"B must be at least 1, got {B}")
    rule = BettingRule(rule)
    if u is not None and not 0.0 < u <= 1.0:
        raise ValueError(f"u must be in (0,1], got {u}")
    strategy = strategy if strategy is not None else default_strategy_lambda
    if rule in _RULES_NEEDING_U and u is None:
        u = uniform01(substream(rng, U_LABEL))

    if rule in (BettingRule.VILLE, BettingRule.RAND_VILLE):
        plus, _ = _one_sided_engine(arr[None, :], m0, alpha, strategy, full=True)
        minus, _ = _one_sided_engine(1.0 - arr[None, :], 1.0 - m0, alpha, strategy,
                                     full=True)
        path = WealthPath((0.5 * (plus + minus))[0])
        if rule is BettingRule.VILLE:
            t = ville_first_crossing(path, alpha)
            return Decision(reject=t is not None, crossing_index=t)
        return randomized_ville_reject(path, len(path) - 1, alpha, u)

    perms = _draw_permutations(rng, B, arr.size)
    finals = _combined_finals(arr[perms], m0, alpha, strategy)
    if rule is BettingRule.AVMI:
        return mi_reject(float(finals.mean()), alpha)
    if rule is BettingRule.UMI:
        return umi_reject(float(finals.mean()), alpha, u)
    if rule is BettingRule.EMI:
        return emi_reject(finals, alpha)
    return eumi_reject(finals, alpha, u)


def _grid_values(grid_step: float) -> np.ndarray:
    if not 0.0 < grid_step <= 0.1:
        raise ValueError(f"grid_step must be in (0, 0.1], got {grid_step}")
    count = int(math.floor(1.0 / grid_step + 1e-9))
    ms = np.arange(count + 1, dtype=np.float64) * grid_step
    if ms[-1] < 1.0 - 1e-12:
        ms = np.append(ms, 1.0)
    return np.minimum(ms, 1.0)


def _reject_mask(finals: np.ndarray, sups: Optional[np.ndarray],
                 last: Optional[np.ndarray], rule: BettingRule, alpha: float,
                 u: float) -> np.ndarray:
    """Vector of per-grid-point rejections; finals has shape (G, B)."""
    bar = 1.0 / alpha
    if rule is BettingRule.VILLE:
        return sups >= bar
    if rule is BettingRule.RAND_VILLE:
        return (sups >= bar) | (last >= u / alpha)
    means = finals.mean(axis=1)
    if rule is BettingRule.AVMI:
        return means >= bar
    if rule is BettingRule.UMI:
        return means >= u / alpha
    prefix = np.cumsum(finals, axis=1) / np.arange(1, finals.shape[1] + 1)
    crossed = (prefix >= bar).any(axis=1)
    if rule is BettingRule.EMI:
        return crossed
    return crossed | (finals[:, 0] >= u / alpha)


def invert_mean_ci(data, alpha: float, grid_step: float, rng: RngStream,
                   rule: BettingRule, B: int = 100,
                   strategy: Optional[Strategy] = None) -> ConfidenceInterval:
    """Confidence interval for the mean by inverting one betting rule.

    Every candidate m on the grid {0, grid_step, ..., 1} is tested with
    the same data, the same permutations, and one shared uniform; the
    interval is the hull of the surviving grid points.  All candidates
    run through one broadcast wealth recursion, which matches the
    per-candidate betting_reject decisions exactly.
    """
    arr = _as_unit_data(data)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    if B < 1:
        raise ValueError(f"B must be at least 1, got {B}")
    rule = BettingRule(rule)
    strategy = strategy if strategy is not None else default_strategy_lambda
    ms = _grid_values(grid_step)
    grid_col = ms[:, None]
    u = uniform01(substream(rng, U_LABEL))

    if rule in _PERMUTATION_RULES:
        perms = _draw_permutations(rng, B, arr.size)
        finals = _combined_finals(arr[perms], grid_col, alpha, strategy)
        rejected = _reject_mask(finals, None, None, rule, alpha, u)
    else:
        plus, _ = _one_sided_engine(arr[None, :], grid_col, alpha, strategy, full=True)
        minus, _ = _one_sided_engine(1.0 - arr[None, :], 1.0 - grid_col, alpha,
                                     strategy, full=True)
        paths = 0.5 * (plus + minus)
        sups = paths.max(axis=-1).reshape(ms.size)
        last = paths[..., -1].reshape(ms.size)
        rejected = _reject_mask(np.empty((ms.size, 0)), sups, last, rule, alpha, u)

    kept = ms[~rejected]
    method = f"betting_{rule.value}"
    u_draw = u if rule in _RULES_NEEDING_U else None
    if kept.size == 0:
        nan = math.nan
        return ConfidenceInterval(method, nan, nan, nan, nan, u_draw, empty=True)
    lower, upper = float(kept[0]), float(kept[-1])
    return ConfidenceInterval(method, 0.5 * (lower + upper), 0.5 * (upper - lower),
                              lower, upper, u_draw, empty=False)
