"""Split-likelihood e-values for one vs two Gaussian mixture components.

The model is w1 * N(mu1, 1) + (1 - w1) * N(mu2, 1) with known weights;
the null collapses the two means into one.  A random half of the data
fits the mixture by EM, the other half scores the fitted density against
the best single Gaussian, and the exponentiated log-ratio is an e-value
regardless of how badly the fit behaves.  Repeating over many splits
gives exchangeable e-values that feed the running-average and randomized
rejection rules, with the classical known-weights likelihood ratio test
as the benchmark.

Every fitting/scoring path funnels through row-batched helpers whose
per-row arithmetic touches only that row, so a batch of fits is bitwise
identical to the same fits done one at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .markov import Decision, emi_reject, eumi_reject, mi_reject, umi_reject
from .normal import norm_ppf
from .rand_core import RngStream, random_permutation, uniform_block

_LOG_2PI = math.log(2.0 * math.pi)
_EXP_CAP = 700.0  # keeps exp() of the summed log-ratio finite
_T_CAP = 709.0  # largest exponent exp() survives


@dataclass
class MixtureFit:
    """Fitted means of a two-component unit-variance mixture."""

    mu1: float
    mu2: float
    loglik: float
    iterations: int
    converged: bool


@dataclass
class SplitEValue:
    """One split's e-value with the sizes of the two halves.

    n1 observations fed the fit, n0 were scored, n0 + n1 = n.
    """

    value: float
    split_id: int
    n0: int
    n1: int


class UiRule(str, Enum):
    UI = "UI"
    UMI_UI = "UMI_UI"
    SUI = "SUI"
    UMI_SUI = "UMI_SUI"
    EMI_SUI = "EMI_SUI"
    EUMI_SUI = "EUMI_SUI"


_RULES_NEEDING_U = frozenset({UiRule.UMI_UI, UiRule.UMI_SUI, UiRule.EUMI_SUI})
_SINGLE_RULES = frozenset({UiRule.UI, UiRule.UMI_UI})


def _as_data(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("data must be a nonempty 1-d sequence")
    if not np.all(np.isfinite(arr)):
        raise ValueError("data must be finite")
    return arr


def _mixture_loglik_rows(rows: np.ndarray, mu1: np.ndarray, mu2: np.ndarray,
                         w1: float) -> np.ndarray:
    d1 = rows - mu1[:, None]
    d2 = rows - mu2[:, None]
    a = math.log(w1) - 0.5 * d1 * d1
    b = math.log(1.0 - w1) - 0.5 * d2 * d2
    return np.logaddexp(a, b).sum(axis=1) - 0.5 * _LOG_2PI * rows.shape[1]


def _null_profile_loglik_rows(rows: np.ndarray) -> np.ndarray:
    """Unit-variance Gaussian loglik with the mean profiled out (row average)."""
    centered = rows - rows.mean(axis=1, keepdims=True)
    return -0.5 * (centered * centered).sum(axis=1) - 0.5 * _LOG_2PI * rows.shape[1]


def _log_parts(rows: np.ndarray, mu1: np.ndarray, mu2: np.ndarray,
               log_w1: float, log_w2: float):
    """Per-point weighted log densities (up to the 2pi constant)."""
    d1 = rows - mu1[:, None]
    d2 = rows - mu2[:, None]
    return log_w1 - 0.5 * d1 * d1, log_w2 - 0.5 * d2 * d2


def _em_means_batch(rows: np.ndarray, w1: float, tol: float, max_iter: int,
                    mu1_init, mu2_init):
    """EM on the means, one independent fit per row.

    Returns (mu1, mu2, loglik, iterations, converged) arrays.  Rows that
    meet |delta loglik| < tol drop out of the working set, so long-running
    fits do not drag the finished ones through extra arithmetic.  The
    log-density parts double as both the convergence check and the next
    E-step's log odds (t = b - a), so each iteration prices them once.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    r, m = rows.shape
    out_mu1 = np.array(mu1_init, dtype=np.float64, copy=True).reshape(r)
    out_mu2 = np.array(mu2_init, dtype=np.float64, copy=True).reshape(r)
    log_w1 = math.log(w1)
    log_w2 = math.log(1.0 - w1)
    a, b = _log_parts(rows, out_mu1, out_mu2, log_w1, log_w2)
    out_ll = np.logaddexp(a, b).sum(axis=1) - 0.5 * _LOG_2PI * m
    out_iters = np.zeros(r, dtype=np.int64)
    out_conv = np.zeros(r, dtype=bool)

    idx = np.arange(r)
    cur = rows
    ll = out_ll.copy()
    for step in range(1, max_iter + 1):
        if idx.size == 0:
            break
        resp = 1.0 / (1.0 + np.exp(np.minimum(b - a, _T_CAP)))
        # responsibilities are strictly positive (the cap keeps exp finite),
        # and the weighted means below stay inside the data hull
        anti = 1.0 - resp
        mu1 = (resp * cur).sum(axis=1) / resp.sum(axis=1)
        mu2 = (anti * cur).sum(axis=1) / anti.sum(axis=1)
        a, b = _log_parts(cur, mu1, mu2, log_w1, log_w2)
        new_ll = np.logaddexp(a, b).sum(axis=1) - 0.5 * _LOG_2PI * m
        done = np.abs(new_ll - ll) < tol
        out_mu1[idx] = mu1
        out_mu2[idx] = mu2
        out_ll[idx] = new_ll
        out_iters[idx] = step
        out_conv[idx[done]] = True
        keep = ~done
        idx, cur = idx[keep], cur[keep]
        ll, a, b = new_ll[keep], a[keep], b[keep]
    return out_mu1, out_mu2, out_ll, out_iters, out_conv


def _em_two_start_rows(rows: np.ndarray, w1: float, tol: float, max_iter: int):
    """Run the quartile start and the mean +/- sd start; better loglik wins.

    Ties keep the quartile start.
    """
    q1 = np.quantile(rows, 0.25, axis=1)
    q3 = np.quantile(rows, 0.75, axis=1)
    center = rows.mean(axis=1)
    spread = rows.std(axis=1)
    first = _em_means_batch(rows, w1, tol, max_iter, q1, q3)
    second = _em_means_batch(rows, w1, tol, max_iter, center - spread, center + spread)
    use_second = second[2] > first[2]
    return tuple(np.where(use_second, b, a) for a, b in zip(first, second))


def em_fit_two_component(data, w1: float = 0.25, tol: float = 1e-8,
                         max_iter: int = 500,
                         init: Optional[tuple[float, float]] = None) -> MixtureFit:
    """Fit the two means by EM with fixed weights (w1, 1 - w1).

    The log-likelihood is nondecreasing across iterations; the loop stops
    when it moves by less than tol or after max_iter steps.  With init
    omitted, two starts are tried (data quartiles, then mean +/- sd) and
    the higher final log-likelihood is kept.
    """
    arr = _as_data(data)
    if not 0.0 < w1 < 1.0:
        raise ValueError(f"w1 must be in (0,1), got {w1}")
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")
    rows = arr[None, :]
    if init is None:
        mu1, mu2, ll, iters, conv = _em_two_start_rows(rows, w1, tol, max_iter)
    else:
        a, b = float(init[0]), float(init[1])
        mu1, mu2, ll, iters, conv = _em_means_batch(
            rows, w1, tol, max_iter, np.array([a]), np.array([b]))
    return MixtureFit(mu1=float(mu1[0]), mu2=float(mu2[0]), loglik=float(ll[0]),
                      iterations=int(iters[0]), converged=bool(conv[0]))


def _split_values_rows(fit_rows: np.ndarray, eval_rows: np.ndarray, w1: float,
                       tol: float, max_iter: int) -> np.ndarray:
    mu1, mu2 = _em_two_start_rows(fit_rows, w1, tol, max_iter)[:2]
    log_ratio = (_mixture_loglik_rows(eval_rows, mu1, mu2, w1)
                 - _null_profile_loglik_rows(eval_rows))
    return np.exp(np.minimum(log_ratio, _EXP_CAP))


def split_evalue_parts(fit_part, eval_part, w1: float = 0.25, tol: float = 1e-8,
                       max_iter: int = 500, split_id: int = 0) -> SplitEValue:
    """E-value from an explicit partition: fit on one part, score the other.

    The score is exp of the scored part's log-likelihood under the fitted
    mixture minus its log-likelihood under the best single unit-variance
    Gaussian (whose mean is just the scored part's average).
    """
    fit_arr = _as_data(fit_part)
    eval_arr = _as_data(eval_part)
    values = _split_values_rows(fit_arr[None, :], eval_arr[None, :], w1, tol, max_iter)
    return SplitEValue(value=float(values[0]), split_id=split_id,
                       n0=eval_arr.size, n1=fit_arr.size)


def split_lrt(data, split_frac: float = 0.5, *, rng: RngStream, w1: float = 0.25,
              tol: float = 1e-8, max_iter: int = 500, split_id: int = 0) -> SplitEValue:
    """E-value from one uniformly random split of the data.

    The first round(split_frac * n) entries of a fresh random permutation
    form the fitting half (never empty, never everything).
    """
    arr = _as_data(data)
    n = arr.size
    if n < 2:
        raise ValueError(f"need at least 2 observations to split, got {n}")
    if not 0.0 < split_frac < 1.0:
        raise ValueError(f"split_frac must be in (0,1), got {split_frac}")
    n1 = min(max(int(round(split_frac * n)), 1), n - 1)
    perm = random_permutation(rng, n)
    return split_evalue_parts(arr[perm[:n1]], arr[perm[n1:]], w1=w1, tol=tol,
                              max_iter=max_iter, split_id=split_id)


def split_evalues_block(data, n_splits: int, *, rng: RngStream,
                        split_frac: float = 0.5, w1: float = 0.25,
                        tol: float = 1e-8, max_iter: int = 500) -> np.ndarray:
    """All n_splits split e-values in one vectorized pass.

    Permutation keys come from one block draw, which the counter stream
    makes identical to n_splits successive single draws, and the fits all
    ride one EM batch; the output matches n_splits split_lrt calls on the
    same stream bit for bit.
    """
    arr = _as_data(data)
    n = arr.size
    if n < 2:
        raise ValueError(f"need at least 2 observations to split, got {n}")
    if n_splits < 1:
        raise ValueError(f"n_splits must be at least 1, got {n_splits}")
    if not 0.0 < split_frac < 1.0:
        raise ValueError(f"split_frac must be in (0,1), got {split_frac}")
    n1 = min(max(int(round(split_frac * n)), 1), n - 1)
    keys = uniform_block(rng, n_splits * n).reshape(n_splits, n)
    perms = np.argsort(keys, axis=1, kind="stable")
    picked = arr[perms]
    return _split_values_rows(picked[:, :n1], picked[:, n1:], w1, tol, max_iter)


def ui_reject(es: Sequence[float], alpha: float, u: Optional[float] = None, *,
              rule: UiRule = UiRule.UI) -> Decision:
    """The six rejection rules over split e-values.

    UI and UMI_UI take exactly one e-value; the subsampled rules take the
    whole exchangeable batch in the order it was produced.  u is consumed
    only by the randomized rules (UMI_UI, UMI_SUI, EUMI_SUI) and ignored
    otherwise.
    """
    rule = UiRule(rule)
    arr = np.asarray(es, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("es must be a nonempty 1-d sequence")
    if (arr < 0).any():
        raise ValueError("e-values must be nonnegative")
    if rule in _SINGLE_RULES and arr.size != 1:
        raise ValueError(f"rule {rule.value} takes exactly one e-value, got {arr.size}")
    if rule in _RULES_NEEDING_U and u is None:
        raise ValueError(f"rule {rule.value} needs a uniform draw u")
    if rule is UiRule.UI:
        return mi_reject(float(arr[0]), alpha)
    if rule is UiRule.UMI_UI:
        return umi_reject(float(arr[0]), alpha, u)
    if rule is UiRule.SUI:
        return mi_reject(float(arr.mean()), alpha)
    if rule is UiRule.UMI_SUI:
        return umi_reject(float(arr.mean()), alpha, u)
    if rule is UiRule.EMI_SUI:
        return emi_reject(arr, alpha)
    return eumi_reject(arr, alpha, u)


def goffinet_lrt_reject(data, alpha: float, w1: float = 0.25, tol: float = 1e-8,
                        max_iter: int = 500) -> Decision:
    """Known-weights likelihood ratio test of one vs two components.

    Twice the log-ratio of the EM-fitted mixture to the best single
    Gaussian converges to max(0, Z)^2 under the null, so the cutoff is
    the (1 - 2*alpha) chi-square(1) quantile, i.e. the squared
    (1 - alpha) normal quantile.  Needs alpha < 1/2 for the cutoff to
    exist; the statistic is clamped at 0 since the alternative nests
    the null (EM can only undershoot by float dust).
    """
    arr = _as_data(data)
    if arr.size < 2:
        raise ValueError(f"need at least 2 observations, got {arr.size}")
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must be in (0, 0.5), got {alpha}")
    rows = arr[None, :]
    ll_alt = float(_em_two_start_rows(rows, w1, tol, max_iter)[2][0])
    ll_null = float(_null_profile_loglik_rows(rows)[0])
    stat = max(2.0 * (ll_alt - ll_null), 0.0)
    cutoff = norm_ppf(1.0 - alpha) ** 2
    return Decision(reject=stat > cutoff)
