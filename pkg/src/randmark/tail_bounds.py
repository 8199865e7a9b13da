"""Fixed-sample confidence bounds and tail bars, with randomized tightening.

Each randomized form injects one independent uniform u so that the bound
holds at level alpha in expectation over u; u = 1 always reduces exactly
to the deterministic expression.  The randomized Hoeffding interval can
come out empty (that is what pays for its shorter average length), which
is reported through an explicit flag rather than an inverted interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .normal import norm_ppf


@dataclass
class ConfidenceInterval:
    method: str
    center: float
    halfwidth: float
    lower: float
    upper: float
    u_draw: Optional[float]
    empty: bool

    @property
    def width(self) -> float:
        return 0.0 if self.empty else self.upper - self.lower

    def covers(self, value: float) -> bool:
        return (not self.empty) and self.lower <= value <= self.upper


def _symmetric(method: str, center: float, halfwidth: float, u: Optional[float],
               clip: Optional[tuple[float, float]] = None) -> ConfidenceInterval:
    lower = center - halfwidth
    upper = center + halfwidth
    if clip is not None:
        lo_c, hi_c = max(lower, clip[0]), min(upper, clip[1])
        if lo_c > hi_c:
            return _empty(method, u)
        if lo_c != lower or hi_c != upper:
            lower, upper = lo_c, hi_c
            center = 0.5 * (lower + upper)
            halfwidth = 0.5 * (upper - lower)
    return ConfidenceInterval(method, center, halfwidth, lower, upper, u, empty=False)


def _empty(method: str, u: Optional[float]) -> ConfidenceInterval:
    nan = math.nan
    return ConfidenceInterval(method, nan, nan, nan, nan, u, empty=True)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")


def _check_u(u: Optional[float]) -> None:
    if u is not None and not 0.0 < u <= 1.0:
        raise ValueError(f"u must be in (0,1], got {u}")


def _check_sigma_n(sigma: float, n: int) -> None:
    if sigma <= 0.0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")


def hoeffding_ci(xbar: float, sigma: float, n: int, alpha: float,
                 u: Optional[float] = None, clt_floor: bool = False) -> ConfidenceInterval:
    """Two-sided sub-Gaussian interval around xbar.

    Deterministic halfwidth sigma * sqrt(2 log(2/alpha) / n).  With u the
    halfwidth gains sigma * log(u) / sqrt(2 n log(2/alpha)); its mean
    shrinks by the factor 1 - 1/(2 log(2/alpha)) while coverage is kept
    in expectation.  The interval is EMPTY exactly when
    log u <= -2 log(2/alpha), i.e. with probability (alpha/2)^2.
    clt_floor=True instead floors the halfwidth at the asymptotically
    exact sigma * z_{1-alpha/2} / sqrt(n), which can never be empty.
    """
    _check_alpha(alpha)
    _check_u(u)
    _check_sigma_n(sigma, n)
    big_l = math.log(2.0 / alpha)
    hw = sigma * math.sqrt(2.0 * big_l / n)
    if u is not None:
        hw = hw + sigma * math.log(u) / math.sqrt(2.0 * n * big_l)
    if clt_floor:
        hw = max(hw, sigma * norm_ppf(1.0 - alpha / 2.0) / math.sqrt(n))
    elif hw <= 0.0:
        return _empty("hoeffding", u)
    return _symmetric("hoeffding", xbar, hw, u)


def chebyshev_ci(xbar: float, sigma: float, n: int, alpha: float,
                 u: Optional[float] = None, truncate_floor: Optional[float] = None) -> ConfidenceInterval:
    """Finite-variance interval with halfwidth sigma / sqrt(alpha n).

    With u the halfwidth scales by sqrt(u) (mean factor 2/3); with a
    truncate_floor c it scales by max(sqrt(u), c), trading a little mean
    length (e.g. 17/24 at c = 1/2) for a hard lower bound on width.
    """
    _check_alpha(alpha)
    _check_u(u)
    _check_sigma_n(sigma, n)
    if truncate_floor is not None and not 0.0 < truncate_floor < 1.0:
        raise ValueError(f"truncate_floor must be in (0,1), got {truncate_floor}")
    hw = sigma / math.sqrt(alpha * n)
    if u is not None:
        factor = math.sqrt(u)
        if truncate_floor is not None:
            factor = max(factor, truncate_floor)
        hw *= factor
    return _symmetric("chebyshev", xbar, hw, u)


def cantelli_threshold(sigma: float, k: float, u: Optional[float] = None) -> float:
    """One-sided bar with P(X >= bar) <= 1/(k^2 + 1) for mean-0 variance-sigma^2 X.

    Deterministic bar k * sigma; the randomized form
    sqrt(u) * (k sigma + sigma/k) - sigma/k keeps the same guarantee in
    expectation over u and reduces to k * sigma at u = 1.
    """
    if sigma <= 0.0 or k <= 0.0:
        raise ValueError(f"sigma and k must be positive, got sigma={sigma}, k={k}")
    _check_u(u)
    if u is None:
        return k * sigma
    return math.sqrt(u) * (k * sigma + sigma / k) - sigma / k


def bernstein_threshold(sigma: float, b: float, alpha: float,
                        u: Optional[float] = None) -> float:
    """Variance-adaptive bar under the moment condition with scale b.

    Deterministic bar x = sqrt(2 sigma^2 log(1/alpha)) + 2 b log(1/alpha).
    The exponential tilt that certifies x at level alpha is
    lam = x / (sigma^2 + b x); feeding the uniform through that tilt
    gives the randomized bar x + log(u) / lam, which still holds at
    level alpha and reduces to x when u = 1.  The Chernoff level at
    this lam is exp(-x^2 / (2 (sigma^2 + b x))), and
    x^2 - 2 log(1/alpha) (sigma^2 + b x) = 2 b log(1/alpha) sqrt(2 sigma^2 log(1/alpha)) >= 0
    shows it never exceeds alpha.  Note lam is NOT (b x + sigma^2)^{-1};
    that choice fails to reach level alpha.
    """
    _check_alpha(alpha)
    _check_u(u)
    if sigma <= 0.0 or b <= 0.0:
        raise ValueError(f"sigma and b must be positive, got sigma={sigma}, b={b}")
    log_inv = math.log(1.0 / alpha)
    x = math.sqrt(2.0 * sigma * sigma * log_inv) + 2.0 * b * log_inv
    if u is None:
        return x
    inv_lam = (sigma * sigma + b * x) / x
    return inv_lam * math.log(u) + x


def psi_bet(lam: float) -> float:
    """-log(1 - lam) - lam, the variance cost of a bet of size lam."""
    if not 0.0 <= lam < 1.0:
        raise ValueError(f"lam must be in [0,1), got {lam}")
    return -math.log1p(-lam) - lam


@dataclass
class EmpiricalBernsteinState:
    """Running state of the self-normalized empirical-Bernstein process.

    The regularized moments start from a half observation at 1/2 and a
    quarter of squared spread, so the first bet is defined before any
    data arrive.  v_t is the squared deviation of x_t from the mean
    BEFORE x_t was absorbed; the internal spread sum uses the mean AFTER.
    """

    t: int = 0
    sum_x: float = 0.0
    sum_sq_dev: float = 0.0
    sum_lambda: float = 0.0
    sum_lambda_x: float = 0.0
    sum_v_psi: float = 0.0

    @property
    def mu_hat(self) -> float:
        return (0.5 + self.sum_x) / (self.t + 1)

    @property
    def sigma2_hat(self) -> float:
        return (0.25 + self.sum_sq_dev) / (self.t + 1)

    def next_lambda(self, alpha: float, horizon: int) -> float:
        lam = math.sqrt(2.0 * math.log(2.0 / alpha) / (self.sigma2_hat * horizon))
        return min(lam, 0.5)

    def update(self, x: float, alpha: float, horizon: int) -> None:
        if not 0.0 <= x <= 1.0:
            raise ValueError(f"data must lie in [0,1], got {x}")
        lam = self.next_lambda(alpha, horizon)
        v = (x - self.mu_hat) ** 2
        self.sum_lambda += lam
        self.sum_lambda_x += lam * x
        self.sum_v_psi += v * psi_bet(lam)
        self.t += 1
        self.sum_x += x
        self.sum_sq_dev += (x - self.mu_hat) ** 2

    def interval_bounds(self, alpha: float, log_u: float = 0.0) -> tuple[float, float]:
        center = self.sum_lambda_x / self.sum_lambda
        hw = (math.log(2.0 / alpha) + log_u + self.sum_v_psi) / self.sum_lambda
        return center - hw, center + hw


def empirical_bernstein_ci(data, alpha: float, u: Optional[float] = None,
                           intersect: bool = False) -> ConfidenceInterval:
    """Variance-adaptive interval for the mean of [0,1]-valued data.

    Bets lambda_t are predictable (tuned from the regularized moments of
    the first t-1 points) and capped at 1/2.  intersect=True intersects
    the interval at every prefix, which is valid because the underlying
    process is a supermartingale at every time; randomization via u is
    applied to the final interval only, the one combination the
    stopped-randomization argument covers.  The result is clipped to
    [0,1]; a negative-width outcome is reported as EMPTY.
    """
    _check_alpha(alpha)
    _check_u(u)
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("data must be a nonempty 1-d sequence")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("data must lie in [0,1]")
    n = arr.size
    state = EmpiricalBernsteinState()
    log_u = 0.0 if u is None else math.log(u)
    lo_run, hi_run = -math.inf, math.inf
    for i, x in enumerate(arr):
        state.update(float(x), alpha, n)
        if intersect or i == n - 1:
            lo, hi = state.interval_bounds(alpha, log_u if i == n - 1 else 0.0)
            if intersect:
                lo_run, hi_run = max(lo_run, lo), min(hi_run, hi)
            else:
                lo_run, hi_run = lo, hi
    if lo_run > hi_run:
        return _empty("empirical_bernstein", u)
    center = 0.5 * (lo_run + hi_run)
    return _symmetric("empirical_bernstein", center, 0.5 * (hi_run - lo_run), u,
                      clip=(0.0, 1.0))
