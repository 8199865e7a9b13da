"""Rejection kernels for nonnegative statistics.

The deterministic rule compares a statistic against 1/alpha.  The
randomized variant lowers the bar to u/alpha for an independent uniform
u, which keeps the type-I guarantee in expectation while strictly
enlarging the rejection region for u < 1.  The exchangeable variants
monitor running averages of a sequence whose order carries no
information, rejecting at the first crossing; the combined form also
grants the first entry the randomized bar.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .rand_core import RngStream, uniform_block


@dataclass
class Decision:
    """Outcome of one rejection rule.

    crossing_index is the 1-based prefix length at which a running
    average first crossed its bar, when that is how the rejection
    happened.  randomization_used echoes the uniform consumed by a
    randomized rule.
    """

    reject: bool
    crossing_index: Optional[int] = None
    randomization_used: Optional[float] = None

    def __post_init__(self) -> None:
        if self.crossing_index is not None and not self.reject:
            raise ValueError("crossing_index requires reject=True")


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")


def _check_u(u: float) -> None:
    if not 0.0 < u <= 1.0:
        raise ValueError(f"u must be in (0,1], got {u}")


def _check_nonneg(x: float, name: str = "x") -> None:
    if x < 0.0:
        raise ValueError(f"{name} must be nonnegative, got {x}")


def mi_reject(x: float, alpha: float) -> Decision:
    """Reject when x >= 1/alpha."""
    _check_alpha(alpha)
    _check_nonneg(x)
    return Decision(reject=x >= 1.0 / alpha)


def umi_reject(x: float, alpha: float, u: float) -> Decision:
    """Reject when x >= u/alpha; u = 1 recovers the deterministic rule."""
    _check_alpha(alpha)
    _check_u(u)
    _check_nonneg(x)
    return Decision(reject=x >= u / alpha, randomization_used=u)


def ami_reject(x: float, epsilon: float, u: float) -> Decision:
    """Additive form: reject when x >= epsilon - A with A = epsilon * u.

    Equivalent to umi_reject(x, 1/epsilon, 1 - u): subtracting a
    Unif(0, epsilon) offset from the bar is the same randomization as
    scaling the bar by an independent uniform.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    _check_u(u)
    _check_nonneg(x)
    return Decision(reject=x >= epsilon - epsilon * u, randomization_used=u)


def _first_crossing(xs: np.ndarray, bar: float) -> Optional[int]:
    """1-based index of the first prefix average >= bar, else None."""
    avgs = np.cumsum(xs) / np.arange(1, xs.size + 1)
    hits = np.nonzero(avgs >= bar)[0]
    return int(hits[0]) + 1 if hits.size else None


def _as_seq(xs) -> np.ndarray:
    arr = np.asarray(xs, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("xs must be a nonempty 1-d sequence")
    if (arr < 0).any():
        raise ValueError("xs entries must be nonnegative")
    return arr


def emi_reject(xs, alpha: float) -> Decision:
    """Reject at the first prefix average crossing 1/alpha.

    Valid for sequences whose joint law is exchangeable; the guarantee
    covers every prefix simultaneously, so feeding a data-dependent
    number of entries does not inflate the level.
    """
    _check_alpha(alpha)
    arr = _as_seq(xs)
    t = _first_crossing(arr, 1.0 / alpha)
    return Decision(reject=t is not None, crossing_index=t)


def eumi_reject(xs, alpha: float, u: float) -> Decision:
    """Randomized first entry or any prefix-average crossing.

    Rejects when xs[0] >= u/alpha, and otherwise falls back to the
    exchangeable running-average rule at the deterministic bar.
    """
    _check_alpha(alpha)
    _check_u(u)
    arr = _as_seq(xs)
    if arr[0] >= u / alpha:
        return Decision(reject=True, randomization_used=u)
    t = _first_crossing(arr, 1.0 / alpha)
    return Decision(reject=t is not None, crossing_index=t, randomization_used=u)


def e_to_p(e: float, u: Optional[float] = None) -> float:
    """Calibrate an e-value to a p-value: min(u/e, 1).

    With u omitted (u = 1) this is the classical deterministic
    calibrator; a fresh uniform tightens it while keeping the p-value
    super-uniform. e = 0 maps to p = 1.
    """
    _check_nonneg(e, "e")
    if u is None:
        u = 1.0
    else:
        _check_u(u)
    if e == 0.0:
        return 1.0
    return min(u / e, 1.0)


@dataclass
class MonotonePair:
    """Nondecreasing maps f (values -> domain) and g (domain -> values).

    The threshold construction needs f(g(z)) >= z on the domain; that is
    a property of the supplied functions, checked probabilistically via
    validate rather than proven.
    """

    f: Callable[[float], float]
    g: Callable[[float], float]
    domain: tuple[float, float]

    def validate(self, rng: RngStream, n: int = 1000, probe_high: Optional[float] = None) -> bool:
        lo, hi = self.domain
        if probe_high is not None:
            hi = min(hi, probe_high)
        if not np.isfinite(hi):
            raise ValueError("unbounded domain needs probe_high")
        zs = lo + (hi - lo) * uniform_block(rng, n)
        return all(self.f(self.g(z)) >= z - 1e-9 * max(1.0, abs(z)) for z in zs)


def randomized_tail_threshold(pair: MonotonePair, x: float, u: float) -> float:
    """Generic randomized bar g(u * f(x)).

    P(X >= g(U f(x))) <= E[f(X)] / f(x) whenever f, g are nondecreasing
    with f(g(z)) >= z; u = 1 reduces to the deterministic bar g(f(x)).
    """
    _check_u(u)
    z = u * pair.f(x)
    lo, hi = pair.domain
    if not lo <= z <= hi:
        raise ValueError(f"u*f(x) = {z} falls outside the pair domain [{lo}, {hi}]")
    return pair.g(z)
