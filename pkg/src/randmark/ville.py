"""Time-uniform crossing rules for nonnegative wealth processes.

A nonnegative supermartingale starting at 1 crosses 1/alpha with
probability at most alpha, uniformly over time.  The randomized variant
keeps the deterministic bar strictly before a stopping time and lowers
the bar to u/alpha exactly at it, drawing u only once the process has
stopped.  The reverse form monitors running averages of an exchangeable
stream, which shrink like a backward martingale.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .markov import Decision


@dataclass
class WealthPath:
    """Trajectory M_0, ..., M_n of a nonnegative process."""

    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("values must be a nonempty 1-d sequence")
        if (arr < 0).any():
            raise ValueError("wealth must be nonnegative")
        self.values = arr

    @property
    def running_sup(self) -> float:
        return float(self.values.max())

    def __len__(self) -> int:
        return self.values.size


def ville_first_crossing(path: WealthPath, alpha: float) -> Optional[int]:
    """Smallest index t with M_t >= 1/alpha, or None if never crossed."""
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    hits = np.nonzero(path.values >= 1.0 / alpha)[0]
    return int(hits[0]) if hits.size else None


def randomized_ville_reject(path: WealthPath, tau: int, alpha: float, u: float) -> Decision:
    """Crossing before tau at the full bar, or M_tau >= u/alpha at the stop.

    tau indexes the path (M_0 is index 0).  Drawing u after stopping is
    what licenses the lowered final bar; the combined rule still has
    level alpha and strictly contains the stopped deterministic rule.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0,1), got {alpha}")
    if not 0.0 < u <= 1.0:
        raise ValueError(f"u must be in (0,1], got {u}")
    if not 0 <= tau < len(path):
        raise ValueError(f"tau must index the path (0..{len(path) - 1}), got {tau}")
    bar = 1.0 / alpha
    pre = np.nonzero(path.values[:tau] >= bar)[0]
    if pre.size:
        return Decision(reject=True, crossing_index=int(pre[0]), randomization_used=u)
    return Decision(reject=path.values[tau] >= u / alpha, randomization_used=u)


@dataclass
class ReverseAverageMonitor:
    """Running-average monitor for an exchangeable nonnegative stream.

    Feeding entries one at a time, the monitor rejects at the first time
    the average of everything seen so far reaches 1/alpha.  Because the
    running average of an exchangeable sequence is a reverse
    supermartingale, the crossing probability is bounded by
    alpha * E[X_1] no matter how long the stream is allowed to run.
    """

    alpha: float
    t: int = 0
    total: float = 0.0
    crossing_index: Optional[int] = field(default=None)

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")

    @property
    def rejected(self) -> bool:
        return self.crossing_index is not None

    def update(self, x: float) -> Decision:
        if x < 0.0:
            raise ValueError(f"entries must be nonnegative, got {x}")
        self.t += 1
        self.total += x
        if self.crossing_index is None and self.total / self.t >= 1.0 / self.alpha:
            self.crossing_index = self.t
        return Decision(reject=self.rejected, crossing_index=self.crossing_index)


def reverse_avg_monitor(values, alpha: float) -> Decision:
    """Run a ReverseAverageMonitor over values, stopping at rejection."""
    mon = ReverseAverageMonitor(alpha)
    decision = Decision(reject=False)
    for x in values:
        decision = mon.update(float(x))
        if decision.reject:
            break
    return decision
