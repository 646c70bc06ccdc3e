"""Point sets in (rate, D', leakage) space and their Pareto filter."""
from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .regions import TradeoffPoint

# Slack when comparing against caps: an identity channel's rate is H(X) up to
# rounding, and must still count as "rate <= H(X)".
CAP_SLACK = 1e-9


def pareto_mask(rate, dprime, leakage) -> np.ndarray:
    """Nondominated points under (rate down, D' up, leakage down).

    Exact duplicates keep only their first occurrence, so the result is an
    antichain.
    """
    rate = np.asarray(rate, dtype=float)
    dprime = np.asarray(dprime, dtype=float)
    leakage = np.asarray(leakage, dtype=float)
    n = rate.size
    keep = np.zeros(n, dtype=bool)
    order = np.lexsort((np.arange(n), leakage, -dprime, rate))
    # staircase over processed points: leakage ascending, best D' strictly increasing
    leaks: list[float] = []
    best: list[float] = []
    for i in order:
        l, d = leakage[i], dprime[i]
        j = bisect_right(leaks, l) - 1
        if j >= 0 and best[j] >= d:
            continue
        keep[i] = True
        lo = bisect_left(leaks, l)
        hi = lo
        while hi < len(leaks) and best[hi] <= d:
            hi += 1
        del leaks[lo:hi]
        del best[lo:hi]
        leaks.insert(lo, l)
        best.insert(lo, d)
    return keep


@dataclass
class Frontier:
    """Evaluated tradeoff points (D' payload) with their Pareto subset.

    ``meta`` holds one dict per point (solver parameters); ``channels`` the
    p(v|x) tables when they were kept.
    """

    rate: np.ndarray
    dprime: np.ndarray
    leakage: np.ndarray
    provenance: str
    meta: Optional[list] = None
    channels: Optional[np.ndarray] = None
    _mask: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.rate = np.asarray(self.rate, dtype=float)
        self.dprime = np.asarray(self.dprime, dtype=float)
        self.leakage = np.asarray(self.leakage, dtype=float)
        if not (self.rate.shape == self.dprime.shape == self.leakage.shape):
            raise ValueError("coordinate arrays differ in length")

    @classmethod
    def from_points(cls, points: Sequence[TradeoffPoint], provenance: Optional[str] = None):
        if not points:
            raise ValueError("frontier needs at least one point")
        return cls(
            rate=[p.rate for p in points],
            dprime=[p.dprime for p in points],
            leakage=[p.leakage for p in points],
            provenance=provenance or points[0].provenance,
            meta=[dict(p.meta) for p in points],
        )

    def __len__(self):
        return self.rate.size

    @property
    def pareto_mask(self) -> np.ndarray:
        if self._mask is None:
            self._mask = pareto_mask(self.rate, self.dprime, self.leakage)
        return self._mask

    def point(self, i: int) -> TradeoffPoint:
        meta = dict(self.meta[i]) if self.meta is not None else {}
        return TradeoffPoint(float(self.rate[i]), float(self.dprime[i]), float(self.leakage[i]),
                             self.provenance, "dprime", meta)

    def points(self) -> list[TradeoffPoint]:
        return [self.point(i) for i in range(len(self))]

    def pareto(self) -> list[TradeoffPoint]:
        return [self.point(i) for i in np.flatnonzero(self.pareto_mask)]

    def max_dprime(self, rate_cap: float = np.inf, leak_cap: float = np.inf) -> float:
        """Largest D' among points with rate <= rate_cap and leakage <= leak_cap; -inf if none."""
        ok = (self.rate <= rate_cap + CAP_SLACK) & (self.leakage <= leak_cap + CAP_SLACK)
        if not np.any(ok):
            return -np.inf
        return float(self.dprime[ok].max())
