"""Exhaustive grid search over p(v|x) on a uniform simplex lattice."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import kernels
from .frontier import Frontier
from .models import SourceModel
from .sibsolver import SIBProblem

CHUNK = 8192


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class GridSpec:
    card_V: int
    resolution: int
    max_channels: int = 1_000_000

    def __post_init__(self):
        if self.card_V < 1:
            raise ValueError("card_V must be positive")
        if self.resolution < 2:
            raise ValueError("resolution must be at least 2")

    def rows_per_input(self) -> int:
        return math.comb(self.resolution + self.card_V - 1, self.card_V - 1)

    def count(self, nx: int) -> int:
        return self.rows_per_input() ** nx


def simplex_rows(card_V: int, resolution: int) -> np.ndarray:
    """All compositions of ``resolution`` into ``card_V`` parts, scaled to the simplex.

    Rows are in lexicographic order of their entries.
    """
    n = resolution + card_V - 1
    rows = []
    for bars in combinations(range(n), card_V - 1):
        edges = (-1,) + bars + (n,)
        rows.append([edges[k + 1] - edges[k] - 1 for k in range(card_V)])
    rows = np.array(rows, dtype=float) / resolution
    order = np.lexsort(rows.T[::-1])
    return rows[order]


def _channel_block(rows: np.ndarray, nx: int, start: int, stop: int) -> np.ndarray:
    idx = np.unravel_index(np.arange(start, stop), (rows.shape[0],) * nx)
    return np.stack([rows[i] for i in idx], axis=1)


def grid_frontier(model: SourceModel, spec: GridSpec, threads: int = 1,
                  keep_channels: bool = True) -> Frontier:
    """Evaluate every lattice channel; returns all triples with their Pareto subset.

    Channels are enumerated in lexicographic order of (row for x=0, row for
    x=1, ...), so the result does not depend on ``threads``.
    """
    problem = SIBProblem.from_model(model)
    nx = problem.nx
    total = spec.count(nx)
    if total > spec.max_channels:
        raise CapExceeded(f"{total} channels exceed the cap of {spec.max_channels}")
    rows = simplex_rows(spec.card_V, spec.resolution)
    bounds = [(s, min(s + CHUNK, total)) for s in range(0, total, CHUNK)]

    def work(b):
        ws = _channel_block(rows, nx, *b)
        return kernels.triples(ws, problem.pxy, problem.pyp, problem.pys)

    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, bounds))
    else:
        parts = [work(b) for b in bounds]
    tri = np.concatenate(parts, axis=0)
    channels = _channel_block(rows, nx, 0, total) if keep_channels else None
    return Frontier(tri[:, 0], tri[:, 1], tri[:, 2], provenance="oracle", channels=channels)


def max_dprime(frontier: Frontier, R_cap: float = math.inf, L_cap: float = math.inf) -> float:
    """Best D' with rate <= R_cap and leakage <= L_cap; ``-inf`` when nothing qualifies."""
    return frontier.max_dprime(R_cap, L_cap)
