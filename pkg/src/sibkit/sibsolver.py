"""Secure information bottleneck solver.

Minimizes I(X;V|Y) - beta * I(Yp;V,Y) + beta * gamma * I(Ys;V,Y) over p(v|x)
by fixed-point iteration, with beta-annealed sweeps and a greedy
agglomerative alternative.
"""
from __future__ import annotations

import logging
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .frontier import Frontier
from .models import SourceModel
from .probcore import Channel, VarLabel, marginal
from .regions import RegionError, TradeoffPoint, identical_side_information

log = logging.getLogger(__name__)

IDENTITY_WEIGHT = 0.9


class SolverError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    beta: float = 1.0
    gamma: float = 0.0
    card_V: int = 2
    max_iters: int = 10000
    tol: float = 1e-9
    restarts: int = 8
    seed: int = 0
    prob_floor: float = 1e-12

    def __post_init__(self):
        if self.beta < 0 or self.gamma < 0:
            raise SolverError("beta and gamma must be nonnegative")
        if self.card_V < 1 or self.max_iters < 1 or self.restarts < 1:
            raise SolverError("card_V, max_iters and restarts must be positive")
        if not (self.tol > 0 and 0 <= self.prob_floor < 1):
            raise SolverError("tol must be positive and prob_floor in [0, 1)")


@dataclass
class SIBProblem:
    """Dense arrays of the source joint: p(x,y), p(yp|x,y), p(ys|x,y)."""

    pxy: np.ndarray
    pyp: np.ndarray
    pys: np.ndarray
    x_label: VarLabel

    @classmethod
    def from_model(cls, model: SourceModel) -> "SIBProblem":
        if not identical_side_information(model):
            raise SolverError("solver needs Z = Y or Z absent")
        joint = model.completed()
        tab = np.array(marginal(joint, ["X", "Y", "Yp", "Ys"]).table)
        pxy = tab.sum(axis=(2, 3))
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(pxy[:, :, None, None] > 0, tab / np.where(pxy > 0, pxy, 1.0)[:, :, None, None], 0.0)
        return cls(pxy=pxy, pyp=np.ascontiguousarray(cond.sum(axis=3)),
                   pys=np.ascontiguousarray(cond.sum(axis=2)), x_label=joint.label("X"))

    @property
    def nx(self) -> int:
        return self.pxy.shape[0]

    def triple(self, w: np.ndarray) -> np.ndarray:
        return kernels.triples(w, self.pxy, self.pyp, self.pys)[0]


@dataclass
class SolverState:
    ch_V: Channel
    pv_y: np.ndarray
    pyp_vy: np.ndarray
    pys_vy: np.ndarray
    lagrangian: float
    triple: TradeoffPoint
    beta: Optional[float] = None
    gamma: Optional[float] = None
    converged: bool = False
    iters: int = 0
    restart: int = 0
    resets: int = 0
    reseeds: int = 0
    merge_log: list = field(default_factory=list)

    @property
    def w(self) -> np.ndarray:
        return np.asarray(self.ch_V.table)


def _lagrangian(tri, beta: float, gamma: float) -> float:
    rate, dprime, leak = tri
    return float(rate - beta * dprime + beta * gamma * leak)


def make_state(problem: SIBProblem, w, config: Optional[SolverConfig] = None, **extra) -> SolverState:
    """State for channel ``w`` with derived tables and triple computed from it."""
    w = np.asarray(w, dtype=float)
    ch = Channel([problem.x_label], VarLabel("V", w.shape[1]), w)
    pv_y, post_p, post_s = kernels.posteriors(w, problem.pxy, problem.pyp, problem.pys)
    tri = problem.triple(w)
    beta = config.beta if config is not None else extra.pop("beta", None)
    gamma = config.gamma if config is not None else extra.pop("gamma", None)
    lag = _lagrangian(tri, beta, gamma) if beta is not None else math.nan
    point = TradeoffPoint(float(tri[0]), float(tri[1]), float(tri[2]), "solver", "dprime",
                          {"beta": beta, "gamma": gamma})
    return SolverState(ch, pv_y, post_p, post_s, lag, point, beta, gamma, **extra)


def lagrangian(model: SourceModel, state: SolverState, config: SolverConfig) -> float:
    """I(X;V|Y) - beta I(Yp;V,Y) + beta gamma I(Ys;V,Y), in bits."""
    problem = SIBProblem.from_model(model)
    return _lagrangian(problem.triple(state.w), config.beta, config.gamma)


def update_step(model: SourceModel, state: SolverState, config: SolverConfig,
                problem: Optional[SIBProblem] = None) -> SolverState:
    problem = problem or SIBProblem.from_model(model)
    w, resets = kernels.sib_step(state.w, problem.pxy, problem.pyp, problem.pys,
                                 config.beta, config.gamma, config.prob_floor)
    if resets:
        log.warning("update reset %d collapsed row(s) to uniform", resets)
    return make_state(problem, w, config, iters=state.iters + 1, restart=state.restart,
                      resets=state.resets + resets, reseeds=state.reseeds)


def initial_channel(nx: int, card_V: int, restart: int, rng: Optional[np.random.Generator]) -> np.ndarray:
    """Restart 0 leans on v = x mod card_V; later restarts draw Dirichlet(1) rows."""
    if restart == 0 or card_V == 1:
        if card_V == 1:
            return np.ones((nx, 1))
        w = np.full((nx, card_V), (1 - IDENTITY_WEIGHT) / (card_V - 1))
        w[np.arange(nx), np.arange(nx) % card_V] = IDENTITY_WEIGHT
        return w
    return rng.dirichlet(np.ones(card_V), size=nx)


def _run(problem: SIBProblem, w0, config: SolverConfig, restart: int) -> SolverState:
    w, iters, converged, resets, reseeds = kernels.sib_iterate(
        w0, problem.pxy, problem.pyp, problem.pys, config.beta, config.gamma,
        config.tol, config.max_iters, config.prob_floor)
    return make_state(problem, w, config, converged=converged, iters=iters, restart=restart,
                      resets=resets, reseeds=reseeds)


def _solve(problem: SIBProblem, config: SolverConfig, seed_key: tuple,
           warm: Optional[np.ndarray] = None) -> SolverState:
    if config.card_V > problem.nx + 2:
        warnings.warn(f"card_V={config.card_V} exceeds the sufficient cardinality |X|+2", stacklevel=3)
    candidates = []
    if warm is not None:
        candidates.append((-1, warm))
    for r in range(config.restarts):
        rng = np.random.default_rng(list(seed_key) + [r]) if r else None
        candidates.append((r, initial_channel(problem.nx, config.card_V, r, rng)))
    best = None
    for r, w0 in candidates:
        st = _run(problem, w0, config, r)
        if best is None or st.lagrangian < best.lagrangian - 1e-13:
            best = st
    if not best.converged:
        log.info("beta=%g gamma=%g: best restart did not converge in %d iterations",
                 config.beta, config.gamma, config.max_iters)
    return best


def solve(model: SourceModel, config: SolverConfig, warm_start=None) -> SolverState:
    """Best-of-restarts stationary point; non-convergence is reported on the state."""
    try:
        problem = SIBProblem.from_model(model)
    except RegionError as exc:
        raise SolverError(str(exc)) from exc
    warm = None if warm_start is None else np.asarray(
        warm_start.w if isinstance(warm_start, SolverState) else warm_start, dtype=float)
    return _solve(problem, config, (config.seed,), warm)


def _chain(problem: SIBProblem, betas: Sequence[float], gamma: float, gi: int,
           config: SolverConfig) -> list[SolverState]:
    out = []
    warm = None
    for bi, beta in enumerate(betas):
        cfg = replace(config, beta=float(beta), gamma=float(gamma))
        st = _solve(problem, cfg, (config.seed, gi, bi), warm)
        out.append(st)
        warm = st.w
    return out


def sweep_states(model: SourceModel, beta_grid, gamma_grid, config: SolverConfig,
                 threads: int = 1) -> list[SolverState]:
    """Solve every grid point; gamma outermost, beta ascending with warm starts.

    Output order (gamma in given order, beta ascending) does not depend on
    ``threads``.
    """
    betas = sorted(float(b) for b in beta_grid)
    gammas = [float(g) for g in gamma_grid]
    if not betas or not gammas:
        raise SolverError("beta and gamma grids must be nonempty")
    problem = SIBProblem.from_model(model)
    if threads <= 1 or len(gammas) == 1:
        chains = [_chain(problem, betas, g, gi, config) for gi, g in enumerate(gammas)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(_chain, problem, betas, g, gi, config) for gi, g in enumerate(gammas)]
            chains = [f.result() for f in futs]
    return [st for chain in chains for st in chain]


def states_to_frontier(states: Sequence[SolverState]) -> Frontier:
    meta = [{"beta": s.beta, "gamma": s.gamma, "restart": s.restart,
             "converged": s.converged, "iters": s.iters} for s in states]
    return Frontier(
        rate=[s.triple.rate for s in states],
        dprime=[s.triple.payload for s in states],
        leakage=[s.triple.leakage for s in states],
        provenance="solver",
        meta=meta,
        channels=np.array([s.w for s in states]),
    )


def sweep(model: SourceModel, beta_grid, gamma_grid, config: SolverConfig,
          threads: int = 1) -> Frontier:
    return states_to_frontier(sweep_states(model, beta_grid, gamma_grid, config, threads))


def _merged(w: np.ndarray, i: int, j: int) -> np.ndarray:
    keep = [k for k in range(w.shape[1]) if k != j]
    out = w[:, keep].copy()
    out[:, keep.index(i)] += w[:, j]
    return out


def agglomerate(model: SourceModel, dprime_target: float, leak_target: float = math.inf,
                slack: float = 1e-12) -> SolverState:
    """Greedy merging of V symbols starting from V = X.

    A merge is admissible when the result keeps I(Yp;V,Y) >= dprime_target and
    I(Ys;V,Y) <= leak_target. Among admissible merges the smallest D' loss
    wins, then the smallest leakage, then the lowest index pair.
    """
    problem = SIBProblem.from_model(model)
    w = np.eye(problem.nx)
    tri = problem.triple(w)
    if tri[1] < dprime_target - slack:
        raise SolverError(f"target D'={dprime_target} exceeds I(Yp;X,Y)={tri[1]:.6g}")
    history = []
    while w.shape[1] > 1:
        pairs = [(i, j) for i in range(w.shape[1]) for j in range(i + 1, w.shape[1])]
        cands = np.array([_merged(w, i, j) for i, j in pairs])
        tris = kernels.triples(cands, problem.pxy, problem.pyp, problem.pys)
        best = None
        for (i, j), t in zip(pairs, tris):
            if t[1] < dprime_target - slack or t[2] > leak_target + slack:
                continue
            key = (round(tri[1] - t[1], 12), round(t[2], 12), i, j)
            if best is None or key < best[0]:
                best = (key, i, j, t)
        if best is None:
            break
        _, i, j, t = best
        w = _merged(w, i, j)
        history.append({"merged": (i, j), "card_V": w.shape[1], "rate": float(t[0]),
                        "dprime": float(t[1]), "leakage": float(t[2]),
                        "dprime_loss": float(tri[1] - t[1])})
        tri = t
    state = make_state(problem, w, None, converged=True, merge_log=history)
    return state
