"""Acceptance criteria, one test each.

Every test prints a single ``[acceptance N] PASS|FAIL ...`` line (shown even
under output capture) before asserting. Tolerances are pinned below.
"""
import math
import time

import numpy as np
import pytest

from gen import channel, dist, markov_xy_model, random_joint, v_channel, y_equals_z_model
from sibkit.cli import run
from sibkit.frontier import Frontier
from sibkit.models import (BinaryCascadeParams, GaussianCascadeParams, binary_cascade,
                           gaussian_cascade_discretized)
from sibkit.oracle import GridSpec, grid_frontier, max_dprime
from sibkit.probcore import (Channel, JointPMF, VarLabel, bsc_channel, cond_entropy, cond_mi,
                             cond_mi_raw, extend_with_channel, marginal, verify_markov)
from sibkit.regions import (AuxiliaryChoice, binary_convolution, binary_dprime_max,
                            binary_entropy, binary_entropy_inverse, extended_joint,
                            gaussian_achievable_triple, gaussian_dprime_max,
                            gaussian_quadratic_dmin, inner_leakage, logloss_distortion,
                            outer_leakage, posterior_reconstruction)
from sibkit.sibsolver import SolverConfig, sweep, sweep_states

TOL_BINARY_CLOSED_FORM = 5e-3
RUNTIME_1 = 120.0
TOL_SOLVER_ORACLE = 1e-2
TOL_DOMINANCE = 5e-3
RUNTIME_2 = 300.0
TOL_IDENTITY = 1e-10
TOL_LEMMA = 1e-12
TOL_GERBER = 1e-10
TOL_GAUSSIAN_DMIN = 1e-12
TOL_GAUSSIAN_SOLVER = 0.03
RUNTIME_7 = 600.0
TOL_CHAIN = 1e-10
TOL_NONNEG = -1e-12
TOL_ROUND_TRIP = 1e-15
TOL_DPI = 1e-10
RUNTIME_9 = 30.0


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\n[acceptance {n}] {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, detail
    return _report


def test_1_binary_closed_form(report):
    t0 = time.perf_counter()
    caps = np.linspace(0, 1, 6)
    worst = 0.0
    for p in (0, 0.05, 0.1, 0.2):
        for q in (0, 0.1, 0.2):
            params = BinaryCascadeParams(p, q)
            fr = grid_frontier(binary_cascade(params), GridSpec(2, 200), keep_channels=False)
            for r in caps:
                for l in caps:
                    err = abs(max_dprime(fr, r, l) - binary_dprime_max(params, r, l))
                    worst = max(worst, err)
    dt = time.perf_counter() - t0
    ok = worst <= TOL_BINARY_CLOSED_FORM and dt < RUNTIME_1
    report(1, ok, f"binary oracle vs closed form: worst |diff| {worst:.2e} "
                  f"(tol {TOL_BINARY_CLOSED_FORM}), {dt:.1f}s")


def test_2_solver_vs_oracle(report):
    t0 = time.perf_counter()
    m = binary_cascade(BinaryCascadeParams(0.1, 0.2))
    states = sweep_states(m, np.geomspace(0.1, 100, 20), [0, 0.5, 1, 2],
                          SolverConfig(card_V=3, restarts=8, seed=0))
    t_solve = time.perf_counter() - t0
    parts = [grid_frontier(m, GridSpec(2, 200), keep_channels=False),
             grid_frontier(m, GridSpec(3, 40), keep_channels=False)]
    orc = Frontier(np.concatenate([f.rate for f in parts]), np.concatenate([f.dprime for f in parts]),
                   np.concatenate([f.leakage for f in parts]), "oracle")
    sol = Frontier([s.triple.rate for s in states], [s.triple.dprime for s in states],
                   [s.triple.leakage for s in states], "solver")
    match = dominate = 0.0
    for s in states:
        r, d, l = s.triple.rate, s.triple.dprime, s.triple.leakage
        o = orc.max_dprime(r, l)
        match = max(match, abs(o - sol.max_dprime(r, l)))
        dominate = max(dominate, d - o)
    unconverged = sum(not s.converged for s in states)
    ok = match <= TOL_SOLVER_ORACLE and dominate <= TOL_DOMINANCE and t_solve < RUNTIME_2
    report(2, ok, f"solver vs oracle at {len(states)} swept caps: worst |diff| {match:.2e} "
                  f"(tol {TOL_SOLVER_ORACLE}), worst excess {dominate:.2e} (tol {TOL_DOMINANCE}), "
                  f"{unconverged} unconverged, sweep {t_solve:.1f}s")


def test_3_markov_side_information_identity(report):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(500):
        m = markov_xy_model(rng)
        lv = inner_leakage(m, AuxiliaryChoice(ch_V=v_channel(rng, m)))
        worst = max(worst, abs(lv.value - cond_mi(m.joint, "Ys", "Z")))
    report(3, worst <= TOL_IDENTITY,
           f"X-Y-(Ys,Z) models: worst |inner leakage - I(Ys;Z)| {worst:.2e} over 500 (tol {TOL_IDENTITY})")


def test_4_identical_side_information_collapse(report):
    rng = np.random.default_rng(4048)
    worst = 0.0
    for _ in range(500):
        m = y_equals_z_model(rng)
        ch_v = v_channel(rng, m)
        ch_u = channel(rng, [ch_v.output], VarLabel("U", int(rng.integers(1, 4))))
        a = AuxiliaryChoice(ch_V=ch_v, ch_U=ch_u)
        tv = Channel(ch_v.inputs, (VarLabel("T", 1), ch_v.output), np.array(ch_v.table)[:, None, :])
        want = cond_mi(extended_joint(m, a), "Ys", ["V", "Y"])
        inner = inner_leakage(m, a).value
        outer = outer_leakage(m, AuxiliaryChoice(ch_TV=tv, ch_U=ch_u)).value
        worst = max(worst, abs(inner - want), abs(outer - want), abs(inner - outer))
    report(4, worst <= TOL_IDENTITY,
           f"Y=Z models: worst spread of inner/outer/I(Ys;V,Y) {worst:.2e} over 500 (tol {TOL_IDENTITY})")


def test_5_logloss_lower_bound(report):
    rng = np.random.default_rng(77)
    worst = 0.0
    not_higher = 0
    for _ in range(200):
        m = y_equals_z_model(rng)
        ch_v = v_channel(rng, m)
        joint = extend_with_channel(m.completed(), ch_v)
        q = posterior_reconstruction(m, ch_v)
        base = logloss_distortion(joint, q)
        worst = max(worst, abs(base - cond_entropy(joint, "Yp", ["V", "Y"])))
        eps = rng.uniform(0.01, 0.5)
        noise = np.apply_along_axis(lambda r: dist(rng, r.size), -1, np.array(q.table))
        pert = Channel(q.inputs, q.output, (1 - eps) * np.array(q.table) + eps * noise, tol=1e-9)
        if not logloss_distortion(joint, pert) > base:
            not_higher += 1
    ok = worst <= TOL_LEMMA and not_higher == 0
    report(5, ok, f"logloss at posterior vs H(Yp|V,Y): worst {worst:.2e} (tol {TOL_LEMMA}); "
                  f"{not_higher} of 200 perturbations not strictly worse")


def test_6_mrs_gerber(report):
    rng = np.random.default_rng(5)
    x = VarLabel("X", 2)
    worst_gap = math.inf
    worst_eq = 0.0
    for i in range(500):
        p = (0.1, 0.25, 0.4)[i % 3]
        joint = binary_cascade(BinaryCascadeParams(p, 0.0)).joint
        for bsc in (False, True):
            ch = bsc_channel(x, "V", rng.uniform(0, 1)) if bsc else channel(rng, [x], VarLabel("V", 2))
            j = extend_with_channel(joint, ch)
            bound = binary_entropy(binary_convolution(
                binary_entropy_inverse(min(cond_entropy(j, "X", "V"), 1.0)), p))
            gap = cond_entropy(j, "Ys", "V") - bound
            if bsc:
                worst_eq = max(worst_eq, abs(gap))
            else:
                worst_gap = min(worst_gap, gap)
    ok = worst_gap >= -TOL_GERBER and worst_eq <= TOL_GERBER
    report(6, ok, f"H(Ys|V) - h(h^-1(H(X|V))*p): min {worst_gap:.2e} over 500 random channels, "
                  f"max |.| {worst_eq:.2e} over 500 BSC channels (tol {TOL_GERBER})")


def test_7_gaussian(report):
    gp = GaussianCascadeParams(1.0, 0.5, 1.0)
    worst_dmin = 0.0
    for nq in np.round(np.arange(0.1, 10.0001, 0.1), 10):
        t = gaussian_achievable_triple(gp, float(nq))
        worst_dmin = max(worst_dmin, abs(gaussian_quadratic_dmin(gp, t.rate, t.leakage) - t.distortion))
    t0 = time.perf_counter()
    m = gaussian_cascade_discretized(gp, 64, 5.0)
    # dense around the transition away from the trivial solution, sparse above
    betas = np.unique(np.concatenate([np.geomspace(2.0, 6.0, 60), np.geomspace(6.0, 150.0, 20)]))
    fr = sweep(m, betas, [0.0, 0.5], SolverConfig(card_V=4, restarts=1, seed=0))
    dt = time.perf_counter() - t0
    worst = 0.0
    for r in (0.25, 0.5, 1.0):
        for l in (0.25, 0.5, 1.0):
            worst = max(worst, abs(fr.max_dprime(r, l) - gaussian_dprime_max(gp, r, l)))
    ok = worst_dmin <= TOL_GAUSSIAN_DMIN and worst <= TOL_GAUSSIAN_SOLVER and dt < RUNTIME_7
    report(7, ok, f"Gaussian: Dmin identity worst {worst_dmin:.2e} (tol {TOL_GAUSSIAN_DMIN}); "
                  f"discretized solver vs closed form worst {worst:.2e} (tol {TOL_GAUSSIAN_SOLVER}), "
                  f"{dt:.1f}s")


def test_8_cli_determinism(report, tmp_path, capsys):
    outs = []
    for threads in (1, 2, 4, 1):
        path = tmp_path / f"t{len(outs)}.csv"
        code = run(["solve", "--model", "binary:0.1,0.2", "--beta-grid", "0.1:100:12",
                    "--gamma-grid", "0:2:4", "--card-v", "3", "--restarts", "4", "--seed", "11",
                    "--threads", str(threads), "--out", str(path)])
        assert code == 0
        outs.append(path.read_bytes())
    for threads in (1, 3):
        path = tmp_path / f"o{threads}.csv"
        run(["oracle", "--model", "binary:0.1,0.2", "--card-v", "3", "--resolution", "14",
             "--threads", str(threads), "--out", str(path)])
        outs.append(path.read_bytes())
    ok = len(set(outs[:4])) == 1 and outs[4] == outs[5]
    report(8, ok, f"solve CSV identical across --threads 1,2,4 and repeat: {len(set(outs[:4])) == 1}; "
                  f"oracle CSV identical across --threads 1,3: {outs[4] == outs[5]}")


def test_9_probcore_properties(report):
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    chain = trip = dpi = 0.0
    nonneg = math.inf
    markov_fail = 0
    for _ in range(1000):
        j = random_joint(rng, ("A", "B", "C", "D"))
        lhs = cond_mi(j, "A", ["B", "C"], "D")
        rhs = cond_mi(j, "A", "B", "D") + cond_mi(j, "A", "C", ["B", "D"])
        chain = max(chain, abs(lhs - rhs))
        raw = [cond_mi_raw(j, "A", "B"), cond_mi_raw(j, "A", "C", ["B", "D"]),
               cond_entropy(j, ["A", "C"], "B"), cond_mi_raw(j, ["A", "B"], "C", "D")]
        nonneg = min(nonneg, *raw)
        src = j.label("A")
        v = channel(rng, [src], VarLabel("V", int(rng.integers(2, 4))), sparse=0.2)
        ext = extend_with_channel(j, v)
        trip = max(trip, float(np.abs(marginal(ext, j.names).table - j.table).max()))
        ext2 = extend_with_channel(ext, channel(rng, [v.output], VarLabel("U", int(rng.integers(2, 4)))))
        dpi = max(dpi, cond_mi(ext2, "A", "U") - cond_mi(ext2, "A", "V"))
        ok_m = (verify_markov(ext2, "V", "A", ["B", "C", "D"])
                and verify_markov(ext2, "U", "V", ["A", "B", "C", "D"]))
        markov_fail += not ok_m
    dt = time.perf_counter() - t0
    ok = (chain <= TOL_CHAIN and nonneg >= TOL_NONNEG and trip <= TOL_ROUND_TRIP
          and dpi <= TOL_DPI and markov_fail == 0 and dt < RUNTIME_9)
    report(9, ok, f"1000 instances: chain rule {chain:.1e} (tol {TOL_CHAIN}), min raw {nonneg:.1e} "
                  f"(floor {TOL_NONNEG}), round trip {trip:.1e} (tol {TOL_ROUND_TRIP}), "
                  f"DPI excess {dpi:.1e} (tol {TOL_DPI}), {markov_fail} Markov failures, {dt:.1f}s")
