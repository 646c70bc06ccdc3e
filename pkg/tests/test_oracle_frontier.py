import math

import numpy as np
import pytest

from gen import y_equals_z_model
from sibkit.frontier import Frontier, pareto_mask
from sibkit.models import BinaryCascadeParams, binary_cascade
from sibkit.oracle import CapExceeded, GridSpec, grid_frontier, max_dprime, simplex_rows
from sibkit.probcore import Channel, VarLabel, cond_entropy, cond_mi
from sibkit.regions import TradeoffPoint, binary_convolution, binary_dprime_max, binary_entropy, logloss_point


class TestPareto:
    def test_simple(self):
        mask = pareto_mask([0, 1, 1, 2], [0, 1, 0.5, 1], [0, 0, 0, 0])
        assert mask.tolist() == [True, True, False, False]

    def test_duplicates_kept_once(self):
        mask = pareto_mask([1, 1], [1, 1], [1, 1])
        assert mask.tolist() == [True, False]

    def test_leakage_tradeoff(self):
        mask = pareto_mask([1, 1, 1], [0.5, 0.8, 0.8], [0.1, 0.4, 0.5])
        assert mask.tolist() == [True, True, False]

    def test_random_antichain_and_coverage(self):
        rng = np.random.default_rng(0)
        pts = rng.random((300, 3)).round(2)
        mask = pareto_mask(*pts.T)
        def dom(a, b):
            return a[0] <= b[0] and a[1] >= b[1] and a[2] <= b[2] and tuple(a) != tuple(b)
        kept = pts[mask]
        for p in kept:
            assert not any(dom(q, p) for q in pts)
        for i in np.flatnonzero(~mask):
            assert any(dom(q, pts[i]) or tuple(q) == tuple(pts[i]) for q in kept)

    def test_frontier_api(self):
        pts = [TradeoffPoint(0.5, 0.2, 0.1, "solver", meta={"beta": 1.0}),
               TradeoffPoint(0.6, 0.1, 0.2, "solver", meta={"beta": 2.0})]
        fr = Frontier.from_points(pts)
        assert len(fr) == 2
        assert [p.meta["beta"] for p in fr.pareto()] == [1.0]
        assert fr.max_dprime(0.55, 1) == 0.2
        assert fr.max_dprime(0.1, 1) == -math.inf
        with pytest.raises(ValueError):
            Frontier.from_points([])


class TestGrid:
    def test_simplex_rows(self):
        rows = simplex_rows(3, 4)
        assert rows.shape == (15, 3)
        assert np.allclose(rows.sum(1), 1.0)
        assert [tuple(r) for r in rows] == sorted(tuple(r) for r in rows)
        assert GridSpec(3, 4).rows_per_input() == 15

    def test_cap(self):
        with pytest.raises(CapExceeded):
            grid_frontier(binary_cascade(BinaryCascadeParams(0.1, 0.2)), GridSpec(3, 200))

    def test_bad_spec(self):
        with pytest.raises(ValueError):
            GridSpec(2, 1)

    def test_single_symbol(self):
        m = y_equals_z_model(np.random.default_rng(1))
        fr = grid_frontier(m, GridSpec(1, 5))
        assert len(fr) == 1
        assert fr.rate[0] == pytest.approx(0.0, abs=1e-12)
        assert fr.dprime[0] == pytest.approx(cond_mi(m.joint, "Yp", "Y"), abs=1e-12)
        assert fr.leakage[0] == pytest.approx(cond_mi(m.joint, "Ys", "Y"), abs=1e-12)

    def test_noiseless(self):
        fr = grid_frontier(binary_cascade(BinaryCascadeParams(0, 0)), GridSpec(2, 200))
        assert max_dprime(fr, 1, 1) == pytest.approx(1.0, abs=5e-3)

    def test_cascade(self):
        m = binary_cascade(BinaryCascadeParams(0.1, 0.2))
        fr = grid_frontier(m, GridSpec(2, 200))
        assert max_dprime(fr, 1, 1) == pytest.approx(0.17325, abs=5e-3)
        assert max_dprime(fr, 1, 0.3) == pytest.approx(
            binary_dprime_max(BinaryCascadeParams(0.1, 0.2), 1, 0.3), abs=5e-3)

    def test_degenerate_zero_caps(self):
        fr = grid_frontier(binary_cascade(BinaryCascadeParams(0.1, 0.2)), GridSpec(2, 50))
        assert max_dprime(fr, 0, 0) == pytest.approx(0.0, abs=1e-12)
        unconstrained = max_dprime(fr, math.inf, math.inf)
        for r, l in ((0.2, 0.5), (1, 1), (0.5, 0.1)):
            assert unconstrained >= max_dprime(fr, r, l)

    def test_monotone_in_caps(self):
        fr = grid_frontier(binary_cascade(BinaryCascadeParams(0.05, 0.1)), GridSpec(2, 60))
        grid = np.linspace(0, 1, 9)
        vals = np.array([[max_dprime(fr, r, l) for l in grid] for r in grid])
        assert np.all(np.diff(vals, axis=0) >= 0) and np.all(np.diff(vals, axis=1) >= 0)

    @pytest.mark.parametrize("p", [0, 0.05, 0.1, 0.2, 0.3])
    @pytest.mark.parametrize("q", [0, 0.05, 0.1, 0.2, 0.3])
    def test_cascade_grid(self, p, q):
        fr = grid_frontier(binary_cascade(BinaryCascadeParams(p, q)), GridSpec(2, 200),
                           keep_channels=False)
        want = 1 - binary_entropy(binary_convolution(p, q))
        assert max_dprime(fr, 1, 1) == pytest.approx(want, abs=5e-3)

    def test_points_reproduce(self):
        m = y_equals_z_model(np.random.default_rng(3))
        nx = m.joint.label("X").cardinality
        fr = grid_frontier(m, GridSpec(2, 6 if nx == 3 else 10))
        h_yp = cond_entropy(m.joint, "Yp")
        for i in np.flatnonzero(fr.pareto_mask):
            pt = logloss_point(m, Channel([m.joint.label("X")], VarLabel("V", 2), fr.channels[i]))
            assert pt.rate == pytest.approx(fr.rate[i], abs=1e-12)
            assert h_yp - pt.distortion == pytest.approx(fr.dprime[i], abs=1e-12)
            assert pt.leakage == pytest.approx(fr.leakage[i], abs=1e-12)

    def test_threads_do_not_change_result(self):
        m = binary_cascade(BinaryCascadeParams(0.1, 0.2))
        a = grid_frontier(m, GridSpec(3, 12))
        b = grid_frontier(m, GridSpec(3, 12), threads=4)
        assert np.array_equal(a.rate, b.rate) and np.array_equal(a.leakage, b.leakage)
        assert np.array_equal(a.pareto_mask, b.pareto_mask)
