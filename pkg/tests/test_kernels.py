"""Backend equivalence: the numba kernels must reproduce the numpy reference
bit-for-bit, and both must satisfy independent brute-force oracles."""

import math

import numpy as np
import pytest

from driftsearch.kernels import _reference

numba_impl = pytest.importorskip("driftsearch.kernels._jit")

RNG = np.random.default_rng(123)


def random_field(n_nodes=40, n_times=5):
    gx = RNG.uniform(-50_000, 50_000, n_nodes)
    gy = RNG.uniform(-50_000, 50_000, n_nodes)
    times = np.sort(RNG.uniform(0, 5000, n_times))
    u = RNG.normal(size=(n_times, n_nodes))
    v = RNG.normal(size=(n_times, n_nodes))
    return gx, gy, times, u, v


class TestIdwParity:
    def test_bit_identical(self):
        gx, gy, times, u, v = random_field()
        px = RNG.uniform(-60_000, 60_000, 500)
        py = RNG.uniform(-60_000, 60_000, 500)
        a = _reference.idw3_block(px, py, gx, gy, u[0], u[1], v[0], v[1], 0.37)
        b = numba_impl.idw3_block(px, py, gx, gy, u[0], u[1], v[0], v[1], 0.37)
        np.testing.assert_array_equal(a[0], b[0])
        np.testing.assert_array_equal(a[1], b[1])

    def test_against_brute_force_oracle(self):
        # independent oracle: sort-by-distance, explicit weighted mean
        gx, gy, times, u, v = random_field()
        px = RNG.uniform(-60_000, 60_000, 50)
        py = RNG.uniform(-60_000, 60_000, 50)
        theta = 0.4
        a_u, a_v = _reference.idw3_block(px, py, gx, gy, u[0], u[1], v[0], v[1], theta)
        for i in range(50):
            d = np.sqrt((px[i] - gx) ** 2 + (py[i] - gy) ** 2)
            order = np.argsort(d, kind="stable")[:3]
            w = 1.0 / d[order]
            exp_u = (1 - theta) * np.sum(w * u[0][order]) / np.sum(w) + theta * np.sum(
                w * u[1][order]
            ) / np.sum(w)
            assert a_u[i] == pytest.approx(exp_u, rel=1e-12)

    def test_snap_within_one_meter(self):
        gx = np.array([0.0, 5000.0, -3000.0, 8000.0])
        gy = np.array([0.0, 1000.0, 4000.0, -2000.0])
        u0 = np.array([3.0, 4.0, 5.0, 6.0])
        u1 = np.array([7.0, 8.0, 9.0, 10.0])
        z = np.zeros(4)
        for impl in (_reference, numba_impl):
            u, v = impl.idw3_block(
                np.array([0.5]), np.array([0.0]), gx, gy, u0, u1, z, z, 0.25
            )
            assert u[0] == (1 - 0.25) * 3.0 + 0.25 * 7.0


class TestAdvanceParity:
    def make_inputs(self, n=64, steps=30):
        cgx, cgy, ct, cu, cv = random_field(25, 4)
        wgx, wgy, wt, wu, wv = random_field(31, 6)
        ct = np.linspace(-100, 3000, 4)
        wt = np.linspace(-100, 3000, 6)
        x0 = RNG.uniform(-20_000, 20_000, n)
        y0 = RNG.uniform(-20_000, 20_000, n)
        times = np.linspace(0, 60.0 * steps, steps + 1)
        noise = [RNG.normal(0, 0.2, (n, steps)) for _ in range(6)]
        signs = np.where(RNG.random((n, steps)) < 0.5, 1.0, -1.0)
        return (
            x0, y0, times,
            cgx, cgy, ct, cu, cv,
            wgx, wgy, wt, wu, wv,
            1.17, 10.2, 0.04, 3.9,
            *noise, signs,
        )

    def test_bit_identical(self):
        args = self.make_inputs()
        ax, ay = _reference.advance_paths(*args)
        bx, by = numba_impl.advance_paths(*args)
        np.testing.assert_array_equal(ax, bx)
        np.testing.assert_array_equal(ay, by)

    def test_zero_everything_stays_put(self):
        n, steps = 8, 10
        zgrid = lambda: (
            np.array([0.0, 9000.0, 0.0]),
            np.array([0.0, 0.0, 9000.0]),
            np.array([0.0, 60.0 * steps]),
            np.zeros((2, 3)),
            np.zeros((2, 3)),
        )
        cg = zgrid()
        wg = zgrid()
        x0 = RNG.uniform(-5000, 5000, n)
        y0 = RNG.uniform(-5000, 5000, n)
        times = np.linspace(0, 600, steps + 1)
        zeros = np.zeros((n, steps))
        signs = np.ones((n, steps))
        for impl in (_reference, numba_impl):
            px, py = impl.advance_paths(
                x0, y0, times, *cg, *wg, 1.17, 10.2, 0.04, 3.9,
                zeros, zeros, zeros, zeros, zeros, zeros, signs,
            )
            np.testing.assert_array_equal(px, np.tile(x0[:, None], (1, steps + 1)))
            np.testing.assert_array_equal(py, np.tile(y0[:, None], (1, steps + 1)))


class TestCpaParity:
    def make_inputs(self, n=40, steps=24, legs=7):
        px = np.cumsum(RNG.normal(0, 500, (n, steps + 1)), axis=1)
        py = np.cumsum(RNG.normal(0, 500, (n, steps + 1)), axis=1)
        times = np.linspace(0, 60.0 * steps, steps + 1)
        span = 60.0 * steps
        ta = RNG.uniform(0, 0.6 * span, legs)
        tb = ta + RNG.uniform(30, 0.3 * span, legs)
        ax = RNG.uniform(-5000, 5000, legs)
        ay = RNG.uniform(-5000, 5000, legs)
        bx = RNG.uniform(-5000, 5000, legs)
        by = RNG.uniform(-5000, 5000, legs)
        k0 = np.maximum(0, np.searchsorted(times, ta, side="right") - 1)
        k1 = np.minimum(len(times) - 2, np.searchsorted(times, tb, side="left") - 1)
        return px, py, times, ax, ay, bx, by, ta, tb, k0.astype(np.int64), k1.astype(np.int64)

    def test_bit_identical(self):
        args = self.make_inputs()
        a = _reference.cpa_ranges(*args)
        b = numba_impl.cpa_ranges(*args)
        np.testing.assert_array_equal(a, b)

    def test_against_dense_sampling_oracle(self):
        # brute force: sample the relative distance densely in time
        args = self.make_inputs(n=6, steps=12, legs=3)
        px, py, times, ax, ay, bx, by, ta, tb, k0, k1 = args
        got = _reference.cpa_ranges(*args)
        for l in range(3):
            ts = np.linspace(ta[l], tb[l], 20_001)
            qx = ax[l] + (ts - ta[l]) / (tb[l] - ta[l]) * (bx[l] - ax[l])
            qy = ay[l] + (ts - ta[l]) / (tb[l] - ta[l]) * (by[l] - ay[l])
            for i in range(6):
                ix = np.interp(ts, times, px[i])
                iy = np.interp(ts, times, py[i])
                dense = np.min(np.hypot(ix - qx, iy - qy))
                assert got[i, l] <= dense + 1e-9
                assert got[i, l] == pytest.approx(dense, abs=0.5)  # dense grid gap


class TestPolylineParity:
    def test_bit_identical_and_oracle(self):
        n, segs = 300, 11
        px = RNG.uniform(-10_000, 10_000, n)
        py = RNG.uniform(-10_000, 10_000, n)
        sax = RNG.uniform(-8000, 8000, segs)
        say = RNG.uniform(-8000, 8000, segs)
        sbx = RNG.uniform(-8000, 8000, segs)
        sby = RNG.uniform(-8000, 8000, segs)
        a = _reference.min_polyline_distance(px, py, sax, say, sbx, sby)
        b = numba_impl.min_polyline_distance(px, py, sax, say, sbx, sby)
        np.testing.assert_array_equal(a, b)
        # shapely as the independent geometric oracle
        import shapely

        lines = [
            shapely.LineString([(sax[s], say[s]), (sbx[s], sby[s])]) for s in range(segs)
        ]
        geom = shapely.union_all(lines)
        for i in range(0, n, 37):
            d = shapely.distance(geom, shapely.Point(px[i], py[i]))
            assert a[i] == pytest.approx(d, rel=1e-12)

    def test_degenerate_segment(self):
        a = _reference.min_polyline_distance(
            np.array([3.0]), np.array([4.0]), np.array([0.0]), np.array([0.0]),
            np.array([0.0]), np.array([0.0]),
        )
        b = numba_impl.min_polyline_distance(
            np.array([3.0]), np.array([4.0]), np.array([0.0]), np.array([0.0]),
            np.array([0.0]), np.array([0.0]),
        )
        assert a[0] == b[0] == 5.0


class TestBinParity:
    def test_bit_identical(self):
        n = 5000
        flat = RNG.integers(0, 400, n)
        w = RNG.random(n)
        a = _reference.accumulate_bins(flat, w, 400)
        b = numba_impl.accumulate_bins(flat, w, 400)
        np.testing.assert_array_equal(a, b)

    def test_empty(self):
        a = _reference.accumulate_bins(np.array([], dtype=np.int64), np.array([]), 10)
        b = numba_impl.accumulate_bins(np.array([], dtype=np.int64), np.array([]), 10)
        np.testing.assert_array_equal(a, b)
        assert a.sum() == 0
