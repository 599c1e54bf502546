import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from maxlab.exceptions import AlignmentError, ConfigurationError, DimensionError, InvalidParameterError
from maxlab.grid import BodySpec, Box, GridFunction, SummedTable, body_average, indicator_grid, lp_norm
from maxlab.operators import (
    OperatorSpec,
    augment_with_bodies,
    centered_counterexample_report,
    dyadic_maximal,
    lambda_maximal,
    one_sided_maximal,
    one_sided_superlevel,
    scale_ladder,
)


def brute_lambda_maximal(g, lam):
    """Enumerate every half-lattice box and test membership cell by cell."""
    t = SummedTable(g)
    axes = [g.origin[k] + 0.5 * g.h * np.arange(2 * g.shape[k] + 1) for k in range(g.dim)]
    pairs = [[(a, b) for a, b in itertools.combinations(ax, 2)] for ax in axes]
    out = np.array(g.values, dtype=float)
    centers = g.cell_centers()
    for combo in itertools.product(*pairs):
        lo = np.array([c[0] for c in combo])
        hi = np.array([c[1] for c in combo])
        avg = t.box_average(lo, hi)
        mid, half = (lo + hi) / 2, (hi - lo) / 2
        inside = np.all(np.abs(centers - mid) <= lam * half + 1e-9 * g.h, axis=-1)
        out = np.where(inside, np.maximum(out, avg), out)
    return out


small_grids = st.one_of(
    arrays(np.float64, st.integers(1, 7), elements=st.floats(0, 4)),
    arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 4)), elements=st.floats(0, 4)),
)


class TestLambdaMaximal:
    @pytest.mark.parametrize("lam", [0.0, 0.3, 0.5, 1.0])
    @pytest.mark.parametrize("shape", [(7,), (4, 5), (2, 3, 2)])
    def test_matches_brute_force(self, lam, shape, rng):
        g = GridFunction(rng.random(shape) * (rng.random(shape) < 0.7), (0.0,) * len(shape), 0.5)
        got = lambda_maximal(g, OperatorSpec(lam=lam)).values
        assert np.allclose(got, brute_lambda_maximal(g, lam), rtol=1e-12, atol=1e-14)

    @pytest.mark.parametrize("mode", ["exact_small", "ladder"])
    def test_constant_is_fixed(self, mode):
        g = GridFunction(np.full((9, 9), 2.5), (0.0, 0.0), 0.1)
        M = lambda_maximal(g, OperatorSpec(lam=0.7, mode=mode)).values
        assert np.allclose(M, 2.5, rtol=1e-13)

    def test_indicator_uncentered_right_of_support(self):
        # centers x > 1: the best interval is [0, x], average 1/x; so M f(2) = 1/2
        g = indicator_grid((0.0,), (1.0,), (-1.0,), 0.125, (32,))
        M = lambda_maximal(g, OperatorSpec(lam=1.0)).values
        x = g.axis_centers(0)
        right = x > 1
        assert np.allclose(M[right], 1.0 / x[right], rtol=1e-13)
        assert np.interp(2.0, x, 1.0 / x) == pytest.approx(0.5, abs=1e-3)

    @given(small_grids, st.floats(0, 1), st.floats(0, 1))
    def test_monotone_in_lambda(self, v, a, b):
        lo, hi = sorted((a, b))
        g = GridFunction(v, (0.0,) * v.ndim, 1.0)
        M1 = lambda_maximal(g, OperatorSpec(lam=lo)).values
        M2 = lambda_maximal(g, OperatorSpec(lam=hi)).values
        assert np.all(M1 <= M2 + 1e-12)

    @given(small_grids, st.floats(0, 1))
    def test_dominates_f(self, v, lam):
        g = GridFunction(v, (0.0,) * v.ndim, 1.0)
        assert np.all(lambda_maximal(g, OperatorSpec(lam=lam)).values >= v)

    @given(st.integers(1, 6), st.floats(0, 1), st.floats(0, 3), st.integers(0, 2**31))
    def test_sublinear_and_homogeneous(self, n, lam, c, seed):
        r = np.random.default_rng(seed)
        f1, f2 = r.random(n), r.random(n)
        spec = OperatorSpec(lam=lam)

        def M(v):
            return lambda_maximal(GridFunction(v, (0.0,), 1.0), spec).values

        assert np.all(M(f1 + f2) <= M(f1) + M(f2) + 1e-12)
        assert np.allclose(M(c * f1), c * M(f1), rtol=1e-12, atol=1e-15)

    @given(st.integers(1, 5), st.integers(0, 4), st.integers(0, 2**31))
    def test_shift_covariance(self, m, s, seed):
        pad = 5
        f = np.random.default_rng(seed).random(m)
        a = np.zeros(m + 2 * pad)
        b = np.zeros(m + 2 * pad)
        a[pad : pad + m] = f
        b[pad + s - 2 : pad + s - 2 + m] = f
        spec = OperatorSpec(lam=1.0)
        Ma = lambda_maximal(GridFunction(a, (0.0,), 1.0), spec).values
        Mb = lambda_maximal(GridFunction(b, (0.0,), 1.0), spec).values
        shift = s - 2
        idx = np.arange(a.size)
        ok = (idx + shift >= 0) & (idx + shift < a.size)
        assert np.allclose(Mb[idx[ok] + shift], Ma[idx[ok]], rtol=1e-12, atol=1e-15)

    def test_norm_domination(self, rng):
        g = GridFunction(rng.random((6, 6)), (0.0, 0.0), 0.5)
        for lam in (0.0, 0.5, 1.0):
            M = lambda_maximal(g, OperatorSpec(lam=lam)).field
            for p in (1.1, 2.0, 5.0):
                assert lp_norm(M, p) >= lp_norm(g, p)

    def test_ladder_is_a_lower_bound_for_uncentered(self, rng):
        g = GridFunction(rng.random((10, 10)), (0.0, 0.0), 1.0)
        exact = lambda_maximal(g, OperatorSpec(lam=1.0)).values
        lad = lambda_maximal(g, OperatorSpec(lam=1.0, mode="ladder")).values
        assert np.all(lad <= exact + 1e-12)
        assert np.all(lad >= g.values)

    def test_argmax_bodies_attain_values(self, rng):
        g = GridFunction(rng.random((3, 4)), (0.0, 0.0), 1.0)
        mf = lambda_maximal(g, OperatorSpec(lam=0.5), record_argmax=True)
        t = SummedTable(g)
        for rec in mf.argmax:
            lo = np.subtract(rec["center"], rec["half_widths"])
            hi = np.add(rec["center"], rec["half_widths"])
            assert t.box_average(lo, hi) == pytest.approx(mf.values[tuple(rec["cell"])], rel=1e-12)
            x = g.cell_centers()[tuple(rec["cell"])]
            assert np.all(np.abs(x - rec["center"]) <= 0.5 * np.asarray(rec["half_widths"]) + 1e-9)

    def test_augment_only_raises(self, rng):
        g = GridFunction(rng.random(20), (0.0,), 0.1)
        mf = lambda_maximal(g, OperatorSpec(lam=0.5, mode="ladder"))
        body = BodySpec("box", (1.03,), (0.77,))
        up = augment_with_bodies(mf, g, [body], 0.5)
        assert np.all(up.values >= mf.values)
        inside = np.abs(g.axis_centers(0) - 1.03) <= 0.5 * 0.77
        assert np.all(up.values[inside] >= body_average(g, body) - 1e-15)

    def test_spec_validation(self):
        with pytest.raises(InvalidParameterError):
            OperatorSpec(lam=1.5)
        with pytest.raises(ConfigurationError):
            OperatorSpec(ratio=1.0)
        with pytest.raises(ConfigurationError):
            OperatorSpec(min_scale=0.25)
        with pytest.raises(ConfigurationError):
            OperatorSpec(family="ball2", mode="exact_small")

    def test_scale_ladder_is_geometric(self):
        g = GridFunction(np.ones(64), (0.0,), 1.0)
        s = scale_ladder(OperatorSpec(mode="ladder", ratio=2.0, min_scale=1.0), g)
        assert s.tolist() == [1, 2, 4, 8, 16, 32, 64]


class TestDyadic:
    def test_constant(self):
        g = GridFunction(np.full(16, 3.0), (0.0,), 1.0)
        assert np.allclose(dyadic_maximal(g, Box((0.0,), (16.0,)), 4).values, 3.0)

    def test_indicator_value(self):
        g = GridFunction(np.r_[1.0, np.zeros(63)], (0.0,), 1.0)
        M = dyadic_maximal(g, Box((0.0,), (64.0,)), 6).values
        assert M[1] == pytest.approx(0.5)  # cell [1, 2) holds x = 1.5
        expected = [1.0] + [2.0 ** -int(np.floor(np.log2(i)) + 1) for i in range(1, 64)]
        assert np.allclose(M, expected)

    def test_matches_ancestor_enumeration(self, rng):
        v = rng.random((8, 8))
        g = GridFunction(v, (0.0, 0.0), 0.5)
        M = dyadic_maximal(g, Box((0.0, 0.0), (4.0, 4.0)), 3).values
        for i, j in np.ndindex(8, 8):
            best = v[i, j]
            for k in range(1, 4):
                b = 2**k
                bi, bj = (i // b) * b, (j // b) * b
                best = max(best, v[bi : bi + b, bj : bj + b].mean())
            assert M[i, j] == pytest.approx(best, rel=1e-13)

    def test_below_uncentered(self, rng):
        g = GridFunction(rng.random((8, 8)), (0.0, 0.0), 1.0)
        D = dyadic_maximal(g, Box((0.0, 0.0), (8.0, 8.0)), 3).values
        U = lambda_maximal(g, OperatorSpec(lam=1.0)).values
        assert np.all(D <= U + 1e-12)

    def test_misaligned_root(self):
        g = GridFunction(np.ones(8), (0.0,), 1.0)
        with pytest.raises(AlignmentError):
            dyadic_maximal(g, Box((0.5,), (8.5,)), 3)
        with pytest.raises(AlignmentError):
            dyadic_maximal(g, Box((0.0,), (4.0,)), 2)


class TestOneSided:
    def test_indicator(self):
        g = indicator_grid((0.0,), (1.0,), (-2.0,), 0.125, (32,))
        M = one_sided_maximal(g).values
        x = g.axis_centers(0)
        expected = np.where(x < 0, 1.0 / (1.0 - x), np.where(x < 1, 1.0, 0.0))
        assert np.allclose(M, expected, rtol=1e-13, atol=1e-15)

    def test_constant(self):
        assert np.allclose(one_sided_maximal(GridFunction(np.full(5, 0.7), (0.0,), 1.0)).values, 0.7)

    @given(arrays(np.float64, st.integers(1, 12), elements=st.floats(0, 5)))
    def test_below_uncentered(self, v):
        g = GridFunction(v, (0.0,), 0.5)
        assert np.all(one_sided_maximal(g).values <= lambda_maximal(g, OperatorSpec(lam=1.0)).values + 1e-12)

    def test_rejects_2d(self):
        with pytest.raises(DimensionError):
            one_sided_maximal(GridFunction(np.ones((2, 2)), (0.0, 0.0), 1.0))

    def test_superlevel_matches_dense_sampling(self, rng):
        v = rng.random(12) * (rng.random(12) < 0.6)
        g = GridFunction(v, (0.0,), 0.25)
        t = 0.4
        s = one_sided_superlevel(g, t)
        # sample M_R on a fine grid, including left of the support
        xs = np.linspace(-10, 3, 130001)
        F = np.r_[0, np.cumsum(v) * 0.25]
        b = np.arange(13) * 0.25

        def Fx(x):
            return np.interp(x, b, F, left=0.0, right=F[-1])

        best = np.full(xs.size, -np.inf)
        for bk, fk in zip(b, F):
            with np.errstate(divide="ignore", invalid="ignore"):
                sl = (fk - Fx(xs)) / (bk - xs)
            best = np.where(bk > xs, np.maximum(best, sl), best)
        measure = np.count_nonzero(best > t) * (xs[1] - xs[0])
        assert s.measure == pytest.approx(measure, abs=3e-4)


class TestCounterexample:
    def test_coarse_report(self):
        small = centered_counterexample_report(N=16)
        mid = centered_counterexample_report(N=32)
        assert mid["probe_origin"]["M0f"] == pytest.approx(1.0)
        assert mid["probe_origin"]["f"] == pytest.approx(1.0)
        assert 0 <= mid["max_relative_deviation"] <= 0.05
        assert mid["max_relative_deviation"] < small["max_relative_deviation"]
        probe = mid["probe_radius_two"]
        assert probe["M0f"] >= probe["f"]
        assert probe["relative_deviation"] <= mid["max_relative_deviation"]
