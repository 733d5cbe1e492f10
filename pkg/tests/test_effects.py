"""DALE 分箱、效应曲线与异质性"""

import math

import numpy as np
import pytest

from ramkit.domain.effects import (
    bin_stats,
    build_bins,
    curve_frame,
    dale_curve,
    heterogeneity,
    regional_curve,
    regional_heterogeneity,
)
from ramkit.errors import EmptyRegion, InsufficientData, LengthMismatch


class TestBuildBins:
    """变宽分箱"""

    def test_equal_width_when_populated(self):
        xs = np.linspace(0.0, 1.0, 1000)
        p = build_bins(xs, k_init=10, min_points=10)
        assert p.n_bins == 10
        np.testing.assert_allclose(p.widths, 0.1)

    def test_sparse_bins_are_merged(self):
        rng = np.random.default_rng(0)
        xs = np.concatenate([rng.uniform(0.0, 0.1, 500), rng.uniform(0.9, 1.0, 500), [0.5]])
        p = build_bins(xs, k_init=20, min_points=10)
        counts = np.bincount(p.assign(xs), minlength=p.n_bins)
        assert p.n_bins < 20
        assert counts.min() >= 10
        assert p.edges[0] == xs.min() and p.edges[-1] == xs.max()

    def test_merge_prefers_similar_gradients(self):
        """稀疏箱并入梯度统计更接近的一侧"""
        xs = np.concatenate([np.linspace(0.0, 0.33, 50), [0.5], np.linspace(0.67, 1.0, 50)])
        grads = np.where(xs < 0.6, 1.0, 5.0)
        p = build_bins(xs, k_init=3, min_points=10, grads=grads)
        assert p.n_bins == 2
        assert p.edges[1] == pytest.approx(2.0 / 3.0)

    def test_too_few_points(self):
        with pytest.raises(InsufficientData):
            build_bins(np.arange(5.0), k_init=4, min_points=10)

    def test_bin_stats_length_mismatch(self):
        p = build_bins(np.linspace(0, 1, 100), k_init=5, min_points=10)
        with pytest.raises(LengthMismatch):
            bin_stats(p, np.linspace(0, 1, 100), np.ones(99))

    def test_single_point_bin_is_unreliable(self):
        xs = np.linspace(0.0, 1.0, 100)
        p = build_bins(xs, k_init=4, min_points=10)
        filled = bin_stats(p, xs, np.ones(100), mask=np.arange(100) == 0)
        assert filled.counts.sum() == 1
        assert not filled.reliable.any()
        assert heterogeneity(filled).value == 0.0


class TestHeterogeneity:
    """异质性 H"""

    def test_toy_global_heterogeneity(self, toy, toy_jacobian):
        """x2 在 20 个等宽箱上的 H ≈ sqrt(48/20)"""
        ds, _ = toy
        p = build_bins(ds.X[:, 1], k_init=20, min_points=10)
        h = heterogeneity(bin_stats(p, ds.X[:, 1], toy_jacobian[:, 1])).value
        assert h == pytest.approx(math.sqrt(48.0 / 20.0), rel=0.10)

    def test_true_regions_are_interaction_free(self, toy, toy_jacobian):
        ds, _ = toy
        p = build_bins(ds.X[:, 1], k_init=20, min_points=10)
        active = (ds.X[:, 0] > 0) & (ds.X[:, 2] == 1)
        for mask in (active, ~active):
            assert regional_heterogeneity(ds.X, toy_jacobian, 1, mask, p).value < 0.05

    def test_additive_function_has_zero_heterogeneity(self, linear_data):
        ds, model = linear_data
        J = model.jacobian(ds.X)
        for s in range(ds.D):
            p = build_bins(ds.X[:, s], k_init=20, min_points=10, grads=J[:, s], feature=s)
            assert heterogeneity(bin_stats(p, ds.X[:, s], J[:, s])).value < 1e-10

    def test_empty_region(self, toy, toy_jacobian):
        ds, _ = toy
        p = build_bins(ds.X[:, 1], k_init=20, min_points=10)
        with pytest.raises(EmptyRegion):
            regional_heterogeneity(ds.X, toy_jacobian, 1, np.zeros(ds.N, dtype=bool), p)

    def test_precomputed_bin_index_gives_same_value(self, toy, toy_jacobian):
        ds, _ = toy
        p = build_bins(ds.X[:, 1], k_init=20, min_points=10)
        mask = ds.X[:, 2] == 1
        a = regional_heterogeneity(ds.X, toy_jacobian, 1, mask, p)
        b = regional_heterogeneity(ds.X, toy_jacobian, 1, mask, p, bin_index=p.assign(ds.X[:, 1]))
        assert a.value == b.value


class TestCurves:
    """效应曲线"""

    def test_linear_effect_is_recovered(self, linear_data):
        ds, model = linear_data
        J = model.jacobian(ds.X)
        p = build_bins(ds.X[:, 0], k_init=10, min_points=10)
        curve = dale_curve(bin_stats(p, ds.X[:, 0], J[:, 0]))
        slope = np.diff(curve.values) / np.diff(curve.knots)
        np.testing.assert_allclose(slope, 2.0)
        counts_mid = np.dot(curve.counts, 0.5 * (curve.values[:-1] + curve.values[1:]))
        assert abs(counts_mid) < 1e-9

    def test_regional_curve_restricts_rows(self, toy, toy_jacobian):
        ds, _ = toy
        xs, grads = ds.X[:, 1], toy_jacobian[:, 1]
        p = build_bins(xs, k_init=20, min_points=10)
        active = (ds.X[:, 0] > 0) & (ds.X[:, 2] == 1)
        inside = regional_curve(p, xs, grads, active)
        outside = regional_curve(p, xs, grads, ~active)
        np.testing.assert_allclose(inside.mu, 8.0)
        np.testing.assert_allclose(outside.mu, 0.0)
        assert inside.evaluate(np.array([p.edges[-1]]))[0] > 7.0

    def test_curve_frame_layout(self, linear_data):
        ds, model = linear_data
        J = model.jacobian(ds.X)
        p = build_bins(ds.X[:, 1], k_init=5, min_points=10)
        frame = curve_frame(dale_curve(bin_stats(p, ds.X[:, 1], J[:, 1])))
        assert list(frame.columns) == ["knot", "value", "mu", "sigma", "count"]
        assert len(frame) == p.n_bins + 1
        assert np.isnan(frame["mu"].iloc[-1])


class TestBinStatistics:
    """箱统计量的基本性质"""

    @pytest.fixture
    def x2_bins(self, toy):
        ds, _ = toy
        return build_bins(ds.X[:, 1], k_init=20, min_points=10, feature=1)

    def test_toy_bin_mean_and_variance(self, toy, toy_jacobian, x2_bins):
        """全局：μ̂ ≈ 8·0.25 = 2，σ̂² ≈ 64·0.25·0.75 = 12"""
        ds, _ = toy
        filled = bin_stats(x2_bins, ds.X[:, 1], toy_jacobian[:, 1])
        np.testing.assert_allclose(filled.mu, 2.0, atol=0.8)
        np.testing.assert_allclose(filled.sigma2, 12.0, atol=3.0)
        assert filled.mu.mean() == pytest.approx(2.0, abs=0.2)

    def test_toy_bins_inside_true_region(self, toy, toy_jacobian, x2_bins):
        ds, _ = toy
        active = (ds.X[:, 0] > 0) & (ds.X[:, 2] == 1)
        filled = bin_stats(x2_bins, ds.X[:, 1], toy_jacobian[:, 1], mask=active)
        np.testing.assert_allclose(filled.mu, 8.0)
        np.testing.assert_allclose(filled.sigma2, 0.0, atol=1e-12)

    @pytest.mark.parametrize("c", [-3.0, 0.5, 2.0])
    def test_scaling_gradients(self, toy, toy_jacobian, x2_bins, c):
        """梯度乘 c：μ̂ 乘 c，σ̂² 乘 c²，H 乘 |c|"""
        ds, _ = toy
        xs, grads = ds.X[:, 1], toy_jacobian[:, 1]
        base = bin_stats(x2_bins, xs, grads)
        scaled = bin_stats(x2_bins, xs, c * grads)
        np.testing.assert_allclose(scaled.mu, c * base.mu, atol=1e-12)
        np.testing.assert_allclose(scaled.sigma2, c * c * base.sigma2, rtol=1e-9, atol=1e-12)
        assert heterogeneity(scaled).value == pytest.approx(abs(c) * heterogeneity(base).value, rel=1e-9)

    def test_masked_counts_never_exceed_full_counts(self, toy, toy_jacobian, x2_bins):
        ds, _ = toy
        xs, grads = ds.X[:, 1], toy_jacobian[:, 1]
        full = bin_stats(x2_bins, xs, grads)
        for mask in (ds.X[:, 2] == 1, ds.X[:, 0] > 0.3, np.arange(ds.N) < 17):
            part = bin_stats(x2_bins, xs, grads, mask=mask)
            assert np.all(part.counts <= full.counts)
            assert part.counts.sum() == int(np.count_nonzero(mask))

    def test_curve_end_equals_weighted_slope_sum(self, toy, toy_jacobian, x2_bins):
        ds, _ = toy
        filled = bin_stats(x2_bins, ds.X[:, 1], toy_jacobian[:, 1])
        curve = dale_curve(filled)
        assert curve.accumulated[0] == 0.0
        assert curve.accumulated[-1] == pytest.approx(float(np.sum(filled.widths * filled.mu)), rel=1e-12)
        np.testing.assert_allclose(curve.values, curve.accumulated - curve.centering)

    def test_toy_global_slope(self, toy, toy_jacobian, x2_bins):
        """x2 的全局 DALE 曲线平均斜率 ≈ 2"""
        ds, _ = toy
        curve = dale_curve(bin_stats(x2_bins, ds.X[:, 1], toy_jacobian[:, 1]))
        slope = (curve.values[-1] - curve.values[0]) / (curve.knots[-1] - curve.knots[0])
        assert slope == pytest.approx(2.0, abs=0.2)
