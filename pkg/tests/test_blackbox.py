"""黑盒模型：MLP 训练、Jacobian 与解析模型"""

import numpy as np
import pytest

from ramkit.config_loader import MLPConfig
from ramkit.domain.blackbox import (
    AnalyticModel,
    MLPModel,
    StandardizedModel,
    check_jacobian_fd,
    jacobian,
    linear_model,
    model_from_dict,
    train_mlp,
)
from ramkit.domain.data import apply_scaler, fit_scaler
from ramkit.errors import ArityMismatch, TrainingDiverged


@pytest.fixture
def small_toy(toy):
    ds, model = toy
    sub = ds.subset(range(2000))
    scaler = fit_scaler(sub)
    return apply_scaler(scaler, sub), scaler, model


class TestMLP:
    """MLP 训练与梯度"""

    def test_jacobian_matches_central_differences(self, small_toy):
        """tanh 网络的 Jacobian 与中心差分的最大相对误差 < 1e-4"""
        ds, _, _ = small_toy
        model = train_mlp(ds, MLPConfig(hidden_layers=[32, 32, 32], epochs=3, seed=1))
        points = ds.X[:100]
        assert check_jacobian_fd(model, points, h=1e-5) < 1e-4

    def test_relu_jacobian_away_from_kinks(self, small_toy):
        ds, _, _ = small_toy
        model = train_mlp(ds, MLPConfig(hidden_layers=[16, 16], activation="relu", epochs=2, seed=2))
        assert check_jacobian_fd(model, ds.X[:100], h=1e-6) < 1e-4

    def test_training_is_deterministic(self, small_toy):
        ds, _, _ = small_toy
        cfg = MLPConfig(hidden_layers=[8, 8], epochs=2, seed=5)
        a, b = train_mlp(ds, cfg), train_mlp(ds, cfg)
        np.testing.assert_array_equal(a.predict(ds.X[:50]), b.predict(ds.X[:50]))

    def test_loss_history(self, small_toy):
        ds, _, _ = small_toy
        model = train_mlp(ds, MLPConfig(hidden_layers=[16], epochs=4, seed=0))
        assert len(model.loss_history) == 5
        assert model.loss_history[-1] < model.loss_history[0]

    def test_learns_identity(self, make_numeric):
        """y = x1 经过训练后 Jacobian 的 x1 列接近 1"""
        rng = np.random.default_rng(0)
        X = rng.uniform(-1.0, 1.0, size=(1000, 2))
        ds = make_numeric(X, X[:, 0].copy())
        cfg = MLPConfig(hidden_layers=[32, 32], learning_rate=0.005, batch_size=32, epochs=60, seed=0)
        model = train_mlp(ds, cfg)
        J = jacobian(model, X[:200])
        assert np.median(np.abs(J[:, 0] - 1.0)) < 0.1
        assert np.median(np.abs(J[:, 1])) < 0.1

    def test_divergence_reports_epoch(self, make_numeric):
        rng = np.random.default_rng(0)
        X = rng.uniform(-1.0, 1.0, size=(64, 2))
        ds = make_numeric(X, np.full(64, 1e200) * np.sign(X[:, 0]))
        with pytest.raises(TrainingDiverged) as exc_info:
            train_mlp(ds, MLPConfig(hidden_layers=[4], epochs=3, seed=0))
        assert exc_info.value.epoch == 1

    def test_arity_mismatch(self, small_toy):
        ds, _, _ = small_toy
        model = train_mlp(ds, MLPConfig(hidden_layers=[4], epochs=1))
        with pytest.raises(ArityMismatch):
            model.predict(np.zeros((2, 5)))

    def test_categorical_uses_one_hot(self, small_toy):
        """类别特征 x3 的两个取值得到不同的编码列"""
        ds, _, _ = small_toy
        model = train_mlp(ds, MLPConfig(hidden_layers=[4], epochs=1))
        Z = model.encode(np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0]]))
        assert Z.shape == (2, 4)
        assert Z[0, 2] == 1.0 and Z[0, 3] == 0.0
        assert Z[1, 2] == 0.0 and Z[1, 3] == 1.0

    def test_serialization_keeps_predictions(self, small_toy):
        ds, _, _ = small_toy
        model = train_mlp(ds, MLPConfig(hidden_layers=[8], epochs=1))
        restored = model_from_dict(model.to_dict())
        assert isinstance(restored, MLPModel)
        np.testing.assert_allclose(restored.predict(ds.X[:20]), model.predict(ds.X[:20]))


class TestAnalytic:
    """解析黑盒"""

    def test_toy_gradient_only_on_x2(self, toy):
        ds, model = toy
        J = model.jacobian(ds.X)
        gate = (ds.X[:, 0] > 0) & (ds.X[:, 2] == 1)
        np.testing.assert_array_equal(J[:, 1], 8.0 * gate)
        assert not J[:, [0, 2]].any()

    def test_toy_gradient_matches_differences(self, toy):
        ds, model = toy
        X = ds.X[np.abs(ds.X[:, 0]) > 1e-3][:500]
        assert check_jacobian_fd(model, X, h=1e-6) < 1e-8

    def test_boundary_takes_strict_side(self):
        model = AnalyticModel("toy", {"coefficient": 8.0, "active_code": 1}, 3, categorical=(2,))
        X = np.array([[0.0, 0.5, 1.0], [1e-9, 0.5, 1.0]])
        np.testing.assert_allclose(model.predict(X), [0.0, 4.0])
        np.testing.assert_allclose(model.jacobian(X)[:, 1], [0.0, 8.0])

    def test_standardized_view_chain_rule(self, small_toy):
        ds, scaler, raw = small_toy
        std_model = StandardizedModel(raw, scaler)
        raw_X = scaler.inverse_features(ds.X[:50])
        np.testing.assert_allclose(
            std_model.predict(ds.X[:50]), scaler.transform_target(raw.predict(raw_X))
        )
        expected = raw.jacobian(raw_X)[:, 1] * scaler.sds[1] / scaler.target_sd
        np.testing.assert_allclose(std_model.jacobian(ds.X[:50])[:, 1], expected)

    def test_standardized_round_trip_needs_scaler(self, small_toy):
        _, scaler, raw = small_toy
        data = StandardizedModel(raw, scaler).to_dict()
        with pytest.raises(ValueError):
            model_from_dict(data)
        assert isinstance(model_from_dict(data, scaler), StandardizedModel)

    def test_linear_model(self):
        model = linear_model([1.0, -2.0], intercept=0.5)
        np.testing.assert_allclose(model.predict(np.array([[1.0, 1.0]])), [-0.5])
        np.testing.assert_allclose(model.jacobian(np.zeros((3, 2))), [[1.0, -2.0]] * 3)
