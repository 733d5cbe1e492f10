"""全连接 MLP 黑盒：numpy 实现的反向传播训练 + 精确输入 Jacobian"""

from dataclasses import asdict
from typing import Dict, List, Optional, Tuple

import numpy as np
from loguru import logger

from ...config_loader import MLPConfig
from ...errors import TrainingDiverged
from ..data.models import Dataset
from .base import BlackBoxModel

# (起始列, 宽度, 是否类别)
Layout = List[Tuple[int, int, bool]]


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activation_grad(z: np.ndarray, a: np.ndarray, activation: str) -> np.ndarray:
    if activation == "tanh":
        return 1.0 - a * a
    return (z > 0.0).astype(float)


class MLPModel(BlackBoxModel):
    """
    类别特征在网络输入端做 one-hot；对类别特征的“梯度”定义为
    对当前激活的 one-hot 坐标的偏导。
    """

    kind = "mlp"

    def __init__(
        self,
        weights: List[np.ndarray],
        biases: List[np.ndarray],
        activation: str,
        layout: Layout,
        config: Optional[MLPConfig] = None,
    ):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.activation = activation
        self.layout = [(int(a), int(b), bool(c)) for a, b, c in layout]
        self.input_dim = len(self.layout)
        self.config = config
        self.loss_history: List[float] = []

    @property
    def encoded_dim(self) -> int:
        start, width, _ = self.layout[-1]
        return start + width

    # ---- 编码 ----

    def _active_columns(self, X: np.ndarray, feature: int) -> np.ndarray:
        start, _, is_cat = self.layout[feature]
        if not is_cat:
            return np.full(X.shape[0], start, dtype=int)
        return start + np.rint(X[:, feature]).astype(int)

    def encode(self, X: np.ndarray) -> np.ndarray:
        X = self._check(X)
        Z = np.zeros((X.shape[0], self.encoded_dim))
        rows = np.arange(X.shape[0])
        for s, (start, width, is_cat) in enumerate(self.layout):
            if is_cat:
                codes = np.clip(np.rint(X[:, s]).astype(int), 0, width - 1)
                Z[rows, start + codes] = 1.0
            else:
                Z[:, start] = X[:, s]
        return Z

    # ---- 前向 / 反向 ----

    def _forward(self, Z: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray], List[np.ndarray]]:
        pre, post = [], [Z]
        a = Z
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ W + b
            a = _activate(z, self.activation)
            pre.append(z)
            post.append(a)
        out = a @ self.weights[-1] + self.biases[-1]
        return out.reshape(-1), pre, post

    def _backward(
        self, delta: np.ndarray, pre: List[np.ndarray], post: List[np.ndarray]
    ) -> Tuple[List[np.ndarray], List[np.ndarray], np.ndarray]:
        """delta = ∂L/∂out (M×1)；返回各层参数梯度及对输入的梯度"""
        n_layers = len(self.weights)
        grads_w: List[np.ndarray] = [None] * n_layers
        grads_b: List[np.ndarray] = [None] * n_layers
        for i in range(n_layers - 1, -1, -1):
            grads_w[i] = post[i].T @ delta
            grads_b[i] = delta.sum(axis=0)
            delta = delta @ self.weights[i].T
            if i > 0:
                delta = delta * _activation_grad(pre[i - 1], post[i], self.activation)
        return grads_w, grads_b, delta

    def predict_encoded(self, Z: np.ndarray) -> np.ndarray:
        return self._forward(Z)[0]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.predict_encoded(self.encode(X))

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        X = self._check(X)
        Z = self.encode(X)
        _, pre, post = self._forward(Z)
        _, _, dZ = self._backward(np.ones((Z.shape[0], 1)), pre, post)
        rows = np.arange(X.shape[0])
        J = np.empty((X.shape[0], self.input_dim))
        for s in range(self.input_dim):
            J[:, s] = dZ[rows, self._active_columns(X, s)]
        return J

    def shifted_predict(self, X: np.ndarray, feature: int, delta: float) -> np.ndarray:
        X = self._check(X)
        Z = self.encode(X)
        Z[np.arange(X.shape[0]), self._active_columns(X, feature)] += delta
        return self.predict_encoded(Z)

    def kink_free_rows(self, X: np.ndarray, h: float) -> np.ndarray:
        if self.activation != "relu":
            return super().kink_free_rows(X, h)
        X = self._check(X)
        keep = np.ones(X.shape[0], dtype=bool)
        base = self._forward(self.encode(X))[1]
        for s in self.fd_features:
            for sign in (-1.0, 1.0):
                Z = self.encode(X)
                Z[np.arange(X.shape[0]), self._active_columns(X, s)] += sign * h
                shifted = self._forward(Z)[1]
                for z0, z1 in zip(base, shifted):
                    keep &= ~np.any(np.sign(z0) != np.sign(z1), axis=1)
        return keep

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "activation": self.activation,
            "layout": [list(item) for item in self.layout],
            "weights": [w.tolist() for w in self.weights],
            "biases": [b.tolist() for b in self.biases],
            "config": asdict(self.config) if self.config is not None else None,
            "loss_history": list(self.loss_history),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "MLPModel":
        config = MLPConfig(**data["config"]) if data.get("config") else None
        model = cls(data["weights"], data["biases"], data["activation"], data["layout"], config)
        model.loss_history = list(data.get("loss_history", []))
        return model


def _layout_for(ds: Dataset) -> Layout:
    layout: Layout = []
    start = 0
    for meta in ds.features:
        width = len(meta.categories) if meta.is_categorical else 1
        layout.append((start, width, meta.is_categorical))
        start += width
    return layout


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def train_mlp(ds: Dataset, cfg: MLPConfig) -> MLPModel:
    """
    用 Adam (β1=0.9, β2=0.999) 最小化 MSE 训练 MLP。

    同一 (seed, 数据, 配置) 得到完全相同的权重。ds 应已标准化。
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    layout = _layout_for(ds)
    encoded_dim = layout[-1][0] + layout[-1][1]

    sizes = [encoded_dim] + [int(h) for h in cfg.hidden_layers] + [1]
    weights = [_glorot(rng, sizes[i], sizes[i + 1]) for i in range(len(sizes) - 1)]
    biases = [np.zeros(sizes[i + 1]) for i in range(len(sizes) - 1)]
    model = MLPModel(weights, biases, cfg.activation, layout, cfg)

    Z = model.encode(ds.X)
    y = ds.y
    params = model.weights + model.biases
    m_state = [np.zeros_like(p) for p in params]
    v_state = [np.zeros_like(p) for p in params]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    def full_mse() -> float:
        return float(np.mean((model.predict_encoded(Z) - y) ** 2))

    model.loss_history = [full_mse()]
    logger.info(
        f"[黑盒训练] MLP {sizes} ({cfg.activation}), N={ds.N}, epochs={cfg.epochs}, "
        f"lr={cfg.learning_rate}, initial mse={model.loss_history[0]:.4f}"
    )

    for epoch in range(1, cfg.epochs + 1):
        order = rng.permutation(ds.N)
        for start in range(0, ds.N, cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            out, pre, post = model._forward(Z[batch])
            delta = (2.0 / len(batch)) * (out - y[batch]).reshape(-1, 1)
            grads_w, grads_b, _ = model._backward(delta, pre, post)
            step += 1
            for k, grad in enumerate(grads_w + grads_b):
                m_state[k] = beta1 * m_state[k] + (1.0 - beta1) * grad
                v_state[k] = beta2 * v_state[k] + (1.0 - beta2) * grad * grad
                m_hat = m_state[k] / (1.0 - beta1 ** step)
                v_hat = v_state[k] / (1.0 - beta2 ** step)
                params[k] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + eps)

        loss = full_mse()
        if not np.isfinite(loss):
            raise TrainingDiverged(epoch, loss)
        model.loss_history.append(loss)
        if epoch % 10 == 0 or epoch == cfg.epochs:
            logger.info(f"[黑盒训练] epoch {epoch}/{cfg.epochs} mse={loss:.5f}")

    return model
