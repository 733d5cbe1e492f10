"""黑盒模型接口与 Jacobian 数值校验"""

from abc import ABC, abstractmethod
from typing import Dict, List

import numpy as np

from ...errors import ArityMismatch


class BlackBoxModel(ABC):
    """
    可微黑盒 f: X -> y。

    predict / jacobian 都是纯函数，训练好的模型可被多个 worker 并发调用。
    """

    kind: str = ""
    input_dim: int = 0

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.input_dim:
            raise ArityMismatch(self.input_dim, X.shape[1])
        return X

    @abstractmethod
    def predict(self, X: np.ndarray) -> np.ndarray:
        """M×D -> 长度 M 的预测"""

    @abstractmethod
    def jacobian(self, X: np.ndarray) -> np.ndarray:
        """M×D -> M×D，(i, s) = ∂f/∂x_s(x_i)"""

    def shifted_predict(self, X: np.ndarray, feature: int, delta: float) -> np.ndarray:
        X = np.array(self._check(X), copy=True)
        X[:, feature] += delta
        return self.predict(X)

    @property
    def fd_features(self) -> List[int]:
        """可以用有限差分校验的特征"""
        return list(range(self.input_dim))

    def kink_free_rows(self, X: np.ndarray, h: float) -> np.ndarray:
        return np.ones(self._check(X).shape[0], dtype=bool)

    @abstractmethod
    def to_dict(self) -> Dict:
        """序列化到 JSON 模型容器"""


def check_jacobian_fd(model: BlackBoxModel, X: np.ndarray, h: float = 1e-5, exclude_kinks: bool = True) -> float:
    """
    Jacobian 与中心差分的最大相对误差 max |J - fd| / (1 + |J|)。

    relu 网络在激活函数拐点附近差分不可靠，exclude_kinks=True 时跳过
    在 ±h 范围内有隐藏单元改变符号的样本。
    """
    if h <= 0:
        raise ValueError("h must be positive")
    X = model._check(X)
    if exclude_kinks:
        X = X[model.kink_free_rows(X, h)]
    if X.shape[0] == 0:
        return 0.0

    J = model.jacobian(X)
    worst = 0.0
    for s in model.fd_features:
        fd = (model.shifted_predict(X, s, h) - model.shifted_predict(X, s, -h)) / (2.0 * h)
        err = np.abs(J[:, s] - fd) / (1.0 + np.abs(J[:, s]))
        worst = max(worst, float(err.max()))
    return worst
