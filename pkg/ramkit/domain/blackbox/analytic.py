"""解析黑盒：带闭式梯度的合成函数，用作测试 oracle"""

from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..data.models import Scaler
from .base import BlackBoxModel

PredictFn = Callable[[np.ndarray, Dict], np.ndarray]
GradFn = Callable[[np.ndarray, Dict], np.ndarray]


def toy_function(X: np.ndarray, coefficient: float = 8.0, active_code: int = 1) -> np.ndarray:
    """f = c · x2 · 1{x1 > 0} · 1{x3 = active}，列顺序 (x1, x2, x3)"""
    gate = (X[:, 0] > 0.0) & (np.rint(X[:, 2]) == active_code)
    return coefficient * X[:, 1] * gate


def _toy_predict(X: np.ndarray, params: Dict) -> np.ndarray:
    return toy_function(X, params.get("coefficient", 8.0), params.get("active_code", 1))


def _toy_grad(X: np.ndarray, params: Dict) -> np.ndarray:
    # x1 = 0 处取严格不等号一侧的内部值；x1、x3 的偏导几乎处处为 0
    gate = (X[:, 0] > 0.0) & (np.rint(X[:, 2]) == params.get("active_code", 1))
    J = np.zeros_like(X, dtype=float)
    J[:, 1] = params.get("coefficient", 8.0) * gate
    return J


def _linear_predict(X: np.ndarray, params: Dict) -> np.ndarray:
    return X @ np.asarray(params["coefficients"], dtype=float) + float(params.get("intercept", 0.0))


def _linear_grad(X: np.ndarray, params: Dict) -> np.ndarray:
    return np.tile(np.asarray(params["coefficients"], dtype=float), (X.shape[0], 1))


_REGISTRY: Dict[str, Tuple[PredictFn, GradFn]] = {
    "toy": (_toy_predict, _toy_grad),
    "linear": (_linear_predict, _linear_grad),
}


class AnalyticModel(BlackBoxModel):
    kind = "analytic"

    def __init__(self, function_id: str, params: Dict, input_dim: int, categorical: Sequence[int] = ()):
        if function_id not in _REGISTRY:
            raise ValueError(f"unknown analytic function {function_id!r}")
        self.function_id = function_id
        self.params = dict(params)
        self.input_dim = int(input_dim)
        self.categorical = tuple(int(c) for c in categorical)
        self._predict_fn, self._grad_fn = _REGISTRY[function_id]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self._predict_fn(self._check(X), self.params)

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        return self._grad_fn(self._check(X), self.params)

    @property
    def fd_features(self) -> List[int]:
        return [s for s in range(self.input_dim) if s not in self.categorical]

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind,
            "function_id": self.function_id,
            "params": self.params,
            "input_dim": self.input_dim,
            "categorical": list(self.categorical),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "AnalyticModel":
        return cls(data["function_id"], data["params"], data["input_dim"], data.get("categorical", ()))


def linear_model(coefficients: Sequence[float], intercept: float = 0.0, categorical: Sequence[int] = ()) -> AnalyticModel:
    return AnalyticModel(
        "linear",
        {"coefficients": [float(c) for c in coefficients], "intercept": float(intercept)},
        len(coefficients),
        categorical,
    )


class StandardizedModel(BlackBoxModel):
    """把定义在原始单位上的模型包装成作用于标准化输入/输出的模型"""

    def __init__(self, inner: BlackBoxModel, scaler: Scaler):
        self.inner = inner
        self.scaler = scaler
        self.kind = inner.kind
        self.input_dim = inner.input_dim

    def predict(self, X: np.ndarray) -> np.ndarray:
        raw = self.inner.predict(self.scaler.inverse_features(self._check(X)))
        return self.scaler.transform_target(raw)

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        J = self.inner.jacobian(self.scaler.inverse_features(self._check(X)))
        for idx, sd in self.scaler.sds.items():
            J[:, idx] *= sd
        return J / self.scaler.target_sd

    @property
    def fd_features(self) -> List[int]:
        return self.inner.fd_features

    def to_dict(self) -> Dict:
        data = dict(self.inner.to_dict())
        data["standardized"] = True
        return data


def model_from_dict(data: Dict, scaler: Optional[Scaler] = None) -> BlackBoxModel:
    from .mlp import MLPModel

    kind = data.get("kind")
    if kind == "mlp":
        model: BlackBoxModel = MLPModel.from_dict(data)
    elif kind == "analytic":
        model = AnalyticModel.from_dict(data)
    else:
        raise ValueError(f"unknown black box kind {kind!r}")
    if data.get("standardized"):
        if scaler is None:
            raise ValueError("standardized black box needs the container scaler")
        model = StandardizedModel(model, scaler)
    return model
