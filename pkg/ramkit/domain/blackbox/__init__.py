"""可微黑盒：MLP 与解析函数"""
from .analytic import AnalyticModel, StandardizedModel, linear_model, model_from_dict, toy_function
from .base import BlackBoxModel, check_jacobian_fd
from .mlp import MLPModel, train_mlp


def jacobian(model: BlackBoxModel, X):
    """Jacobian 查找表：每个训练样本处的 ∂f/∂x_s，只算一次"""
    return model.jacobian(X)


def predict(model: BlackBoxModel, X):
    return model.predict(X)


__all__ = [
    "AnalyticModel",
    "BlackBoxModel",
    "MLPModel",
    "StandardizedModel",
    "check_jacobian_fd",
    "jacobian",
    "linear_model",
    "model_from_dict",
    "predict",
    "toy_function",
    "train_mlp",
]
