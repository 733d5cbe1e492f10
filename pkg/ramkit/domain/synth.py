"""合成数据：区域可加的玩具函数 f = c·x2·1{x1>0}·1{x3=active}"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
from loguru import logger

from ..config_loader import derive_seed
from .blackbox.analytic import AnalyticModel
from .data.models import CATEGORICAL, NUMERIC, Dataset, FeatureMeta

TOY_CATEGORIES = ("0", "1")


@dataclass(frozen=True)
class ToySpec:
    n: int = 1000
    seed: int = 0
    noise_sd: float = 0.0
    active_category: int = 1
    coefficient: float = 8.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.noise_sd < 0:
            raise ValueError("noise_sd must be >= 0")
        if self.active_category not in (0, 1):
            raise ValueError("active_category must be 0 or 1")


def toy_model(spec: ToySpec) -> AnalyticModel:
    return AnalyticModel(
        "toy",
        {"coefficient": float(spec.coefficient), "active_code": int(spec.active_category)},
        input_dim=3,
        categorical=(2,),
    )


def generate_toy(spec: ToySpec) -> Tuple[Dataset, AnalyticModel]:
    """
    x1, x2 ~ U(-1, 1)，x3 ~ Bernoulli(0.5)；y = f(x) + N(0, noise_sd²)。

    Returns:
        (原始单位的数据集, 带闭式梯度的解析模型)
    """
    rng = np.random.default_rng(derive_seed(spec.seed, "synth"))
    x1 = rng.uniform(-1.0, 1.0, spec.n)
    x2 = rng.uniform(-1.0, 1.0, spec.n)
    x3 = rng.integers(0, 2, spec.n).astype(float)
    X = np.column_stack([x1, x2, x3])
    model = toy_model(spec)
    y = model.predict(X)
    if spec.noise_sd > 0:
        y = y + rng.normal(0.0, spec.noise_sd, spec.n)

    features = (
        FeatureMeta("x1", NUMERIC, 0, range=(float(x1.min()), float(x1.max()))),
        FeatureMeta("x2", NUMERIC, 1, range=(float(x2.min()), float(x2.max()))),
        FeatureMeta("x3", CATEGORICAL, 2, categories=TOY_CATEGORIES),
    )
    logger.debug(f"[合成数据] toy n={spec.n} seed={spec.seed} noise={spec.noise_sd}")
    return Dataset(features, X, y), model
