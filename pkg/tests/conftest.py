"""共享 fixtures"""

import numpy as np
import pytest

from ramkit.config_loader import BoostingConfig, MLPConfig, RegionConfig, RunConfig
from ramkit.domain.blackbox import linear_model
from ramkit.domain.data import NUMERIC, Dataset, FeatureMeta
from ramkit.domain.synth import ToySpec, generate_toy


@pytest.fixture
def toy():
    """N=10000 无噪声玩具数据与解析模型"""
    return generate_toy(ToySpec(n=10000, seed=0))


@pytest.fixture
def toy_jacobian(toy):
    ds, model = toy
    return model.jacobian(ds.X)


def _make_numeric(X: np.ndarray, y: np.ndarray) -> Dataset:
    X = np.asarray(X, dtype=float)
    metas = tuple(
        FeatureMeta(f"x{i + 1}", NUMERIC, i, range=(float(X[:, i].min()), float(X[:, i].max())))
        for i in range(X.shape[1])
    )
    return Dataset(metas, X, y)


@pytest.fixture
def make_numeric():
    """构造全数值特征数据集的工厂"""
    return _make_numeric


@pytest.fixture
def linear_data():
    """f = 2·x1 - x2 + 0.5·x3，三个特征互不交互"""
    rng = np.random.default_rng(3)
    X = rng.uniform(-1.0, 1.0, size=(2000, 3))
    model = linear_model([2.0, -1.0, 0.5])
    return _make_numeric(X, model.predict(X)), model


@pytest.fixture
def fast_run():
    """测试用的小规模运行配置：解析黑盒、较少 boosting 轮数"""
    return RunConfig(
        subcommand="evaluate",
        seed=0,
        threads=1,
        blackbox="toy",
        mlp=MLPConfig(hidden_layers=[16, 16], epochs=5),
        regions=RegionConfig(),
        boosting=BoostingConfig(rounds=300, pair_rounds=50, max_pairs=3),
    )
