"""
端到端流水线：切分/标准化 → 训练黑盒 → Jacobian 查找表 → 子区域检测 → 扩展空间上的可加模型
"""

import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from typing import Dict, Iterator, Optional

import numpy as np
from loguru import logger

from ..config_loader import RunConfig, derive_seed, resolve_threads
from ..domain.blackbox import BlackBoxModel, StandardizedModel, jacobian, train_mlp
from ..domain.data import Dataset, Scaler, apply_scaler, fit_scaler, load_csv, train_test_split
from ..domain.gam import AdditiveModel, fit_gam
from ..domain.regions import RegionSet, detect_all
from ..domain.synth import ToySpec, toy_model
from ..errors import InvalidConfig, StageError

BLACKBOXES = ("mlp", "toy")


@contextmanager
def stage(name: str, timings: Dict[str, float]) -> Iterator[None]:
    """计时并把阶段内的异常包装为 StageError"""
    start = time.perf_counter()
    logger.info(f"[实验] stage {name} ...")
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # noqa: BLE001
        logger.error(f"[实验] stage {name} failed: {exc}")
        raise StageError(name, exc) from exc
    finally:
        timings[name] = time.perf_counter() - start


@dataclass
class PreparedData:
    """标准化后的训练/测试集；scaler 只在训练集上拟合"""

    train: Dataset
    test: Optional[Dataset]
    scaler: Scaler


@dataclass
class FitResult:
    model: AdditiveModel
    regionsets: Dict[int, RegionSet]
    blackbox: BlackBoxModel
    data: PreparedData
    jacobian: np.ndarray
    threads: int = 1
    timings: Dict[str, float] = field(default_factory=dict)


def load_dataset(run: RunConfig) -> Dataset:
    if not run.data or not run.target:
        raise InvalidConfig("--data and --target are required")
    return load_csv(run.data, run.target, run.categorical)


def prepare_data(ds: Dataset, run: RunConfig, holdout: bool = True) -> PreparedData:
    if holdout:
        train_raw, test_raw = train_test_split(ds, run.split.test_fraction, derive_seed(run.seed, "split"))
    else:
        train_raw, test_raw = ds, None
    scaler = fit_scaler(train_raw)
    train = apply_scaler(scaler, train_raw)
    test = apply_scaler(scaler, test_raw) if test_raw is not None else None
    logger.info(
        f"[数据加载] train={train.N} test={test.N if test is not None else 0} D={train.D}"
    )
    return PreparedData(train, test, scaler)


def train_blackbox(run: RunConfig, data: PreparedData) -> BlackBoxModel:
    """mlp：在标准化数据上训练 MLP；toy：解析玩具函数的标准化视图（需 x1, x2, x3 三列）"""
    if run.blackbox == "mlp":
        cfg = replace(run.mlp, seed=derive_seed(run.seed, "mlp"))
        return train_mlp(data.train, cfg)
    if run.blackbox == "toy":
        train = data.train
        if train.D != 3 or not train.features[2].is_categorical:
            raise InvalidConfig("--blackbox toy needs columns (x1, x2, x3) with x3 categorical")
        return StandardizedModel(toy_model(ToySpec()), data.scaler)
    raise InvalidConfig(f"unknown black box {run.blackbox!r}, expected one of {BLACKBOXES}")


def detect_regions(run: RunConfig, train: Dataset, J: np.ndarray, threads: int) -> Dict[int, RegionSet]:
    return detect_all(train, J, run.regions, run.bins, threads=threads)


def fit_additive(
    run: RunConfig,
    train: Dataset,
    regionsets: Optional[Dict[int, RegionSet]],
    order: int,
    threads: int = 1,
) -> AdditiveModel:
    cfg = replace(run.boosting, seed=derive_seed(run.seed, "boosting"))
    return fit_gam(train, order=order, cfg=cfg, regionsets=regionsets, threads=threads)


def _check_regionsets(regionsets: Dict[int, RegionSet], train: Dataset) -> None:
    for s, rs in regionsets.items():
        if not 0 <= s < train.D or rs.feature != s:
            raise InvalidConfig(f"region set for feature {rs.feature} does not fit {train.D} features")
        split_on = {c.feature for region in rs.regions for clause in region.clauses for c in clause}
        if any(not 0 <= c < train.D for c in split_on):
            raise InvalidConfig(f"regions of feature {s} split on a feature outside the data")
        if not rs.is_partition(train.X):
            raise InvalidConfig(f"regions of {train.features[s].name} do not partition the training rows")


def fit_pipeline(
    run: RunConfig,
    ds: Optional[Dataset] = None,
    holdout: bool = False,
    order: Optional[int] = None,
    regionsets: Optional[Dict[int, RegionSet]] = None,
) -> FitResult:
    """
    完整的 RAM 训练流程。

    Args:
        run: 运行配置
        ds: 原始单位的数据集，缺省时按 run.data/run.target 读取 CSV
        holdout: 是否先切出测试集（fit 子命令用全部数据）
        order: 覆盖 run.order
        regionsets: 事先检测好的区域集合（标准化单位，须来自同一份数据），给出时跳过区域检测

    Returns:
        FitResult，包含模型、区域集合、黑盒、标准化数据与各阶段耗时
    """
    run.validate()
    timings: Dict[str, float] = {}
    threads = resolve_threads(run.threads)
    order = run.order if order is None else order

    with stage("data", timings):
        ds = ds if ds is not None else load_dataset(run)
        data = prepare_data(ds, run, holdout=holdout)
    with stage("blackbox", timings):
        blackbox = train_blackbox(run, data)
    with stage("jacobian", timings):
        J = jacobian(blackbox, data.train.X)
    with stage("regions", timings):
        if regionsets is None:
            regionsets = detect_regions(run, data.train, J, threads)
        else:
            _check_regionsets(regionsets, data.train)
            logger.info(f"[区域检测] reusing {len(regionsets)} precomputed region sets")
    with stage("boosting", timings):
        model = fit_additive(run, data.train, regionsets, order, threads)

    total = sum(rs.T for rs in regionsets.values())
    logger.info(
        f"[实验] pipeline done: {total} extended features, order {order}, "
        f"{sum(timings.values()):.1f}s"
    )
    return FitResult(model, regionsets, blackbox, data, J, threads, timings)

