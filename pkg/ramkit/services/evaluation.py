"""评估：MAE/RMSE 与 DNN、GAM、RAM、GA²M、RA²M 的对比实验"""

from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional

import numpy as np
import pandas as pd
from loguru import logger

from ..config_loader import RunConfig
from ..domain.data import Dataset, FeatureMeta, Scaler
from ..domain.regions import RegionSet
from ..errors import LengthMismatch
from ..infrastructure.parallel import parallel_map
from .pipeline import FitResult, fit_additive, fit_pipeline, load_dataset, stage

MODEL_LABELS = ("DNN", "GAM", "RAM", "GA2M", "RA2M")


def _pair(y: np.ndarray, y_hat: np.ndarray):
    y = np.asarray(y, dtype=float).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=float).reshape(-1)
    if y.shape != y_hat.shape:
        raise LengthMismatch(f"y has {y.shape[0]} values, predictions {y_hat.shape[0]}")
    if y.size == 0:
        raise LengthMismatch("metrics need at least one value")
    return y, y_hat


def mae(y: np.ndarray, y_hat: np.ndarray) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def rmse(y: np.ndarray, y_hat: np.ndarray) -> float:
    y, y_hat = _pair(y, y_hat)
    return float(np.sqrt(np.mean((y - y_hat) ** 2)))


@dataclass
class MetricReport:
    """标准化单位的误差，以及乘以目标标准差后的原始单位误差"""

    label: str
    mae: float
    rmse: float
    mae_original: float
    rmse_original: float

    @classmethod
    def from_predictions(cls, label: str, y: np.ndarray, y_hat: np.ndarray, scaler: Scaler) -> "MetricReport":
        m, r = mae(y, y_hat), rmse(y, y_hat)
        return cls(label, m, r, m * scaler.target_sd, r * scaler.target_sd)


@dataclass
class ExperimentResult:
    dataset: str
    seed: int
    reports: List[MetricReport]
    regionsets: Dict[int, RegionSet]
    features: List[FeatureMeta]
    timings: Dict[str, float] = field(default_factory=dict)
    scaler: Optional[Scaler] = None

    @property
    def feature_names(self) -> List[str]:
        return [f.name for f in self.features]

    @property
    def labels(self) -> List[str]:
        return [r.label for r in self.reports]

    def report(self, label: str) -> MetricReport:
        for item in self.reports:
            if item.label == label:
                return item
        raise KeyError(f"no report for model {label!r}")

    def to_dict(self) -> Dict:
        return {
            "dataset": self.dataset,
            "seed": self.seed,
            "reports": [asdict(r) for r in self.reports],
            "regionsets": [
                self.regionsets[s].to_dict(self.features, self.scaler) for s in sorted(self.regionsets)
            ],
            "timings": dict(self.timings),
        }


def run_experiment(
    run: RunConfig,
    ds: Optional[Dataset] = None,
    dataset_id: Optional[str] = None,
    include_pairs: bool = True,
) -> ExperimentResult:
    """
    在 80/20 切分上运行完整流程和 GAM/GA²M 基线（相同的 boosting 配置，T_s ≡ 1）。

    Args:
        run: 运行配置
        ds: 原始单位的数据集，缺省时读取 run.data
        dataset_id: 结果中记录的数据集名
        include_pairs: 是否训练 GA2M/RA2M

    Returns:
        ExperimentResult
    """
    fit: FitResult = fit_pipeline(run, ds, holdout=True, order=1)
    timings = dict(fit.timings)
    train, test, scaler = fit.data.train, fit.data.test, fit.data.scaler

    predictions: Dict[str, np.ndarray] = {}
    with stage("dnn", timings):
        predictions["DNN"] = fit.blackbox.predict(test.X)
    predictions["RAM"] = fit.model.predict(test.X)

    baselines = [("GAM", None, 1)]
    if include_pairs:
        baselines += [("GA2M", None, 2), ("RA2M", fit.regionsets, 2)]

    def _train(item):
        label, regionsets, order = item
        return fit_additive(run, train, regionsets, order)

    with stage("baselines", timings):
        models = parallel_map(_train, baselines, threads=min(fit.threads, len(baselines)))
    for (label, _, _), model in zip(baselines, models):
        predictions[label] = model.predict(test.X)

    reports = [
        MetricReport.from_predictions(label, test.y, predictions[label], scaler)
        for label in MODEL_LABELS
        if label in predictions
    ]
    for r in reports:
        logger.info(f"[实验] {r.label:<5} RMSE {r.rmse:.4f}  MAE {r.mae:.4f}")

    result = ExperimentResult(
        dataset=dataset_id or (str(run.data) if run.data else "in-memory"),
        seed=run.seed,
        reports=reports,
        regionsets=fit.regionsets,
        features=list(train.features),
        timings=timings,
        scaler=scaler,
    )
    return result


@dataclass
class SeedSummary:
    """同一模型在多个种子上的均值与样本标准差（单个种子时 sd = 0）"""

    label: str
    n_seeds: int
    mae_mean: float
    mae_sd: float
    rmse_mean: float
    rmse_sd: float
    rmse_original_mean: float
    rmse_original_sd: float


@dataclass
class SeedSweep:
    dataset: str
    seeds: List[int]
    results: List[ExperimentResult]
    summaries: List[SeedSummary]

    def summary(self, label: str) -> SeedSummary:
        for item in self.summaries:
            if item.label == label:
                return item
        raise KeyError(f"no summary for model {label!r}")

    def to_dict(self) -> Dict:
        return {
            "dataset": self.dataset,
            "seeds": list(self.seeds),
            "summaries": [asdict(s) for s in self.summaries],
            "runs": [r.to_dict() for r in self.results],
        }


def summarize_seeds(results: List[ExperimentResult]) -> List[SeedSummary]:
    frame = pd.DataFrame(
        [{"seed": res.seed, **asdict(report)} for res in results for report in res.reports]
    )
    if frame.empty:
        return []
    grouped = frame.groupby("label")
    means = grouped[["mae", "rmse", "rmse_original"]].mean()
    sds = grouped[["mae", "rmse", "rmse_original"]].std(ddof=1).fillna(0.0)
    counts = grouped["seed"].nunique()
    return [
        SeedSummary(
            label=label,
            n_seeds=int(counts[label]),
            mae_mean=float(means.at[label, "mae"]),
            mae_sd=float(sds.at[label, "mae"]),
            rmse_mean=float(means.at[label, "rmse"]),
            rmse_sd=float(sds.at[label, "rmse"]),
            rmse_original_mean=float(means.at[label, "rmse_original"]),
            rmse_original_sd=float(sds.at[label, "rmse_original"]),
        )
        for label in MODEL_LABELS
        if label in means.index
    ]


def run_seeds(
    run: RunConfig,
    ds: Optional[Dataset] = None,
    dataset_id: Optional[str] = None,
    include_pairs: bool = True,
) -> SeedSweep:
    """
    对 run.seeds 中的每个种子（为空时只用 run.seed）重复 run_experiment，
    每个种子重新切分数据、重新训练黑盒和加性模型，最后按模型汇总均值与标准差。
    """
    seeds = list(run.seeds) or [run.seed]
    if ds is None:
        timings: Dict[str, float] = {}
        with stage("data", timings):
            ds = load_dataset(run)
    name = dataset_id or (str(run.data) if run.data else "in-memory")

    results: List[ExperimentResult] = []
    for seed in seeds:
        logger.info(f"[实验] seed {seed} ({len(results) + 1}/{len(seeds)})")
        results.append(run_experiment(replace(run, seed=seed), ds, dataset_id=name, include_pairs=include_pairs))

    summaries = summarize_seeds(results)
    for s in summaries:
        logger.info(f"[实验] {s.label:<5} RMSE {s.rmse_mean:.4f} ± {s.rmse_sd:.4f} over {s.n_seeds} seeds")
    return SeedSweep(dataset=name, seeds=seeds, results=results, summaries=summaries)
