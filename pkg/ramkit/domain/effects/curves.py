"""DALE 效应曲线与异质性指标 H"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd
from loguru import logger

from ...errors import EmptyRegion
from .bins import BinPartition, bin_stats, stats_from_index


@dataclass(frozen=True)
class EffectCurve:
    """
    分段线性的累积效应曲线。

    values 为中心化后的取值，centering 为减去的常数（按样本数加权的曲线均值），
    values + centering 即累积值，首个节点处为 0。
    """

    feature: int
    knots: np.ndarray
    values: np.ndarray
    centering: float
    mu: np.ndarray
    sigma2: np.ndarray
    counts: np.ndarray

    @property
    def accumulated(self) -> np.ndarray:
        return self.values + self.centering

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        return np.interp(np.asarray(x, dtype=float), self.knots, self.values)


@dataclass(frozen=True)
class HeterogeneityReport:
    feature: int
    value: float
    contributions: np.ndarray  # (z_k - z_{k-1})² · σ̂²_k，不可靠箱为 0
    reliable_bins: int


def dale_curve(p: BinPartition) -> EffectCurve:
    if not p.filled:
        raise ValueError("bin statistics not filled")
    accumulated = np.concatenate([[0.0], np.cumsum(p.widths * p.mu)])
    total = p.counts.sum()
    if total > 0:
        segment_means = 0.5 * (accumulated[:-1] + accumulated[1:])
        centering = float(np.dot(p.counts, segment_means) / total)
    else:
        centering = 0.0
    return EffectCurve(
        feature=p.feature,
        knots=p.edges.copy(),
        values=accumulated - centering,
        centering=centering,
        mu=p.mu.copy(),
        sigma2=p.sigma2.copy(),
        counts=p.counts.copy(),
    )


def heterogeneity(p: BinPartition) -> HeterogeneityReport:
    if not p.filled:
        raise ValueError("bin statistics not filled")
    contributions = np.where(p.reliable, p.widths ** 2 * p.sigma2, 0.0)
    return HeterogeneityReport(
        feature=p.feature,
        value=float(np.sqrt(contributions.sum())),
        contributions=contributions,
        reliable_bins=int(p.reliable.sum()),
    )


def regional_heterogeneity(
    X: np.ndarray,
    J: np.ndarray,
    s: int,
    region_mask: np.ndarray,
    partition: BinPartition,
    bin_index: Optional[np.ndarray] = None,
) -> HeterogeneityReport:
    """
    只用区域内样本计算 H，分箱沿用特征的全局分箱不变。

    Args:
        X: 训练样本矩阵（Dataset.X）
        J: Jacobian 查找表
        s: 特征编号
        region_mask: 区域内样本的布尔掩码
        partition: 特征 s 的全局分箱
        bin_index: 可选，预先算好的 partition.assign(X[:, s])
    """
    xs, grads = X[:, s], J[:, s]
    region_mask = np.asarray(region_mask, dtype=bool)
    if not region_mask.any():
        raise EmptyRegion(f"region for feature {partition.feature} contains no instances")
    if bin_index is None:
        filled = bin_stats(partition, xs, grads, region_mask)
    else:
        filled = stats_from_index(partition, bin_index, grads, region_mask)
    report = heterogeneity(filled)
    if report.reliable_bins == 0:
        logger.warning(
            f"[分箱] feature {partition.feature}: region with {int(region_mask.sum())} rows "
            f"leaves every bin unreliable, H = 0"
        )
    return report


def regional_curve(
    partition: BinPartition, xs: np.ndarray, grads: np.ndarray, mask: Optional[np.ndarray] = None
) -> EffectCurve:
    return dale_curve(bin_stats(partition, xs, grads, mask))


def curve_frame(curve: EffectCurve) -> pd.DataFrame:
    """导出格式：knot, value, mu, sigma, count；第 k 行的箱统计量对应 [z_k, z_{k+1})"""
    n_bins = len(curve.mu)
    pad = [np.nan]
    return pd.DataFrame(
        {
            "knot": curve.knots,
            "value": curve.values,
            "mu": np.concatenate([curve.mu, pad]),
            "sigma": np.concatenate([np.sqrt(curve.sigma2), pad]),
            "count": pd.array(list(curve.counts) + [None], dtype="Int64"),
        },
        index=pd.RangeIndex(n_bins + 1),
    )
