"""变宽分箱：从等宽网格出发，合并样本不足的相邻箱"""

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from loguru import logger

from ...errors import InsufficientData, LengthMismatch


@dataclass(frozen=True)
class BinPartition:
    """
    特征 s 的分箱 z_0 < z_1 < ... < z_K。

    mu / sigma2 为 None 表示统计量尚未填充（只有边界与计数）。
    样本数 < 2 的箱标记为不可靠：mu = 0，sigma2 = 0。
    """

    feature: int
    edges: np.ndarray
    counts: np.ndarray
    mu: Optional[np.ndarray] = None
    sigma2: Optional[np.ndarray] = None

    @property
    def n_bins(self) -> int:
        return len(self.edges) - 1

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    @property
    def reliable(self) -> np.ndarray:
        return self.counts >= 2

    @property
    def filled(self) -> bool:
        return self.mu is not None and self.sigma2 is not None

    def assign(self, xs: np.ndarray) -> np.ndarray:
        """z_{k-1} <= x < z_k 落入第 k 个箱；最大值归入最后一个箱；越界样本返回 -1"""
        xs = np.asarray(xs, dtype=float)
        idx = np.searchsorted(self.edges, xs, side="right") - 1
        idx = np.where(xs == self.edges[-1], self.n_bins - 1, idx)
        out_of_range = (xs < self.edges[0]) | (xs > self.edges[-1])
        return np.where(out_of_range, -1, idx)


def _stats(bin_index: np.ndarray, grads: np.ndarray, n_bins: int):
    valid = bin_index >= 0
    idx, g = bin_index[valid], grads[valid]
    counts = np.bincount(idx, minlength=n_bins)
    sums = np.bincount(idx, weights=g, minlength=n_bins)
    reliable = counts >= 2
    mu = np.where(reliable, sums / np.maximum(counts, 1), 0.0)
    dev = g - mu[idx]
    ss = np.bincount(idx, weights=dev * dev, minlength=n_bins)
    sigma2 = np.where(reliable, ss / np.maximum(counts - 1, 1), 0.0)
    return counts, mu, sigma2


def stats_from_index(
    p: BinPartition, bin_index: np.ndarray, grads: np.ndarray, mask: Optional[np.ndarray] = None
) -> BinPartition:
    """用预先算好的箱编号填充统计量（Jacobian 查找表只需分箱一次）"""
    if mask is not None:
        bin_index, grads = bin_index[mask], grads[mask]
    counts, mu, sigma2 = _stats(bin_index, np.asarray(grads, dtype=float), p.n_bins)
    return replace(p, counts=counts, mu=mu, sigma2=sigma2)


def bin_stats(
    p: BinPartition, xs: np.ndarray, grads: np.ndarray, mask: Optional[np.ndarray] = None
) -> BinPartition:
    """
    μ̂_k = 箱内梯度均值，σ̂²_k = 箱内梯度的无偏方差（n-1）。

    mask 为布尔向量或行号，只统计其中的样本。
    """
    xs = np.asarray(xs, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if xs.shape != grads.shape:
        raise LengthMismatch(f"values ({xs.shape[0]}) and gradients ({grads.shape[0]}) differ in length")
    if mask is not None:
        mask = np.asarray(mask)
        if mask.dtype == bool and mask.shape[0] != xs.shape[0]:
            raise LengthMismatch("mask length does not match the data")
    return stats_from_index(p, p.assign(xs), grads, mask)


def build_bins(
    values: np.ndarray,
    k_init: int = 20,
    min_points: int = 10,
    grads: Optional[np.ndarray] = None,
    feature: int = 0,
) -> BinPartition:
    """
    从 [min, max] 上 k_init 个等宽箱开始，只要有箱的样本数 < min_points，
    就把最左边的这样一个箱与相邻箱合并。

    相邻箱的选择：给了梯度时取 |Δμ̂| + |Δσ̂| 最小的一侧（暂定统计量），
    否则取样本较少的一侧；平局取左侧。
    """
    if k_init < 2 or min_points < 2:
        raise ValueError("k_init and min_points must be >= 2")
    values = np.asarray(values, dtype=float)
    if values.shape[0] < min_points:
        raise InsufficientData(f"{values.shape[0]} values, need at least min_points={min_points}")
    if grads is not None:
        grads = np.asarray(grads, dtype=float)
        if grads.shape != values.shape:
            raise LengthMismatch("values and gradients differ in length")

    lo, hi = float(values.min()), float(values.max())
    if hi <= lo:
        hi = lo + 1.0
    edges = np.linspace(lo, hi, k_init + 1)

    while True:
        p = BinPartition(feature, edges, np.zeros(len(edges) - 1, dtype=int))
        bin_index = p.assign(values)
        if grads is not None:
            counts, mu, sigma2 = _stats(bin_index, grads, p.n_bins)
            sigma = np.sqrt(sigma2)
        else:
            counts = np.bincount(bin_index, minlength=p.n_bins)
        small = np.flatnonzero(counts < min_points)
        if small.size == 0 or p.n_bins == 1:
            break

        k = int(small[0])
        neighbours = [j for j in (k - 1, k + 1) if 0 <= j < p.n_bins]
        if grads is not None:
            score = [abs(mu[k] - mu[j]) + abs(sigma[k] - sigma[j]) for j in neighbours]
        else:
            score = [counts[j] for j in neighbours]
        j = neighbours[int(np.argmin(score))]  # argmin 取第一个最小值，即左侧
        edges = np.delete(edges, max(k, j))

    logger.debug(f"[分箱] feature {feature}: {k_init} -> {p.n_bins} bins (min_points={min_points})")
    return BinPartition(feature, edges, counts)
