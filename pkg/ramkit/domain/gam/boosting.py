"""
扩展特征空间上的循环 boosting（EBM 风格）。

每一轮按固定顺序遍历所有分量，对当前残差在该分量激活的样本上
拟合一棵叶子数受限的回归树，乘以学习率后累加到形状函数；
一轮结束后截距吸收残差均值。全部轮次结束后对每个形状居中。
"""

from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from sklearn.tree import DecisionTreeRegressor

from ...config_loader import BoostingConfig
from ...errors import NonFiniteResiduals, PartitionError
from ...infrastructure.parallel import parallel_map
from ..data.models import Dataset
from ..regions.models import RegionSet, trivial_regionset
from .models import (
    AdditiveModel,
    Binning,
    ComponentId,
    ExtendedFeature,
    PairSurface,
    ShapeFunction,
    component_name,
    make_binning,
)


def build_extended_space(ds: Dataset, regionsets: Dict[int, RegionSet]) -> List[ExtendedFeature]:
    """
    每个源特征 s 按其区域展开成 T_s 个扩展特征，顺序为 (s, t) 升序。

    缺少区域集合的特征按单区域处理；区域不构成划分时报 PartitionError。
    """
    extended: List[ExtendedFeature] = []
    for s in range(ds.D):
        rs = regionsets.get(s) or trivial_regionset(s, ds.N)
        if rs.feature != s:
            raise PartitionError(f"region set for feature {s} is labelled with feature {rs.feature}")
        if not rs.is_partition(ds.X):
            raise PartitionError(f"regions of feature {ds.features[s].name!r} do not partition the data")
        for t, region in enumerate(rs.regions):
            extended.append(
                ExtendedFeature(
                    source=s,
                    region_index=t,
                    region=region,
                    name=component_name(ds.features, rs, t),
                    description=rs.describe(t, ds.features),
                    categorical=ds.features[s].is_categorical,
                )
            )
    return extended


def complete_regionsets(ds: Dataset, regionsets: Optional[Dict[int, RegionSet]]) -> Dict[int, RegionSet]:
    regionsets = dict(regionsets or {})
    for s in range(ds.D):
        if s not in regionsets:
            regionsets[s] = trivial_regionset(s, ds.N)
    return regionsets


def _rmse(residual: np.ndarray) -> float:
    return float(np.sqrt(np.mean(residual ** 2))) if residual.size else 0.0


@dataclass
class _Component:
    feature: ExtendedFeature
    rows: np.ndarray
    binning: Binning
    bin_index: np.ndarray
    counts: np.ndarray
    values: np.ndarray
    enabled: bool


def _prepare_component(ds: Dataset, ef: ExtendedFeature, cfg: BoostingConfig, min_rows: int) -> _Component:
    rows = np.flatnonzero(ef.active(ds.X))
    xs = ds.X[rows, ef.source]
    meta = ds.features[ef.source]
    n_cat = len(meta.categories) if meta.is_categorical else 0
    binning = make_binning(xs, cfg.max_bins, meta.is_categorical, n_cat)
    bin_index = binning.index(xs)
    counts = np.bincount(bin_index, minlength=binning.n_bins)
    enabled = rows.size >= min_rows
    if not enabled:
        logger.warning(
            f"[加性模型] component {ef.name} has {rows.size} rows (< {min_rows}), shape fixed to 0"
        )
    return _Component(ef, rows, binning, bin_index, counts, np.zeros(binning.n_bins), enabled)


def _tree_step(
    grid: np.ndarray, targets: np.ndarray, weights: np.ndarray, max_leaves: int
) -> np.ndarray:
    """在箱（或单元格）层面拟合带权回归树，等价于在样本层面做最小二乘"""
    tree = DecisionTreeRegressor(max_leaf_nodes=max_leaves, random_state=0)
    tree.fit(grid, targets, sample_weight=weights)
    return tree.predict(grid)


def _boost_component(comp: _Component, residual: np.ndarray, cfg: BoostingConfig) -> np.ndarray:
    """返回该分量在各箱上的更新量（未占用的箱为 0）"""
    res = residual[comp.rows]
    occupied = comp.counts > 0
    sums = np.bincount(comp.bin_index, weights=res, minlength=comp.binning.n_bins)
    means = sums[occupied] / comp.counts[occupied]
    grid = np.flatnonzero(occupied).reshape(-1, 1).astype(float)
    update = np.zeros(comp.binning.n_bins)
    if grid.shape[0] == 1:
        update[occupied] = cfg.learning_rate * means
    else:
        update[occupied] = cfg.learning_rate * _tree_step(grid, means, comp.counts[occupied], cfg.max_leaves)
    return update


def fit_gam(
    ds: Dataset,
    extended: Optional[Sequence[ExtendedFeature]] = None,
    order: int = 1,
    cfg: Optional[BoostingConfig] = None,
    regionsets: Optional[Dict[int, RegionSet]] = None,
    threads: int = 1,
) -> AdditiveModel:
    """
    在扩展特征空间上训练可加模型。

    Args:
        ds: 训练数据（一般为标准化后的数据）
        extended: build_extended_space 的结果；为空时由 regionsets 构造
        order: 1 为一阶模型，2 时在一阶残差上继续训练成对项
        cfg: boosting 参数
        regionsets: 每个特征的区域集合，缺省时所有 T_s = 1（普通 GAM）
        threads: 成对项候选评分的并行度

    Returns:
        AdditiveModel，history 记录每一轮后的训练 RMSE
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    cfg = (cfg or BoostingConfig()).validate()
    regionsets = complete_regionsets(ds, regionsets)
    if extended is None:
        extended = build_extended_space(ds, regionsets)
    min_rows = cfg.resolve_min_region(ds.N)

    y = np.asarray(ds.y, dtype=float)
    intercept = float(np.mean(y))
    residual = y - intercept
    history = [_rmse(residual)]
    components = [_prepare_component(ds, ef, cfg, min_rows) for ef in extended]

    for round_no in range(1, cfg.rounds + 1):
        for comp in components:
            if not comp.enabled:
                continue
            update = _boost_component(comp, residual, cfg)
            comp.values += update
            residual[comp.rows] -= update[comp.bin_index]
        shift = float(residual.mean())
        intercept += shift
        residual -= shift
        history.append(_rmse(residual))
        if not np.isfinite(history[-1]):
            raise NonFiniteResiduals(f"residuals became non-finite in round {round_no}")
        if round_no % 100 == 0:
            logger.debug(f"[加性模型] round {round_no}/{cfg.rounds}: train RMSE {history[-1]:.4f}")

    shapes, intercept = _center_shapes(ds, components, intercept)
    model = AdditiveModel(
        intercept=intercept,
        features=list(ds.features),
        regionsets=regionsets,
        shapes=shapes,
        order=order,
        history=history,
        config=asdict(cfg),
    )
    logger.info(
        f"[加性模型] {len(shapes)} components, {cfg.rounds} rounds, train RMSE {history[-1]:.4f}"
    )

    if order == 2:
        _fit_pairs(ds, model, extended, residual, cfg, min_rows, threads)
    return model


def _center_shapes(ds: Dataset, components: Sequence[_Component], intercept: float) -> Tuple[List[ShapeFunction], float]:
    """形状在激活样本上居中；同一源特征的区域水平按样本数加权后并入截距"""
    N = ds.N
    shapes: List[ShapeFunction] = []
    level_sum: Dict[int, float] = {}
    for comp in components:
        n = int(comp.rows.size)
        level = float(np.dot(comp.counts, comp.values) / n) if n else 0.0
        values = comp.values - level if n else comp.values.copy()
        level_sum[comp.feature.source] = level_sum.get(comp.feature.source, 0.0) + n * level
        shapes.append(
            ShapeFunction(
                source=comp.feature.source,
                region_index=comp.feature.region_index,
                name=comp.feature.name,
                description=comp.feature.description,
                binning=comp.binning,
                values=values,
                offset=level,
                n_active=n,
            )
        )
    for sh in shapes:
        sh.offset -= level_sum[sh.source] / N
    intercept += sum(level_sum.values()) / N
    return shapes, intercept


# ---- 成对项 ----


def _pair_gain(ds: Dataset, a: ExtendedFeature, b: ExtendedFeature, residual: np.ndarray) -> Tuple[float, int]:
    rows = np.flatnonzero(a.active(ds.X) & b.active(ds.X))
    if rows.size == 0:
        return 0.0, 0
    r = residual[rows]
    grid = ds.X[np.ix_(rows, [a.source, b.source])]
    tree = DecisionTreeRegressor(max_depth=2, random_state=0).fit(grid, r)
    gain = _rmse(r) - _rmse(r - tree.predict(grid))
    return float(gain), int(rows.size)


def select_pairs(
    ds: Dataset,
    extended: Sequence[ExtendedFeature],
    residual: np.ndarray,
    k: int = 10,
    min_overlap: Optional[int] = None,
    tol: float = 1e-9,
    threads: int = 1,
) -> List[Tuple[ComponentId, ComponentId, float]]:
    """
    候选：源特征不同、同时激活样本数 ≥ min_overlap 的扩展特征对。
    评分：在同时激活的样本上用深度 2 的双特征回归树拟合残差后 RMSE 的下降量。

    Returns:
        按得分降序的前 k 个 (id_a, id_b, gain)，只保留 gain > tol 的候选
    """
    residual = np.asarray(residual, dtype=float)
    if min_overlap is None:
        min_overlap = BoostingConfig().resolve_min_region(ds.N)
    candidates = [
        (a, b)
        for i, a in enumerate(extended)
        for b in extended[i + 1:]
        if a.source != b.source
    ]
    if not candidates or k <= 0:
        return []
    scored = parallel_map(lambda ab: _pair_gain(ds, ab[0], ab[1], residual), candidates, threads=threads)
    ranked = [
        (a.id, b.id, gain)
        for (a, b), (gain, overlap) in zip(candidates, scored)
        if overlap >= min_overlap and gain > tol
    ]
    # 稳定排序：同分时保持候选的枚举顺序
    ranked.sort(key=lambda item: -item[2])
    logger.debug(f"[加性模型] {len(candidates)} pair candidates, {len(ranked)} improve the residual")
    return ranked[:k]


@dataclass
class _PairComponent:
    first: ExtendedFeature
    second: ExtendedFeature
    rows: np.ndarray
    binning_a: Binning
    binning_b: Binning
    cell_index: np.ndarray
    counts: np.ndarray
    values: np.ndarray
    gain: float


def _prepare_pair(ds: Dataset, a: ExtendedFeature, b: ExtendedFeature, gain: float, cfg: BoostingConfig) -> _PairComponent:
    rows = np.flatnonzero(a.active(ds.X) & b.active(ds.X))
    binnings = []
    for ef in (a, b):
        meta = ds.features[ef.source]
        n_cat = len(meta.categories) if meta.is_categorical else 0
        binnings.append(make_binning(ds.X[rows, ef.source], cfg.pair_bins, meta.is_categorical, n_cat))
    ia = binnings[0].index(ds.X[rows, a.source])
    ib = binnings[1].index(ds.X[rows, b.source])
    n_cells = binnings[0].n_bins * binnings[1].n_bins
    cell_index = ia * binnings[1].n_bins + ib
    counts = np.bincount(cell_index, minlength=n_cells)
    return _PairComponent(a, b, rows, binnings[0], binnings[1], cell_index, counts, np.zeros(n_cells), gain)


def _boost_pair(pc: _PairComponent, residual: np.ndarray, cfg: BoostingConfig) -> np.ndarray:
    occupied = pc.counts > 0
    sums = np.bincount(pc.cell_index, weights=residual[pc.rows], minlength=pc.counts.size)
    means = sums[occupied] / pc.counts[occupied]
    cells = np.flatnonzero(occupied)
    nb = pc.binning_b.n_bins
    grid = np.column_stack([cells // nb, cells % nb]).astype(float)
    update = np.zeros(pc.counts.size)
    if cells.size == 1:
        update[occupied] = cfg.learning_rate * means
    else:
        update[occupied] = cfg.learning_rate * _tree_step(grid, means, pc.counts[occupied], cfg.max_leaves)
    return update


def _fit_pairs(
    ds: Dataset,
    model: AdditiveModel,
    extended: Sequence[ExtendedFeature],
    residual: np.ndarray,
    cfg: BoostingConfig,
    min_rows: int,
    threads: int,
) -> None:
    """在一阶残差上训练成对项；截距继续吸收残差均值，成对曲面保留各自的水平"""
    by_id = {ef.id: ef for ef in extended}
    selected = select_pairs(ds, extended, residual, cfg.max_pairs, min_rows, threads=threads)
    if not selected:
        logger.info("[加性模型] no pairwise term improves the order-1 residual")
        return
    pairs = [_prepare_pair(ds, by_id[ia], by_id[ib], gain, cfg) for ia, ib, gain in selected]

    for round_no in range(1, cfg.pair_rounds + 1):
        for pc in pairs:
            update = _boost_pair(pc, residual, cfg)
            pc.values += update
            residual[pc.rows] -= update[pc.cell_index]
        shift = float(residual.mean())
        model.intercept += shift
        residual -= shift
        model.history.append(_rmse(residual))
        if not np.isfinite(model.history[-1]):
            raise NonFiniteResiduals(f"residuals became non-finite in pair round {round_no}")

    for pc in pairs:
        n = int(pc.rows.size)
        level = float(np.dot(pc.counts, pc.values) / n)
        model.pairs.append(
            PairSurface(
                first=pc.first.id,
                second=pc.second.id,
                name=f"{pc.first.name} x {pc.second.name}",
                binning_a=pc.binning_a,
                binning_b=pc.binning_b,
                values=(pc.values - level).reshape(pc.binning_a.n_bins, pc.binning_b.n_bins),
                offset=level,
                gain=pc.gain,
            )
        )
    logger.info(
        f"[加性模型] {len(pairs)} pairwise terms, {cfg.pair_rounds} rounds, train RMSE {model.history[-1]:.4f}"
    )
