"""
子区域检测：逐层共享分裂的搜索树，外加可选的贪心合并后处理。

每一层对所有现有区域使用同一个 (特征, 位置) 分裂，目标函数是
子区域异质性按样本数加权的和；相对上一层下降不足 epsilon 时停止。
"""

from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from ...config_loader import BinConfig, RegionConfig
from ...errors import LengthMismatch
from ...infrastructure.parallel import parallel_map
from ..data.models import Dataset
from ..effects.bins import BinPartition, build_bins, stats_from_index
from ..effects.curves import heterogeneity, regional_heterogeneity
from .models import (
    CATEGORICAL_EQ,
    FAIL,
    NUMERIC_LE,
    PASS,
    Condition,
    LevelSplit,
    Region,
    RegionSet,
    SplitCandidate,
    trivial_regionset,
)

_TIE_RTOL = 1e-12
# 低于该值的异质性视为 0（纯可加时只剩舍入误差）
_NEGLIGIBLE_H = 1e-12


def candidate_positions(ds: Dataset, c: int, positions: int = 10) -> List[float]:
    """
    数值特征：把 [min, max] 等分成 P 段，取 P + 1 个端点（P=10 时 [-1, 1] 上为 -1, -0.8, ..., 1）；
    类别特征：所有出现过的编码。
    """
    if positions < 2:
        raise ValueError("positions must be >= 2")
    col = ds.X[:, c]
    if ds.features[c].is_categorical:
        values = np.unique(np.rint(col))
        return [float(v) for v in values] if values.size >= 2 else []
    lo, hi = float(col.min()), float(col.max())
    if hi <= lo:
        return []
    return [float(v) for v in np.linspace(lo, hi, positions + 1)]


def _score(candidate: SplitCandidate, grid_margin: float) -> float:
    # 选最优候选用的得分；数值候选的目标乘以 (1 + grid_margin)
    if candidate.kind == NUMERIC_LE:
        return candidate.objective * (1.0 + grid_margin)
    return candidate.objective


@dataclass
class _SearchContext:
    X: np.ndarray
    J: np.ndarray
    s: int
    partition: BinPartition
    bin_index: np.ndarray
    min_region: int

    @property
    def N(self) -> int:
        return self.X.shape[0]

    def region_h(self, mask: np.ndarray) -> float:
        return regional_heterogeneity(self.X, self.J, self.s, mask, self.partition, self.bin_index).value


def _kind_of(ds: Dataset, c: int) -> str:
    return CATEGORICAL_EQ if ds.features[c].is_categorical else NUMERIC_LE


def _split_masks(base_masks: Sequence[np.ndarray], pass_mask: np.ndarray) -> List[np.ndarray]:
    out: List[np.ndarray] = []
    for m in base_masks:
        out.append(m & pass_mask)
        out.append(m & ~pass_mask)
    return out


def _evaluate(
    ctx: _SearchContext, base_masks: Sequence[np.ndarray], c: int, kind: str, position: float
) -> Tuple[SplitCandidate, List[np.ndarray]]:
    pass_mask = Condition(c, kind, position, PASS).holds(ctx.X)
    masks = _split_masks(base_masks, pass_mask)
    counts = tuple(int(m.sum()) for m in masks)
    if min(counts) < ctx.min_region:
        # 过小的子区域不计算 H，直接判为无效
        return SplitCandidate(c, kind, position, (), counts, float("inf")), masks
    hs = tuple(ctx.region_h(m) for m in masks)
    objective = float(sum(n * h for n, h in zip(counts, hs)) / ctx.N)
    return SplitCandidate(c, kind, position, hs, counts, objective), masks


def _context(
    ds: Dataset,
    J: np.ndarray,
    s: int,
    partition: Optional[BinPartition],
    min_region: Optional[int],
    bins: Optional[BinConfig],
) -> _SearchContext:
    J = np.asarray(J, dtype=float)
    if J.shape != ds.X.shape:
        raise LengthMismatch(f"Jacobian shape {J.shape} does not match data shape {ds.X.shape}")
    if partition is None:
        bins = bins or BinConfig()
        partition = build_bins(ds.X[:, s], bins.k_init, bins.min_points, grads=J[:, s], feature=s)
    if min_region is None:
        min_region = RegionConfig().resolve_min_region(ds.N)
    return _SearchContext(ds.X, J, s, partition, partition.assign(ds.X[:, s]), int(min_region))


def evaluate_split(
    ds: Dataset,
    J: np.ndarray,
    s: int,
    current: RegionSet,
    c: int,
    position: float,
    partition: Optional[BinPartition] = None,
    min_region: Optional[int] = None,
    bins: Optional[BinConfig] = None,
) -> SplitCandidate:
    """
    用 (c, position) 分裂当前每个区域，返回加权异质性目标。

    任一子区域样本数 < min_region 时 objective 为 +inf。
    """
    ctx = _context(ds, J, s, partition, min_region, bins)
    base_masks = [r.mask(ds.X) for r in current.regions]
    candidate, _ = _evaluate(ctx, base_masks, c, _kind_of(ds, c), position)
    return candidate


def detect_subregions(
    ds: Dataset,
    J: np.ndarray,
    s: int,
    max_depth: int = 3,
    epsilon: float = 0.2,
    positions: int = 10,
    min_region: Optional[int] = None,
    partition: Optional[BinPartition] = None,
    bins: Optional[BinConfig] = None,
    grid_margin: float = 0.05,
) -> RegionSet:
    """
    对特征 s 逐层搜索共享分裂，返回 T ∈ {1, 2, 4, ..., 2^L} 个区域。

    候选按特征编号、位置升序遍历，只有严格更小的得分才替换当前最优；
    数值候选的得分是目标乘以 (1 + grid_margin)，类别候选的得分就是目标。
    已用过的类别特征不再出现在后续层，被分析的特征自身不参与分裂。
    接受与否只看原始目标的相对下降。
    """
    if grid_margin < 0:
        raise ValueError("grid_margin must be >= 0")
    N = ds.N
    if ds.features[s].is_categorical:
        logger.debug(f"[区域检测] {ds.features[s].name}: categorical, not regionalized")
        return replace(trivial_regionset(s, N, 0.0), stop_reason="categorical")

    ctx = _context(ds, J, s, partition, min_region, bins)
    h0 = heterogeneity(stats_from_index(ctx.partition, ctx.bin_index, ctx.J[:, s])).value
    regions: List[Region] = [Region(((),), N)]
    masks: List[np.ndarray] = [np.ones(N, dtype=bool)]
    region_h: List[float] = [h0]
    levels: List[LevelSplit] = []
    trace: List[float] = [h0]
    used_categorical = set()
    previous = h0
    name = ds.features[s].name
    rejected: Optional[float] = None
    stop_reason = "max_depth"

    for level in range(1, max_depth + 1):
        if previous <= _NEGLIGIBLE_H:
            logger.debug(f"[区域检测] {name}: heterogeneity already zero at level {level - 1}")
            stop_reason = "zero_heterogeneity"
            break
        best: Optional[SplitCandidate] = None
        best_score = float("inf")
        best_masks: List[np.ndarray] = []
        for c in range(ds.D):
            if c == s or c in used_categorical:
                continue
            kind = _kind_of(ds, c)
            for position in candidate_positions(ds, c, positions):
                candidate, child_masks = _evaluate(ctx, masks, c, kind, position)
                if not candidate.valid:
                    continue
                score = _score(candidate, grid_margin)
                if best is None or score < best_score - _TIE_RTOL * max(1.0, abs(best_score)):
                    best, best_score, best_masks = candidate, score, child_masks
        if best is None:
            logger.debug(f"[区域检测] {name}: no valid split at level {level}")
            stop_reason = "no_candidate"
            break

        drop = 1.0 - best.objective / previous
        split_name = ds.features[best.split_feature].name
        if drop < epsilon:
            logger.debug(
                f"[区域检测] {name}: level {level} best split {split_name}@{best.position:.4g} "
                f"drops {drop:.1%} < {epsilon:.0%}, stop"
            )
            rejected = best.objective
            stop_reason = "epsilon"
            break

        children: List[Region] = []
        for region in regions:
            children.append(region.refine(Condition(best.split_feature, best.kind, best.position, PASS), 0))
            children.append(region.refine(Condition(best.split_feature, best.kind, best.position, FAIL), 0))
        regions = [Region(r.clauses, n) for r, n in zip(children, best.counts)]
        masks = best_masks
        region_h = list(best.heterogeneities)
        levels.append(LevelSplit(best.split_feature, best.kind, best.position))
        trace.append(best.objective)
        previous = best.objective
        if best.kind == CATEGORICAL_EQ:
            used_categorical.add(best.split_feature)
        logger.debug(
            f"[区域检测] {name}: level {level} accepts {split_name}@{best.position:.4g}, "
            f"objective {best.objective:.4f} (drop {drop:.1%})"
        )

    return RegionSet(
        feature=s,
        regions=tuple(regions),
        levels=tuple(levels),
        trace=tuple(trace),
        region_heterogeneity=tuple(region_h),
        rejected_objective=rejected,
        stop_reason=stop_reason,
    )


def merge_regions(
    ds: Dataset,
    J: np.ndarray,
    rs: RegionSet,
    tolerance: float = 0.05,
    partition: Optional[BinPartition] = None,
    bins: Optional[BinConfig] = None,
) -> RegionSet:
    """
    后处理：贪心合并两个区域，每次选目标增量最小的一对，
    只要合并后的目标不超过 L_accepted + tolerance · H⁰。

    合并得到的区域是条件列表的析取；返回的集合仍是一个划分。
    """
    if rs.T <= 1:
        return rs
    ctx = _context(ds, J, rs.feature, partition, 1, bins)
    N = ctx.N
    regions = list(rs.regions)
    masks = [r.mask(ds.X) for r in regions]
    counts = [int(m.sum()) for m in masks]
    hs = [ctx.region_h(m) if n > 0 else 0.0 for m, n in zip(masks, counts)]
    objective = float(sum(n * h for n, h in zip(counts, hs)) / N)
    budget = rs.trace[-1] + tolerance * rs.trace[0]
    changed = False

    while len(regions) > 1:
        best: Optional[Tuple[float, int, int, float]] = None
        for i in range(len(regions)):
            for j in range(i + 1, len(regions)):
                union = masks[i] | masks[j]
                h_union = ctx.region_h(union)
                delta = (int(union.sum()) * h_union - counts[i] * hs[i] - counts[j] * hs[j]) / N
                if best is None or delta < best[0] - _TIE_RTOL * max(1.0, abs(best[0])):
                    best = (delta, i, j, h_union)
        delta, i, j, h_union = best
        if objective + delta > budget + _TIE_RTOL * max(1.0, abs(budget)):
            break
        merged_mask = masks[i] | masks[j]
        merged = Region(regions[i].clauses + regions[j].clauses, int(merged_mask.sum()))
        regions[i], masks[i], counts[i], hs[i] = merged, merged_mask, merged.count, h_union
        for seq in (regions, masks, counts, hs):
            del seq[j]
        objective += delta
        changed = True

    if not changed:
        return rs
    logger.debug(
        f"[区域检测] {ds.features[rs.feature].name}: merged {rs.T} -> {len(regions)} regions, "
        f"objective {objective:.4f}"
    )
    return RegionSet(
        feature=rs.feature,
        regions=tuple(regions),
        levels=rs.levels,
        trace=rs.trace,
        merged=True,
        merged_objective=objective,
        region_heterogeneity=tuple(hs),
        rejected_objective=rs.rejected_objective,
        stop_reason=rs.stop_reason,
    )


def detect_all(
    ds: Dataset,
    J: np.ndarray,
    regions: Optional[RegionConfig] = None,
    bins: Optional[BinConfig] = None,
    threads: int = 1,
    partitions: Optional[Dict[int, BinPartition]] = None,
) -> Dict[int, RegionSet]:
    """对每个特征检测子区域（可选合并），特征之间并行"""
    regions = regions or RegionConfig()
    bins = bins or BinConfig()
    min_region = regions.resolve_min_region(ds.N)
    partitions = partitions or {}

    def _one(s: int) -> RegionSet:
        rs = detect_subregions(
            ds,
            J,
            s,
            max_depth=regions.max_depth,
            epsilon=regions.epsilon,
            positions=regions.positions,
            min_region=min_region,
            partition=partitions.get(s),
            bins=bins,
            grid_margin=regions.grid_margin,
        )
        if regions.merge and rs.T > 1:
            rs = merge_regions(ds, J, rs, regions.merge_tolerance, partition=partitions.get(s), bins=bins)
        return rs

    results = parallel_map(_one, list(range(ds.D)), threads=threads)
    found = {s: rs for s, rs in zip(range(ds.D), results)}
    total = sum(rs.T for rs in found.values())
    logger.info(f"[区域检测] {ds.D} features -> {total} extended features (min_region={min_region})")
    return found
