"""区域领域模型：分裂条件、区域、区域集合"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ...errors import PartitionError
from ..data.models import FeatureMeta, Scaler

NUMERIC_LE = "numeric_le"
CATEGORICAL_EQ = "categorical_eq"
PASS = "pass"
FAIL = "fail"


@dataclass(frozen=True)
class Condition:
    """x_c <= p（numeric_le）或 x_c = v（categorical_eq），fail 取补集"""

    feature: int
    kind: str
    threshold: float
    polarity: str = PASS

    def holds(self, X: np.ndarray) -> np.ndarray:
        col = np.asarray(X, dtype=float)[:, self.feature]
        if self.kind == NUMERIC_LE:
            base = col <= self.threshold
        else:
            base = np.rint(col) == self.threshold
        return base if self.polarity == PASS else ~base

    def negate(self) -> "Condition":
        return Condition(self.feature, self.kind, self.threshold, FAIL if self.polarity == PASS else PASS)

    def describe(self, features: Sequence[FeatureMeta], scaler: Optional[Scaler] = None) -> str:
        meta = features[self.feature]
        if self.kind == NUMERIC_LE:
            value = scaler.value_to_original(self.feature, self.threshold) if scaler else self.threshold
            op = "<=" if self.polarity == PASS else ">"
            return f"{meta.name} {op} {value:.4g}"
        op = "=" if self.polarity == PASS else "!="
        return f"{meta.name} {op} {meta.category_of(self.threshold)}"

    def to_dict(self) -> Dict:
        return {
            "feature": self.feature,
            "kind": self.kind,
            "threshold": self.threshold,
            "polarity": self.polarity,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Condition":
        return cls(int(data["feature"]), data["kind"], float(data["threshold"]), data["polarity"])


Clause = Tuple[Condition, ...]


@dataclass(frozen=True)
class Region:
    """
    条件的合取。后处理合并后的区域是若干合取式的析取（clauses），
    分裂树直接产生的区域只有一个 clause。
    """

    clauses: Tuple[Clause, ...] = ((),)
    count: int = 0

    def mask(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0], dtype=bool)
        for clause in self.clauses:
            hit = np.ones(X.shape[0], dtype=bool)
            for cond in clause:
                hit &= cond.holds(X)
            out |= hit
        return out

    def refine(self, condition: Condition, count: int) -> "Region":
        return Region(tuple(clause + (condition,) for clause in self.clauses), count)

    def describe(self, features: Sequence[FeatureMeta], scaler: Optional[Scaler] = None) -> str:
        parts = [" and ".join(c.describe(features, scaler) for c in clause) for clause in self.clauses]
        parts = [p for p in parts if p]
        if not parts:
            return ""
        if len(parts) == 1:
            return parts[0]
        return " or ".join(f"({p})" for p in parts)


@dataclass(frozen=True)
class LevelSplit:
    split_feature: int
    kind: str
    threshold: float


@dataclass(frozen=True)
class SplitCandidate:
    split_feature: int
    kind: str
    position: float
    heterogeneities: Tuple[float, ...]
    counts: Tuple[int, ...]
    objective: float

    @property
    def valid(self) -> bool:
        return bool(np.isfinite(self.objective))


@dataclass(frozen=True)
class RegionSet:
    """
    特征 s 的互不相交且覆盖全空间的区域 {R_st}。

    trace: [H⁰, L¹, L², ...]，只记录被接受的层；rejected_objective 是导致停止的那一层的最优目标
    （没有被拒绝的层时为 None），stop_reason 记录停止原因；merged 表示经过后处理合并。
    """

    feature: int
    regions: Tuple[Region, ...]
    levels: Tuple[LevelSplit, ...] = ()
    trace: Tuple[float, ...] = (0.0,)
    merged: bool = False
    merged_objective: Optional[float] = None
    region_heterogeneity: Tuple[float, ...] = field(default=())
    rejected_objective: Optional[float] = None
    stop_reason: str = ""

    @property
    def T(self) -> int:
        return len(self.regions)

    def masks(self, X: np.ndarray) -> np.ndarray:
        return np.vstack([r.mask(X) for r in self.regions])

    def membership(self, X: np.ndarray) -> np.ndarray:
        """每个样本所属区域的编号（0 起），不恰好命中一个区域时报 PartitionError"""
        masks = self.masks(X)
        hits = masks.sum(axis=0)
        if np.any(hits != 1):
            bad = int(np.flatnonzero(hits != 1)[0])
            raise PartitionError(
                f"feature {self.feature}: instance {bad} matches {int(hits[bad])} regions"
            )
        return np.argmax(masks, axis=0)

    def is_partition(self, X: np.ndarray) -> bool:
        return bool(np.all(self.masks(X).sum(axis=0) == 1))

    def describe(self, t: int, features: Sequence[FeatureMeta], scaler: Optional[Scaler] = None) -> str:
        name = features[self.feature].name
        cond = self.regions[t].describe(features, scaler)
        return f"{name} | {cond}" if cond else name

    def to_dict(self, features: Optional[Sequence[FeatureMeta]] = None, scaler: Optional[Scaler] = None) -> Dict:
        data: Dict = {
            "feature": self.feature,
            "levels": [
                {"split_feature": lv.split_feature, "kind": lv.kind, "threshold": lv.threshold}
                for lv in self.levels
            ],
            "regions": [
                {
                    "clauses": [[c.to_dict() for c in clause] for clause in r.clauses],
                    "count": r.count,
                }
                for r in self.regions
            ],
            "trace": list(self.trace),
            "rejected_objective": self.rejected_objective,
            "stop_reason": self.stop_reason,
            "merged": self.merged,
            "merged_objective": self.merged_objective,
            "region_heterogeneity": list(self.region_heterogeneity),
        }
        if features is not None:
            data["feature_name"] = features[self.feature].name
            for lv in data["levels"]:
                lv["split_feature_name"] = features[lv["split_feature"]].name
                if scaler is not None and lv["kind"] == NUMERIC_LE:
                    lv["threshold_original"] = scaler.value_to_original(lv["split_feature"], lv["threshold"])
            for t, item in enumerate(data["regions"]):
                item["description"] = self.describe(t, features, scaler)
        return data

    @classmethod
    def from_dict(cls, data: Dict) -> "RegionSet":
        regions = tuple(
            Region(
                clauses=tuple(tuple(Condition.from_dict(c) for c in clause) for clause in item["clauses"]),
                count=int(item.get("count", 0)),
            )
            for item in data["regions"]
        )
        levels = tuple(
            LevelSplit(int(lv["split_feature"]), lv["kind"], float(lv["threshold"])) for lv in data.get("levels", [])
        )
        return cls(
            feature=int(data["feature"]),
            regions=regions,
            levels=levels,
            trace=tuple(float(v) for v in data.get("trace", [0.0])),
            merged=bool(data.get("merged", False)),
            merged_objective=data.get("merged_objective"),
            region_heterogeneity=tuple(float(v) for v in data.get("region_heterogeneity", [])),
            rejected_objective=data.get("rejected_objective"),
            stop_reason=str(data.get("stop_reason", "")),
        )


def trivial_regionset(feature: int, n_rows: int, h0: float = 0.0) -> RegionSet:
    return RegionSet(feature=feature, regions=(Region(((),), n_rows),), trace=(h0,), region_heterogeneity=(h0,))


def region_membership(rs: RegionSet, x: np.ndarray) -> int:
    """单个样本所属区域；numeric_le 的边界值 x_c = p 归入 pass 一侧"""
    return int(rs.membership(np.asarray(x, dtype=float).reshape(1, -1))[0])

