"""扩展特征空间与可加模型的领域类型"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ...errors import ArityMismatch
from ..data.models import FeatureMeta
from ..regions.models import Region, RegionSet

ComponentId = Tuple[int, int]


@dataclass(frozen=True)
class ExtendedFeature:
    """
    扩展特征 x_st：源特征 s 在区域 R_st 内的取值，区域外为“未激活”（NaN），
    不用 0 表示，避免与真实的 0 值混淆。
    """

    source: int
    region_index: int
    region: Region
    name: str
    description: str
    categorical: bool = False

    @property
    def id(self) -> ComponentId:
        return (self.source, self.region_index)

    def active(self, X: np.ndarray) -> np.ndarray:
        return self.region.mask(X)

    def values(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.where(self.active(X), X[:, self.source], np.nan)


@dataclass(frozen=True)
class Binning:
    """
    分段常数表示用的分箱：数值特征用切点，类别特征用编码。

    类别数超过箱数上限时 lookup 把编码映射到箱：样本最多的 n_bins - 1 个类别各占一箱，
    其余类别共用最后一箱；lookup 为空表示编码即箱号。
    """

    categorical: bool
    cuts: np.ndarray
    n_bins: int
    lo: float = 0.0
    hi: float = 0.0
    lookup: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    def index(self, xs: np.ndarray) -> np.ndarray:
        xs = np.asarray(xs, dtype=float)
        if self.categorical:
            if self.lookup.size:
                return self.lookup[np.clip(np.rint(xs), 0, self.lookup.size - 1).astype(int)]
            return np.clip(np.rint(xs), 0, self.n_bins - 1).astype(int)
        # 区间外的值自然落到首尾两个箱
        return np.searchsorted(self.cuts, xs, side="right")

    @property
    def edges(self) -> np.ndarray:
        return np.concatenate([[self.lo], self.cuts, [self.hi]])

    def to_dict(self) -> Dict:
        return {
            "categorical": self.categorical,
            "cuts": self.cuts.tolist(),
            "n_bins": self.n_bins,
            "lo": self.lo,
            "hi": self.hi,
            "lookup": self.lookup.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Binning":
        return cls(
            categorical=bool(data["categorical"]),
            cuts=np.asarray(data["cuts"], dtype=float),
            n_bins=int(data["n_bins"]),
            lo=float(data.get("lo", 0.0)),
            hi=float(data.get("hi", 0.0)),
            lookup=np.asarray(data.get("lookup", []), dtype=int),
        )


def make_binning(values: np.ndarray, max_bins: int, categorical: bool = False, n_categories: int = 0) -> Binning:
    """
    唯一值不多于 max_bins 时在相邻唯一值的中点切分，
    否则取分位数切点（去重）。类别特征最多 max_bins 个箱，多出的低频类别并入最后一箱。
    """
    values = np.asarray(values, dtype=float)
    if categorical:
        n_categories = max(int(n_categories), 1)
        if n_categories <= max_bins:
            return Binning(True, np.empty(0), n_categories)
        codes = np.clip(np.rint(values), 0, n_categories - 1).astype(int)
        freq = np.bincount(codes, minlength=n_categories)
        kept = np.sort(np.argsort(-freq, kind="stable")[: max_bins - 1])
        lookup = np.full(n_categories, max_bins - 1, dtype=int)
        lookup[kept] = np.arange(kept.size)
        return Binning(True, np.empty(0), max_bins, lookup=lookup)
    if values.size == 0:
        return Binning(False, np.empty(0), 1)
    unique = np.unique(values)
    if unique.size <= max_bins:
        cuts = 0.5 * (unique[:-1] + unique[1:])
    else:
        qs = np.quantile(values, np.linspace(0.0, 1.0, max_bins + 1)[1:-1])
        cuts = np.unique(qs)
    return Binning(False, cuts, cuts.size + 1, float(unique[0]), float(unique[-1]))


@dataclass
class ShapeFunction:
    """分段常数的形状函数 f_st，values 已在激活样本上居中，offset 为区域水平"""

    source: int
    region_index: int
    name: str
    description: str
    binning: Binning
    values: np.ndarray
    offset: float = 0.0
    n_active: int = 0

    @property
    def id(self) -> ComponentId:
        return (self.source, self.region_index)

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        return self.values[self.binning.index(xs)]

    def to_dict(self) -> Dict:
        return {
            "source": self.source,
            "region_index": self.region_index,
            "name": self.name,
            "description": self.description,
            "binning": self.binning.to_dict(),
            "values": self.values.tolist(),
            "offset": self.offset,
            "n_active": self.n_active,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "ShapeFunction":
        return cls(
            source=int(data["source"]),
            region_index=int(data["region_index"]),
            name=data["name"],
            description=data.get("description", ""),
            binning=Binning.from_dict(data["binning"]),
            values=np.asarray(data["values"], dtype=float),
            offset=float(data.get("offset", 0.0)),
            n_active=int(data.get("n_active", 0)),
        )


@dataclass
class PairSurface:
    """两个扩展特征的联合分段常数曲面，只在两者同时激活的样本上有效"""

    first: ComponentId
    second: ComponentId
    name: str
    binning_a: Binning
    binning_b: Binning
    values: np.ndarray  # shape (n_a, n_b)
    offset: float = 0.0
    gain: float = 0.0

    def evaluate(self, xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
        return self.values[self.binning_a.index(xa), self.binning_b.index(xb)]

    def to_dict(self) -> Dict:
        return {
            "first": list(self.first),
            "second": list(self.second),
            "name": self.name,
            "binning_a": self.binning_a.to_dict(),
            "binning_b": self.binning_b.to_dict(),
            "values": self.values.tolist(),
            "offset": self.offset,
            "gain": self.gain,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "PairSurface":
        return cls(
            first=tuple(data["first"]),
            second=tuple(data["second"]),
            name=data["name"],
            binning_a=Binning.from_dict(data["binning_a"]),
            binning_b=Binning.from_dict(data["binning_b"]),
            values=np.asarray(data["values"], dtype=float),
            offset=float(data.get("offset", 0.0)),
            gain=float(data.get("gain", 0.0)),
        )


@dataclass
class AdditiveModel:
    """
    c + Σ_s f_{s,t(x)}(x_s) (+ 成对项)。

    所有 T_s = 1 时就是普通 GAM（order=2 时为 GA²M）。
    """

    intercept: float
    features: List[FeatureMeta]
    regionsets: Dict[int, RegionSet]
    shapes: List[ShapeFunction]
    pairs: List[PairSurface] = field(default_factory=list)
    order: int = 1
    history: List[float] = field(default_factory=list)
    config: Dict = field(default_factory=dict)

    @property
    def D(self) -> int:
        return len(self.features)

    def shape(self, source: int, region_index: int = 0) -> ShapeFunction:
        for sh in self.shapes:
            if sh.id == (source, region_index):
                return sh
        raise KeyError(f"no shape for component {(source, region_index)}")

    def memberships(self, X: np.ndarray) -> Dict[int, np.ndarray]:
        return {s: rs.membership(X) for s, rs in self.regionsets.items()}

    def predict(self, X: np.ndarray) -> np.ndarray:
        return predict_ram(self, X)


def predict_ram(m: AdditiveModel, X: np.ndarray) -> np.ndarray:
    """每个源特征恰好一个分量参与；成对项只在两个分量同时激活时参与"""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.shape[1] != m.D:
        raise ArityMismatch(m.D, X.shape[1])
    out = np.full(X.shape[0], m.intercept, dtype=float)
    if not m.shapes and not m.pairs:
        return out
    member = m.memberships(X)
    for sh in m.shapes:
        rows = member[sh.source] == sh.region_index
        if rows.any():
            out[rows] += sh.evaluate(X[rows, sh.source]) + sh.offset
    for pair in m.pairs:
        (sa, ta), (sb, tb) = pair.first, pair.second
        rows = (member[sa] == ta) & (member[sb] == tb)
        if rows.any():
            out[rows] += pair.evaluate(X[rows, sa], X[rows, sb]) + pair.offset
    return out


def component_name(features: Sequence[FeatureMeta], rs: RegionSet, t: int) -> str:
    name = features[rs.feature].name
    return name if rs.T == 1 else f"{name}_{t + 1}"
