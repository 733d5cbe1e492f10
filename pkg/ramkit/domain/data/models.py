"""数据集领域模型：特征元数据、数据集、标准化器"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ...errors import ArityMismatch, EmptyDataset, LengthMismatch

NUMERIC = "numeric"
CATEGORICAL = "categorical"


@dataclass(frozen=True)
class FeatureMeta:
    name: str
    kind: str  # numeric / categorical
    index: int
    range: Optional[Tuple[float, float]] = None  # 仅 numeric
    categories: Optional[Tuple[str, ...]] = None  # 仅 categorical，顺序即编码

    def __post_init__(self):
        if self.kind == NUMERIC:
            if self.range is None or self.range[0] > self.range[1]:
                raise ValueError(f"numeric feature {self.name!r} needs range with min <= max")
        elif self.kind == CATEGORICAL:
            if not self.categories:
                raise ValueError(f"categorical feature {self.name!r} needs categories")
            if len(set(self.categories)) != len(self.categories):
                raise ValueError(f"categorical feature {self.name!r} has duplicated categories")
        else:
            raise ValueError(f"unknown feature kind {self.kind!r}")

    @property
    def is_categorical(self) -> bool:
        return self.kind == CATEGORICAL

    def code_of(self, category: str) -> int:
        return self.categories.index(str(category))

    def category_of(self, code: float) -> str:
        return self.categories[int(round(code))]


def _readonly(values: np.ndarray) -> np.ndarray:
    values = np.array(values, dtype=float, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class Dataset:
    """
    不可变的表格数据集。

    X 为 N×D 浮点矩阵，类别特征存放类别编码；y 为长度 N 的目标向量。
    构造后数组只读，可以在多个 worker 之间共享。
    """

    features: Tuple[FeatureMeta, ...]
    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        X = _readonly(self.X)
        y = _readonly(self.y).reshape(-1)
        if X.ndim != 2:
            raise ValueError("X must be a 2-D matrix")
        if X.shape[0] < 1:
            raise EmptyDataset("dataset has no rows")
        if X.shape[0] != y.shape[0]:
            raise LengthMismatch(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[1] != len(self.features):
            raise ArityMismatch(len(self.features), X.shape[1])
        if [f.index for f in self.features] != list(range(len(self.features))):
            raise ValueError("feature indices must form 0..D-1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def N(self) -> int:
        return int(self.X.shape[0])

    @property
    def D(self) -> int:
        return int(self.X.shape[1])

    @property
    def feature_names(self) -> List[str]:
        return [f.name for f in self.features]

    @property
    def numeric_indices(self) -> List[int]:
        return [f.index for f in self.features if not f.is_categorical]

    @property
    def categorical_indices(self) -> List[int]:
        return [f.index for f in self.features if f.is_categorical]

    def index_of(self, name: str) -> int:
        for meta in self.features:
            if meta.name == name:
                return meta.index
        raise KeyError(f"unknown feature {name!r}")

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.index_of(name)]

    def with_values(self, X: np.ndarray, y: np.ndarray) -> "Dataset":
        """用新数值构造数据集，numeric 特征的范围按新数值重算"""
        X = np.asarray(X, dtype=float)
        metas = []
        for meta in self.features:
            if meta.is_categorical:
                metas.append(meta)
            else:
                col = X[:, meta.index]
                metas.append(
                    FeatureMeta(meta.name, meta.kind, meta.index, range=(float(col.min()), float(col.max())))
                )
        return Dataset(tuple(metas), X, y)

    def subset(self, rows: Sequence[int]) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return self.with_values(self.X[rows], self.y[rows])


@dataclass
class Scaler:
    """numeric 特征与目标的均值/标准差；类别编码不参与缩放"""

    means: Dict[int, float] = field(default_factory=dict)
    sds: Dict[int, float] = field(default_factory=dict)
    target_mean: float = 0.0
    target_sd: float = 1.0

    def transform_features(self, X: np.ndarray) -> np.ndarray:
        Z = np.array(X, dtype=float, copy=True)
        for idx, mean in self.means.items():
            Z[:, idx] = (Z[:, idx] - mean) / self.sds[idx]
        return Z

    def inverse_features(self, Z: np.ndarray) -> np.ndarray:
        X = np.array(Z, dtype=float, copy=True)
        for idx, mean in self.means.items():
            X[:, idx] = X[:, idx] * self.sds[idx] + mean
        return X

    def transform_target(self, y: np.ndarray) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.target_mean) / self.target_sd

    def inverse_target(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.target_sd + self.target_mean

    def value_to_original(self, feature: int, value: float) -> float:
        if feature not in self.means:
            return float(value)
        return float(value) * self.sds[feature] + self.means[feature]

    def to_dict(self) -> Dict:
        return {
            "means": {str(k): v for k, v in self.means.items()},
            "sds": {str(k): v for k, v in self.sds.items()},
            "target_mean": self.target_mean,
            "target_sd": self.target_sd,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Scaler":
        return cls(
            means={int(k): float(v) for k, v in data.get("means", {}).items()},
            sds={int(k): float(v) for k, v in data.get("sds", {}).items()},
            target_mean=float(data.get("target_mean", 0.0)),
            target_sd=float(data.get("target_sd", 1.0)),
        )


def features_to_dict(features: Sequence[FeatureMeta]) -> List[Dict]:
    return [
        {
            "name": f.name,
            "kind": f.kind,
            "index": f.index,
            "range": list(f.range) if f.range is not None else None,
            "categories": list(f.categories) if f.categories is not None else None,
        }
        for f in features
    ]


def features_from_dict(items: Sequence[Dict]) -> Tuple[FeatureMeta, ...]:
    return tuple(
        FeatureMeta(
            name=item["name"],
            kind=item["kind"],
            index=int(item["index"]),
            range=tuple(item["range"]) if item.get("range") is not None else None,
            categories=tuple(item["categories"]) if item.get("categories") is not None else None,
        )
        for item in items
    )
