"""CSV 加载、训练/测试划分与标准化"""

from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger
from sklearn.model_selection import train_test_split as _sk_split

from ...errors import (
    ConstantColumn,
    ConstantTarget,
    EmptyDataset,
    InvalidFraction,
    TargetNotFound,
    UnknownColumn,
    UnparseableCell,
    UnreadableData,
)
from .models import CATEGORICAL, NUMERIC, Dataset, FeatureMeta, Scaler

# 不超过该数量的不同取值（非数值或整数编码）视为类别特征
MAX_INFERRED_CATEGORIES = 12


def _sort_categories(values: Sequence[str]) -> Tuple[str, ...]:
    try:
        return tuple(sorted(values, key=float))
    except ValueError:
        return tuple(sorted(values))


def _first_bad_cell(column: pd.Series) -> Tuple[int, str]:
    parsed = pd.to_numeric(column, errors="coerce")
    bad = parsed.isna()
    row = int(np.flatnonzero(bad.to_numpy())[0])
    return row, str(column.iloc[row])


def _is_integer_valued(values: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(values)) and np.all(values == np.round(values)))


def load_csv(
    path: Union[str, Path],
    target: str,
    categorical: Optional[List[str]] = None,
) -> Dataset:
    """
    读取带表头的 CSV，推断列类型，返回 Dataset。

    Args:
        path: CSV 文件路径（UTF-8，逗号分隔，`.` 小数点）
        target: 目标列名
        categorical: 显式指定的类别列（优先于自动推断）

    Returns:
        Dataset，特征顺序 = 文件列顺序去掉目标列

    含缺失值的行会被整行丢弃并记录 warning。
    """
    path = Path(path)
    categorical = list(categorical or [])
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=True, skipinitialspace=True, encoding="utf-8")
    except pd.errors.EmptyDataError as exc:
        raise EmptyDataset(f"{path} is empty") from exc
    except UnicodeDecodeError as exc:
        raise UnreadableData(f"{path} is not valid UTF-8 (byte {exc.start})") from exc
    except pd.errors.ParserError as exc:
        raise UnreadableData(f"{path} is not a valid CSV: {exc}") from exc

    frame.columns = [str(c).strip() for c in frame.columns]
    if target not in frame.columns:
        raise TargetNotFound(target, list(frame.columns))
    unknown = [name for name in categorical if name not in frame.columns or name == target]
    if unknown:
        raise UnknownColumn(unknown[0], [c for c in frame.columns if c != target])

    before = len(frame)
    frame = frame.dropna(axis=0, how="any").reset_index(drop=True)
    dropped = before - len(frame)
    if dropped:
        logger.warning(f"[数据加载] dropped {dropped} rows with missing cells from {path.name}")
    if frame.empty:
        raise EmptyDataset(f"{path} has no complete data rows")

    y_raw = pd.to_numeric(frame[target], errors="coerce")
    if y_raw.isna().any():
        row, value = _first_bad_cell(frame[target])
        raise UnparseableCell(target, row, value)
    y = y_raw.to_numpy(dtype=float)
    if len(y) >= 2 and np.all(y == y[0]):
        raise ConstantTarget(f"target {target!r} is constant")

    feature_names = [c for c in frame.columns if c != target]
    metas: List[FeatureMeta] = []
    columns: List[np.ndarray] = []
    for index, name in enumerate(feature_names):
        raw = frame[name].str.strip()
        parsed = pd.to_numeric(raw, errors="coerce")
        numeric_ok = not parsed.isna().any()
        distinct = raw.unique()

        as_categorical = name in categorical
        if not as_categorical and not numeric_ok:
            if len(distinct) > MAX_INFERRED_CATEGORIES:
                row, value = _first_bad_cell(raw)
                raise UnparseableCell(name, row, value)
            as_categorical = True
        if not as_categorical and numeric_ok:
            values = parsed.to_numpy(dtype=float)
            as_categorical = (
                len(np.unique(values)) <= MAX_INFERRED_CATEGORIES and _is_integer_valued(values)
            )

        if as_categorical:
            if numeric_ok:
                # 整数编码的类别统一成规范字符串，"1" 与 "1.0" 视为同一类别
                raw = parsed.map(lambda v: str(int(v)) if float(v).is_integer() else repr(float(v)))
            categories = _sort_categories(list(pd.unique(raw)))
            lookup = {cat: code for code, cat in enumerate(categories)}
            columns.append(raw.map(lookup).to_numpy(dtype=float))
            metas.append(FeatureMeta(name, CATEGORICAL, index, categories=categories))
        else:
            values = parsed.to_numpy(dtype=float)
            columns.append(values)
            metas.append(FeatureMeta(name, NUMERIC, index, range=(float(values.min()), float(values.max()))))

    X = np.column_stack(columns) if columns else np.zeros((len(frame), 0))
    ds = Dataset(tuple(metas), X, y)
    logger.info(
        f"[数据加载] {path.name}: N={ds.N}, D={ds.D} "
        f"(categorical: {[m.name for m in metas if m.is_categorical]})"
    )
    return ds


def write_csv(ds: Dataset, path: Union[str, Path], target: str = "y", scaler: Optional[Scaler] = None) -> Path:
    """写出 CSV，类别编码还原为原始字符串；传入 scaler 时 numeric 列与目标还原为原始单位"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    X = scaler.inverse_features(ds.X) if scaler is not None else ds.X
    y = scaler.inverse_target(ds.y) if scaler is not None else ds.y
    data = {}
    for meta in ds.features:
        col = X[:, meta.index]
        data[meta.name] = [meta.category_of(v) for v in col] if meta.is_categorical else col
    data[target] = y
    pd.DataFrame(data).to_csv(path, index=False)
    return path


def train_test_split(ds: Dataset, test_fraction: float, seed: int) -> Tuple[Dataset, Dataset]:
    """按行随机划分；同一 (ds, fraction, seed) 得到同一划分"""
    if not 0.0 < test_fraction < 1.0:
        raise InvalidFraction(f"test_fraction must be in (0, 1), got {test_fraction}")
    if ds.N < 2:
        raise InvalidFraction(f"need at least 2 rows to split, got {ds.N}")
    try:
        train_rows, test_rows = _sk_split(
            np.arange(ds.N), test_size=test_fraction, random_state=seed, shuffle=True
        )
    except ValueError as exc:
        raise InvalidFraction(str(exc)) from exc
    return ds.subset(np.sort(train_rows)), ds.subset(np.sort(test_rows))


def fit_scaler(ds: Dataset) -> Scaler:
    means, sds = {}, {}
    for idx in ds.numeric_indices:
        col = ds.X[:, idx]
        sd = float(col.std())
        if not sd > 0:
            raise ConstantColumn(ds.features[idx].name)
        means[idx] = float(col.mean())
        sds[idx] = sd
    target_sd = float(ds.y.std())
    if not target_sd > 0:
        raise ConstantTarget("target is constant, cannot standardize")
    return Scaler(means=means, sds=sds, target_mean=float(ds.y.mean()), target_sd=target_sd)


def apply_scaler(sc: Scaler, ds: Dataset) -> Dataset:
    return ds.with_values(sc.transform_features(ds.X), sc.transform_target(ds.y))


def invert_scaler(sc: Scaler, ds: Dataset) -> Dataset:
    return ds.with_values(sc.inverse_features(ds.X), sc.inverse_target(ds.y))
