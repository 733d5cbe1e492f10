"""基准数据集准备：Bike Sharing（小时级）与 California Housing，写成 CSV"""

from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd
from loguru import logger
from sklearn.datasets import fetch_california_housing, fetch_openml

from ..errors import RamkitError

BIKE_TARGET = "cnt"
CALIFORNIA_TARGET = "MedHouseVal"
# 读取 CSV 时需要显式声明的类别列（其余类别列由取值自动推断）
BENCHMARK_CATEGORICAL: Dict[str, List[str]] = {
    "bike": ["season", "weather", "workingday", "holiday"],
    "california": [],
}
BENCHMARK_TARGETS = {"bike": BIKE_TARGET, "california": CALIFORNIA_TARGET}


def bike_frame(data_home: Optional[str] = None) -> pd.DataFrame:
    """
    OpenML Bike_Sharing_Demand：去掉 feel_temp，保留 11 个特征，
    count 改名为 cnt，workingday/holiday 编码为 0/1。
    """
    bunch = fetch_openml("Bike_Sharing_Demand", version=2, as_frame=True, data_home=data_home)
    frame = bunch.frame.copy()
    frame = frame.drop(columns=["feel_temp"], errors="ignore")
    frame = frame.rename(columns={"count": BIKE_TARGET})
    for col in ("workingday", "holiday"):
        frame[col] = frame[col].astype(str).str.lower().map({"true": 1, "false": 0, "1": 1, "0": 0}).astype(int)
    for col in ("season", "weather"):
        frame[col] = frame[col].astype(str)
    return frame


def california_frame(data_home: Optional[str] = None) -> pd.DataFrame:
    bunch = fetch_california_housing(as_frame=True, data_home=data_home)
    frame = bunch.frame.copy()
    return frame.rename(columns={"Latitude": "X_lat", "Longitude": "X_long"})


_FETCHERS = {"bike": bike_frame, "california": california_frame}


def fetch_benchmark(name: str, out_dir: Path, data_home: Optional[str] = None) -> Path:
    """下载并写出 <out_dir>/<name>.csv，返回文件路径"""
    if name not in _FETCHERS:
        raise RamkitError(f"unknown benchmark {name!r}, expected one of {sorted(_FETCHERS)}")
    out_dir = Path(out_dir)
    try:
        frame = _FETCHERS[name](data_home)
    except Exception as exc:  # noqa: BLE001
        logger.error(f"[数据加载] failed to fetch {name}: {exc}")
        raise RamkitError(f"cannot fetch benchmark {name!r}: {exc}") from exc
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{name}.csv"
    frame.to_csv(path, index=False)
    logger.info(f"[数据加载] {name}: {len(frame)} rows, {frame.shape[1] - 1} features -> {path}")
    return path
