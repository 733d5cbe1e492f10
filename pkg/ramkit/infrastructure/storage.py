"""
持久化：模型容器（JSON）、区域集合（JSON）、曲线与形状表（CSV）。

模型容器是单个 JSON 文档：
{meta, scaler, regionsets, intercept, shapes[], pairs[], blackbox}
形状的切点保存为标准化单位，scaler 一并保存以便换算回原始单位。
"""

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd
from loguru import logger

from .. import __version__
from ..domain.blackbox.analytic import model_from_dict as blackbox_from_dict
from ..domain.blackbox.base import BlackBoxModel
from ..domain.data.models import FeatureMeta, Scaler, features_from_dict, features_to_dict
from ..domain.gam.models import AdditiveModel, PairSurface, ShapeFunction
from ..domain.regions.models import RegionSet
from ..errors import StorageError

FORMAT = "ramkit-model"


def load_json(path: Path) -> Any:
    """读取 JSON 文件，文件缺失或格式错误时抛出 StorageError"""
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except FileNotFoundError as exc:
        raise StorageError(f"file not found: {path}") from exc
    except (OSError, json.JSONDecodeError) as exc:
        logger.error(f"[存储] 加载文件失败 {path}: {exc}")
        raise StorageError(f"cannot read {path}: {exc}") from exc


def save_json(path: Path, data: Any) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(data, f, ensure_ascii=False, indent=2)
    except OSError as exc:
        logger.error(f"[存储] 保存文件失败 {path}: {exc}")
        raise StorageError(f"cannot write {path}: {exc}") from exc
    logger.debug(f"[存储] 已写入 {path}")
    return path


@dataclass
class ModelBundle:
    model: AdditiveModel
    scaler: Optional[Scaler] = None
    blackbox: Optional[BlackBoxModel] = None
    meta: Optional[Dict[str, Any]] = None


def model_to_dict(
    model: AdditiveModel,
    scaler: Optional[Scaler] = None,
    blackbox: Optional[BlackBoxModel] = None,
    extra_meta: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    meta = {
        "format": FORMAT,
        "version": __version__,
        "created_at": datetime.now().isoformat(timespec="seconds"),
        "order": model.order,
        "features": features_to_dict(model.features),
        "config": model.config,
        "history": list(model.history),
    }
    meta.update(extra_meta or {})
    return {
        "meta": meta,
        "scaler": scaler.to_dict() if scaler is not None else None,
        "regionsets": regionsets_to_dict(model.regionsets, model.features, scaler),
        "intercept": model.intercept,
        "shapes": [sh.to_dict() for sh in model.shapes],
        "pairs": [p.to_dict() for p in model.pairs],
        "blackbox": blackbox.to_dict() if blackbox is not None else None,
    }


def model_from_dict(data: Dict[str, Any]) -> ModelBundle:
    meta = data.get("meta") or {}
    if meta.get("format") != FORMAT:
        raise StorageError(f"not a {FORMAT} document (format={meta.get('format')!r})")
    try:
        features = list(features_from_dict(meta["features"]))
        scaler = Scaler.from_dict(data["scaler"]) if data.get("scaler") else None
        model = AdditiveModel(
            intercept=float(data["intercept"]),
            features=features,
            regionsets=regionsets_from_dict(data.get("regionsets", [])),
            shapes=[ShapeFunction.from_dict(item) for item in data.get("shapes", [])],
            pairs=[PairSurface.from_dict(item) for item in data.get("pairs", [])],
            order=int(meta.get("order", 1)),
            history=[float(v) for v in meta.get("history", [])],
            config=meta.get("config", {}),
        )
        blackbox = blackbox_from_dict(data["blackbox"], scaler) if data.get("blackbox") else None
    except (KeyError, TypeError, ValueError) as exc:
        raise StorageError(f"malformed model container: {exc}") from exc
    return ModelBundle(model, scaler, blackbox, meta)


def save_model(
    path: Path,
    model: AdditiveModel,
    scaler: Optional[Scaler] = None,
    blackbox: Optional[BlackBoxModel] = None,
    extra_meta: Optional[Dict[str, Any]] = None,
) -> Path:
    path = save_json(path, model_to_dict(model, scaler, blackbox, extra_meta))
    logger.info(f"[存储] 模型已保存: {path} ({len(model.shapes)} shapes, {len(model.pairs)} pairs)")
    return path


def load_model(path: Path) -> ModelBundle:
    bundle = model_from_dict(load_json(path))
    logger.info(f"[存储] 模型已加载: {path}")
    return bundle


def regionsets_to_dict(
    regionsets: Dict[int, RegionSet],
    features: Optional[Sequence[FeatureMeta]] = None,
    scaler: Optional[Scaler] = None,
) -> List[Dict[str, Any]]:
    return [regionsets[s].to_dict(features, scaler) for s in sorted(regionsets)]


def regionsets_from_dict(items: Sequence[Dict[str, Any]]) -> Dict[int, RegionSet]:
    found: Dict[int, RegionSet] = {}
    for item in items:
        rs = RegionSet.from_dict(item)
        found[rs.feature] = rs
    return found


def save_regionsets(
    path: Path,
    regionsets: Dict[int, RegionSet],
    features: Sequence[FeatureMeta],
    scaler: Optional[Scaler] = None,
) -> Path:
    data = {
        "format": "ramkit-regions",
        "features": features_to_dict(features),
        "scaler": scaler.to_dict() if scaler is not None else None,
        "regionsets": regionsets_to_dict(regionsets, features, scaler),
    }
    return save_json(path, data)


def load_regionsets(path: Path) -> Dict[int, RegionSet]:
    data = load_json(path)
    if isinstance(data, dict):
        data = data.get("regionsets", [])
    if not isinstance(data, list):
        raise StorageError(f"{path}: expected a list of region sets")
    try:
        return regionsets_from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise StorageError(f"malformed region sets in {path}: {exc}") from exc


def _safe_name(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "-_." else "_" for ch in name)


def write_tables(out_dir: Path, tables: Dict[str, pd.DataFrame], prefix: str = "") -> List[Path]:
    """每张表写成 <out_dir>/<prefix><name>.csv"""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, frame in tables.items():
            path = out_dir / f"{prefix}{_safe_name(name)}.csv"
            frame.to_csv(path, index=False)
            paths.append(path)
    except OSError as exc:
        logger.error(f"[存储] 写出表格失败 {out_dir}: {exc}")
        raise StorageError(f"cannot write tables to {out_dir}: {exc}") from exc
    logger.info(f"[存储] {len(paths)} tables written to {out_dir}")
    return paths
