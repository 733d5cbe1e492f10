"""形状函数导出为表格"""

from typing import Dict, Optional

import numpy as np
import pandas as pd

from ..data.models import Scaler
from .models import AdditiveModel, Binning, PairSurface, ShapeFunction


def _describe(m: AdditiveModel, sh: ShapeFunction, scaler: Optional[Scaler]) -> str:
    rs = m.regionsets.get(sh.source)
    if rs is None:
        return sh.description
    return rs.describe(sh.region_index, m.features, scaler)


def _axis_frame(binning: Binning, meta, prefix: str, scaler: Optional[Scaler]) -> pd.DataFrame:
    if binning.categorical:
        cats = list(meta.categories)[: binning.n_bins]
        if binning.lookup.size:
            cats = [
                "|".join(c for c, cell in zip(meta.categories, binning.lookup) if cell == j)
                for j in range(binning.n_bins)
            ]
        return pd.DataFrame({f"{prefix}category": cats})
    edges = binning.edges
    lower, upper = edges[:-1], edges[1:]
    frame = pd.DataFrame({f"{prefix}lower": lower, f"{prefix}upper": upper})
    if scaler is not None:
        frame[f"{prefix}lower_original"] = [scaler.value_to_original(meta.index, v) for v in lower]
        frame[f"{prefix}upper_original"] = [scaler.value_to_original(meta.index, v) for v in upper]
    return frame


def shape_frame(m: AdditiveModel, sh: ShapeFunction, scaler: Optional[Scaler] = None) -> pd.DataFrame:
    meta = m.features[sh.source]
    frame = _axis_frame(sh.binning, meta, "", scaler)
    frame["value"] = sh.values
    frame["level"] = sh.offset
    frame["region"] = _describe(m, sh, scaler)
    return frame


def pair_frame(m: AdditiveModel, pair: PairSurface, scaler: Optional[Scaler] = None) -> pd.DataFrame:
    meta_a = m.features[pair.first[0]]
    meta_b = m.features[pair.second[0]]
    fa = _axis_frame(pair.binning_a, meta_a, "a_", scaler)
    fb = _axis_frame(pair.binning_b, meta_b, "b_", scaler)
    grid = fa.loc[np.repeat(np.arange(len(fa)), len(fb))].reset_index(drop=True)
    tiled = fb.loc[np.tile(np.arange(len(fb)), len(fa))].reset_index(drop=True)
    frame = pd.concat([grid, tiled], axis=1)
    frame["value"] = pair.values.reshape(-1)
    frame["level"] = pair.offset
    return frame


def export_shapes(m: AdditiveModel, scaler: Optional[Scaler] = None) -> Dict[str, pd.DataFrame]:
    """
    每个分量一张表（分段区间或类别、形状值、区域描述），成对曲面导出为网格表。

    键为分量名，例如 ``x2_1``、``hr_3``；成对项为 ``pair_<a>_x_<b>``。
    """
    tables: Dict[str, pd.DataFrame] = {}
    for sh in m.shapes:
        tables[sh.name] = shape_frame(m, sh, scaler)
    for pair in m.pairs:
        a, b = pair.name.split(" x ")
        tables[f"pair_{a}_x_{b}"] = pair_frame(m, pair, scaler)
    return tables
