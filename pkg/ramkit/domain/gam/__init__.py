"""区域可加模型（RAM / RA²M），T_s 全为 1 时即 GAM / GA²M"""

from .boosting import build_extended_space, complete_regionsets, fit_gam, select_pairs
from .export import export_shapes, pair_frame, shape_frame
from .models import (
    AdditiveModel,
    Binning,
    ExtendedFeature,
    PairSurface,
    ShapeFunction,
    make_binning,
    predict_ram,
)

__all__ = [
    "AdditiveModel",
    "Binning",
    "ExtendedFeature",
    "PairSurface",
    "ShapeFunction",
    "build_extended_space",
    "complete_regionsets",
    "export_shapes",
    "fit_gam",
    "make_binning",
    "pair_frame",
    "predict_ram",
    "select_pairs",
    "shape_frame",
]
