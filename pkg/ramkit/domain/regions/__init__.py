"""子区域检测"""

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
    region_membership,
    trivial_regionset,
)
from .search import candidate_positions, detect_all, detect_subregions, evaluate_split, merge_regions

__all__ = [
    "CATEGORICAL_EQ",
    "FAIL",
    "NUMERIC_LE",
    "PASS",
    "Condition",
    "LevelSplit",
    "Region",
    "RegionSet",
    "SplitCandidate",
    "candidate_positions",
    "detect_all",
    "detect_subregions",
    "evaluate_split",
    "merge_regions",
    "region_membership",
    "trivial_regionset",
]
