"""DALE 效应、箱偏差与异质性"""
from .bins import BinPartition, bin_stats, build_bins, stats_from_index
from .curves import (
    EffectCurve,
    HeterogeneityReport,
    curve_frame,
    dale_curve,
    heterogeneity,
    regional_curve,
    regional_heterogeneity,
)

__all__ = [
    "BinPartition",
    "EffectCurve",
    "HeterogeneityReport",
    "bin_stats",
    "build_bins",
    "curve_frame",
    "dale_curve",
    "heterogeneity",
    "regional_curve",
    "regional_heterogeneity",
    "stats_from_index",
]
