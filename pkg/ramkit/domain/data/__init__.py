"""数据模型：加载、划分、标准化"""
from .loader import apply_scaler, fit_scaler, invert_scaler, load_csv, train_test_split, write_csv
from .models import CATEGORICAL, NUMERIC, Dataset, FeatureMeta, Scaler

__all__ = [
    "CATEGORICAL",
    "NUMERIC",
    "Dataset",
    "FeatureMeta",
    "Scaler",
    "apply_scaler",
    "fit_scaler",
    "invert_scaler",
    "load_csv",
    "train_test_split",
    "write_csv",
]
