import json
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
from loguru import logger

from .errors import InvalidConfig


def _project_root() -> Path:
    # ramkit/config_loader.py -> project_root
    return Path(__file__).resolve().parents[1]


THREADS_ENV = "RAMKIT_THREADS"

# 各阶段的种子偏移，保证只用一个 --seed 就能复现整条流水线
_STAGE_IDS = {"split": 0, "mlp": 1, "boosting": 2, "pairs": 3, "synth": 4}


@dataclass
class MLPConfig:
    """
    黑盒 MLP 的训练参数。

    深度与学习率取自 Bike Sharing 实验（6 个隐藏层，Adam，lr=0.001，60 epochs）；
    宽度、激活函数、batch 大小为自定默认值。
    """

    hidden_layers: List[int] = field(default_factory=lambda: [64] * 6)
    activation: str = "tanh"
    epochs: int = 60
    learning_rate: float = 0.001
    batch_size: int = 64
    seed: int = 0

    def validate(self) -> "MLPConfig":
        if not self.hidden_layers or any(int(h) <= 0 for h in self.hidden_layers):
            raise InvalidConfig(f"hidden_layers must be positive integers, got {self.hidden_layers}")
        if self.activation not in ("relu", "tanh"):
            raise InvalidConfig(f"activation must be relu or tanh, got {self.activation!r}")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise InvalidConfig("epochs and batch_size must be positive")
        if not 0.0 < self.learning_rate <= 1.0:
            raise InvalidConfig(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        return self


@dataclass
class BinConfig:
    k_init: int = 20
    min_points: int = 10

    def validate(self) -> "BinConfig":
        if self.k_init < 2 or self.min_points < 2:
            raise InvalidConfig("k_init and min_points must be >= 2")
        return self


@dataclass
class RegionConfig:
    """区域检测参数：数值特征的网格分成 P=10 段（11 个候选位置），最大深度 L=3，相对下降阈值 20%"""

    positions: int = 10
    max_depth: int = 3
    epsilon: float = 0.2
    min_region: Optional[int] = None  # None -> max(20, 1% N)
    merge: bool = True
    merge_tolerance: float = 0.05
    grid_margin: float = 0.05  # 数值候选与类别候选比较时的相对让步

    def validate(self) -> "RegionConfig":
        if self.positions < 2:
            raise InvalidConfig("positions must be >= 2")
        if self.max_depth < 0:
            raise InvalidConfig("max_depth must be >= 0")
        if not 0.0 < self.epsilon < 1.0:
            raise InvalidConfig(f"epsilon must be in (0, 1), got {self.epsilon}")
        if self.min_region is not None and self.min_region < 1:
            raise InvalidConfig("min_region must be positive")
        if self.merge_tolerance < 0:
            raise InvalidConfig("merge_tolerance must be >= 0")
        if self.grid_margin < 0:
            raise InvalidConfig("grid_margin must be >= 0")
        return self

    def resolve_min_region(self, n_rows: int) -> int:
        if self.min_region is not None:
            return int(self.min_region)
        return max(20, int(np.ceil(0.01 * n_rows)))


@dataclass
class BoostingConfig:
    rounds: int = 500
    learning_rate: float = 0.05
    max_leaves: int = 8
    max_bins: int = 256
    pair_rounds: int = 200
    max_pairs: int = 10
    pair_bins: int = 16
    min_region: Optional[int] = None
    seed: int = 0

    def validate(self) -> "BoostingConfig":
        if self.rounds < 0 or self.pair_rounds < 0:
            raise InvalidConfig("rounds must be >= 0")
        if not 0.0 < self.learning_rate <= 1.0:
            raise InvalidConfig(f"boosting learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.max_leaves < 2 or self.max_bins < 2 or self.pair_bins < 2:
            raise InvalidConfig("max_leaves, max_bins and pair_bins must be >= 2")
        if self.max_pairs < 0:
            raise InvalidConfig("max_pairs must be >= 0")
        return self

    def resolve_min_region(self, n_rows: int) -> int:
        if self.min_region is not None:
            return int(self.min_region)
        return max(20, int(np.ceil(0.01 * n_rows)))


@dataclass
class SplitConfig:
    test_fraction: float = 0.2


@dataclass
class RunConfig:
    """一次 CLI 运行的完整配置（执行前会完整打印）"""

    subcommand: str = ""
    data: Optional[str] = None
    target: Optional[str] = None
    categorical: List[str] = field(default_factory=list)
    seed: int = 0
    seeds: List[int] = field(default_factory=list)  # evaluate：多种子重复实验，空表示只用 seed
    threads: Optional[int] = None
    order: int = 1
    blackbox: str = "mlp"
    mlp: MLPConfig = field(default_factory=MLPConfig)
    bins: BinConfig = field(default_factory=BinConfig)
    regions: RegionConfig = field(default_factory=RegionConfig)
    boosting: BoostingConfig = field(default_factory=BoostingConfig)
    split: SplitConfig = field(default_factory=SplitConfig)
    outputs: Dict[str, Optional[str]] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def validate(self) -> "RunConfig":
        self.mlp.validate()
        self.bins.validate()
        self.regions.validate()
        self.boosting.validate()
        if self.order not in (1, 2):
            raise InvalidConfig(f"order must be 1 or 2, got {self.order}")
        if self.threads is not None and self.threads < 1:
            raise InvalidConfig("threads must be >= 1")
        if not 0.0 < self.split.test_fraction < 1.0:
            raise InvalidConfig("test_fraction must be in (0, 1)")
        if len(set(self.seeds)) != len(self.seeds):
            raise InvalidConfig(f"seeds must be distinct, got {self.seeds}")
        return self


def derive_seed(seed: int, stage: str) -> int:
    """从全局种子派生阶段种子"""
    stage_id = _STAGE_IDS[stage]
    return int(np.random.SeedSequence([int(seed), stage_id]).generate_state(1)[0])


def _run_config_path() -> Path:
    return _project_root() / "config" / "ramkit.json"


def _apply_section(default: Any, data: Dict[str, Any], section: str) -> Any:
    raw = data.get(section)
    if raw is None:
        return default
    if not isinstance(raw, dict):
        logger.warning(f"[配置] section {section!r} is not a JSON object, using defaults.")
        return default

    known = {f.name for f in fields(default)}
    updates: Dict[str, Any] = {}
    for key, value in raw.items():
        if key not in known:
            logger.warning(f"[配置] unknown key {section}.{key}, ignored.")
            continue
        updates[key] = value
    try:
        return replace(default, **updates).validate()
    except (InvalidConfig, TypeError, ValueError) as exc:
        logger.warning(f"[配置] invalid {section} config: {exc}, using defaults: {default}.")
        return default


def load_run_defaults(path: Optional[Path] = None) -> RunConfig:
    """
    Load stage defaults from config/ramkit.json.

    文件示例：
    {
      "mlp": {"hidden_layers": [64, 64, 64, 64, 64, 64], "epochs": 60},
      "regions": {"positions": 10, "max_depth": 3, "epsilon": 0.2},
      "boosting": {"rounds": 500, "learning_rate": 0.05}
    }

    缺失或格式错误时回退到 dataclass 默认值，不中断运行。
    """
    path = path or _run_config_path()
    default = RunConfig()

    if not path.exists():
        logger.debug(f"[配置] run config not found at {path}, using defaults.")
        return default

    try:
        with path.open("r", encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, dict):
            raise ValueError("run config file must be a JSON object")
    except Exception as exc:  # noqa: BLE001
        logger.error(f"[配置] Failed to load run config: {exc}, using defaults.")
        return default

    config = replace(
        default,
        mlp=_apply_section(default.mlp, data, "mlp"),
        bins=_apply_section(default.bins, data, "bins"),
        regions=_apply_section(default.regions, data, "regions"),
        boosting=_apply_section(default.boosting, data, "boosting"),
    )
    split_raw = data.get("split", {})
    if isinstance(split_raw, dict) and "test_fraction" in split_raw:
        try:
            config.split = SplitConfig(test_fraction=float(split_raw["test_fraction"]))
        except (TypeError, ValueError):
            logger.warning(f"[配置] invalid split.test_fraction={split_raw['test_fraction']!r}, using 0.2.")
    threads_raw = data.get("threads")
    if threads_raw is not None:
        config.threads = _coerce_threads(threads_raw, fallback=os.cpu_count() or 1)
    return config


def _coerce_threads(raw: Any, fallback: int) -> int:
    try:
        value = int(raw)
    except (TypeError, ValueError):
        logger.warning(f"[配置] invalid threads value {raw!r}, fallback to {fallback}.")
        return fallback
    if value < 1:
        logger.warning(f"[配置] threads must be >= 1, got {value}, fallback to {fallback}.")
        return fallback
    return value


def resolve_threads(cli_value: Optional[int], config_value: Optional[int] = None) -> int:
    """--threads > RAMKIT_THREADS > 配置文件 > CPU 核数"""
    cores = os.cpu_count() or 1
    if cli_value is not None:
        return _coerce_threads(cli_value, fallback=cores)
    env_value = os.getenv(THREADS_ENV)
    if env_value:
        return _coerce_threads(env_value, fallback=cores)
    if config_value is not None:
        return config_value
    return cores
