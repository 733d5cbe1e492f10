"""日志配置模块"""

import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger

_FORMAT = "{time:YYYY-MM-DD HH:mm:ss.SSS} | {level: <8} | {name}:{function}:{line} | {message}"


def setup_logging(level: str = "INFO", log_dir: Optional[Union[str, Path]] = None) -> None:
    """
    配置日志系统。

    - 始终输出到 stderr（stdout 留给表格/配置等结果输出）
    - 指定 log_dir 时额外写入按日轮转的运行日志和错误日志
    """
    logger.remove()
    logger.add(sys.stderr, level=level.upper(), format=_FORMAT)

    if log_dir is None:
        return

    logs_dir = Path(log_dir)
    logs_dir.mkdir(parents=True, exist_ok=True)

    # 运行日志：每天午夜轮转，保留30天，压缩旧日志
    logger.add(
        logs_dir / "ramkit_{time:YYYY-MM-DD}.log",
        rotation="00:00",
        retention="30 days",
        compression="zip",
        encoding="utf-8",
        level="DEBUG",
        format=_FORMAT,
        enqueue=True,
    )

    # 错误日志：只记录 ERROR 及以上级别，保留更久
    logger.add(
        logs_dir / "error_{time:YYYY-MM-DD}.log",
        rotation="00:00",
        retention="90 days",
        compression="zip",
        encoding="utf-8",
        level="ERROR",
        format=_FORMAT,
        enqueue=True,
    )

    logger.info(f"日志系统已配置，日志文件保存在 {logs_dir} 目录")
