"""异常定义

所有领域异常都继承自 RamkitError，CLI 只捕获这一个根类型并输出单行诊断。
"""

from typing import Optional


class RamkitError(Exception):
    """ramkit 根异常"""


# ---- 数据 ----

class TargetNotFound(RamkitError):
    def __init__(self, target: str, columns: Optional[list] = None):
        self.target = target
        self.columns = list(columns or [])
        super().__init__(f"target column {target!r} not found (columns: {', '.join(self.columns)})")


class UnknownColumn(RamkitError):
    def __init__(self, column: str, columns: Optional[list] = None):
        self.column = column
        self.columns = list(columns or [])
        super().__init__(f"unknown categorical column {column!r} (features: {', '.join(self.columns)})")


class UnreadableData(RamkitError):
    """文件不是 UTF-8 或不是合法的 CSV"""


class UnparseableCell(RamkitError):
    def __init__(self, column: str, row: int, value: str):
        self.column = column
        self.row = row
        self.value = value
        super().__init__(f"cannot parse value {value!r} in column {column!r} (row {row})")


class EmptyDataset(RamkitError):
    pass


class ConstantTarget(RamkitError):
    pass


class ConstantColumn(RamkitError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"numeric column {column!r} is constant, cannot standardize")


class InvalidFraction(RamkitError):
    pass


# ---- 数值 ----

class ArityMismatch(RamkitError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected {expected} columns, got {got}")


class LengthMismatch(RamkitError):
    pass


class TrainingDiverged(RamkitError):
    def __init__(self, epoch: int, loss: float):
        self.epoch = epoch
        self.loss = loss
        super().__init__(f"non-finite training loss {loss} at epoch {epoch}")


class EmptyRegion(RamkitError):
    pass


class PartitionError(RamkitError):
    pass


class NonFiniteResiduals(RamkitError):
    pass


class InvalidConfig(RamkitError):
    pass


class StageError(RamkitError):
    """包装某个流水线阶段的异常，保留阶段名"""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


class InsufficientData(RamkitError):
    pass


class StorageError(RamkitError):
    """模型容器或导出文件读写失败"""
