"""
pluriflow 异常层级。

CLI 根据异常类型映射退出码：参数/前置条件错误为 2，数值失败为 3。
"""

from __future__ import annotations


class PluriflowError(Exception):
    """所有 pluriflow 异常的基类。"""


class DimensionError(PluriflowError, ValueError):
    """维数不匹配（多重指标长度、点的坐标个数等）。"""


class PreconditionError(PluriflowError, ValueError):
    """输入违反操作的前置条件。"""


class NumericFailure(PluriflowError, RuntimeError):
    """数值求解失败。"""


class UnboundedProblemError(NumericFailure):
    """线性规划无界：样本集落在某个基多项式的零点集中。"""

    def __init__(self, message: str, *, direction=None, sampled_norm: float | None = None) -> None:
        super().__init__(message)
        self.direction = direction
        self.sampled_norm = sampled_norm


__all__ = [
    "PluriflowError",
    "DimensionError",
    "PreconditionError",
    "NumericFailure",
    "UnboundedProblemError",
]
