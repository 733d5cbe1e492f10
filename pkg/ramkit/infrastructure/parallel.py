"""并行执行工具（joblib 线程池）"""

from typing import Callable, Iterable, List, TypeVar

from joblib import Parallel, delayed

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Iterable[T], threads: int = 1) -> List[R]:
    """
    按输入顺序返回 func(item) 的结果；线程后端，worker 共享只读的数据集与 Jacobian。
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    return Parallel(n_jobs=min(threads, len(items)), prefer="threads")(
        delayed(func)(item) for item in items
    )
