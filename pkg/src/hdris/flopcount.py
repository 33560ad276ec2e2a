"""Complex multiply-accumulate (MAC) accounting for dense linear-algebra kernels.

Cost model: multiplying an (a x b) matrix by a (b x c) matrix is a*b*c complex
MACs.  Decompositions (eigen/SVD of the small Gram matrices) are not charged;
only the instrumented matrix products contribute, which is what the analytic
complexity expressions count as well.
"""

from __future__ import annotations

import numpy as np

__all__ = ["FlopCounter", "counted_matmul"]


class FlopCounter:
    """Accumulates complex-MAC counts across instrumented kernel calls."""

    __slots__ = ("macs",)

    def __init__(self) -> None:
        self.macs = 0

    def add(self, n: int) -> None:
        self.macs += int(n)

    def reset(self) -> None:
        self.macs = 0

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"FlopCounter(macs={self.macs})"


def counted_matmul(a: np.ndarray, b: np.ndarray, counter: FlopCounter | None = None) -> np.ndarray:
    """Matrix product a @ b, charging a.shape[0]*a.shape[1]*b.shape[1] MACs.

    Both operands must be 2-D.  When ``counter`` is None the product is
    computed without accounting.
    """
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError("counted_matmul expects 2-D operands, got %s and %s" % (a.shape, b.shape))
    if a.shape[1] != b.shape[0]:
        raise ValueError("inner dimensions do not match: %s @ %s" % (a.shape, b.shape))
    if counter is not None:
        counter.add(a.shape[0] * a.shape[1] * b.shape[1])
    return a @ b
