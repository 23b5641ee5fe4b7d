"""Reduction operators and saturating 4-byte integer arithmetic.

All property values live in the signed 32-bit domain.  "Infinity" is the
maximum representable value and is absorbing for Min and for saturating
addition, so an unreachable distance can never masquerade as a short path.
"""

from __future__ import annotations

import enum

INF = 2**31 - 1
INT_MIN = -(2**31)


def clamp(x: int) -> int:
    if x > INF:
        return INF
    if x < INT_MIN:
        return INT_MIN
    return x


def sat_add(a: int, b: int) -> int:
    """Saturating addition: INF + w stays INF, sums clamp at the domain edges."""
    return clamp(a + b)


def sat_sub(a: int, b: int) -> int:
    return clamp(a - b)


def sat_mul(a: int, b: int) -> int:
    return clamp(a * b)


class ReductionOp(enum.Enum):
    MIN = "Min"
    MAX = "Max"
    SUM = "Sum"

    @property
    def identity(self) -> int:
        if self is ReductionOp.MIN:
            return INF
        if self is ReductionOp.MAX:
            return INT_MIN
        return 0

    @property
    def monotonic(self) -> bool:
        """Min/Max are idempotent and order-directed; Sum is not."""
        return self is not ReductionOp.SUM

    def fold(self, a: int, b: int) -> int:
        if self is ReductionOp.MIN:
            return a if a <= b else b
        if self is ReductionOp.MAX:
            return a if a >= b else b
        return sat_add(a, b)

    def fold_many(self, values) -> int:
        acc = self.identity
        for v in values:
            acc = self.fold(acc, v)
        return acc


def op_from_name(name: str) -> ReductionOp:
    for op in ReductionOp:
        if op.value == name:
            return op
    raise ValueError(f"unknown reduction operator {name!r}")
