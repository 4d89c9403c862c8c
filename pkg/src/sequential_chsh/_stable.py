"""Cancellation-free evaluation of 1 - prod(1 - x_j), divided by a scale.

The sharpness recursion needs ``(1 - prod_j (1 - x_j)) / s`` where every
``x_j`` is of order ``s**2``. For s below ~1e-154 the ``x_j`` underflow, so
callers pass both ``x_j`` and the representable ratio ``x_j / s``.
"""

from __future__ import annotations

import math


def _neg_log1p_ratio(x: float) -> float:
    # -log1p(-x) / x, continuous at x = 0
    if x == 0.0:
        return 1.0
    return -math.log1p(-x) / x


def _expm1_ratio(t: float) -> float:
    # expm1(t) / t, continuous at t = 0
    if t == 0.0:
        return 1.0
    return math.expm1(t) / t


class ScaledComplement:
    """Running value of ``(1 - prod(1 - x_j)) / s`` for x_j in [0, 1)."""

    __slots__ = ("log_prod", "neg_log_over_s")

    def __init__(self):
        self.log_prod = 0.0  # sum log1p(-x_j), <= 0
        self.neg_log_over_s = 0.0  # -log_prod / s, kept without underflow

    def add(self, x: float, x_over_s: float) -> None:
        if not 0.0 <= x < 1.0:
            raise ValueError(f"factor 1 - x must lie in (0, 1], got x = {x!r}")
        self.log_prod += math.log1p(-x)
        self.neg_log_over_s += x_over_s * _neg_log1p_ratio(x)

    @property
    def value(self) -> float:
        return _expm1_ratio(self.log_prod) * self.neg_log_over_s


def half_deficit(gamma: float) -> float:
    """(1 - sqrt(1 - g^2)) / 2 computed as g^2 / (2 (1 + sqrt(1 - g^2)))."""
    return gamma * gamma / (2.0 * (1.0 + math.sqrt(1.0 - gamma * gamma)))
