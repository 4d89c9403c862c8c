"""Polynomial envelopes and double-exponential bounding sequences.

The sharpness recursion is sandwiched between two simpler recursions whose
linear-in-theta coefficients are then bounded by sequences of the form
``d_k = (1 + eps) 2^(t k - a) d_{k-1}^2``. Those grow like ``2^(c 2^k)``,
far beyond double range, so they are handled as base-2 logarithms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import total_ordering

from ._stable import ScaledComplement
from .errors import DomainError
from .strategy import QUARTER_PI, UNREACHABLE, Sharpness


@total_ordering
@dataclass(frozen=True)
class Log2Scalar:
    """A positive number stored as its base-2 logarithm."""

    log2_value: float

    @classmethod
    def of(cls, value: float) -> "Log2Scalar":
        if not value > 0:
            raise DomainError(f"Log2Scalar needs a positive value, got {value!r}")
        return cls(math.log2(value))

    @property
    def value(self) -> float:
        try:
            return 2.0**self.log2_value
        except OverflowError:
            return math.inf

    def __mul__(self, other: "Log2Scalar") -> "Log2Scalar":
        return Log2Scalar(self.log2_value + other.log2_value)

    def __pow__(self, p: float) -> "Log2Scalar":
        return Log2Scalar(self.log2_value * p)

    def __lt__(self, other: "Log2Scalar") -> bool:
        return self.log2_value < other.log2_value


def _log2_add(a: float, b: float) -> float:
    # log2(2^a + 2^b)
    hi, lo = max(a, b), min(a, b)
    if lo == -math.inf:
        return hi
    return hi + math.log1p(2.0 ** (lo - hi)) / math.log(2.0)


def _polynomial_recursion(theta, epsilon, n, *, lead_power, first, divisor, lambda1=1.0):
    # p_k = (1+eps) 2^(k + lead_power) (1 - (1 - theta^2/divisor) prod_{j<k}(1 - p_j^2/divisor)) / (sqrt(l1) theta)
    # computed while every earlier entry lies in (0, 1); later entries are UNREACHABLE.
    root1 = math.sqrt(lambda1)
    acc = ScaledComplement()
    acc.add(theta * theta / divisor, theta / divisor)
    out: list[Sharpness] = []
    prev_ok = True
    for k in range(1, n + 1):
        if not prev_ok:
            out.append(UNREACHABLE)
            continue
        if k == 1:
            p = first
        else:
            p = (1.0 + epsilon) * 2.0 ** (k + lead_power) * acc.value / root1
        out.append(p)
        prev_ok = 0.0 < p < 1.0
        if prev_ok:
            acc.add(p * p / divisor, p * (p / theta) / divisor)
    return out


def lemma2_upper_seq(theta: float, epsilon: float, lambda1: float, n: int) -> list[Sharpness]:
    """Upper bounding sequence p_k >= gamma_k used to show gamma_n -> 0.

    p_1 = (1 + eps) theta / sqrt(lambda1); later terms follow the polynomial
    recursion with factor 2^k and are ``UNREACHABLE`` once a predecessor
    leaves (0, 1). A term may itself be >= 1.
    """
    _check_args(theta, epsilon, n)
    if not 0.0 < lambda1 <= 1.0:
        raise DomainError(f"lambda1 must lie in (0, 1], got {lambda1!r}")
    first = (1.0 + epsilon) * theta / math.sqrt(lambda1)
    return _polynomial_recursion(theta, epsilon, n, lead_power=0, first=first, divisor=2.0, lambda1=lambda1)


def _check_args(theta, epsilon, n):
    if not 0.0 < theta <= QUARTER_PI * (1 + 1e-15):
        raise DomainError(f"theta must lie in (0, pi/4], got {theta!r}")
    if not epsilon >= 0.0:
        raise DomainError(f"epsilon must be non-negative, got {epsilon!r}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n!r}")


@dataclass(frozen=True)
class EnvelopePair:
    lower: tuple[Sharpness, ...]
    upper: tuple[Sharpness, ...]
    theta: float
    epsilon: float

    def valid(self, k: int) -> bool:
        """True when the sandwich lower <= gamma_k <= upper is guaranteed at 1-based ``k``."""
        return all(
            u is not UNREACHABLE and u < 1.0 for u in self.upper[: k - 1]
        ) and self.upper[k - 1] is not UNREACHABLE


def envelopes(theta: float, epsilon: float, n: int) -> EnvelopePair:
    """Lower and upper polynomial envelopes of the sharpness sequence (lambda1 = 1).

    Both are truncated (``UNREACHABLE``) after the first position where the
    upper envelope leaves (0, 1), which is where the sandwich stops holding.
    """
    _check_args(theta, epsilon, n)
    upper = _polynomial_recursion(theta, epsilon, n, lead_power=0, first=(1.0 + epsilon) * theta, divisor=2.0)
    lower = _polynomial_recursion(theta, epsilon, n, lead_power=-1, first=(1.0 + epsilon) * theta / 4, divisor=4.0)
    for i, u in enumerate(upper):
        if u is UNREACHABLE:
            lower[i] = UNREACHABLE
    return EnvelopePair(tuple(lower), tuple(upper), theta, epsilon)


def coeff_sequences(epsilon: float, n: int) -> tuple[list[Log2Scalar], list[Log2Scalar]]:
    """Coefficients of theta in the lower and upper envelopes, as log2 values.

    c_up_k = (1+eps) 2^(k-1) (1 + sum_{j<k} c_up_j^2), c_up_1 = 1+eps
    c_lo_k = (1+eps) 2^(k-3) (1 + sum_{j<k} c_lo_j^2), c_lo_1 = (1+eps)/4
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n!r}")
    log_eps = math.log2(1.0 + epsilon)
    result = []
    for shift, base in ((-3, log_eps - 2.0), (-1, log_eps)):
        seq = [base]
        # log2(1 + sum of squares so far)
        log_sum = _log2_add(0.0, 2 * base)
        for k in range(2, n + 1):
            value = log_eps + (k + shift) + log_sum
            seq.append(value)
            log_sum = _log2_add(log_sum, 2 * value)
        result.append([Log2Scalar(v) for v in seq])
    return result[0], result[1]


def d_sequences(epsilon: float, n: int) -> tuple[list[Log2Scalar | None], list[Log2Scalar]]:
    """Double-exponential bounding sequences by recursion, indexed k = 1..n.

    d_lo starts at d_lo_4 = 4 and is ``None`` for k < 4; d_up starts at
    d_up_1 = 1 + eps.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n!r}")
    log_eps = math.log2(1.0 + epsilon)
    lower: list[Log2Scalar | None] = []
    upper: list[Log2Scalar] = []
    lo = up = None
    for k in range(1, n + 1):
        up = log_eps if k == 1 else log_eps + (2 * k - 1) + 2 * up
        upper.append(Log2Scalar(up))
        if k < 4:
            lower.append(None)
            continue
        lo = 2.0 if k == 4 else log_eps + (k - 3) + 2 * lo
        lower.append(Log2Scalar(lo))
    return lower, upper


def d_lower_closed(epsilon: float, k: int) -> Log2Scalar:
    """(1+eps)^(2^(k-4) - 1) 2^(5 2^(k-4) - k + 1) for k >= 4."""
    if k < 4:
        raise DomainError(f"lower sequence starts at k = 4, got {k}")
    p = 2.0 ** (k - 4)
    return Log2Scalar((p - 1) * math.log2(1.0 + epsilon) + 5 * p - k + 1)


def d_upper_closed(epsilon: float, k: int) -> Log2Scalar:
    """(1+eps)^(2^k - 1) 2^(5 2^(k-1) - 2k - 3) for k >= 1."""
    if k < 1:
        raise DomainError(f"upper sequence starts at k = 1, got {k}")
    return Log2Scalar((2.0**k - 1) * math.log2(1.0 + epsilon) + 5 * 2.0 ** (k - 1) - 2 * k - 3)


def d_closed_forms(epsilon: float, k: int) -> tuple[Log2Scalar | None, Log2Scalar]:
    lower = d_lower_closed(epsilon, k) if k >= 4 else None
    return lower, d_upper_closed(epsilon, k)


def bk_closed_form(k: int, k0: int, b_k0: float, t: float, c: float) -> float:
    """Solution of b_k = 2 b_{k-1} + t k + c started from b_{k0}."""
    if k < k0:
        raise DomainError(f"k = {k} precedes the base index {k0}")
    return 2.0 ** (k - k0) * (b_k0 + (2 + k0) * t + c) - (k + 2) * t - c


def bk_iterate(k: int, k0: int, b_k0: float, t: float, c: float) -> float:
    if k < k0:
        raise DomainError(f"k = {k} precedes the base index {k0}")
    b = b_k0
    for j in range(k0 + 1, k + 1):
        b = 2 * b + t * j + c
    return b
