"""Scalar special functions shared by every kernel evaluator.

Kernel entries and determinants are carried as (sign, ln|value|) pairs so
that assembly stays finite for spectra with hundreds of eigenvalues, where
elementary symmetric polynomials overflow any linear floating-point format.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

NEG_INF = float("-inf")

# m! is an exact integer here, so log(m!) is correctly rounded.
_LOG_FACTORIAL_TABLE = tuple(math.log(math.factorial(m)) if m > 1 else 0.0 for m in range(21))

_BESSEL_MAX_ORDER = 200
_BESSEL_RELATIVE_CUTOFF = 1e-17
_BESSEL_MAX_TERMS = 500


@dataclass(frozen=True, slots=True)
class LogSignedValue:
    """A real number stored as (sign, ln|value|).

    ``sign == 0`` encodes exactly zero; ``log_abs`` is then pinned to -inf
    and never read.  Addition resolves signs through log-sum-exp, so the
    representation is closed under + and *.
    """

    sign: int
    log_abs: float

    @staticmethod
    def zero() -> "LogSignedValue":
        return LogSignedValue(0, NEG_INF)

    @staticmethod
    def one() -> "LogSignedValue":
        return LogSignedValue(1, 0.0)

    @staticmethod
    def from_float(x: float) -> "LogSignedValue":
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"cannot represent non-finite value {x!r}")
        if x == 0.0:
            return LogSignedValue.zero()
        return LogSignedValue(1 if x > 0 else -1, math.log(abs(x)))

    @staticmethod
    def from_log(sign: int, log_abs: float) -> "LogSignedValue":
        if sign == 0 or log_abs == NEG_INF:
            return LogSignedValue.zero()
        if sign not in (-1, 1):
            raise ValueError(f"sign must be -1, 0 or +1, got {sign}")
        return LogSignedValue(sign, float(log_abs))

    @property
    def is_zero(self) -> bool:
        return self.sign == 0

    def to_float(self) -> float:
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.log_abs)

    def __neg__(self) -> "LogSignedValue":
        return LogSignedValue(-self.sign, self.log_abs)

    def __mul__(self, other: "LogSignedValue") -> "LogSignedValue":
        s = self.sign * other.sign
        if s == 0:
            return LogSignedValue.zero()
        return LogSignedValue(s, self.log_abs + other.log_abs)

    def __truediv__(self, other: "LogSignedValue") -> "LogSignedValue":
        if other.sign == 0:
            raise ZeroDivisionError("division by exact zero LogSignedValue")
        if self.sign == 0:
            return LogSignedValue.zero()
        return LogSignedValue(self.sign * other.sign, self.log_abs - other.log_abs)

    def __add__(self, other: "LogSignedValue") -> "LogSignedValue":
        if self.sign == 0:
            return other
        if other.sign == 0:
            return self
        if self.log_abs >= other.log_abs:
            big, small = self, other
        else:
            big, small = other, self
        d = small.log_abs - big.log_abs  # in (-inf, 0]
        if big.sign == small.sign:
            return LogSignedValue(big.sign, big.log_abs + math.log1p(math.exp(d)))
        if d == 0.0:
            return LogSignedValue.zero()  # exact cancellation
        return LogSignedValue(big.sign, big.log_abs + math.log1p(-math.exp(d)))

    def __sub__(self, other: "LogSignedValue") -> "LogSignedValue":
        return self + (-other)


def log_factorial(m: int) -> float:
    """ln(m!), exact-product based for m <= 20, log-gamma beyond."""
    if m != int(m) or m < 0:
        raise ValueError(f"log_factorial requires a non-negative integer, got {m!r}")
    m = int(m)
    if m <= 20:
        return _LOG_FACTORIAL_TABLE[m]
    return math.lgamma(m + 1.0)


def heaviside(x: int) -> int:
    """Step function with the boundary convention Theta(0) = 1.

    The exact kernels need the boundary index term to survive; the p = 1
    closed forms only come out right with this choice.
    """
    return 1 if x >= 0 else 0


def bessel_i(order: int, x: float) -> float:
    """Modified Bessel function of the first kind, integer order.

    Ascending power series sum_{m>=0} (x/2)^(2m+|order|) / (m! (m+|order|)!),
    truncated once a term drops below 1e-17 of the partial sum.  Negative
    orders reduce to I_{-m} = I_m on the same code path.
    """
    if x < 0:
        raise ValueError(f"bessel_i requires x >= 0, got {x}")
    m = abs(int(order))
    if m != abs(order):
        raise ValueError(f"bessel_i requires an integer order, got {order!r}")
    if m > _BESSEL_MAX_ORDER:
        raise ValueError(f"bessel_i supports |order| <= {_BESSEL_MAX_ORDER}, got {order}")
    if x == 0.0:
        return 1.0 if m == 0 else 0.0
    q = 0.25 * x * x
    term = math.exp(m * math.log(0.5 * x) - log_factorial(m))
    total = term
    k = 1
    while k < _BESSEL_MAX_TERMS:
        term *= q / (k * (k + m))
        total += term
        if term < _BESSEL_RELATIVE_CUTOFF * total:
            break
        k += 1
    return total


def log_bessel_i(order: int, x: float) -> float:
    """ln I_|order|(x) for x >= 0; -inf where the function is exactly zero.

    Same ascending series as :func:`bessel_i` but in scaled form
    I_m(x) = (x/2)^m / m! * S(x), S >= 1, so tiny values near x = 0 keep
    full relative precision instead of underflowing.
    """
    if x < 0:
        raise ValueError(f"log_bessel_i requires x >= 0, got {x}")
    m = abs(int(order))
    if m > _BESSEL_MAX_ORDER:
        raise ValueError(f"log_bessel_i supports |order| <= {_BESSEL_MAX_ORDER}, got {order}")
    if x == 0.0:
        return 0.0 if m == 0 else NEG_INF
    q = 0.25 * x * x
    term = 1.0
    total = 1.0
    k = 1
    while k < _BESSEL_MAX_TERMS:
        term *= q / (k * (k + m))
        total += term
        if term < _BESSEL_RELATIVE_CUTOFF * total:
            break
        k += 1
    return m * math.log(0.5 * x) - log_factorial(m) + math.log(total)
