"""Signed extended-range reals stored as (sign, natural log of magnitude).

Every large constant in the models (exp(pi*a/eps), eps**(-2k-1), (2k)!) is
carried as an :class:`XReal`; ordinary floats overflow long before the
interesting regime eps <= 1e-4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

# relative size below which a difference is treated as exact cancellation
CANCEL_RTOL = 1e-14
# largest logmag for which a decimal rendering is emitted
DECIMAL_LOGMAG_LIMIT = 700.0

Number = Union["XReal", float, int]


@dataclass(frozen=True, order=False)
class XReal:
    """A real number ``sign * exp(logmag)``.

    ``sign`` is one of -1, 0, +1. For zero the logmag is normalised to -inf
    so that equality of zeros is structural.
    """

    sign: int
    logmag: float = 0.0

    def __post_init__(self):
        if self.sign not in (-1, 0, 1):
            raise ValueError(f"sign must be -1, 0 or 1, got {self.sign!r}")
        if math.isnan(self.logmag):
            raise ValueError("logmag is NaN")
        if self.sign == 0 or self.logmag == -math.inf:
            object.__setattr__(self, "sign", 0)
            object.__setattr__(self, "logmag", -math.inf)
        elif self.logmag == math.inf:
            raise ValueError("infinite magnitude is not representable")

    # construction -----------------------------------------------------

    @classmethod
    def zero(cls) -> XReal:
        return cls(0, -math.inf)

    @classmethod
    def one(cls) -> XReal:
        return cls(1, 0.0)

    @classmethod
    def from_log(cls, logmag: float, sign: int = 1) -> XReal:
        return cls(sign, logmag)

    @classmethod
    def from_float(cls, x: float) -> XReal:
        if isinstance(x, XReal):
            return x
        x = float(x)
        if math.isnan(x) or math.isinf(x):
            raise ValueError(f"cannot represent {x!r}")
        if x == 0.0:
            return cls.zero()
        return cls(1 if x > 0 else -1, math.log(abs(x)))

    # conversion -------------------------------------------------------

    def __float__(self) -> float:
        if self.sign == 0:
            return 0.0
        if self.logmag > 709.782712893384:
            return self.sign * math.inf
        return self.sign * math.exp(self.logmag)

    def decimal(self) -> float | None:
        """Plain float value, or None when it would overflow or underflow a double."""
        if self.sign != 0 and abs(self.logmag) >= DECIMAL_LOGMAG_LIMIT:
            return None
        return float(self)

    def __str__(self) -> str:
        if self.sign == 0:
            return "0"
        return f"{'+' if self.sign > 0 else '-'}exp({self.logmag!r})"

    def is_zero(self) -> bool:
        return self.sign == 0

    # arithmetic -------------------------------------------------------

    def __neg__(self) -> XReal:
        return XReal(-self.sign, self.logmag)

    def __abs__(self) -> XReal:
        return XReal(abs(self.sign), self.logmag)

    def __add__(self, other: Number) -> XReal:
        return xr_add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other: Number) -> XReal:
        return xr_add(self, -_coerce(other))

    def __rsub__(self, other: Number) -> XReal:
        return xr_add(_coerce(other), -self)

    def __mul__(self, other: Number) -> XReal:
        return xr_mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> XReal:
        return xr_div(self, _coerce(other))

    def __rtruediv__(self, other: Number) -> XReal:
        return xr_div(_coerce(other), self)

    def __pow__(self, n: int) -> XReal:
        return xr_pow(self, n)

    def sqrt(self) -> XReal:
        if self.sign < 0:
            raise ValueError("square root of a negative XReal")
        return XReal(self.sign, 0.5 * self.logmag)

    # ordering ---------------------------------------------------------

    def _key(self):
        if self.sign == 0:
            return (0, 0.0)
        return (self.sign, self.sign * self.logmag)

    def __lt__(self, other: Number) -> bool:
        return self._key() < _coerce(other)._key()

    def __le__(self, other: Number) -> bool:
        return self._key() <= _coerce(other)._key()

    def __gt__(self, other: Number) -> bool:
        return self._key() > _coerce(other)._key()

    def __ge__(self, other: Number) -> bool:
        return self._key() >= _coerce(other)._key()


def _coerce(x: Number) -> XReal:
    if isinstance(x, XReal):
        return x
    return XReal.from_float(x)


def xr_add(x: XReal, y: XReal) -> XReal:
    if x.sign == 0:
        return y
    if y.sign == 0:
        return x
    if x.logmag >= y.logmag:
        hi, lo = x, y
    else:
        hi, lo = y, x
    d = hi.logmag - lo.logmag
    if hi.sign == lo.sign:
        return XReal(hi.sign, hi.logmag + math.log1p(math.exp(-d)))
    # opposite signs: |hi| - |lo| = |hi| * (1 - e^-d)
    rel = -math.expm1(-d)
    if rel < CANCEL_RTOL:
        return XReal.zero()
    return XReal(hi.sign, hi.logmag + math.log(rel))


def xr_mul(x: XReal, y: XReal) -> XReal:
    if x.sign == 0 or y.sign == 0:
        return XReal.zero()
    return XReal(x.sign * y.sign, x.logmag + y.logmag)


def xr_div(x: XReal, y: XReal) -> XReal:
    if y.sign == 0:
        raise ZeroDivisionError("XReal division by zero")
    if x.sign == 0:
        return XReal.zero()
    return XReal(x.sign * y.sign, x.logmag - y.logmag)


def xr_pow(x: XReal, n: int) -> XReal:
    if int(n) != n:
        raise TypeError("only integer powers are supported")
    n = int(n)
    if n == 0:
        return XReal.one()
    if x.sign == 0:
        if n < 0:
            raise ZeroDivisionError("zero to a negative power")
        return XReal.zero()
    sign = x.sign if n % 2 else 1
    return XReal(sign, n * x.logmag)


def xr_sum(values) -> XReal:
    """Sum an iterable of XReal anchored at the largest magnitude.

    Same-sign sums are accumulated as one log-sum-exp, which avoids the
    rounding drift of repeated pairwise :func:`xr_add`.
    """
    vals = [v for v in values if v.sign != 0]
    if not vals:
        return XReal.zero()
    m = max(v.logmag for v in vals)
    pos = sum(math.exp(v.logmag - m) for v in vals if v.sign > 0)
    neg = sum(math.exp(v.logmag - m) for v in vals if v.sign < 0)
    if neg == 0.0:
        return XReal(1, m + math.log(pos))
    if pos == 0.0:
        return XReal(-1, m + math.log(neg))
    return xr_add(XReal(1, m + math.log(pos)), XReal(-1, m + math.log(neg)))


def logsumexp(logs) -> float:
    """log(sum(exp(l))) for an iterable of floats; -inf for an empty sum."""
    logs = [v for v in logs if v != -math.inf]
    if not logs:
        return -math.inf
    m = max(logs)
    return m + math.log(math.fsum(math.exp(v - m) for v in logs))


def log_factorial(n: int) -> float:
    """Natural log of ``n!``; exact integer product up to 20, lgamma beyond."""
    if n < 0 or int(n) != n:
        raise ValueError(f"log_factorial needs a nonnegative integer, got {n!r}")
    n = int(n)
    if n <= 20:
        return math.log(math.factorial(n))
    return math.lgamma(n + 1.0)
