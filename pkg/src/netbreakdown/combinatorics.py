"""
Exact and log-space combinatorial kernels.

Generalised binomial and multinomial coefficients whose arguments may be
half-integers. A coefficient with any argument outside the non-negative
integers evaluates to zero (indicator semantics), so parity conditions in
the breakdown bound vanish exactly instead of through rounding.

Two evaluation modes are supported throughout the package:

- ``'exact'``: values are `fractions.Fraction` (arbitrary precision).
- ``'log'``: values are `LogScalar` (sign and natural log of magnitude),
  stable for the very large factorials that appear for n ~ 1000.
"""

import math
import threading
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import logsumexp

logger = logging.getLogger(__name__)

EXACT = 'exact'
LOG = 'log'
MODES = (EXACT, LOG)

LN2 = math.log(2.0)


def check_mode(mode):
    """ Raise ValueError for an unknown evaluation mode. """
    if mode not in MODES:
        raise ValueError(f'Unknown mode {mode!r}, expected one of {MODES}')
    return mode


@dataclass(frozen=True, order=True)
class HalfInt:
    """
    Integer or half-integer stored as twice its value.

    Parameters
    ----------
    doubled : int
        The represented value multiplied by 2, e.g. ``HalfInt(5)`` is 5/2.
    """
    doubled: int

    @classmethod
    def of(cls, value):
        """ Convert an int, Fraction or HalfInt without rounding. """
        if isinstance(value, HalfInt):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(2 * int(value))
        if isinstance(value, Fraction) and value.denominator in (1, 2):
            return cls(int(2 * value))
        raise ValueError(f'{value!r} is not an integer or half-integer')

    @property
    def is_integer(self):
        return self.doubled % 2 == 0

    @property
    def is_natural(self):
        """ True for non-negative integers, the domain of the indicator. """
        return self.doubled >= 0 and self.doubled % 2 == 0

    @property
    def value(self):
        """ Integer value (raises for half-integers). """
        if not self.is_integer:
            raise ValueError(f'{self} is not an integer')
        return self.doubled // 2

    def __add__(self, other):
        return HalfInt(self.doubled + HalfInt.of(other).doubled)

    def __sub__(self, other):
        return HalfInt(self.doubled - HalfInt.of(other).doubled)

    def __neg__(self):
        return HalfInt(-self.doubled)

    def __str__(self):
        if self.is_integer:
            return str(self.doubled // 2)
        return f'{self.doubled}/2'


@dataclass(frozen=True)
class LogScalar:
    """
    Signed real number stored as (sign, log|value|).

    ``sign == 0`` is an exact zero whatever ``logmag`` holds.
    """
    sign: int
    logmag: float = 0.0

    @classmethod
    def zero(cls):
        return cls(0, -math.inf)

    @classmethod
    def one(cls):
        return cls(1, 0.0)

    @classmethod
    def from_value(cls, value):
        """ Convert an exact (int/Fraction) or float value. """
        if value == 0:
            return cls.zero()
        sign = 1 if value > 0 else -1
        value = abs(value)
        if isinstance(value, Fraction):
            # math.log accepts arbitrarily large ints
            return cls(sign, math.log(value.numerator) - math.log(value.denominator))
        return cls(sign, math.log(value))

    @property
    def is_zero(self):
        return self.sign == 0

    def __mul__(self, other):
        if not isinstance(other, LogScalar):
            other = LogScalar.from_value(other)
        if self.sign == 0 or other.sign == 0:
            return LogScalar.zero()
        return LogScalar(self.sign * other.sign, self.logmag + other.logmag)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, LogScalar):
            other = LogScalar.from_value(other)
        if other.sign == 0:
            raise ZeroDivisionError('division by a zero LogScalar')
        if self.sign == 0:
            return LogScalar.zero()
        return LogScalar(self.sign * other.sign, self.logmag - other.logmag)

    def __add__(self, other):
        if not isinstance(other, LogScalar):
            other = LogScalar.from_value(other)
        return log_sum([self, other])

    __radd__ = __add__

    def __neg__(self):
        return LogScalar(-self.sign, self.logmag)

    def scale_log(self, delta):
        """ Multiply by exp(delta), e.g. ``i * LN2`` for a factor 2**i. """
        if self.sign == 0:
            return self
        return LogScalar(self.sign, self.logmag + delta)

    def to_float(self):
        if self.sign == 0:
            return 0.0
        return self.sign * math.exp(self.logmag)

    def __float__(self):
        return self.to_float()


Scalar = Union[Fraction, LogScalar]


def log_sum(values: Iterable[LogScalar]) -> LogScalar:
    """
    Sum LogScalars with max-shifted exponent summation.

    Zero entries are dropped; mixed signs are handled by scipy's
    signed logsumexp.
    """
    nonzero = [v for v in values if v.sign != 0]
    if len(nonzero) == 0:
        return LogScalar.zero()
    logs = np.array([v.logmag for v in nonzero])
    signs = np.array([v.sign for v in nonzero], dtype=float)
    total, sign = logsumexp(logs, b=signs, return_sign=True)
    if sign == 0 or not np.isfinite(total):
        return LogScalar.zero()
    return LogScalar(int(sign), float(total))


def zero(mode):
    return Fraction(0) if check_mode(mode) == EXACT else LogScalar.zero()


def one(mode):
    return Fraction(1) if check_mode(mode) == EXACT else LogScalar.one()


class _FactorialCache:
    """ Memoised exact factorials, grown on demand and shared between threads. """

    def __init__(self):
        self._values = [1]
        self._lock = threading.Lock()

    def __call__(self, k):
        if k < len(self._values):
            return self._values[k]
        with self._lock:
            values = self._values
            if k >= len(values):
                logger.debug('Extending factorial cache to %d', k)
                new = list(values)
                current = new[-1]
                for i in range(len(new), k + 1):
                    current *= i
                    new.append(current)
                # Swap in a complete list so readers never see a partial one
                self._values = new
        return self._values[k]


class _LogFactorialTable:
    """ Table of ln(k!) by cumulative summation of ln k, grown by doubling. """

    def __init__(self):
        self._table = np.zeros(1)
        self._lock = threading.Lock()

    def table(self, k):
        """ Return an array covering ln(0!) .. ln(k!) (possibly longer). """
        if k < self._table.shape[0]:
            return self._table
        with self._lock:
            if k >= self._table.shape[0]:
                size = max(k + 1, 2 * self._table.shape[0])
                # accumulate in extended precision, round once
                logs = np.log(np.arange(1, size, dtype=np.longdouble))
                table = np.concatenate(([0], np.cumsum(logs)))
                self._table = table.astype(np.float64)
        return self._table

    def __call__(self, k):
        return float(self.table(k)[k])


factorial = _FactorialCache()
log_factorial = _LogFactorialTable()


def _exact_multinomial(parts: Sequence[int]) -> int:
    """ (sum parts)! / prod(parts!) for non-negative integer parts. """
    total = sum(parts)
    denominator = 1
    for p in parts:
        denominator *= factorial(p)
    value, remainder = divmod(factorial(total), denominator)
    assert remainder == 0, 'multinomial coefficient must be an integer'
    return value


def _log_multinomial(parts: Sequence[int]) -> float:
    table = log_factorial.table(sum(parts))
    return float(table[sum(parts)] - sum(table[p] for p in parts))


def gen_binomial(n, k, mode=EXACT) -> Scalar:
    """
    Binomial coefficient gated by the indicator on k and n - k.

    Parameters
    ----------
    n : int
        Non-negative upper argument.
    k : int, Fraction or HalfInt
        Lower argument; half-integers and out-of-range values give zero.
    mode : str
        'exact' or 'log'.

    Returns
    -------
    Fraction or LogScalar
    """
    check_mode(mode)
    if n < 0:
        raise ValueError(f'n must be non-negative, got {n}')
    k = HalfInt.of(k)
    rest = HalfInt.of(n) - k
    if not (k.is_natural and rest.is_natural):
        return zero(mode)
    if mode == EXACT:
        return Fraction(math.comb(n, k.value))
    return LogScalar(1, _log_multinomial((k.value, rest.value)))


def gen_multinomial(total, parts, mode=EXACT) -> Scalar:
    """
    Multinomial coefficient gated by the indicator on every part.

    `total` is a consistency check: if it differs from the sum of the
    parts the coefficient is zero.

    Examples
    --------
    >>> gen_multinomial(2, [1, 1, 0])
    Fraction(2, 1)
    >>> gen_multinomial(2, [Fraction(1, 2), Fraction(1, 2), 1])
    Fraction(0, 1)
    """
    check_mode(mode)
    parts = [HalfInt.of(p) for p in parts]
    if len(parts) == 0:
        raise ValueError('gen_multinomial needs at least one part')
    if sum(p.doubled for p in parts) != HalfInt.of(total).doubled:
        return zero(mode)
    if not all(p.is_natural for p in parts):
        return zero(mode)
    values = [p.value for p in parts]
    if mode == EXACT:
        return Fraction(_exact_multinomial(values))
    return LogScalar(1, _log_multinomial(values))


def two_power_sum(a, b, mode=EXACT) -> Scalar:
    """
    Evaluate sum_i M((a+b)/2; (a-i)/2, (b-i)/2, i) * 2**i for i = 0..min(a, b).

    The sum collapses to C(a+b, a) when a+b is even and to zero otherwise.
    It is evaluated term by term here so that the collapse can be checked
    rather than assumed.
    """
    check_mode(mode)
    if a < 0 or b < 0:
        raise ValueError(f'a and b must be non-negative, got {a}, {b}')
    total = HalfInt(a + b)
    terms = []
    for i in range(min(a, b) + 1):
        parts = [HalfInt(a - i), HalfInt(b - i), HalfInt(2 * i)]
        coefficient = gen_multinomial(total, parts, mode)
        if mode == EXACT:
            terms.append(coefficient * 2**i)
        else:
            terms.append(coefficient.scale_log(i * LN2))
    if mode == EXACT:
        return sum(terms, Fraction(0))
    return log_sum(terms)


def to_float(value):
    """ Float value of a Fraction, LogScalar or number. """
    if isinstance(value, LogScalar):
        return value.to_float()
    return float(value)

