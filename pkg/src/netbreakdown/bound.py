"""
Upper bound on the average network breakdown probability.

For the lambda-regular ensemble with n nodes, every node breaks independently
with probability epsilon, and the network breaks down when the surviving
nodes are disconnected. The average breakdown probability satisfies

    P(eps) <= P_U(eps) = sum_j C(n, j) Q_U[j] eps**j (1 - eps)**(n - j)

where Q_U[j] bounds the probability that a random graph is separated once a
fixed set of j nodes is removed. Q_U[j] is obtained by counting bipartite
configurations (node partitions V0/V1/V2 with interface checks I1/I2) and
collapsing the inner sum over I2 with the 2**i identity of
`netbreakdown.combinatorics.two_power_sum`.

The module evaluates Q_U both directly from the counting argument
(`config_count`, `k_of_j`) and from its collapsed closed form (`q_upper`),
so the collapse itself can be verified (`verify_collapse`).
"""

import math
import logging
import warnings
import multiprocessing as mp
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Tuple

import numpy as np
import pandas as pd
from scipy.special import logsumexp
from tqdm import tqdm

from .combinatorics import (EXACT, LOG, LN2, HalfInt, LogScalar, check_mode,
                            factorial, log_factorial, gen_binomial,
                            gen_multinomial, log_sum, zero, one, to_float)

logger = logging.getLogger(__name__)

NULL_CONNECTED = 'null-connected'
ALL_BROKEN = 'all-broken-is-breakdown'
VARIANTS = (NULL_CONNECTED, ALL_BROKEN)


def check_variant(variant):
    if variant not in VARIANTS:
        raise ValueError(f'Unknown variant {variant!r}, expected one of {VARIANTS}')
    return variant


def check_epsilon(epsilon):
    if not 0 <= epsilon <= 1:
        raise ValueError(f'Node breakdown probability must lie in [0, 1], got {epsilon}')
    return epsilon


@dataclass(frozen=True)
class EnsembleParams:
    """
    Size of the regular graph ensemble.

    Attributes
    ----------
    n : int
        Number of nodes (>= 2).
    lam : int
        Node degree lambda (>= 2); lambda*n must be even.
    """
    n: int
    lam: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f'n must be at least 2, got {self.n}')
        if self.lam < 2:
            raise ValueError(f'lambda must be at least 2, got {self.lam}')
        if (self.n * self.lam) % 2:
            raise ValueError(f'lambda*n must be even, got {self.lam}*{self.n}')

    @property
    def sockets(self):
        return self.n * self.lam

    @property
    def checks(self):
        return self.n * self.lam // 2

    def check_j(self, j):
        if not 0 <= j <= self.n:
            raise ValueError(f'j must lie in [0, {self.n}], got {j}')
        return j


@dataclass(frozen=True)
class ConfigurationShape:
    """
    Partition sizes of a bipartite configuration.

    n0, n1, n2 count variable nodes in V0 (removed), V1 and V2 (the two
    separated sides). i1, i2 count interface check nodes between V0 and V1
    or V2; c0, c1, c2 count check nodes internal to each part. The c sizes
    are derived, so they may come out negative or half-integral for
    infeasible free parameters.
    """
    n0: int
    n1: int
    n2: int
    c0: HalfInt
    c1: HalfInt
    c2: HalfInt
    i1: int
    i2: int

    @classmethod
    def from_free(cls, params, n0, n1, i1, i2):
        """ Derive the remaining sizes from (n0, n1, i1, i2) via socket balance. """
        lam, n = params.lam, params.n
        n2 = n - n0 - n1
        return cls(n0=n0, n1=n1, n2=n2,
                   c0=HalfInt(lam * n0 - i1 - i2),
                   c1=HalfInt(lam * n1 - i1),
                   c2=HalfInt(lam * n2 - i2),
                   i1=i1, i2=i2)

    def is_valid(self, params):
        lam = params.lam
        sizes_ok = min(self.n0, self.n1, self.n2, self.i1, self.i2) >= 0
        checks_ok = all(c.is_natural for c in (self.c0, self.c1, self.c2))
        balance_ok = (self.n0 + self.n1 + self.n2 == params.n
                      and lam * self.n0 == self.c0.doubled + self.i1 + self.i2
                      and lam * self.n1 == self.c1.doubled + self.i1
                      and lam * self.n2 == self.c2.doubled + self.i2)
        return sizes_ok and checks_ok and balance_ok


@dataclass
class QVector:
    """
    Q_U[j] for j = 0..n.

    Attributes
    ----------
    params : EnsembleParams
    entries : list
        Fractions (exact mode) or LogScalars (log mode).
    variant : str
        NULL_CONNECTED (entries[n] = 0) or ALL_BROKEN (entries[n] = 1).
    mode : str
    """
    params: EnsembleParams
    entries: list
    variant: str = NULL_CONNECTED
    mode: str = EXACT

    def as_floats(self):
        return np.array([to_float(q) for q in self.entries])


@dataclass
class BoundCurve:
    """ P_U evaluated on a grid of node breakdown probabilities. """
    params: EnsembleParams
    points: List[Tuple[float, float]] = field(default_factory=list)
    variant: str = NULL_CONNECTED
    mode: str = EXACT

    @property
    def epsilons(self):
        return [p[0] for p in self.points]

    @property
    def values(self):
        return [p[1] for p in self.points]

    def to_frame(self):
        return pd.DataFrame(self.points, columns=['epsilon', 'p_upper'])


def config_count(params, shape):
    """
    Number A of bipartite configurations with the given partition sizes.

    A = (lambda n)! M(n; n0, n1, n2) M(lambda n / 2; i1, i2, c0, c1, c2)
        / M(lambda n; lambda n0, lambda n1, lambda n2) * 2**(i1 + i2)

    Infeasible shapes give zero through the indicator on each coefficient.

    Returns
    -------
    Fraction
        Always integral.
    """
    if not shape.is_valid(params):
        return Fraction(0)
    lam, n = params.lam, params.n
    nodes = gen_multinomial(n, [shape.n0, shape.n1, shape.n2])
    checks = gen_multinomial(params.checks,
                             [shape.i1, shape.i2, shape.c0, shape.c1, shape.c2])
    sockets = gen_multinomial(lam * n, [lam * shape.n0, lam * shape.n1, lam * shape.n2])
    count = factorial(lam * n) * nodes * checks / sockets * 2**(shape.i1 + shape.i2)
    assert count.denominator == 1, f'Configuration count {count} is not an integer'
    return count


def k_of_j(params, j):
    """
    Configurations with a fixed removed set of size j, K(j).

    The triple sum over (n1, i1, i2) counts configurations for any removed
    set of size j; dividing by C(n, j) gives the count per set.
    """
    params.check_j(j)
    lam, n = params.lam, params.n
    total = Fraction(0)
    for n1 in range(1, n - j):
        n2 = n - j - n1
        for i1 in range(lam * min(j, n1) + 1):
            for i2 in range(min(lam * n2, lam * j - i1) + 1):
                shape = ConfigurationShape.from_free(params, j, n1, i1, i2)
                total += config_count(params, shape)
    return total / math.comb(n, j)


def q_upper_direct(params, j, mode=EXACT):
    """
    Term-by-term evaluation of Q_U[j] with indicator-gated coefficients.

    Reference implementation for `q_upper`; it is quadratic in the number of
    factorial evaluations and only intended for small ensembles.
    """
    check_mode(mode)
    params.check_j(j)
    lam, n = params.lam, params.n
    outer = []
    for n1 in range(1, n - j):
        weight = gen_binomial(n - j, n1, mode) / gen_binomial(lam * (n - j), lam * n1, mode)
        inner = []
        for i1 in range(lam * min(n1, j) + 1):
            if (lam * n1 - i1) % 2:
                continue
            parts = [HalfInt(2 * i1), HalfInt(lam * n1 - i1), HalfInt(lam * (n - n1) - i1)]
            term = (gen_multinomial(params.checks, parts, mode)
                    * gen_binomial(lam * (n - n1) - i1, lam * (n - n1 - j), mode))
            if mode == EXACT:
                inner.append(term * 2**i1)
            else:
                inner.append(term.scale_log(i1 * LN2))
        if mode == EXACT:
            outer.append(weight * sum(inner, Fraction(0)))
        else:
            outer.append(weight * log_sum(inner))
    if mode == EXACT:
        return sum(outer, Fraction(0)) / (2 * gen_binomial(lam * n, lam * j))
    return log_sum(outer) / (gen_binomial(lam * n, lam * j, LOG).scale_log(LN2))


def _i1_range(lam, n1, j):
    """ First and last i1 with a non-vanishing term (same parity as lambda*n1). """
    first = (lam * n1) % 2
    last = min(lam * n1, lam * j)
    if (last - first) % 2:
        last -= 1
    return first, last


def _inner_sum_exact(lam, n, n1, j):
    """
    Integer sum over i1 of 2**i1 M(...) C(...) for one n1.

    Consecutive non-zero terms (i1 and i1 + 2) differ by a ratio of small
    integers, so each term follows from the previous one by one exact
    multiply and one exact divide.
    """
    first, last = _i1_range(lam, n1, j)
    if first > last:
        return 0
    span = lam * (n - n1)
    removed_sockets = lam * j
    i = first
    half = lam * n // 2
    term = (2**i * math.comb(half, i) * math.comb(half - i, (lam * n1 - i) // 2)
            * math.comb(span - i, lam * (n - n1 - j)))
    total = term
    while i + 2 <= last:
        a = (lam * n1 - i) // 2
        b = (span - i) // 2
        ratio_num = 4 * a * b * (removed_sockets - i) * (removed_sockets - i - 1)
        ratio_den = (span - i) * (span - i - 1) * (i + 1) * (i + 2)
        term, remainder = divmod(term * ratio_num, ratio_den)
        assert remainder == 0
        total += term
        i += 2
    return total


def _q_upper_exact(params, j):
    lam, n = params.lam, params.n
    numerator = 0
    for n1 in range(1, n - j):
        inner = _inner_sum_exact(lam, n, n1, j)
        if inner:
            numerator += (math.comb(n - j, n1) * factorial(lam * n1)
                          * factorial(lam * (n - j - n1)) * inner)
    denominator = 2 * math.comb(lam * n, lam * j) * factorial(lam * (n - j))
    return Fraction(numerator, denominator)


def _q_upper_log(params, j):
    lam, n = params.lam, params.n
    table = log_factorial.table(lam * n)
    half = lam * n // 2
    blocks = []
    for n1 in range(1, n - j):
        first, last = _i1_range(lam, n1, j)
        if first > last:
            continue
        i = np.arange(first, last + 1, 2)
        span = lam * (n - n1)
        terms = (i * LN2 + table[half] + table[span - i]
                 - table[i] - table[(lam * n1 - i) // 2] - table[(span - i) // 2]
                 - table[lam * (n - n1 - j)] - table[lam * j - i])
        weight = (table[n - j] - table[n1] - table[n - j - n1]
                  - table[lam * (n - j)] + table[lam * n1] + table[lam * (n - j - n1)])
        blocks.append(weight + logsumexp(terms))
    if len(blocks) == 0:
        return LogScalar.zero()
    log_binom = table[lam * n] - table[lam * j] - table[lam * (n - j)]
    return LogScalar(1, float(logsumexp(blocks) - LN2 - log_binom))


def q_upper(params, j, mode=EXACT):
    """
    Upper bound Q_U[j] on the separation probability for j removed nodes.

    Parameters
    ----------
    params : EnsembleParams
    j : int
        Number of removed nodes, 0 <= j <= n.
    mode : str
        'exact' returns a Fraction, 'log' a LogScalar.

    Notes
    -----
    The sum over n1 runs over 1..n-j-1, so Q_U[n-1] = Q_U[n] = 0. Values
    above 1 are possible for small n and are returned unchanged.
    """
    check_mode(mode)
    params.check_j(j)
    if j >= params.n - 1:
        return zero(mode)
    if mode == EXACT:
        return _q_upper_exact(params, j)
    return _q_upper_log(params, j)


def verify_collapse(params, j):
    """
    Check K(j) / (2 (lambda n)!) == Q_U[j] in exact arithmetic.
    """
    collapsed = k_of_j(params, j) / (2 * factorial(params.sockets))
    return collapsed == q_upper(params, j, EXACT)


def _q_upper_star(args):
    """ Make multiprocessing work with multiple arguments without starmap """
    return q_upper(*args)


def q_vector(params, variant=NULL_CONNECTED, mode=EXACT, procs=None):
    """
    Evaluate Q_U[j] for all j = 0..n.

    Parameters
    ----------
    params : EnsembleParams
    variant : str
        NULL_CONNECTED keeps Q_U[n] = 0; ALL_BROKEN replaces it with 1 so
        that losing every node counts as a breakdown.
    mode : str
    procs : int, optional
        Number of worker processes; evaluated serially when None or 1.

    Returns
    -------
    QVector
    """
    check_variant(variant)
    check_mode(mode)
    n = params.n
    args = [(params, j, mode) for j in range(n - 1)]
    if procs is not None and procs > 1:
        logger.info('Evaluating %d bound terms on %d processes', len(args), procs)
        with mp.Pool(procs) as pool:
            entries = list(tqdm(pool.imap(_q_upper_star, args), total=len(args),
                                desc='Q_U', mininterval=5))
    else:
        entries = [_q_upper_star(a) for a in tqdm(args, desc='Q_U', mininterval=5)]
    entries.append(zero(mode))
    entries.append(one(mode) if variant == ALL_BROKEN else zero(mode))
    return QVector(params, entries, variant, mode)


def evaluate_polynomial(n, coefficients, epsilon, mode=EXACT):
    """
    Evaluate sum_j C(n, j) c_j eps**j (1 - eps)**(n - j).

    In exact mode `epsilon` is converted to a Fraction (floats exactly) and
    a Fraction is returned; in log mode a float is returned.
    """
    check_mode(mode)
    check_epsilon(epsilon)
    if len(coefficients) != n + 1:
        raise ValueError(f'Expected {n + 1} coefficients, got {len(coefficients)}')
    if mode == EXACT:
        eps = Fraction(epsilon)
        total = Fraction(0)
        for j, c in enumerate(coefficients):
            if c:
                total += math.comb(n, j) * c * eps**j * (1 - eps)**(n - j)
        return total
    table = log_factorial.table(n)
    terms = []
    for j, c in enumerate(coefficients):
        if not isinstance(c, LogScalar):
            c = LogScalar.from_value(c)
        if c.is_zero or (epsilon == 0 and j > 0) or (epsilon == 1 and j < n):
            continue
        log_term = c.logmag + table[n] - table[j] - table[n - j]
        if j > 0:
            log_term += j * math.log(epsilon)
        if j < n:
            log_term += (n - j) * math.log1p(-epsilon)
        terms.append(LogScalar(c.sign, float(log_term)))
    return log_sum(terms).to_float()


def p_from_qvector(qvec, epsilon):
    """ P_U(eps) from a precomputed QVector. """
    return evaluate_polynomial(qvec.params.n, qvec.entries, epsilon, qvec.mode)


def p_upper(params, epsilon, variant=NULL_CONNECTED, mode=EXACT):
    """
    Upper bound P_U(eps) on the average network breakdown probability.

    The raw bound is returned; it is not clamped to 1.

    Returns
    -------
    Fraction (exact mode) or float (log mode)
    """
    check_epsilon(epsilon)
    return p_from_qvector(q_vector(params, variant, mode), epsilon)


def p_upper_curve(params, epsilons, variant=NULL_CONNECTED, mode=EXACT, procs=None,
                  qvec=None):
    """
    Evaluate P_U on a grid, computing Q_U once.

    Parameters
    ----------
    params : EnsembleParams
    epsilons : list of float
    variant, mode : str
    procs : int, optional
        Worker processes used for Q_U.
    qvec : QVector, optional
        Reuse an existing QVector (must match params, variant and mode).

    Returns
    -------
    BoundCurve
    """
    for eps in epsilons:
        check_epsilon(eps)
    curve = BoundCurve(params, [], variant, mode)
    if len(epsilons) == 0:
        return curve
    if qvec is None:
        qvec = q_vector(params, variant, mode, procs=procs)
    for eps in epsilons:
        curve.points.append((float(eps), to_float(p_from_qvector(qvec, eps))))
    if any(v > 1 for v in curve.values):
        warnings.warn(f'Bound exceeds 1 for n={params.n}, lambda={params.lam} '
                      f'on part of the grid', UserWarning, stacklevel=2)
    return curve
