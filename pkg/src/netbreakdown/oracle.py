"""
Exact ground truth for small ensembles and small graphs.

`exact_q_vector` walks every socket permutation of the ensemble in
lexicographic order and counts, for each removed set, the permutations whose
survivor graph is separated. `exact_graph_polynomial` sweeps every subset of
broken nodes of one fixed graph.

Both sweeps split their iteration space into contiguous chunks processed in
parallel by numba; the chunk counts are integers, so the totals do not depend
on the chunking or the number of threads.

Expected runtimes: lambda*n = 10 (3 628 800 permutations) takes a few seconds,
n = 22 (4 194 304 subsets) about as long.
"""

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction

import numba as nb
import numpy as np

from .bound import EnsembleParams, check_epsilon, evaluate_polynomial
from .ensemble import MultiGraph
from .faultsim import set_threads, survivor_separated

logger = logging.getLogger(__name__)

MAX_ENUMERATION_SOCKETS = 10
MAX_SUBSET_NODES = 22
# Class counting builds Python objects per permutation
MAX_CLASS_SOCKETS = 8

N_CHUNKS = 64


@nb.njit()
def _factorial(k):
    out = 1
    for i in range(2, k + 1):
        out *= i
    return out


@nb.njit()
def _unrank_permutation(rank, size):
    """ Permutation of range(size) at lexicographic position `rank` """
    pool = np.arange(size)
    perm = np.empty(size, dtype=np.int64)
    remaining = size
    for i in range(size):
        f = _factorial(size - 1 - i)
        idx = rank // f
        rank = rank % f
        perm[i] = pool[idx]
        for k in range(idx, remaining - 1):
            pool[k] = pool[k + 1]
        remaining -= 1
    return perm


@nb.njit()
def _next_permutation(perm):
    """ Advance `perm` to its lexicographic successor in place; False after the last one """
    size = perm.shape[0]
    k = size - 2
    while k >= 0 and perm[k] >= perm[k + 1]:
        k -= 1
    if k < 0:
        return False
    m = size - 1
    while perm[m] <= perm[k]:
        m -= 1
    perm[k], perm[m] = perm[m], perm[k]
    lo = k + 1
    hi = size - 1
    while lo < hi:
        perm[lo], perm[hi] = perm[hi], perm[lo]
        lo += 1
        hi -= 1
    return True


@nb.njit()
def _find(parent, x):
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@nb.njit()
def _separated_by(ends, broken, parent):
    """
    Union-find connectivity of the counterpart graph whose check c joins
    ends[2c] and ends[2c + 1].
    """
    n = broken.shape[0]
    for v in range(n):
        parent[v] = v
    for k in range(0, ends.shape[0], 2):
        u = ends[k]
        w = ends[k + 1]
        if u == w or broken[u] or broken[w]:
            continue
        ru = _find(parent, u)
        rw = _find(parent, w)
        if ru != rw:
            parent[ru] = rw
    alive = 0
    roots = 0
    for v in range(n):
        if not broken[v]:
            alive += 1
            if _find(parent, v) == v:
                roots += 1
    return alive >= 2 and roots >= 2


@nb.njit(parallel=True)
def _sweep_permutations(n, lam, broken, n_chunks):
    """
    Count separating permutations for every row of `broken`.

    Args:
        n, lam: ensemble size
        broken: (masks, n) boolean array of removed sets
        n_chunks: number of contiguous rank ranges

    Returns:
        int64 array with one count per mask
    """
    sockets = n * lam
    total = _factorial(sockets)
    n_masks = broken.shape[0]
    counts = np.zeros((n_chunks, n_masks), dtype=np.int64)
    for c in nb.prange(n_chunks):
        # prange indices may be unsigned
        chunk = np.int64(c)
        start = chunk * total // n_chunks
        stop = (chunk + 1) * total // n_chunks
        if start < stop:
            perm = _unrank_permutation(start, sockets)
            ends = np.empty(sockets, dtype=np.int64)
            parent = np.empty(n, dtype=np.int64)
            for rank in range(start, stop):
                for i in range(sockets):
                    ends[perm[i]] = i // lam
                for m in range(n_masks):
                    if _separated_by(ends, broken[m], parent):
                        counts[c, m] += 1
                if rank + 1 < stop:
                    _next_permutation(perm)
    return counts.sum(axis=0)


@nb.njit(parallel=True)
def _sweep_subsets(indptr, indices, n, n_chunks):
    """ Separating subsets of a fixed graph binned by size """
    total = 1 << n
    counts = np.zeros((n_chunks, n + 1), dtype=np.int64)
    for c in nb.prange(n_chunks):
        # prange indices may be unsigned
        chunk = np.int64(c)
        start = chunk * total // n_chunks
        stop = (chunk + 1) * total // n_chunks
        broken = np.zeros(n, dtype=np.bool_)
        for subset in range(start, stop):
            size = 0
            for v in range(n):
                bit = (subset >> v) & 1 == 1
                broken[v] = bit
                if bit:
                    size += 1
            if survivor_separated(indptr, indices, broken):
                counts[c, size] += 1
    return counts.sum(axis=0)


def _check_enumerable(n, lam):
    params = EnsembleParams(n, lam)
    if params.sockets > MAX_ENUMERATION_SOCKETS:
        raise ValueError(f'lambda*n = {params.sockets} exceeds the enumeration limit '
                         f'{MAX_ENUMERATION_SOCKETS}')
    return params


def _separating_counts(params, masks, procs=None):
    set_threads(procs)
    logger.info('Enumerating %d permutations for n=%d, lambda=%d',
                math.factorial(params.sockets), params.n, params.lam)
    masks = np.ascontiguousarray(masks, dtype=np.bool_).reshape(-1, params.n)
    return _sweep_permutations(params.n, params.lam, masks, N_CHUNKS)


def exact_q_for_set(n, lam, broken_nodes, procs=None):
    """
    Probability that removing `broken_nodes` separates a random graph.

    By symmetry of the ensemble the value depends only on the size of the
    removed set.
    """
    params = _check_enumerable(n, lam)
    mask = np.zeros(n, dtype=np.bool_)
    nodes = list(broken_nodes)
    if any(v < 0 or v >= n for v in nodes):
        raise ValueError(f'Removed nodes must lie in [0, {n})')
    mask[np.asarray(nodes, dtype=np.int64)] = True
    count = _separating_counts(params, mask, procs)[0]
    return Fraction(int(count), math.factorial(params.sockets))


def exact_q(n, lam, j, procs=None):
    """
    Exact Q_j: probability over the ensemble that removing nodes 0..j-1
    leaves a separated survivor graph.

    Parameters
    ----------
    n, lam : int
        Ensemble size; lambda*n must not exceed MAX_ENUMERATION_SOCKETS.
    j : int
        Number of removed nodes.

    Returns
    -------
    Fraction
    """
    params = _check_enumerable(n, lam)
    params.check_j(j)
    return exact_q_for_set(n, lam, range(j), procs)


def exact_q_vector(n, lam, procs=None):
    """ [exact_q(n, lam, j) for j = 0..n] from a single permutation sweep. """
    params = _check_enumerable(n, lam)
    masks = np.tri(n + 1, n, k=-1, dtype=np.bool_)
    counts = _separating_counts(params, masks, procs)
    total = math.factorial(params.sockets)
    return [Fraction(int(c), total) for c in counts]


def ensemble_class_counts(n, lam):
    """
    Number of socket permutations producing each multigraph isomorphism class.

    Classes are keyed by `MultiGraph.canonical_form`. Counterparts are built
    directly from the socket numbering, independently of
    `netbreakdown.ensemble`, so the two can be checked against each other.
    """
    params = EnsembleParams(n, lam)
    if params.sockets > MAX_CLASS_SOCKETS:
        raise ValueError(f'lambda*n = {params.sockets} exceeds the class counting limit '
                         f'{MAX_CLASS_SOCKETS}')
    by_edges = Counter()
    for perm in itertools.permutations(range(params.sockets)):
        ends = [0] * params.sockets
        for socket, target in enumerate(perm):
            ends[target] = socket // lam
        key = tuple(sorted(tuple(sorted(ends[2 * c:2 * c + 2])) for c in range(params.checks)))
        by_edges[key] += 1
    classes = Counter()
    for edges, count in by_edges.items():
        classes[MultiGraph(n, np.array(edges)).canonical_form()] += count
    return dict(classes)


@dataclass(frozen=True)
class BreakdownPolynomial:
    """
    Exact breakdown polynomial of a fixed graph.

    counts[j] is the number of removed sets of size j that separate the
    graph, so P(eps) = sum_j counts[j] eps**j (1 - eps)**(n - j).
    """
    n: int
    counts: tuple

    def __post_init__(self):
        assert len(self.counts) == self.n + 1, 'one count per removed-set size'
        assert all(0 <= c <= math.comb(self.n, j) for j, c in enumerate(self.counts))

    def coefficients(self):
        """ counts[j] / C(n, j), the per-set separation probabilities. """
        return [Fraction(c, math.comb(self.n, j)) for j, c in enumerate(self.counts)]

    def evaluate(self, epsilon):
        """ Exact value at epsilon (a Fraction). """
        return evaluate_polynomial(self.n, self.coefficients(), epsilon)


def exact_graph_polynomial(graph, procs=None):
    """
    Sweep all 2**n removed sets of `graph`.

    Parameters
    ----------
    graph : MultiGraph
        At most MAX_SUBSET_NODES nodes.

    Returns
    -------
    BreakdownPolynomial
    """
    if graph.n > MAX_SUBSET_NODES:
        raise ValueError(f'Graph has {graph.n} nodes, the subset sweep is limited to '
                         f'{MAX_SUBSET_NODES}')
    set_threads(procs)
    logger.info('Enumerating %d removed sets of a %d-node graph', 2**graph.n, graph.n)
    indptr, indices = graph.csr
    counts = _sweep_subsets(indptr, indices, graph.n, N_CHUNKS)
    return BreakdownPolynomial(graph.n, tuple(int(c) for c in counts))


def exact_ensemble_curve(n, lam, epsilons, procs=None):
    """
    Exact average breakdown probability of a small ensemble on a grid.

    Returns
    -------
    list of (epsilon, Fraction)
    """
    for eps in epsilons:
        check_epsilon(eps)
    q = exact_q_vector(n, lam, procs)
    return [(eps, evaluate_polynomial(n, q, eps)) for eps in epsilons]
