"""
Regular multigraph ensemble built from (lambda, 2) Tanner graphs.

A graph is drawn by matching the lambda*n variable-side sockets to the
lambda*n check-side sockets with a uniform random permutation. Each check
node has two sockets, so it becomes one edge of the lambda-regular
counterpart. Self-loops and parallel edges are kept.

Socket numbering
----------------
Variable node v owns sockets [lambda*v, lambda*v + lambda) and check node c
owns sockets [2c, 2c + 2). Socket i on the variable side is joined to socket
pi(i) on the check side. Exhaustive enumeration in `netbreakdown.oracle`
depends on this convention.
"""

import itertools
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bound import EnsembleParams

logger = logging.getLogger(__name__)

# Spawn-key domains keep graph streams and fault streams independent
GRAPH_STREAM = 0
FAULT_STREAM = 1


def graph_stream(seed, index):
    """ Random stream of graph `index` derived from the master `seed`. """
    sequence = np.random.SeedSequence(seed, spawn_key=(GRAPH_STREAM, index))
    return np.random.Generator(np.random.PCG64(sequence))


def sample_permutation(rng, size):
    """
    Draw a uniformly random permutation of range(size).

    Uses numpy's Fisher-Yates shuffle, so the result is fully determined by
    the state of `rng`.
    """
    if size < 1:
        raise ValueError(f'Permutation size must be positive, got {size}')
    return rng.permutation(size)


@dataclass(frozen=True, eq=False)
class TannerGraph:
    """
    (lambda, 2)-regular bipartite graph.

    Attributes
    ----------
    params : EnsembleParams
    edges : np.ndarray, shape (lambda*n, 2)
        (variable node, check node) pairs in variable-socket order.
    """
    params: EnsembleParams
    edges: np.ndarray

    @property
    def num_checks(self):
        return self.params.checks


@dataclass(frozen=True, eq=False)
class MultiGraph:
    """
    Undirected multigraph on nodes 0..n-1.

    Attributes
    ----------
    n : int
        Number of nodes.
    edges : np.ndarray, shape (m, 2)
        Node pairs with u <= v; a self-loop is stored as (v, v).
    """
    n: int
    edges: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= self.n):
            raise ValueError(f'Edge endpoints must lie in [0, {self.n})')
        object.__setattr__(self, 'edges', np.sort(edges, axis=1))

    @property
    def num_edges(self):
        return self.edges.shape[0]

    def degrees(self):
        """ Incidence count per node; a self-loop counts twice. """
        return np.bincount(self.edges.ravel(), minlength=self.n)

    @cached_property
    def csr(self):
        """
        Compressed adjacency (indptr, indices) of the simple graph underneath.

        Self-loops are dropped and parallel edges collapsed; neither changes
        connectivity.
        """
        simple = self.edges[self.edges[:, 0] != self.edges[:, 1]]
        if simple.shape[0]:
            simple = np.unique(simple, axis=0)
        both = np.concatenate((simple, simple[:, ::-1]), axis=0)
        order = np.lexsort((both[:, 1], both[:, 0]))
        both = both[order]
        counts = np.bincount(both[:, 0], minlength=self.n)
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(counts, out=indptr[1:])
        return indptr, np.ascontiguousarray(both[:, 1], dtype=np.int64)

    def is_connected(self):
        """ Connectivity of the whole graph (no broken nodes). """
        from .faultsim import survivor_separated
        indptr, indices = self.csr
        return not survivor_separated(indptr, indices, np.zeros(self.n, dtype=np.bool_))

    def canonical_form(self):
        """
        Isomorphism-invariant key: the smallest sorted edge multiset over all
        relabellings. Only sensible for small n.
        """
        best = None
        for labels in itertools.permutations(range(self.n)):
            relabelled = np.asarray(labels)[self.edges]
            key = tuple(sorted(tuple(sorted(pair)) for pair in relabelled.tolist()))
            if best is None or key < best:
                best = key
        return (self.n, best)

    def to_edge_list(self):
        """ Text form: "n m" followed by one "u v" line per edge. """
        lines = [f'{self.n} {self.num_edges}']
        lines += [f'{u} {v}' for u, v in self.edges.tolist()]
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_edge_list(cls, text):
        rows = [line.split() for line in text.splitlines()
                if line.strip() and not line.lstrip().startswith('#')]
        if len(rows) == 0 or len(rows[0]) != 2:
            raise ValueError('Edge list must start with a line "n m"')
        n, m = int(rows[0][0]), int(rows[0][1])
        body = rows[1:]
        if len(body) != m:
            raise ValueError(f'Edge list declares {m} edges but contains {len(body)}')
        if any(len(r) != 2 for r in body):
            raise ValueError('Every edge line must contain exactly two node indices')
        edges = np.array([[int(u), int(v)] for u, v in body], dtype=np.int64).reshape(-1, 2)
        return cls(n, edges)


@dataclass(frozen=True, eq=False)
class SampledGraph:
    """ A graph together with the (seed, index) that reproduces it. """
    graph: MultiGraph
    permutation: np.ndarray
    seed: int
    index: int


def tanner_from_permutation(pi, params):
    """
    Build the Tanner graph for socket permutation `pi`.

    Parameters
    ----------
    pi : array-like of int, length lambda*n
        pi[i] is the check-side socket joined to variable-side socket i.
    params : EnsembleParams

    Returns
    -------
    TannerGraph
    """
    pi = np.asarray(pi, dtype=np.int64)
    if pi.shape != (params.sockets,):
        raise ValueError(f'Permutation has length {pi.size}, expected {params.sockets}')
    if not np.array_equal(np.sort(pi), np.arange(params.sockets)):
        raise ValueError('pi is not a permutation of the socket indices')
    sockets = np.arange(params.sockets)
    edges = np.column_stack((sockets // params.lam, pi // 2))
    return TannerGraph(params, edges)


def counterpart(tg):
    """
    Convert a Tanner graph into its lambda-regular multigraph.

    Every check node c with neighbours {u, v} becomes the edge {u, v};
    edges are listed in check-node order.
    """
    checks = tg.edges[:, 1]
    incidence = np.bincount(checks, minlength=tg.num_checks)
    if incidence.shape[0] != tg.num_checks or np.any(incidence != 2):
        bad = np.flatnonzero(incidence != 2)
        raise ValueError(f'Check nodes {bad.tolist()} do not have exactly two edges')
    order = np.argsort(checks, kind='stable')
    pairs = tg.edges[order, 0].reshape(tg.num_checks, 2)
    return MultiGraph(tg.params.n, pairs)


def sample_graph(params, seed, index=0):
    """
    Draw graph number `index` of the stream defined by `seed`.

    The same (seed, index) always gives the same graph, independently of
    which other graphs have been drawn.
    """
    rng = graph_stream(seed, index)
    pi = sample_permutation(rng, params.sockets)
    graph = counterpart(tanner_from_permutation(pi, params))
    return SampledGraph(graph, pi, seed, index)


def sample_graphs(params, count, seed):
    """ Generator over `count` seeded graphs. """
    for index in range(count):
        yield sample_graph(params, seed, index)
