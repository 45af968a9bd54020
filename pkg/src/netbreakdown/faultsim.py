"""
Node faults, survivor connectivity and the two-level Monte Carlo estimator.

The estimator samples `o_max` graphs from the ensemble and runs `i_max`
independent fault trials on each. A trial breaks every node with
probability epsilon and records whether the surviving nodes are split into
two or more components. An empty or single-node survivor graph counts as
connected.

Random streams
--------------
Graph g is drawn from the graph stream (seed, g) of `netbreakdown.ensemble`.
Fault trials for graph g at grid position e use a Philox stream keyed by
(seed, g, e). Trial t consumes `stride` consecutive uniforms starting at
output t*stride, with stride the node count rounded up to a multiple of four.
Philox is counter based, so trial t can be regenerated alone by
`replay_trial` without drawing the trials before it.
"""

import math
import logging
import warnings
from dataclasses import dataclass
from typing import Optional, Tuple

import numba as nb
import numpy as np
from tqdm import tqdm

from .bound import check_epsilon
from .ensemble import FAULT_STREAM, sample_graph

logger = logging.getLogger(__name__)

# Fault trials drawn per block of uniforms
TRIAL_BATCH = 65536


def set_threads(procs):
    """ Limit numba's parallel kernels to `procs` threads (None keeps the default). """
    if procs is not None:
        nb.set_num_threads(max(1, min(int(procs), nb.config.NUMBA_NUM_THREADS)))


@nb.njit()
def survivor_separated(indptr, indices, broken):
    """
    Depth first search over the alive nodes of a CSR adjacency.

    Args:
        indptr, indices: CSR adjacency without self-loops
        broken: boolean mask of broken nodes

    Returns:
        True if the alive nodes form two or more components
    """
    n = broken.shape[0]
    alive = 0
    start = -1
    for v in range(n):
        if not broken[v]:
            alive += 1
            if start < 0:
                start = v
    if alive <= 1:
        return False

    seen = np.zeros(n, dtype=np.bool_)
    stack = np.empty(n, dtype=np.int64)
    stack[0] = start
    top = 1
    seen[start] = True
    reached = 1
    while top > 0:
        top -= 1
        v = stack[top]
        for k in range(indptr[v], indptr[v + 1]):
            w = indices[k]
            if not broken[w] and not seen[w]:
                seen[w] = True
                reached += 1
                stack[top] = w
                top += 1
    return reached < alive


@nb.njit(parallel=True)
def _count_separated(indptr, indices, uniforms, epsilon):
    """ Number of rows of `uniforms` whose fault pattern separates the graph """
    n = indptr.shape[0] - 1
    trials = uniforms.shape[0]
    flags = np.zeros(trials, dtype=np.int64)
    for t in nb.prange(trials):
        broken = uniforms[t, :n] < epsilon
        if survivor_separated(indptr, indices, broken):
            flags[t] = 1
    return flags.sum()


@dataclass(frozen=True)
class FaultPattern:
    """
    Set Z of broken nodes of an n-node graph.

    Attributes
    ----------
    n : int
    broken : np.ndarray
        Sorted, unique node indices in [0, n).
    """
    n: int
    broken: np.ndarray

    def __post_init__(self):
        broken = np.asarray(self.broken, dtype=np.int64).ravel()
        if broken.size and (broken.min() < 0 or broken.max() >= self.n):
            raise ValueError(f'Broken nodes must lie in [0, {self.n})')
        if np.unique(broken).size != broken.size:
            raise ValueError('Broken nodes must not repeat')
        object.__setattr__(self, 'broken', np.sort(broken))

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=np.bool_)
        return cls(mask.shape[0], np.flatnonzero(mask))

    @property
    def mask(self):
        """ Boolean mask, True for broken nodes. """
        mask = np.zeros(self.n, dtype=np.bool_)
        mask[self.broken] = True
        return mask

    @property
    def alive_mask(self):
        return ~self.mask

    @property
    def num_alive(self):
        return self.n - self.broken.size


@dataclass(frozen=True)
class MCEstimate:
    """
    Breakdown counts of a Monte Carlo run.

    `mean` and `stderr` are derived from the counts; stderr is the normal
    approximation sqrt(mean (1 - mean) / trials). It treats all trials as
    independent, which they are only for a single graph.

    `graph_breakdowns` holds the breakdowns of each sampled graph when the
    run kept them. Rare graphs (e.g. several self-loops) can break down far
    more often than the rest, so the spread between graphs is reported as
    `graph_stderr`, and `ensemble_stderr` is the larger of the two errors.
    """
    trials: int
    breakdowns: int
    graph_samples: int
    trials_per_graph: int
    seed: int
    epsilon: Optional[float] = None
    graph_breakdowns: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        assert 0 <= self.breakdowns <= self.trials, 'breakdowns must lie in [0, trials]'
        assert self.trials == self.graph_samples * self.trials_per_graph, \
            'trials must equal graph_samples * trials_per_graph'
        if self.graph_breakdowns is not None:
            assert len(self.graph_breakdowns) == self.graph_samples, \
                'one breakdown count per sampled graph'
            assert sum(self.graph_breakdowns) == self.breakdowns, \
                'per-graph breakdowns must add up to the total'

    @property
    def mean(self):
        return self.breakdowns / self.trials

    @property
    def stderr(self):
        return math.sqrt(self.mean * (1 - self.mean) / self.trials)

    @property
    def graph_stderr(self):
        """
        Standard error of the mean over graphs, from the sample standard
        deviation of the per-graph frequencies. None without per-graph
        counts or with fewer than two graphs.
        """
        if self.graph_breakdowns is None or self.graph_samples < 2:
            return None
        frequencies = np.asarray(self.graph_breakdowns, dtype=np.float64) / self.trials_per_graph
        return float(np.std(frequencies, ddof=1) / math.sqrt(self.graph_samples))

    @property
    def ensemble_stderr(self):
        if self.graph_stderr is None:
            return self.stderr
        return max(self.stderr, self.graph_stderr)


def trial_stride(n):
    """ Uniforms consumed per trial (n rounded up to a multiple of 4). """
    return 4 * ((n + 3) // 4)


def fault_key(seed, graph_index, eps_index):
    """ Philox key of the fault stream for one (graph, grid position) cell. """
    sequence = np.random.SeedSequence(seed, spawn_key=(FAULT_STREAM, graph_index, eps_index))
    return sequence.generate_state(2, np.uint64)


def fault_stream(seed, graph_index, eps_index, trial=0, n=1):
    """ Generator positioned at the first uniform of `trial`. """
    counter = trial * trial_stride(n) // 4
    return np.random.Generator(np.random.Philox(key=fault_key(seed, graph_index, eps_index),
                                                counter=counter))


def sample_faults(rng, n, epsilon):
    """
    Break each of n nodes independently with probability epsilon.

    Consumes exactly n uniforms from `rng`; node v is broken when its
    uniform is below epsilon.
    """
    check_epsilon(epsilon)
    return FaultPattern(n, np.flatnonzero(rng.random(n) < epsilon))


def is_separated(graph, faults):
    """
    True when the survivor graph has two or more components.

    Self-loops and parallel edges are irrelevant; the survivor graph with at
    most one alive node is connected.
    """
    if faults.n != graph.n:
        raise ValueError(f'Fault pattern covers {faults.n} nodes, graph has {graph.n}')
    indptr, indices = graph.csr
    return bool(survivor_separated(indptr, indices, faults.mask))


def count_breakdowns(graph, epsilon, trials, key):
    """
    Breakdowns among `trials` fault trials of one graph.

    Parameters
    ----------
    graph : MultiGraph
    epsilon : float
    trials : int
    key : np.ndarray
        Philox key of the fault stream (see `fault_key`).
    """
    indptr, indices = graph.csr
    stride = trial_stride(graph.n)
    rng = np.random.Generator(np.random.Philox(key=key))
    count = 0
    for start in range(0, trials, TRIAL_BATCH):
        batch = min(TRIAL_BATCH, trials - start)
        uniforms = rng.random((batch, stride))
        count += int(_count_separated(indptr, indices, uniforms, epsilon))
    return count


def replay_trial(params, seed, graph_index, eps_index, epsilon, trial):
    """
    Regenerate a single fault trial of `mc_curve`.

    Returns
    -------
    faults : FaultPattern
    separated : bool
        The outcome the estimator recorded for this trial.
    """
    check_epsilon(epsilon)
    graph = sample_graph(params, seed, graph_index).graph
    rng = fault_stream(seed, graph_index, eps_index, trial, params.n)
    uniforms = rng.random(trial_stride(params.n))
    faults = FaultPattern.from_mask(uniforms[:params.n] < epsilon)
    return faults, is_separated(graph, faults)


def _check_counts(o_max, i_max):
    if o_max < 1:
        raise ValueError(f'o_max must be positive, got {o_max}')
    if i_max < 1:
        raise ValueError(f'i_max must be positive, got {i_max}')


def _warn_unresolved(estimates):
    for est in estimates:
        if est.breakdowns == 0 and 0 < est.epsilon < 1:
            warnings.warn(f'No breakdown observed at epsilon={est.epsilon} in {est.trials} '
                          f'trials; the estimate is below the resolution of the run',
                          UserWarning, stacklevel=3)


def mc_curve(params, epsilons, o_max, i_max, seed, procs=None):
    """
    Monte Carlo estimates of the average breakdown probability on a grid.

    The same o_max graphs are used at every epsilon; fault streams differ
    per grid position.
    Each estimate keeps the breakdown count of every graph.

    Parameters
    ----------
    params : EnsembleParams
    epsilons : list of float
    o_max : int
        Number of sampled graphs.
    i_max : int
        Fault trials per graph and epsilon.
    seed : int
        Master seed.
    procs : int, optional
        Threads used by the connectivity kernel. Results do not depend on it.

    Returns
    -------
    list of MCEstimate
    """
    _check_counts(o_max, i_max)
    for eps in epsilons:
        check_epsilon(eps)
    set_threads(procs)
    logger.info('Sampling %d graphs (n=%d, lambda=%d) with %d trials each at %d grid points',
                o_max, params.n, params.lam, i_max, len(epsilons))
    # breakdowns[e, g] of graph g at grid position e
    breakdowns = np.zeros((len(epsilons), o_max), dtype=np.int64)
    if len(epsilons):
        for g_index in tqdm(range(o_max), desc='graphs', mininterval=5):
            graph = sample_graph(params, seed, g_index).graph
            for e_index, eps in enumerate(epsilons):
                key = fault_key(seed, g_index, e_index)
                breakdowns[e_index, g_index] = count_breakdowns(graph, eps, i_max, key)
    estimates = [MCEstimate(o_max * i_max, int(row.sum()), o_max, i_max, seed, float(eps),
                            tuple(int(b) for b in row))
                 for row, eps in zip(breakdowns, epsilons)]
    _warn_unresolved(estimates)
    return estimates


def mc_breakdown(params, epsilon, o_max, i_max, seed, procs=None):
    """ Single-epsilon `mc_curve`. """
    return mc_curve(params, [epsilon], o_max, i_max, seed, procs=procs)[0]


def mc_graph(graph, epsilon, trials, seed, procs=None):
    """
    Breakdown frequency of one fixed graph.

    Uses the fault stream of graph index 0 and grid position 0.
    """
    check_epsilon(epsilon)
    if trials < 1:
        raise ValueError(f'trials must be positive, got {trials}')
    set_threads(procs)
    count = count_breakdowns(graph, epsilon, trials, fault_key(seed, 0, 0))
    return MCEstimate(trials, count, 1, trials, seed, float(epsilon))


def mc_fixed_set(params, j, o_max, seed):
    """
    Estimate Q_j, the probability that removing nodes 0..j-1 separates a
    random graph of the ensemble.

    Each sample is a fresh graph; the removed set is fixed.
    """
    params.check_j(j)
    _check_counts(o_max, 1)
    broken = np.zeros(params.n, dtype=np.bool_)
    broken[:j] = True
    count = 0
    for g_index in tqdm(range(o_max), desc='graphs', mininterval=5):
        indptr, indices = sample_graph(params, seed, g_index).graph.csr
        count += bool(survivor_separated(indptr, indices, broken))
    return MCEstimate(o_max, count, o_max, 1, seed)
