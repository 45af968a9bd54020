"""
Command line interface: bound curves, Monte Carlo runs and exact checks.

Every table is written as CSV preceded by "# key: value" lines carrying the
parameters and tool version, so a run can be repeated from its own output.

Examples
--------
Bound and simulation for n=100, lambda=5 on the grid 0.05, 0.10, ..., 0.30::

    netbreakdown --command compare --n 100 --lambda 5 --eps 0.05:0.3:0.05 \\
        --omax 100 --imax 10000 --seed 1 --out compare.csv

Exit status is 0 on success, 1 when a check fails and 2 for invalid input
or I/O errors.
"""

import sys
import argparse
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import pandas as pd

from . import __version__
from .bound import (EnsembleParams, VARIANTS, NULL_CONNECTED, check_epsilon, check_variant,
                    q_upper, q_vector, p_upper_curve, verify_collapse)
from .combinatorics import MODES, EXACT, check_mode, gen_binomial, two_power_sum, to_float
from .data_io import read_graph, write_table
from .faultsim import mc_curve, mc_graph, mc_fixed_set
from .misc import parse_grid, parse_int_list
from .oracle import exact_q_vector, exact_graph_polynomial

logger = logging.getLogger(__name__)

TASKS = ('bound', 'simulate', 'compare', 'oracle-check', 'identity-check', 'sweep-lambda',
         'qvector', 'simulate-q', 'graph-check')

# Commands that work on a single ensemble
SINGLE_LAMBDA = ('bound', 'simulate', 'compare', 'oracle-check', 'qvector', 'simulate-q')

IDENTITY_DEFAULT = 40
STDERR_BOUND = 3
STDERR_AGREE = 4

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_ERROR = 2


@dataclass
class RunConfig:
    """
    Validated parameters of one command line run.

    `lambdas` holds one degree for single-ensemble commands and the list of
    degrees for sweep-lambda.
    """
    command: str
    n: Optional[int] = None
    lambdas: List[int] = field(default_factory=list)
    eps_grid: List[float] = field(default_factory=list)
    o_max: int = 100
    i_max: int = 10000
    seed: int = 0
    mode: str = EXACT
    variant: str = NULL_CONNECTED
    clamp_display: bool = False
    out_path: str = '-'
    procs: Optional[int] = None
    graph_path: Optional[str] = None
    j_values: Optional[List[int]] = None

    def validate(self):
        """ Raise ValueError for any inconsistent setting, before any work is done. """
        if self.command not in TASKS:
            raise ValueError(f'Unknown command {self.command!r}, expected one of {TASKS}')
        check_mode(self.mode)
        check_variant(self.variant)
        for eps in self.eps_grid:
            check_epsilon(eps)
        if self.o_max < 1 or self.i_max < 1:
            raise ValueError(f'o_max and i_max must be positive, got {self.o_max}, {self.i_max}')
        if not 0 <= self.seed < 2**64:
            raise ValueError(f'seed must be a 64-bit unsigned integer, got {self.seed}')
        if self.procs is not None and self.procs < 1:
            raise ValueError(f'procs must be positive, got {self.procs}')

        if self.command == 'identity-check':
            if self.n is not None and self.n < 0:
                raise ValueError(f'identity-check needs a non-negative --n, got {self.n}')
            return self
        if self.command == 'graph-check':
            if self.graph_path is None:
                raise ValueError('graph-check needs --graph')
            return self
        if self.n is None:
            raise ValueError(f'{self.command} needs --n')
        if self.command in SINGLE_LAMBDA and len(self.lambdas) != 1:
            raise ValueError(f'{self.command} takes a single --lambda, got {self.lambdas}')
        for lam in self.lambdas:
            EnsembleParams(self.n, lam)
        if self.command == 'simulate-q' and self.j_values is not None:
            for j in self.j_values:
                self.params.check_j(j)
        return self

    @property
    def params(self):
        return EnsembleParams(self.n, self.lambdas[0])

    def header(self, **extra):
        """ Metadata lines of the output table; no host or time dependent values. """
        header = {'tool': f'netbreakdown {__version__}', 'command': self.command}
        if self.n is not None:
            header['n'] = self.n
        if self.lambdas:
            header['lambda'] = ','.join(str(lam) for lam in self.lambdas)
        header.update(extra)
        return header


def _procs(config):
    return 'default' if config.procs is None else config.procs


def _display(value, config):
    if config.clamp_display:
        return min(1.0, value)
    return value


def _bound_header(config):
    return config.header(variant=config.variant, mode=config.mode,
                         clamp=str(config.clamp_display).lower(),
                         eps=','.join(repr(float(e)) for e in config.eps_grid),
                         procs=_procs(config))


def run_bound(config):
    """ Rows (epsilon, p_upper) """
    curve = p_upper_curve(config.params, config.eps_grid, config.variant, config.mode,
                          procs=config.procs)
    frame = curve.to_frame()
    frame['p_upper'] = [_display(v, config) for v in frame['p_upper']]
    write_table(config.out_path, _bound_header(config), frame)
    return EXIT_OK


def _simulation_header(config):
    return config.header(seed=config.seed, o_max=config.o_max, i_max=config.i_max,
                         eps=','.join(repr(float(e)) for e in config.eps_grid))


def run_simulate(config):
    """ Rows (epsilon, mean, stderr, breakdowns, trials, seed, graph_stderr) """
    estimates = mc_curve(config.params, config.eps_grid, config.o_max, config.i_max,
                         config.seed, procs=config.procs)
    frame = pd.DataFrame({
        'epsilon': [e.epsilon for e in estimates],
        'mean': [e.mean for e in estimates],
        'stderr': [e.stderr for e in estimates],
        'breakdowns': [e.breakdowns for e in estimates],
        'trials': [e.trials for e in estimates],
        'seed': [e.seed for e in estimates],
        'graph_stderr': [e.graph_stderr for e in estimates],
    }, columns=['epsilon', 'mean', 'stderr', 'breakdowns', 'trials', 'seed',
                'graph_stderr'])
    write_table(config.out_path, _simulation_header(config), frame)
    return EXIT_OK


def run_compare(config):
    """
    Bound and simulation side by side.

    bound_holds is mean <= p_upper + 3*err on the raw bound, where err is the
    larger of the trial-level and the between-graph standard error. The exit
    status is 1 if it fails on any row.
    """
    curve = p_upper_curve(config.params, config.eps_grid, config.variant, config.mode,
                          procs=config.procs)
    estimates = mc_curve(config.params, config.eps_grid, config.o_max, config.i_max,
                         config.seed, procs=config.procs)
    rows = []
    for bound_value, est in zip(curve.values, estimates):
        holds = est.mean <= bound_value + STDERR_BOUND * est.ensemble_stderr
        ratio = bound_value / est.mean if est.mean > 0 else None
        rows.append({'epsilon': est.epsilon,
                     'p_upper': _display(bound_value, config),
                     'mean': est.mean,
                     'stderr': est.stderr,
                     'graph_stderr': est.graph_stderr,
                     'breakdowns': est.breakdowns,
                     'trials': est.trials,
                     'ratio': ratio,
                     'bound_holds': holds})
    frame = pd.DataFrame(rows, columns=['epsilon', 'p_upper', 'mean', 'stderr', 'graph_stderr',
                                        'breakdowns', 'trials', 'ratio', 'bound_holds'])
    header = _simulation_header(config)
    header.update(variant=config.variant, mode=config.mode,
                  clamp=str(config.clamp_display).lower())
    write_table(config.out_path, header, frame)
    if all(row['bound_holds'] for row in rows):
        return EXIT_OK
    logger.warning('Bound violated beyond %d standard errors', STDERR_BOUND)
    return EXIT_FAILED


def run_sweep_lambda(config):
    """ Rows (lambda, epsilon, p_upper), one Q_U vector per degree """
    rows = []
    for lam in config.lambdas:
        curve = p_upper_curve(EnsembleParams(config.n, lam), config.eps_grid, config.variant,
                              config.mode, procs=config.procs)
        for eps, value in curve.points:
            rows.append({'lambda': lam, 'epsilon': eps, 'p_upper': _display(value, config)})
    frame = pd.DataFrame(rows, columns=['lambda', 'epsilon', 'p_upper'])
    write_table(config.out_path, _bound_header(config), frame)
    return EXIT_OK


def run_qvector(config):
    """ Rows (j, q_upper) """
    qvec = q_vector(config.params, config.variant, config.mode, procs=config.procs)
    frame = pd.DataFrame({'j': np.arange(config.n + 1), 'q_upper': qvec.as_floats()})
    header = config.header(variant=config.variant, mode=config.mode, procs=_procs(config))
    write_table(config.out_path, header, frame)
    return EXIT_OK


def run_simulate_q(config):
    """ Monte Carlo estimate of Q_j with a fixed removed set, next to Q_U[j] """
    params = config.params
    j_values = config.j_values if config.j_values is not None else range(params.n + 1)
    rows = []
    for j in j_values:
        est = mc_fixed_set(params, j, config.o_max, config.seed)
        rows.append({'j': j, 'estimate': est.mean, 'stderr': est.stderr,
                     'separated': est.breakdowns, 'samples': est.trials,
                     'q_upper': to_float(q_upper(params, j, config.mode))})
    frame = pd.DataFrame(rows, columns=['j', 'estimate', 'stderr', 'separated', 'samples',
                                        'q_upper'])
    write_table(config.out_path, config.header(seed=config.seed, o_max=config.o_max,
                                               mode=config.mode), frame)
    return EXIT_OK


def run_graph_check(config):
    """
    Exact breakdown polynomial of a fixture graph against Monte Carlo.

    A row agrees when the estimate lies within 4 standard errors of the
    exact value (or equals it when the standard error is zero).
    """
    graph = read_graph(config.graph_path)
    poly = exact_graph_polynomial(graph, procs=config.procs)
    rows = []
    for eps in config.eps_grid:
        exact = float(poly.evaluate(eps))
        est = mc_graph(graph, eps, config.i_max, config.seed, procs=config.procs)
        agrees = abs(est.mean - exact) <= STDERR_AGREE * est.stderr or est.mean == exact
        rows.append({'epsilon': eps, 'exact': exact, 'mean': est.mean, 'stderr': est.stderr,
                     'agrees': agrees})
    frame = pd.DataFrame(rows, columns=['epsilon', 'exact', 'mean', 'stderr', 'agrees'])
    header = {'tool': f'netbreakdown {__version__}', 'command': config.command,
              'graph': config.graph_path, 'n': graph.n, 'seed': config.seed,
              'i_max': config.i_max, 'counts': ','.join(str(c) for c in poly.counts)}
    write_table(config.out_path, header, frame)
    return EXIT_OK if all(row['agrees'] for row in rows) else EXIT_FAILED


def run_oracle_check(config):
    """
    Print exact Q_j next to Q_U[j] for every j and check domination and the
    configuration-count collapse.
    """
    params = config.params
    exact = exact_q_vector(params.n, params.lam, procs=config.procs)
    rows = []
    for j in range(params.n + 1):
        bound = q_upper(params, j)
        rows.append({'j': j, 'exact_q': str(exact[j]), 'q_upper': str(bound),
                     'dominated': exact[j] <= bound,
                     'collapse': verify_collapse(params, j)})
    frame = pd.DataFrame(rows, columns=['j', 'exact_q', 'q_upper', 'dominated', 'collapse'])
    print(f'Oracle check for n={params.n}, lambda={params.lam}')
    print(frame.to_string(index=False))
    passed = all(r['dominated'] and r['collapse'] for r in rows)
    print('All rows pass' if passed else 'Check FAILED')
    return EXIT_OK if passed else EXIT_FAILED


def run_identity_check(config):
    """ Check the 2**i multinomial identity for all 0 <= a, b <= n """
    limit = IDENTITY_DEFAULT if config.n is None else config.n
    failures = []
    for a in range(limit + 1):
        for b in range(limit + 1):
            expected = gen_binomial(a + b, a) if (a + b) % 2 == 0 else 0
            if two_power_sum(a, b) != expected:
                failures.append((a, b))
    if failures:
        print(f'Identity fails for {len(failures)} pairs, first {failures[:5]}')
        return EXIT_FAILED
    print(f'Identity holds for all 0 <= a, b <= {limit}')
    return EXIT_OK


RUNNERS = {
    'bound': run_bound,
    'simulate': run_simulate,
    'compare': run_compare,
    'oracle-check': run_oracle_check,
    'identity-check': run_identity_check,
    'sweep-lambda': run_sweep_lambda,
    'qvector': run_qvector,
    'simulate-q': run_simulate_q,
    'graph-check': run_graph_check,
}


def parse_args(args):
    parser = argparse.ArgumentParser(description='Network breakdown bounds and simulations',
                                     formatter_class=argparse.RawTextHelpFormatter)
    parser.add_argument('-c', '--command', type=str, required=True, choices=TASKS,
                        help='Which task to perform: \n' +
                            '   bound: upper bound P_U on a grid of epsilon \n' +
                            '   simulate: two-level Monte Carlo estimate on the grid \n' +
                            '   compare: bound and simulation side by side \n' +
                            '   oracle-check: exact Q_j against Q_U[j] (lambda*n <= 10) \n' +
                            '   identity-check: the 2**i multinomial identity up to --n \n' +
                            '   sweep-lambda: bound for every degree in --lambda \n' +
                            '   qvector: Q_U[j] for j = 0..n \n' +
                            '   simulate-q: Monte Carlo Q_j for a fixed removed set \n' +
                            '   graph-check: exact polynomial of --graph against Monte Carlo'
                        )
    parser.add_argument('--n', type=int, default=None,
                        help='Number of nodes (largest a, b for identity-check)')
    parser.add_argument('--lambda', dest='lambdas', type=str, default='',
                        help='Node degree, or comma list / inclusive range (3-10) for sweep-lambda')
    parser.add_argument('--eps', type=str, default='0.05:0.3:0.05',
                        help='Node breakdown probabilities: comma list or start:stop:step')
    parser.add_argument('--omax', type=int, default=100,
                        help='Number of sampled graphs')
    parser.add_argument('--imax', type=int, default=10000,
                        help='Fault trials per graph (and per epsilon)')
    parser.add_argument('--seed', type=int, default=0,
                        help='Master seed of all random streams')
    parser.add_argument('--mode', type=str, default=EXACT, choices=MODES,
                        help='Arithmetic of the bound: exact rationals or log-space floats')
    parser.add_argument('--variant', type=str, default=NULL_CONNECTED, choices=VARIANTS,
                        help='Whether losing every node counts as a breakdown')
    parser.add_argument('--clamp', action='store_true',
                        help='Display min(1, P_U) instead of the raw bound')
    parser.add_argument('-o', '--out', type=str, default='-',
                        help='Output CSV file, - for stdout')
    parser.add_argument('--procs', type=int, default=None,
                        help='Worker processes / threads; results do not depend on it')
    parser.add_argument('--graph', type=str, default=None,
                        help='Edge-list file for graph-check')
    parser.add_argument('--j', type=str, default=None,
                        help='Removed-set sizes for simulate-q, e.g. 0,5-10')
    parser.add_argument('-v', '--verbose', action='store_true',
                        help='Log progress at INFO level')
    return parser.parse_args(args)


def config_from_args(args):
    """ Build and validate a RunConfig from parsed arguments. """
    config = RunConfig(command=args.command,
                       n=args.n,
                       lambdas=parse_int_list(args.lambdas),
                       eps_grid=parse_grid(args.eps),
                       o_max=args.omax,
                       i_max=args.imax,
                       seed=args.seed,
                       mode=args.mode,
                       variant=args.variant,
                       clamp_display=args.clamp,
                       out_path=args.out,
                       procs=args.procs,
                       graph_path=args.graph,
                       j_values=parse_int_list(args.j) if args.j is not None else None)
    return config.validate()


def main(args):
    """
    Run one command.

    Args:
        args: command line arguments as list of strings
    Return:
        exit status
    """
    args = parse_args(args)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')
    try:
        config = config_from_args(args)
        logger.info('Running %s', config.command)
        return RUNNERS[config.command](config)
    except (ValueError, OSError) as e:
        print(f'netbreakdown: error: {e}', file=sys.stderr)
        return EXIT_ERROR


def run():
    """ Entry point for console_scripts """
    sys.exit(main(sys.argv[1:]))


if __name__ == '__main__':
    run()
