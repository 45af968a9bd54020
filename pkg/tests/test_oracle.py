import unittest
import os
import itertools
from fractions import Fraction

import numpy as np
import pytest

from netbreakdown import oracle, bound, faultsim
from netbreakdown.bound import EnsembleParams
from netbreakdown.data_io import read_graph
from netbreakdown.ensemble import MultiGraph, sample_graph
from netbreakdown.faultsim import FaultPattern


FIXTURES_LOC = os.path.join(os.path.dirname(__file__), 'fixtures')


class TestPermutationKernels(unittest.TestCase):
    def test_unrank_order(self):
        """ Unranking agrees with lexicographic itertools order """
        perms = list(itertools.permutations(range(4)))
        for rank in (0, 1, 5, 17, 23):
            np.testing.assert_array_equal(oracle._unrank_permutation(rank, 4), perms[rank])

    def test_next_permutation(self):
        perm = np.arange(4)
        seen = [tuple(perm)]
        while oracle._next_permutation(perm):
            seen.append(tuple(perm))
        self.assertListEqual(seen, list(itertools.permutations(range(4))))


class TestExactQ(unittest.TestCase):
    def test_small_ensemble(self):
        """ n=3, lambda=2: only the triangle (8 of 15 matchings) is connected """
        self.assertEqual(oracle.exact_q(3, 2, 0), Fraction(7, 15))
        self.assertEqual(oracle.exact_q(3, 2, 1), Fraction(1, 3))
        self.assertEqual(oracle.exact_q(3, 2, 2), 0)
        self.assertEqual(oracle.exact_q(3, 2, 3), 0)

    def test_vector(self):
        q = oracle.exact_q_vector(4, 2)
        self.assertEqual(len(q), 5)
        for j in range(5):
            self.assertEqual(q[j], oracle.exact_q(4, 2, j))
        self.assertEqual(q[3], 0)
        self.assertEqual(q[4], 0)

    def test_symmetry(self):
        """ Q_j depends only on the size of the removed set """
        self.assertEqual(oracle.exact_q_for_set(4, 2, [0]), oracle.exact_q_for_set(4, 2, [3]))
        self.assertEqual(oracle.exact_q_for_set(4, 2, [0, 1]), oracle.exact_q_for_set(4, 2, [1, 3]))
        self.assertEqual(oracle.exact_q_for_set(4, 2, [2, 0]), oracle.exact_q(4, 2, 2))

    def test_class_counts_agree(self):
        """ Disconnected isomorphism classes add up to Q_0 """
        classes = oracle.ensemble_class_counts(3, 2)
        disconnected = sum(count for key, count in classes.items()
                           if not MultiGraph(key[0], np.array(key[1])).is_connected())
        self.assertEqual(Fraction(disconnected, 720), oracle.exact_q(3, 2, 0))

    def test_thread_independent(self):
        self.assertEqual(oracle.exact_q_vector(4, 2, procs=1), oracle.exact_q_vector(4, 2, procs=2))

    def test_limits(self):
        with self.assertRaises(ValueError):
            oracle.exact_q(6, 2, 0)
        with self.assertRaises(ValueError):
            oracle.exact_q(3, 3, 0)
        with self.assertRaises(ValueError):
            oracle.exact_q(3, 2, 4)
        with self.assertRaises(ValueError):
            oracle.exact_q_for_set(3, 2, [3])
        with self.assertRaises(ValueError):
            oracle.ensemble_class_counts(5, 2)

    def test_dominated_by_bound(self):
        for n, lam in [(3, 2), (4, 2)]:
            params = EnsembleParams(n, lam)
            exact = oracle.exact_q_vector(n, lam)
            for j in range(n + 1):
                self.assertLessEqual(exact[j], bound.q_upper(params, j), (n, lam, j))


class TestGraphPolynomial(unittest.TestCase):
    def setUp(self):
        self.cycle = read_graph(os.path.join(FIXTURES_LOC, 'cycle4.txt'))

    def test_cycle(self):
        """ Only the two antipodal pairs separate a 4-cycle """
        poly = oracle.exact_graph_polynomial(self.cycle)
        self.assertEqual(poly.counts, (0, 0, 2, 0, 0))
        self.assertEqual(poly.evaluate(0.0), 0)
        self.assertEqual(poly.evaluate(1.0), 0)
        self.assertEqual(poly.evaluate(0.5), Fraction(1, 8))
        self.assertEqual(poly.coefficients()[2], Fraction(1, 3))

    def test_disconnected(self):
        two_loops = read_graph(os.path.join(FIXTURES_LOC, 'two_loops.txt'))
        poly = oracle.exact_graph_polynomial(two_loops)
        self.assertEqual(poly.counts, (1, 0, 0))
        self.assertEqual(poly.evaluate(0.0), 1)

    def test_matches_subset_loop(self):
        """ The parallel sweep agrees with is_separated on every subset """
        g = sample_graph(EnsembleParams(8, 3), seed=6, index=0).graph
        poly = oracle.exact_graph_polynomial(g)
        counts = [0] * 9
        for mask in itertools.product([False, True], repeat=8):
            z = FaultPattern.from_mask(mask)
            counts[int(sum(mask))] += faultsim.is_separated(g, z)
        self.assertEqual(list(poly.counts), counts)
        self.assertEqual(poly.counts[7], 0)
        self.assertEqual(poly.counts[8], 0)

    def test_limit(self):
        with self.assertRaises(ValueError):
            oracle.exact_graph_polynomial(MultiGraph(23, np.zeros((0, 2), dtype=int)))


class TestEnsembleCurve(unittest.TestCase):
    def test_endpoints(self):
        curve = oracle.exact_ensemble_curve(4, 2, [0.0, 1.0])
        self.assertEqual(curve[0], (0.0, oracle.exact_q(4, 2, 0)))
        self.assertEqual(curve[1], (1.0, 0))

    def test_invalid_epsilon(self):
        with self.assertRaises(ValueError):
            oracle.exact_ensemble_curve(4, 2, [1.2])

    def test_curve_below_bound(self):
        grid = [k / 10 for k in range(1, 10)]
        params = EnsembleParams(4, 2)
        for eps, value in oracle.exact_ensemble_curve(4, 2, grid):
            self.assertLessEqual(value, bound.p_upper(params, eps))


@pytest.mark.slow
class TestOracleDomination(unittest.TestCase):
    def test_domination(self):
        """ Exact Q_j and the exact curve never exceed the bound (lambda*n <= 10) """
        grid = [k / 10 for k in range(1, 10)]
        for n, lam in [(3, 2), (4, 2), (5, 2)]:
            params = EnsembleParams(n, lam)
            exact = oracle.exact_q_vector(n, lam)
            qvec = bound.q_vector(params)
            for j in range(n + 1):
                self.assertLessEqual(exact[j], qvec.entries[j], (n, lam, j))
            for eps in grid:
                p_exact = bound.evaluate_polynomial(n, exact, eps)
                self.assertLessEqual(p_exact, bound.p_from_qvector(qvec, eps), (n, lam, eps))
