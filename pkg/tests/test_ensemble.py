import unittest
import os
import itertools
import math
from collections import Counter

import numpy as np

from netbreakdown import ensemble, oracle
from netbreakdown.bound import EnsembleParams
from netbreakdown.ensemble import MultiGraph, TannerGraph


FIXTURES_LOC = os.path.join(os.path.dirname(__file__), 'fixtures')


class TestSocketConstruction(unittest.TestCase):
    def setUp(self):
        self.params = EnsembleParams(2, 2)

    def test_identity_permutation(self):
        """ Variable 0 is double-linked to check 0, variable 1 to check 1 """
        tg = ensemble.tanner_from_permutation([0, 1, 2, 3], self.params)
        np.testing.assert_array_equal(tg.edges, [[0, 0], [0, 0], [1, 1], [1, 1]])
        g = ensemble.counterpart(tg)
        np.testing.assert_array_equal(g.edges, [[0, 0], [1, 1]])
        self.assertFalse(g.is_connected())

    def test_cyclic_permutation(self):
        tg = ensemble.tanner_from_permutation([1, 2, 3, 0], self.params)
        np.testing.assert_array_equal(tg.edges, [[0, 0], [0, 1], [1, 1], [1, 0]])
        g = ensemble.counterpart(tg)
        np.testing.assert_array_equal(g.edges, [[0, 1], [0, 1]])
        self.assertTrue(g.is_connected())

    def test_rejects_bad_permutations(self):
        with self.assertRaises(ValueError):
            ensemble.tanner_from_permutation([0, 1, 2], self.params)
        with self.assertRaises(ValueError):
            ensemble.tanner_from_permutation([0, 0, 1, 2], self.params)

    def test_rejects_bad_check_incidence(self):
        tg = TannerGraph(self.params, np.array([[0, 0], [0, 0], [1, 0], [1, 1]]))
        with self.assertRaises(ValueError):
            ensemble.counterpart(tg)

    def test_check_incidence(self):
        params = EnsembleParams(6, 3)
        rng = np.random.default_rng(3)
        for _ in range(20):
            tg = ensemble.tanner_from_permutation(ensemble.sample_permutation(rng, 18), params)
            np.testing.assert_array_equal(np.bincount(tg.edges[:, 1]), np.full(9, 2))
            np.testing.assert_array_equal(np.bincount(tg.edges[:, 0]), np.full(6, 3))


class TestSampling(unittest.TestCase):
    def test_trivial_permutation(self):
        rng = np.random.default_rng(0)
        np.testing.assert_array_equal(ensemble.sample_permutation(rng, 1), [0])
        with self.assertRaises(ValueError):
            ensemble.sample_permutation(rng, 0)

    def test_reproducible(self):
        a = ensemble.sample_permutation(np.random.default_rng(42), 10)
        b = ensemble.sample_permutation(np.random.default_rng(42), 10)
        np.testing.assert_array_equal(a, b)
        self.assertCountEqual(a.tolist(), range(10))

    def test_uniform_small(self):
        """ All 6 permutations of size 3 appear with frequency 1/6 (within 4 sigma) """
        rng = np.random.default_rng(2023)
        draws = 100000
        counts = Counter(tuple(ensemble.sample_permutation(rng, 3).tolist()) for _ in range(draws))
        self.assertEqual(len(counts), 6)
        sigma = math.sqrt(draws * (1 / 6) * (5 / 6))
        for count in counts.values():
            self.assertLess(abs(count - draws / 6), 4 * sigma)

    def test_degrees(self):
        params = EnsembleParams(100, 5)
        sampled = ensemble.sample_graph(params, seed=1, index=0)
        self.assertEqual(sampled.graph.num_edges, 250)
        np.testing.assert_array_equal(sampled.graph.degrees(), np.full(100, 5))

    def test_seeded_graphs(self):
        params = EnsembleParams(100, 5)
        a = ensemble.sample_graph(params, seed=9, index=3)
        b = ensemble.sample_graph(params, seed=9, index=3)
        c = ensemble.sample_graph(params, seed=9, index=4)
        np.testing.assert_array_equal(a.graph.edges, b.graph.edges)
        np.testing.assert_array_equal(a.permutation, b.permutation)
        self.assertFalse(np.array_equal(a.permutation, c.permutation))
        self.assertEqual((a.seed, a.index), (9, 3))
        listed = list(ensemble.sample_graphs(params, 5, seed=9))
        np.testing.assert_array_equal(listed[3].permutation, a.permutation)
        np.testing.assert_array_equal(listed[4].permutation, c.permutation)


class TestEnsembleUniformity(unittest.TestCase):
    def setUp(self):
        self.params = EnsembleParams(3, 2)
        self.exact = oracle.ensemble_class_counts(3, 2)

    def test_exhaustive_classes(self):
        """ Every permutation through the ensemble gives the enumerated class counts """
        classes = Counter()
        for perm in itertools.permutations(range(6)):
            g = ensemble.counterpart(ensemble.tanner_from_permutation(perm, self.params))
            classes[g.canonical_form()] += 1
        self.assertDictEqual(dict(classes), self.exact)
        self.assertEqual(sum(classes.values()), 720)

    def test_connected_fraction(self):
        """ Only the triangle is connected: 8 of the 15 socket matchings """
        connected = sum(count for key, count in self.exact.items()
                        if MultiGraph(key[0], np.array(key[1])).is_connected())
        self.assertEqual(connected, 384)

    def test_sampled_classes(self):
        draws = 20000
        classes = Counter(ensemble.sample_graph(self.params, seed=5, index=i).graph.canonical_form()
                          for i in range(draws))
        for key, count in self.exact.items():
            p = count / 720
            sigma = math.sqrt(draws * p * (1 - p))
            self.assertLess(abs(classes[key] - draws * p), 4 * sigma, key)


class TestMultiGraph(unittest.TestCase):
    def test_csr_collapses_loops_and_parallel_edges(self):
        g = MultiGraph(3, np.array([[0, 0], [1, 0], [0, 1], [1, 2]]))
        indptr, indices = g.csr
        np.testing.assert_array_equal(indptr, [0, 1, 3, 4])
        np.testing.assert_array_equal(indices, [1, 0, 2, 1])
        np.testing.assert_array_equal(g.degrees(), [4, 3, 1])

    def test_out_of_range(self):
        with self.assertRaises(ValueError):
            MultiGraph(2, np.array([[0, 2]]))

    def test_edge_list_text(self):
        g = MultiGraph(3, np.array([[2, 1], [0, 0], [1, 0]]))
        text = g.to_edge_list()
        self.assertEqual(text, '3 3\n1 2\n0 0\n0 1\n')
        h = MultiGraph.from_edge_list(text)
        np.testing.assert_array_equal(h.edges, g.edges)

    def test_malformed_edge_list(self):
        with self.assertRaises(ValueError):
            MultiGraph.from_edge_list('')
        with self.assertRaises(ValueError):
            MultiGraph.from_edge_list('3 2\n0 1\n')
        with self.assertRaises(ValueError):
            MultiGraph.from_edge_list('3 1\n0 1 2\n')

    def test_fixture(self):
        with open(os.path.join(FIXTURES_LOC, 'cycle4.txt')) as f:
            g = MultiGraph.from_edge_list(f.read())
        self.assertEqual(g.n, 4)
        np.testing.assert_array_equal(g.degrees(), np.full(4, 2))
        self.assertTrue(g.is_connected())

    def test_canonical_form(self):
        a = MultiGraph(3, np.array([[0, 0], [1, 2], [1, 2]]))
        b = MultiGraph(3, np.array([[2, 2], [0, 1], [1, 0]]))
        self.assertEqual(a.canonical_form(), b.canonical_form())
        c = MultiGraph(3, np.array([[0, 1], [1, 2], [0, 2]]))
        self.assertNotEqual(a.canonical_form(), c.canonical_form())
