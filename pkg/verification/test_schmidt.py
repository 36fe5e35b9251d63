'''
Tests for Schmidt decomposition, majorization and the entropy family

To run:
    In command line, type python3 test_schmidt.py
    For more verbose testing, include the -v flag
'''
import os
import sys
import itertools
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                                'shared'))

from corrkit_shared import qstate_functions as qs  # noqa: E402
from corrkit_shared import schmidt_functions as sf  # noqa: E402
from corrkit_shared.errors import (DimensionMismatchError, ConstructionError,  # noqa: E402
                                   InvalidStateError, UnsupportedRegimeError)

Q_ORDERS = (0, 0.5, 1, 2, 64, np.inf)

# (a, b, majorizes(a, b))
MAJORIZATION_CASES = [
    ((1.0,), (0.5, 0.5), True),
    ((0.5, 0.5), (1.0,), False),
    ((0.6, 0.4), (0.5, 0.3, 0.2), True),
    ((0.5, 0.3, 0.2), (0.6, 0.4), False),
    ((0.4, 0.4, 0.2), (0.5, 0.25, 0.25), False),
]

# (source, target, convertible)
CONVERSION_CASES = [
    ((0.5, 0.5), (1.0,), True),
    ((1.0,), (0.5, 0.5), False),
    ((0.5, 0.5), (0.7, 0.3), True),
]

CLASSIFICATION_CASES = [
    ((0.5, 0.5), (0.5, 0.5), sf.Prec1Class.EQUALLY_CORRELATED),
    ((0.8, 0.2), (0.7, 0.3), sf.Prec1Class.INCOMPARABLE),
    ((1.0,), (0.5, 0.5), sf.Prec1Class.UNDETERMINED),
]


def psi_eps(eps):
    v = np.zeros(4, dtype=complex)
    v[0] = np.sqrt(1 - eps)
    v[3] = np.sqrt(eps)
    return qs.PureState((2, 2), v)


def doubly_stochastic_image(rng, lam):
    '''A random convex combination of permutations applied to lam.'''
    perms = list(itertools.permutations(range(len(lam))))
    weights = rng.dirichlet(np.ones(len(perms)))
    return sum(w * np.asarray(lam)[list(p)] for w, p in zip(weights, perms))


class TestSchmidtDecompose(unittest.TestCase):

    def test_psi_eps(self):
        decomposition = sf.schmidt_decompose(psi_eps(0.3), {1})
        np.testing.assert_allclose(decomposition.vector.coeffs, (0.7, 0.3), atol=1e-12)

    def test_product_state(self):
        v = np.kron([0.6, 0.8], [1, 0, 0]).astype(complex)
        decomposition = sf.schmidt_decompose(qs.PureState((2, 3), v), {2})
        self.assertEqual(decomposition.vector.rank, 1)
        self.assertAlmostEqual(decomposition.vector.coeffs[0], 1.0, places=12)

    def test_coefficients_are_reduced_eigenvalues(self):
        psi = qs.sample_pure_state((3, 4), 21)
        decomposition = sf.schmidt_decompose(psi, {1})
        eigs = np.sort(qs.partial_trace(psi.density(), {1}).eigenvalues())[::-1]
        np.testing.assert_allclose(decomposition.vector.coeffs, eigs[:decomposition.vector.rank],
                                   atol=1e-12)

    def test_reconstruction(self):
        psi = qs.sample_pure_state((2, 3, 2), 5)
        vector, left, right = sf.schmidt_decompose(psi, {1, 3})
        rebuilt = sum(np.sqrt(c) * np.kron(left[:, i], right[:, i])
                      for i, c in enumerate(vector.coeffs))
        # rebuilt is ordered (1, 3 | 2)
        original = np.transpose(psi.vector.reshape(2, 3, 2), (0, 2, 1)).reshape(-1)
        overlap = abs(np.vdot(rebuilt, original))
        self.assertAlmostEqual(overlap, 1.0, delta=1e-9)

    def test_local_unitary_invariance(self):
        psi = qs.sample_pure_state((3, 3), 2)
        u = qs.sample_local_unitary((3, 3), 1, 3).kraus[0]
        w = qs.sample_local_unitary((3, 3), 2, 4).kraus[0]
        rotated = qs.PureState((3, 3), np.kron(u, w) @ psi.vector)
        np.testing.assert_allclose(sf.schmidt_decompose(psi, {1}).vector.coeffs,
                                   sf.schmidt_decompose(rotated, {1}).vector.coeffs, atol=1e-9)

    def test_trivial_cut(self):
        psi = qs.sample_pure_state((2, 2), 0)
        with self.assertRaises(DimensionMismatchError):
            sf.schmidt_decompose(psi, {1, 2})
        with self.assertRaises(DimensionMismatchError):
            sf.schmidt_decompose(psi, set())

    def test_pure_state_from_density(self):
        with self.assertRaises(UnsupportedRegimeError):
            sf.pure_state_from_density(qs.sample_state((2, 2), 2, 0))


class TestSchmidtVector(unittest.TestCase):

    def test_invariants(self):
        with self.assertRaises(InvalidStateError):
            sf.SchmidtVector((0.3, 0.7))
        with self.assertRaises(InvalidStateError):
            sf.SchmidtVector((0.5, 0.4))
        v = sf.SchmidtVector.from_values([0.2, 0.0, 0.8])
        self.assertEqual(v.coeffs, (0.8, 0.2))
        self.assertEqual(v.to_list(), [0.8, 0.2])


class TestMajorization(unittest.TestCase):

    def test_cases(self):
        for a, b, expected in MAJORIZATION_CASES:
            self.assertEqual(sf.majorizes(a, b), expected, msg=f'{a} vs {b}')

    def test_reflexive_and_transitive(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a, b, c = (rng.dirichlet(np.ones(3)) for _ in range(3))
            self.assertTrue(sf.majorizes(a, a))
            if sf.majorizes(a, b) and sf.majorizes(b, c):
                self.assertTrue(sf.majorizes(a, c))

    def test_conversion(self):
        for source, target, expected in CONVERSION_CASES:
            self.assertEqual(sf.pure_convertible_locc(source, target), expected)

    def test_classification(self):
        for a, b, expected in CLASSIFICATION_CASES:
            self.assertEqual(sf.classify_prec1_pure(a, b), expected)


class TestEntropyFamily(unittest.TestCase):

    def test_uniform(self):
        for d in (2, 3, 5):
            for q in Q_ORDERS:
                self.assertAlmostEqual(sf.entropy_family([1 / d] * d, q), np.log(d), places=10)

    def test_point_mass(self):
        for q in Q_ORDERS:
            self.assertAlmostEqual(sf.entropy_family(sf.SchmidtVector((1.0,)), q), 0.0, places=12)

    def test_collision_entropy(self):
        self.assertAlmostEqual(sf.entropy_family((0.7, 0.3), 2), np.log(1 / 0.58), places=12)

    def test_continuity_at_one(self):
        lam = (0.5, 0.3, 0.2)
        shannon = -sum(x * np.log(x) for x in lam)
        self.assertAlmostEqual(sf.entropy_family(lam, 1), shannon, places=12)
        inside = sf.entropy_family(lam, 1 + 0.99e-4)
        outside = sf.entropy_family(lam, 1 + 1.01e-4)
        self.assertLess(abs(inside - outside), 1e-6)
        self.assertLess(abs(sf.entropy_family(lam, 1 - 0.5e-4) - shannon), 1e-4)

    def test_negative_order(self):
        with self.assertRaises(ConstructionError):
            sf.entropy_family((0.5, 0.5), -1)

    def test_schur_concavity(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            size = int(rng.integers(2, 5))
            lam = rng.dirichlet(np.ones(size))
            mu = doubly_stochastic_image(rng, lam)
            self.assertTrue(sf.majorizes(lam, mu))
            for q in (0, 0.5, 1, 2, 64):
                self.assertLessEqual(sf.entropy_family(lam, q), sf.entropy_family(mu, q) + 1e-9)


if __name__ == '__main__':
    unittest.main()
