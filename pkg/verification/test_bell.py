'''
Tests for Bell functionals and the see-saw lower bound

To run:
    In command line, type python3 test_bell.py
    For more verbose testing, include the -v flag
'''
import os
import sys
import json
import tempfile
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                                'shared'))

from corrkit_shared import qstate_functions as qs  # noqa: E402
from corrkit_shared import bell_functions as bf  # noqa: E402
from corrkit_shared import construction_functions as cf  # noqa: E402
from corrkit_shared.errors import (DimensionMismatchError, InvalidStateError,  # noqa: E402
                                   ConstructionError)

TSIRELSON = 2 * np.sqrt(2)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def chsh_grid_oracle(rho, steps=16):
    '''
    Best CHSH value over real qubit observables cos(a) Z + sin(a) X with
    angles on a grid of the given number of steps.
    '''
    angles = np.arange(steps) * 2 * np.pi / steps
    observables = [np.cos(a) * SIGMA_Z + np.sin(a) * SIGMA_X for a in angles]
    corr = np.array([[np.trace(rho.matrix @ np.kron(A, B)).real for B in observables]
                     for A in observables])
    # value[a0, a1, b0, b1]
    value = (corr[:, None, :, None] + corr[:, None, None, :]
             + corr[None, :, :, None] - corr[None, :, None, :])
    return float(value.max())


def horodecki_chsh(lam):
    '''Maximal CHSH value of a two-qubit pure state with Schmidt vector lam.'''
    return 2 * np.sqrt(1 + 4 * lam[0] * lam[1])


def horodecki_mixed_chsh(rho):
    '''
    Maximal CHSH value of a two-qubit state: 2 sqrt(m1 + m2) from the two
    largest eigenvalues of T^T T, or the local bound 2 if that is larger.
    '''
    paulis = (SIGMA_X, SIGMA_Y, SIGMA_Z)
    T = np.array([[np.trace(rho.matrix @ np.kron(a, b)).real for b in paulis] for a in paulis])
    m = np.sort(np.linalg.eigvalsh(T.T @ T))[::-1]
    return max(2.0, 2 * np.sqrt(m[0] + m[1]))


class TestFunctionals(unittest.TestCase):

    def test_chsh(self):
        f = bf.chsh()
        self.assertEqual(f.shape, {'X': 2, 'Y': 2, 'S': 2, 'T': 2})
        self.assertEqual(f.local_bound, 2.0)
        self.assertEqual(f.trivial_bound, 16.0)
        self.assertEqual(f.beta[0, 0, 1, 1], -1.0)
        self.assertEqual(f.beta[1, 0, 1, 1], 1.0)

    def test_tilted(self):
        f = bf.tilted_chsh(1.0)
        self.assertEqual(f.local_bound, 3.0)
        self.assertEqual(f.beta[0, 1, 0, 0], 0.0)
        self.assertEqual(f.beta[1, 1, 0, 0], 0.0)
        self.assertAlmostEqual(bf.tilted_chsh_quantum_max(1.0), np.sqrt(10), places=12)
        np.testing.assert_allclose(bf.tilted_chsh_optimal_schmidt(1.0), (0.8162, 0.1838),
                                   atol=1e-4)
        with self.assertRaises(ConstructionError):
            bf.tilted_chsh(2.0)

    def test_invalid(self):
        with self.assertRaises(InvalidStateError):
            bf.BellFunctional(np.ones((2, 2, 2)))
        with self.assertRaises(InvalidStateError):
            bf.BellFunctional(np.zeros((2, 2, 2, 2)))

    def test_json(self):
        f = bf.tilted_chsh(0.5)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'functional.json')
            with open(path, 'w') as fh:
                json.dump(f.to_dict(), fh)
            loaded = bf.load_functional(path)
            np.testing.assert_array_equal(loaded.beta, f.beta)
            self.assertEqual(loaded.local_bound, 2.5)
            self.assertEqual(loaded.name, 'tilted_chsh')
            with open(path, 'w') as fh:
                fh.write('{"X": 2}')
            with self.assertRaises(InvalidStateError):
                bf.load_functional(path)


class TestSeesaw(unittest.TestCase):

    def test_bell_state(self):
        rho = cf.bell_state(2)
        result = bf.bell_value(rho, bf.chsh(), restarts=10, seed=1)
        self.assertLessEqual(result.value, TSIRELSON + 1e-6)
        self.assertGreaterEqual(result.value, chsh_grid_oracle(rho) - 1e-3)
        self.assertGreaterEqual(result.value, TSIRELSON - 1e-3)

    def test_product_state(self):
        rho = cf.product_state((2, 2))
        result = bf.bell_value(rho, bf.chsh(), restarts=10, seed=1)
        self.assertAlmostEqual(result.value, 2.0, delta=1e-6)
        self.assertAlmostEqual(chsh_grid_oracle(rho), 2.0, delta=1e-9)

    def test_pure_states(self):
        for seed in range(3):
            psi = cf.pure_schmidt_state(np.random.default_rng(seed).dirichlet((1, 1)))
            lam = np.sort(np.diag(qs.partial_trace(psi, {1}).matrix).real)[::-1]
            value = bf.bell_value(psi, bf.chsh(), restarts=10, seed=seed).value
            self.assertLessEqual(value, horodecki_chsh(lam) + 1e-6)
            self.assertGreaterEqual(value, horodecki_chsh(lam) - 1e-3)

    def test_history_nondecreasing(self):
        rho = qs.sample_state((2, 2), 2, 4)
        # restarts 0-3 start from deterministic strategies, 4-5 from random ones
        for restart in range(6):
            _, _, _, history = bf.seesaw_restart(rho, bf.chsh(), 200, 1e-9, 3, 4, restart)
            self.assertTrue(all(b >= a - 1e-12 for a, b in zip(history, history[1:])))

    def test_deterministic_starts(self):
        self.assertEqual(bf.deterministic_starts(bf.chsh(), 20), 4)
        self.assertEqual(bf.deterministic_starts(bf.chsh(), 3), 2)
        self.assertEqual(bf.deterministic_starts(bf.chsh(), 1), 1)

    def test_local_bound_is_reached(self):
        for seed in range(30):
            dims = (2, 2) if seed % 2 else (2, 3)
            rho = qs.sample_state(dims, int(np.prod(dims)), seed)
            for f in (bf.chsh(), bf.tilted_chsh(1.0)):
                value = bf.bell_value(rho, f, restarts=8, iters=200, seed=seed).value
                self.assertGreaterEqual(value, f.local_bound - 1e-9, msg=f'{f.name} {seed}')

    def test_mixed_two_qubit_states(self):
        for seed in range(20):
            rho = qs.sample_state((2, 2), 1 + seed % 2, seed)
            expected = horodecki_mixed_chsh(rho)
            value = bf.bell_value(rho, bf.chsh(), restarts=20, iters=500, tol=1e-12,
                                  seed=seed).value
            self.assertLessEqual(value, expected + 1e-9, msg=seed)
            self.assertGreaterEqual(value, expected - 1e-4, msg=seed)

    def test_measurements_are_projective(self):
        result = bf.bell_value(qs.sample_state((2, 3), 3, 2), bf.chsh(), restarts=4, seed=0)
        for povms in (result.a_povms, result.b_povms):
            for setting in povms:
                np.testing.assert_allclose(setting[0] + setting[1], np.eye(setting.shape[-1]),
                                           atol=1e-10)
                np.testing.assert_allclose(setting[0] @ setting[0], setting[0], atol=1e-10)
        recomputed = bf.expected_value(qs.sample_state((2, 3), 3, 2), bf.chsh(),
                                       result.a_povms, result.b_povms)
        self.assertAlmostEqual(recomputed, result.value, delta=1e-9)
        self.assertEqual(len(result.restart_values), 4)
        self.assertEqual(result.value, result.restart_values[result.best_restart])

    def test_local_unitary_invariance(self):
        rho = cf.pure_schmidt_state((0.75, 0.25))
        rotated = rho
        for site in (1, 2):
            rotated = qs.apply_channel(rotated, qs.sample_local_unitary((2, 2), site, 9 + site))
        a = bf.bell_value(rho, bf.chsh(), restarts=10, seed=0).value
        b = bf.bell_value(rotated, bf.chsh(), restarts=10, seed=0).value
        self.assertAlmostEqual(a, b, delta=1e-3)

    def test_tilted_on_optimal_state(self):
        rho = cf.pure_schmidt_state(bf.tilted_chsh_optimal_schmidt(1.0))
        value = bf.bell_value(rho, bf.tilted_chsh(1.0), restarts=20, seed=0).value
        self.assertLessEqual(value, np.sqrt(10) + 1e-6)
        self.assertGreaterEqual(value, 3.0 - 1e-6)

    def test_seed_determinism_and_pool(self):
        rho = qs.sample_state((2, 2), 3, 8)
        serial = bf.bell_value(rho, bf.chsh(), restarts=4, iters=50, seed=5)
        again = bf.bell_value(rho, bf.chsh(), restarts=4, iters=50, seed=5)
        pooled = bf.bell_value(rho, bf.chsh(), restarts=4, iters=50, seed=5, num_processes=2)
        self.assertEqual(serial.restart_values, again.restart_values)
        self.assertEqual(serial.restart_values, pooled.restart_values)

    def test_shape_errors(self):
        with self.assertRaises(DimensionMismatchError):
            bf.bell_value(cf.ghz_state(3), bf.chsh())
        three_outcomes = bf.BellFunctional(np.ones((3, 2, 2, 2)))
        with self.assertRaises(DimensionMismatchError):
            bf.bell_value(cf.bell_state(2), three_outcomes)


if __name__ == '__main__':
    unittest.main()
