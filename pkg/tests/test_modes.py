import math
import unittest

import numpy as np

from cvqed.common.errors import ConfigError, DimensionMismatch, NonSymplectic
from cvqed.lattice import FieldKind, LatticeConfig
from cvqed.modes import (
    SymplecticOp,
    fourier_matrix,
    fourier_symplectic,
    groundstate_unitary,
    mode_map_coefficients,
    random_symplectic,
    squeeze_parameters,
    sympmat,
)


class TestSymplecticOp(unittest.TestCase):

    def test_sympmat(self):
        omega = sympmat(3)
        np.testing.assert_array_equal(omega.T, -omega)
        np.testing.assert_array_equal(omega @ omega, -np.identity(6))

    def test_random_symplectic_is_symplectic(self):
        op = random_symplectic(5, seed=4)
        self.assertLess(op.symplectic_error(), 1e-10)
        self.assertFalse(op.is_passive())

    def test_random_symplectic_is_seeded(self):
        np.testing.assert_array_equal(random_symplectic(3, seed=9).matrix, random_symplectic(3, seed=9).matrix)

    def test_mode_map_roundtrip(self):
        op = random_symplectic(3, seed=2)
        A, B = op.mode_map()
        np.testing.assert_allclose(SymplecticOp.from_mode_map(A, B).matrix, op.matrix, atol=1e-12)
        # A A^dagger - B B^dagger = 1 for a canonical map.
        np.testing.assert_allclose(A @ A.conj().T - B @ B.conj().T, np.identity(3), atol=1e-10)

    def test_inverse_composes_to_identity(self):
        op = random_symplectic(4, seed=1)
        product = op.inverse() @ op
        self.assertLess(product.distance(SymplecticOp.identity(4)), 1e-10)

    def test_composition_order(self):
        first = SymplecticOp.from_mode_map(np.diag([1j, 1.0]))
        second = SymplecticOp.from_mode_map(np.array([[0, 1], [1, 0]], dtype=complex))
        A, _ = (second @ first).mode_map()
        np.testing.assert_allclose(A, np.array([[0, 1], [1j, 0]]), atol=1e-12)

    def test_check_rejects_perturbed_matrix(self):
        matrix = random_symplectic(2, seed=5).matrix.copy()
        matrix[0, 1] += 1e-3
        with self.assertRaises(NonSymplectic):
            SymplecticOp(matrix).check()

    def test_shape_errors(self):
        with self.assertRaises(DimensionMismatch):
            SymplecticOp(np.identity(3))
        with self.assertRaises(DimensionMismatch):
            SymplecticOp.identity(2) @ SymplecticOp.identity(3)


class TestGroundStateUnitary(unittest.TestCase):

    def test_fourier_matrix_is_unitary(self):
        F = fourier_matrix(LatticeConfig(2, 3, 1.0))
        np.testing.assert_allclose(F @ F.conj().T, np.identity(9), atol=1e-12)

    def test_fourier_symplectic_is_passive(self):
        op = fourier_symplectic(LatticeConfig(1, 3, 1.0), FieldKind.PHOTON)
        self.assertTrue(op.is_passive())
        self.assertLess(op.symplectic_error(), 1e-10)

    def test_groundstate_unitary_is_symplectic(self):
        for cfg in (LatticeConfig(1, 2, 1.0), LatticeConfig(2, 2, 0.5), LatticeConfig(1, 3, 0.8)):
            with self.subTest(cfg=cfg):
                self.assertLess(groundstate_unitary(cfg).symplectic_error(), 1e-10)

    def test_squeeze_parameters(self):
        cfg = LatticeConfig(1, 2, 1.0)
        params = squeeze_parameters(cfg)
        self.assertEqual(len(params), cfg.n_sites * (1 + cfg.dim))
        scalar = [p for p in params if p.kind is FieldKind.SCALAR_B]
        self.assertAlmostEqual(scalar[0].xi, 0.0)
        self.assertAlmostEqual(scalar[1].xi, math.log(math.sqrt(5.0)))
        self.assertAlmostEqual(scalar[1].r, 0.5 * scalar[1].xi)

    def test_photon_partners(self):
        params = [p for p in squeeze_parameters(LatticeConfig(1, 3, 1.0)) if p.kind is FieldKind.PHOTON]
        self.assertEqual([p.partner for p in params], [0, 2, 1])

    def test_massless_scalar_has_no_ground_state(self):
        with self.assertRaises(ConfigError):
            squeeze_parameters(LatticeConfig(1, 2, 0.0))

    def test_mode_map_coefficients(self):
        for c in mode_map_coefficients(LatticeConfig(1, 3, 0.7)):
            self.assertAlmostEqual(c.u**2 - c.v**2, 1.0)
            self.assertAlmostEqual(c.field_factor * c.momentum_factor, 0.5)


if __name__ == "__main__":
    unittest.main()
