import unittest

import numpy as np

from cvqed.common.errors import DimensionMismatch
from cvqed.gaussian_sim import (
    GaussianState,
    apply,
    counterterm_evolution,
    counterterm_hamiltonian_matrix,
    displace,
    effective_mass,
    free_evolution,
    free_hamiltonian_matrix,
    groundstate,
    number_mean,
    number_means,
    particle_amplitudes,
    symplectic_eigenvalues,
    to_particle_frame,
    uncertainty_ok,
    vacuum,
)
from cvqed.lattice import LatticeConfig, mode_layout
from cvqed.modes import SymplecticOp, groundstate_unitary, random_symplectic


class TestGaussianState(unittest.TestCase):

    def test_vacuum(self):
        state = vacuum(3)
        np.testing.assert_allclose(number_means(state), np.zeros(3))
        np.testing.assert_allclose(symplectic_eigenvalues(state), [0.5, 0.5, 0.5])
        self.assertTrue(uncertainty_ok(state))

    def test_vacuum_needs_a_mode(self):
        with self.assertRaises(DimensionMismatch):
            vacuum(0)

    def test_mismatched_shapes(self):
        with self.assertRaises(DimensionMismatch):
            GaussianState(np.zeros(4), np.identity(2))

    def test_coherent_number(self):
        state = displace(vacuum(2), 1, 0.6 + 0.8j)
        self.assertAlmostEqual(number_mean(state, 1), 1.0)
        self.assertAlmostEqual(number_mean(state, 0), 0.0)

    def test_squeezed_number(self):
        r = 0.4
        squeezer = SymplecticOp.from_mode_map(np.array([[np.cosh(r)]]), np.array([[np.sinh(r)]]))
        self.assertAlmostEqual(number_mean(apply(vacuum(1), squeezer), 0), np.sinh(r) ** 2)

    def test_pure_states_stay_pure(self):
        state = apply(vacuum(4), random_symplectic(4, seed=3))
        np.testing.assert_allclose(symplectic_eigenvalues(state), 0.5 * np.ones(4), atol=1e-9)
        self.assertTrue(uncertainty_ok(state))

    def test_unphysical_covariance(self):
        self.assertFalse(uncertainty_ok(GaussianState(np.zeros(2), 0.1 * np.identity(2))))

    def test_apply_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            apply(vacuum(2), SymplecticOp.identity(3))

    def test_mode_out_of_range(self):
        with self.assertRaises(DimensionMismatch):
            number_mean(vacuum(2), 2)


class TestGroundState(unittest.TestCase):

    def setUp(self):
        self.cfg = LatticeConfig(2, 2, 0.7)

    def test_no_particles(self):
        particle = to_particle_frame(self.cfg, groundstate(self.cfg))
        np.testing.assert_allclose(particle.cov, 0.5 * np.identity(2 * self.cfg.n_modes), atol=1e-10)
        np.testing.assert_allclose(number_means(particle), np.zeros(self.cfg.n_modes), atol=1e-10)

    def test_zero_point_energy(self):
        state = groundstate(self.cfg)
        energy = 0.5 * np.trace(free_hamiltonian_matrix(self.cfg) @ state.cov)
        self.assertAlmostEqual(energy, 0.5 * np.sum(mode_layout(self.cfg).frequencies()), places=9)

    def test_stationary_under_free_evolution(self):
        state = groundstate(self.cfg)
        evolved = apply(state, free_evolution(self.cfg, 1.3))
        np.testing.assert_allclose(evolved.cov, state.cov, atol=1e-9)

    def test_free_evolution_rotates_amplitudes(self):
        cfg = LatticeConfig(1, 2, 1.0)
        t = 0.9
        state = groundstate(cfg)
        # A coherent b(k=1) excitation picks up exp(-i omega t).
        particle = displace(to_particle_frame(cfg, state), 1, 0.5)
        excited = apply(particle, groundstate_unitary(cfg).inverse())
        amplitudes = particle_amplitudes(cfg, apply(excited, free_evolution(cfg, t)))
        omega = mode_layout(cfg).frequencies()[1]
        self.assertAlmostEqual(abs(amplitudes[1]), 0.5, places=9)
        self.assertAlmostEqual(amplitudes[1] / 0.5, np.exp(-1j * omega * t), places=9)


class TestCounterterm(unittest.TestCase):

    def test_matrix_is_symmetric(self):
        M = counterterm_hamiltonian_matrix(LatticeConfig(1, 3, 1.0), -0.4)
        np.testing.assert_allclose(M, M.T)

    def test_evolution_is_symplectic(self):
        op = counterterm_evolution(LatticeConfig(1, 2, 1.0), -1.36, 0.1)
        self.assertLess(op.symplectic_error(), 1e-10)

    def test_zero_counterterm_is_identity(self):
        op = counterterm_evolution(LatticeConfig(1, 2, 1.0), 0.0, 0.1)
        np.testing.assert_array_equal(op.matrix, np.identity(2 * 6))

    def test_mass_bookkeeping(self):
        masses = effective_mass(1.0, -0.2)
        self.assertAlmostEqual(masses.literal, 0.9)
        self.assertAlmostEqual(masses.stated, 0.8)
        self.assertEqual(set(masses.as_dict()), {"m_eff_squared_literal", "m0_squared_stated"})


if __name__ == "__main__":
    unittest.main()
