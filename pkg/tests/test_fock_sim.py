import unittest

import numpy as np

from cvqed.circuits.circuit import BeamSplitter, OpticalCircuit
from cvqed.common.errors import ConfigError, CutoffTooSmall, DimensionMismatch, OracleTooLarge, ZeroNorm
from cvqed.fock.evolution import (
    TrotterSign,
    commutator_norm,
    exact_evolve,
    expectation,
    trotter_error_bound,
    trotter_evolve,
    trotter_step,
)
from cvqed.fock.hamiltonians import (
    PhotonCoupling,
    build_H0,
    build_HI,
    build_Hct,
    build_hamiltonians,
    build_quadrature_ops,
    charge_op,
    free_two_point,
    gauss_constraint_op,
    gauss_law_op,
    hermiticity_error,
    transverse_kernel,
)
from cvqed.fock.space import FockSpace, Frame
from cvqed.fock.states import (
    WavepacketSpec,
    apply_circuit,
    make_profile,
    measure_numbers,
    prepare_excited,
    prepare_ground_state,
    single_photon,
)
from cvqed.lattice import LatticeConfig, all_coords, mode_layout, momentum_vector, site_index


class TestFockSpace(unittest.TestCase):

    def setUp(self):
        self.layout = mode_layout(LatticeConfig(1, 2, 1.0))

    def test_dimension(self):
        space = FockSpace(self.layout, 2, modes=[0, 1, 2])
        self.assertEqual(space.dim, 27)
        self.assertEqual(space.modes, [0, 1, 2])

    def test_first_mode_is_most_significant(self):
        space = FockSpace(self.layout, 2, modes=[0, 1])
        self.assertEqual(space.basis_index((1, 0)), 3)
        self.assertEqual(space.basis_index((0, 1)), 1)
        self.assertEqual(tuple(space.occupations[5]), (1, 2))

    def test_ladder(self):
        space = FockSpace(self.layout, 3, modes=[0, 1])
        psi = space.ladder(0) @ space.basis_state((2, 1))
        np.testing.assert_allclose(psi, np.sqrt(2.0) * space.basis_state((1, 1)))
        np.testing.assert_allclose(space.ladder(1) @ space.basis_state((2, 0)), np.zeros(16))

    def test_cutoff_too_small(self):
        with self.assertRaises(CutoffTooSmall):
            FockSpace(self.layout, 0)

    def test_oracle_limit(self):
        with self.assertRaises(OracleTooLarge):
            FockSpace(self.layout, 4, oracle_limit=1000)

    def test_inactive_mode(self):
        space = FockSpace(self.layout, 1, modes=[0])
        with self.assertRaises(DimensionMismatch):
            space.ladder(1)

    def test_bad_occupation(self):
        space = FockSpace(self.layout, 1, modes=[0, 1])
        with self.assertRaises(DimensionMismatch):
            space.basis_index((2, 0))


class TestHamiltonians(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        # L = 3 keeps the cubic current; at L = 2 the symmetric gradient vanishes.
        cls.cfg = LatticeConfig(1, 3, 1.0)
        cls.space = FockSpace(mode_layout(cls.cfg), 1)
        cls.hams = build_hamiltonians(cls.space, cls.cfg)

    def test_pieces_are_hermitian(self):
        for op in (self.hams.h0, self.hams.cubic, self.hams.quartic, self.hams.ct_unit):
            self.assertLess(hermiticity_error(op), 1e-12)

    def test_h0_is_diagonal_in_particle_frame(self):
        diagonal = self.hams.h0_diagonal
        self.assertIsNotNone(diagonal)
        omegas = self.space.layout.frequencies()
        occupation = [0] * self.space.layout.n_modes
        occupation[1] = occupation[4] = 1
        self.assertAlmostEqual(diagonal[self.space.basis_index(occupation)].real, omegas[1] + omegas[4])

    def test_cubic_survives_on_three_sites(self):
        self.assertGreater(self.hams.cubic.nnz, 0)

    def test_charge_is_conserved(self):
        Q = charge_op(self.space)
        self.assertLess(commutator_norm(Q, self.hams.total(0.5, -0.3)), 1e-10)

    def test_vacuum_two_point(self):
        value = expectation(self.hams.ct_unit, self.space.vacuum()).real
        self.assertAlmostEqual(value, 0.5 * self.cfg.n_sites * free_two_point(self.cfg), places=10)

    def test_free_two_point(self):
        cfg = LatticeConfig(1, 2, 1.0)
        self.assertAlmostEqual(free_two_point(cfg), 0.5 * (0.5 + 0.5 / np.sqrt(5.0)))

    def test_builders_match_hamiltonian_set(self):
        self.assertLess(abs(build_H0(self.space, self.cfg) - self.hams.h0).max(), 1e-12)
        self.assertLess(abs(build_HI(self.space, self.cfg, 0.3) - self.hams.interaction(0.3)).max(), 1e-12)
        self.assertLess(abs(build_Hct(self.space, self.cfg, -1.36) - self.hams.counterterm(-1.36)).max(), 1e-12)
        self.assertEqual(build_HI(self.space, self.cfg, 0.0).nnz, 0)
        self.assertEqual(build_Hct(self.space, self.cfg, 0.0).nnz, 0)

    def test_quadrature_ops_are_cached(self):
        ops = build_quadrature_ops(self.space)
        self.assertIs(ops.phi(1), ops.phi(1))
        self.assertEqual(ops.gauge(0, 2).shape, (self.space.dim, self.space.dim))
        self.assertLess(hermiticity_error(ops.gauge(0, 2)), 1e-12)

    def test_free_gauss_law_telescopes(self):
        total = sum(gauss_law_op(self.space, self.cfg, x, 0.0) for x in range(self.cfg.n_sites))
        self.assertLess(abs(total).max(), 1e-12)
        value = expectation(gauss_law_op(self.space, self.cfg, 0, 0.0), self.space.vacuum())
        self.assertAlmostEqual(abs(value), 0.0)

    def test_vacuum_satisfies_constraint(self):
        for k in range(self.cfg.n_sites):
            psi = gauss_constraint_op(self.space, self.cfg, k) @ self.space.vacuum()
            self.assertEqual(np.linalg.norm(psi), 0.0)

    def test_interaction_commutes_with_constraint(self):
        self.assertIs(self.hams.coupling, PhotonCoupling.TRANSVERSE)
        for k in range(1, self.cfg.n_sites):
            constraint = gauss_constraint_op(self.space, self.cfg, k)
            self.assertLess(commutator_norm(constraint, self.hams.interaction(0.3)), 1e-10)

    def test_full_coupling_breaks_constraint(self):
        full = build_hamiltonians(self.space, self.cfg, PhotonCoupling.FULL)
        constraint = gauss_constraint_op(self.space, self.cfg, 1)
        self.assertGreater(commutator_norm(constraint, full.interaction(0.3)), 1e-3)
        self.assertLess(commutator_norm(charge_op(self.space), full.interaction(0.3)), 1e-10)


class TestTransverseKernel(unittest.TestCase):

    def setUp(self):
        self.cfg = LatticeConfig(2, 2, 1.0)
        self.kernel = transverse_kernel(self.cfg)
        coords = np.array(all_coords(self.cfg.dim, self.cfg.extent))
        self.k = momentum_vector((1, 0), self.cfg.extent)
        self.wave = np.cos(coords @ self.k)

    def project(self, field):
        return np.einsum("ijxy,jy->ix", self.kernel, field)

    def test_longitudinal_wave_is_removed(self):
        field = np.outer(self.k / np.linalg.norm(self.k), self.wave)
        np.testing.assert_allclose(self.project(field), 0.0, atol=1e-12)

    def test_transverse_wave_passes(self):
        field = np.outer([0.0, 1.0], self.wave)
        np.testing.assert_allclose(self.project(field), field, atol=1e-12)

    def test_uniform_field_passes(self):
        field = np.outer([1.0, 0.0], np.ones(self.cfg.n_sites))
        np.testing.assert_allclose(self.project(field), field, atol=1e-12)

    def test_symmetric(self):
        np.testing.assert_allclose(self.kernel, self.kernel.transpose(1, 0, 3, 2), atol=1e-12)


class TestGaussConstraint(unittest.TestCase):

    def setUp(self):
        self.cfg = LatticeConfig(2, 2, 1.0)
        layout = mode_layout(self.cfg)
        self.space = FockSpace(layout, 1, modes=layout.photon_modes)
        self.k = site_index((1, 0), 2)

    def test_transverse_photon(self):
        psi = single_photon(self.space, self.k, [0.0, 1.0])
        self.assertLess(np.linalg.norm(gauss_constraint_op(self.space, self.cfg, self.k) @ psi), 1e-12)

    def test_longitudinal_photon(self):
        psi = single_photon(self.space, self.k, [1.0, 0.0])
        self.assertAlmostEqual(np.linalg.norm(gauss_constraint_op(self.space, self.cfg, self.k) @ psi), np.pi)

    def test_polarization_size(self):
        with self.assertRaises(DimensionMismatch):
            single_photon(self.space, self.k, [1.0])


class TestEvolution(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cfg = LatticeConfig(1, 2, 1.0)
        cls.space = FockSpace(mode_layout(cls.cfg), 1)
        cls.hams = build_hamiltonians(cls.space, cls.cfg)

    def test_exact_evolve_phase(self):
        psi = self.space.basis_state((0, 1, 0, 0, 0, 0))
        energy = self.space.layout.frequencies()[1]
        out = exact_evolve(self.hams.h0, 0.7, psi)
        np.testing.assert_allclose(out, np.exp(-0.7j * energy) * psi, atol=1e-12)

    def test_exact_evolve_oracle_limit(self):
        with self.assertRaises(OracleTooLarge):
            exact_evolve(self.hams.h0, 1.0, self.space.vacuum(), oracle_limit=10)

    def test_free_step_matches_exact(self):
        psi = self.space.basis_state((1, 0, 0, 1, 0, 0))
        for sign in TrotterSign:
            with self.subTest(sign=sign):
                stepped = trotter_step(self.hams, 0.0, 0.0, 0.05, psi, sign)
                exact = exact_evolve(self.hams.h0, -sign.value * 0.05, psi)
                np.testing.assert_allclose(stepped, exact, atol=1e-12)

    def test_trotter_converges_to_exact(self):
        psi = self.space.basis_state((1, 0, 0, 0, 0, 0))
        H = self.hams.total(0.4, -0.2)
        exact = exact_evolve(H, -0.5, psi)
        errors = [
            np.linalg.norm(trotter_evolve(self.hams, 0.4, -0.2, 0.5, n, psi) - exact)
            for n in (5, 10, 20)
        ]
        self.assertLess(errors[1], errors[0])
        self.assertLess(errors[2], errors[1])

    def test_trotter_preserves_norm(self):
        psi = self.space.basis_state((1, 0, 0, 0, 0, 0))
        out = trotter_evolve(self.hams, 0.4, -1.36, 0.3, 6, psi, TrotterSign.PHYSICAL)
        self.assertAlmostEqual(np.linalg.norm(out), 1.0, places=10)

    def test_error_bound(self):
        self.assertEqual(trotter_error_bound(self.hams, 0.0, 0.0, 0.1, 10), 0.0)
        small = trotter_error_bound(self.hams, 0.3, -0.2, 0.05, 10)
        large = trotter_error_bound(self.hams, 0.3, -0.2, 0.1, 10)
        self.assertAlmostEqual(large, 4.0 * small)


class TestStates(unittest.TestCase):

    def setUp(self):
        self.cfg = LatticeConfig(1, 2, 1.0)
        self.layout = mode_layout(self.cfg)

    def test_particle_ground_state_is_vacuum(self):
        space = FockSpace(self.layout, 1, modes=self.layout.scalar_modes)
        np.testing.assert_array_equal(prepare_ground_state(space, self.cfg), space.vacuum())

    def test_position_ground_state_has_no_particles(self):
        space = FockSpace(self.layout, 4, Frame.POSITION, modes=self.layout.scalar_modes)
        psi = prepare_ground_state(space, self.cfg)
        self.assertAlmostEqual(np.linalg.norm(psi), 1.0)
        for mode in space.modes:
            self.assertLess(np.linalg.norm(space.particle_ladder(mode) @ psi) ** 2, 0.05)

    def test_beam_splitter_swaps_photons(self):
        space = FockSpace(self.layout, 1, Frame.POSITION, modes=[0, 1])
        circuit = OpticalCircuit(self.layout.n_modes, [BeamSplitter(0, 1, np.pi / 2, 0.0)])
        out = apply_circuit(space, circuit, space.basis_state((1, 0)))
        self.assertAlmostEqual(abs(np.vdot(space.basis_state((0, 1)), out)), 1.0)

    def test_circuit_straddling_active_modes(self):
        space = FockSpace(self.layout, 1, Frame.POSITION, modes=[0])
        circuit = OpticalCircuit(self.layout.n_modes, [BeamSplitter(0, 1, 0.3, 0.0)])
        with self.assertRaises(DimensionMismatch):
            apply_circuit(space, circuit, space.vacuum())

    def test_sharp_wavepacket(self):
        space = FockSpace(self.layout, 1, modes=self.layout.scalar_modes)
        spec = WavepacketSpec.from_config(self.cfg, [{"kind": "c", "peak": [1]}])
        psi = prepare_excited(space, space.vacuum(), spec)
        np.testing.assert_allclose(np.abs(psi), np.abs(space.basis_state((0, 0, 0, 1))))
        self.assertEqual(spec.validate(self.cfg), [])

    def test_double_occupation_needs_cutoff(self):
        space = FockSpace(self.layout, 1, modes=self.layout.scalar_modes)
        spec = WavepacketSpec.from_config(self.cfg, [{"kind": "b"}, {"kind": "b"}])
        with self.assertRaises(ZeroNorm):
            prepare_excited(space, space.vacuum(), spec)

    def test_profile_errors(self):
        for entry in ({"kind": "a"}, {"shape": "square"}, {"peak": [0, 0]}, {"shape": "gaussian", "width": 0}):
            with self.subTest(entry=entry):
                with self.assertRaises(ConfigError):
                    make_profile(self.cfg, entry)

    def test_spread_profile_warns(self):
        cfg = LatticeConfig(1, 6, 1.0)
        spec = WavepacketSpec.from_config(cfg, [{"shape": "weights", "weights": [[1.0, 0.0]] * 6}])
        warnings = spec.validate(cfg)
        self.assertEqual(len(warnings), 2)

    def test_measurement(self):
        space = FockSpace(self.layout, 2, modes=self.layout.scalar_modes)
        result = measure_numbers(space.basis_state((2, 0, 1, 0)), space)
        np.testing.assert_allclose(result.means, [2, 0, 1, 0])
        self.assertEqual(result.classify()["antiscalar"], {"C[0]": 1.0, "C[1]": 0.0})
        self.assertEqual(result.occupied(), {"B[0]": 2.0, "C[0]": 1.0})
        samples = result.sample(5, seed=3)
        self.assertEqual(samples.shape, (5, 4))
        self.assertTrue((samples == [2, 0, 1, 0]).all())

    def test_sampling_is_seeded(self):
        space = FockSpace(self.layout, 1, modes=[0, 1])
        psi = (space.basis_state((1, 0)) + space.basis_state((0, 1))) / np.sqrt(2.0)
        result = measure_numbers(psi, space)
        np.testing.assert_array_equal(result.sample(20, seed=5), result.sample(20, seed=5))
        np.testing.assert_allclose(result.means, [0.5, 0.5])


if __name__ == "__main__":
    unittest.main()
