import os
import unittest
from unittest.mock import patch

import numpy as np

from cvqed.common.constants import CONSTRAINT_EPS, REFERENCE_DELTA_M
from cvqed.common.errors import ConstraintViolation, InvalidWindow, OracleTooLarge
from cvqed.fock.evolution import TrotterSign
from cvqed.fock.hamiltonians import PhotonCoupling
from cvqed.fock.space import Frame
from cvqed.fock.states import WavepacketSpec
from cvqed.lattice import LatticeConfig
from cvqed.renorm.integrals import LoopIntegralResult
from cvqed.scattering import (
    FULL_COUPLING_NOTE,
    PHOTON_CAVEAT_1D,
    UNCOMPUTE_NOTE,
    DeltaMSource,
    amplitude_overlap,
    build_schedule,
    run_scattering,
    sweep,
    thread_count,
    trotter_order,
)


class TestCouplingSchedule(unittest.TestCase):

    def setUp(self):
        self.schedule = build_schedule(1.0, 0.5, 0.1, 0.3)

    def test_endpoints(self):
        self.assertEqual(self.schedule.e_squared(-1.0), 0.0)
        self.assertEqual(self.schedule.e_squared(1.0), 0.0)
        self.assertAlmostEqual(self.schedule.e_squared(-0.5), 0.09)
        self.assertAlmostEqual(self.schedule.e_squared(0.0), 0.09)

    def test_ramp_midpoint(self):
        self.assertAlmostEqual(self.schedule.e_squared(-0.75), 0.045)

    def test_mirror_symmetry(self):
        for t in np.linspace(-1.0, 1.0, 17):
            self.assertAlmostEqual(self.schedule.e_squared(t), self.schedule.e_squared(-t))

    def test_counterterm_follows_coupling(self):
        self.assertAlmostEqual(self.schedule.delta_m(-0.75), REFERENCE_DELTA_M * 0.045)
        self.assertEqual(self.schedule.dm_source, DeltaMSource.REFERENCE)

    def test_negative_target_keeps_sign(self):
        schedule = build_schedule(1.0, 0.5, 0.1, -0.3)
        self.assertAlmostEqual(schedule.e(0.0), -0.3)
        self.assertAlmostEqual(schedule.e_squared(0.0), 0.09)

    def test_segments(self):
        self.assertEqual([s.n_steps for s in self.schedule.segments], [5, 10, 5])
        self.assertEqual(self.schedule.n_steps, 20)

    def test_steps_sample_midpoints(self):
        steps = list(self.schedule.steps())
        self.assertEqual(len(steps), 20)
        start, dt, e, dm = steps[0]
        self.assertAlmostEqual(start, -1.0)
        self.assertAlmostEqual(e**2, 0.05 / 0.5 * 0.09)
        self.assertAlmostEqual(dm, REFERENCE_DELTA_M * e**2)
        self.assertAlmostEqual(sum(step[1] for step in steps), 2.0)

    def test_non_dividing_step(self):
        with self.assertLogs("cvqed.scattering", level="WARNING"):
            schedule = build_schedule(1.0, 0.5, 0.3, 0.3)
            segments = schedule.segments
        self.assertEqual([s.n_steps for s in segments], [2, 3, 2])
        self.assertAlmostEqual(segments[0].dt, 0.25)

    def test_invalid_windows(self):
        for args in ((0.5, 0.5, 0.1), (1.0, 0.0, 0.1), (1.0, 0.5, 0.6), (1.0, 0.5, 0.0), (1.0, -0.5, 0.1)):
            with self.subTest(args=args):
                with self.assertRaises(InvalidWindow):
                    build_schedule(*args, e_target=0.3)

    def test_with_dt(self):
        self.assertEqual(self.schedule.with_dt(0.05).n_steps, 40)
        with self.assertRaises(InvalidWindow):
            self.schedule.with_dt(0.7)

    def test_override_source(self):
        schedule = build_schedule(1.0, 0.5, 0.1, 0.3, dm_coefficient=-0.8, dm_source="override")
        self.assertEqual(schedule.dm_coefficient, -0.8)
        with self.assertRaises(InvalidWindow):
            build_schedule(1.0, 0.5, 0.1, 0.3, dm_source="override")
        with self.assertRaises(InvalidWindow):
            build_schedule(1.0, 0.5, 0.1, 0.3, dm_source="guess")

    @patch("cvqed.scattering.delta_m", return_value=LoopIntegralResult(-1.2, 1e-5, 10))
    def test_computed_source(self, mock_delta_m):
        schedule = build_schedule(1.0, 0.5, 0.1, 0.3, dm_source=DeltaMSource.COMPUTED, m=0.4)
        mock_delta_m.assert_called_once_with(1.0, 0.4)
        self.assertEqual(schedule.dm_coefficient, -1.2)
        self.assertEqual(schedule.as_dict()["dm_source"], "computed")


class TestRunScattering(unittest.TestCase):

    def setUp(self):
        self.cfg = LatticeConfig(1, 2, 1.0)
        self.in_spec = WavepacketSpec.from_config(self.cfg, [{"kind": "b", "peak": [0]}])
        self.schedule = build_schedule(0.4, 0.2, 0.1, 0.5)

    def test_free_theory_is_identity(self):
        schedule = build_schedule(0.4, 0.2, 0.1, 0.0)
        report = run_scattering(self.cfg, schedule, self.in_spec, cutoff=1, n_samples=10)
        self.assertAlmostEqual(report.survival, 1.0, places=10)
        np.testing.assert_allclose(report.out_measurement.means, report.in_measurement.means, atol=1e-10)
        self.assertEqual(list(report.out_measurement.occupied()), ["B[0]"])
        self.assertTrue((report.samples == [1, 0, 0, 0, 0, 0]).all())

    def test_charge_is_conserved(self):
        report = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1)
        self.assertAlmostEqual(report.charge_in, 1.0)
        self.assertLess(report.charge_drift, 1e-9)
        self.assertEqual(len(report.trace), self.schedule.n_steps + 1)
        for row in report.trace:
            self.assertAlmostEqual(row["norm"], 1.0, places=9)

    def test_report_document(self):
        report = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1, config={"seed": 0})
        document = report.as_dict()
        self.assertEqual(document["config"], {"seed": 0})
        self.assertEqual(document["frame"], "particle")
        self.assertEqual(document["sign"], "literal")
        self.assertIn(UNCOMPUTE_NOTE, document["notes"])
        self.assertIn(PHOTON_CAVEAT_1D, document["notes"])
        self.assertEqual(set(document["mass"]), {"m_eff_squared_literal", "m0_squared_stated"})
        self.assertAlmostEqual(sum(document["out_state"]["distributions"]["B[0]"]), 1.0)
        self.assertGreaterEqual(document["trotter_bound"], 0.0)

    def test_reproducible(self):
        first = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1, seed=7, n_samples=50)
        second = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1, seed=7, n_samples=50)
        np.testing.assert_array_equal(first.samples, second.samples)
        self.assertEqual(first.survival, second.survival)

    def test_physical_sign(self):
        report = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1, sign=TrotterSign.PHYSICAL)
        self.assertEqual(report.sign, "physical")
        self.assertLess(report.charge_drift, 1e-9)

    def test_constraint_excursion_warns(self):
        report = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1, constraint_eps=-1.0)
        self.assertTrue(report.constraint_violated)
        self.assertTrue(any("constraint trace" in w for w in report.warnings))

    def test_strict_constraint(self):
        with self.assertRaises(ConstraintViolation):
            run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1, constraint_eps=-1.0, strict=True)

    def test_oracle_limit(self):
        with self.assertRaises(OracleTooLarge):
            run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1, oracle_limit=10)

    def test_truncation_check_skipped_over_budget(self):
        report = run_scattering(
            self.cfg, self.schedule, self.in_spec, cutoff=1, truncation_check=True, oracle_limit=64
        )
        self.assertIsNone(report.truncation_delta)
        self.assertTrue(any("truncation check skipped" in w for w in report.warnings))

    def test_truncation_check(self):
        report = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1, truncation_check=True)
        self.assertIsNotNone(report.truncation_delta)
        self.assertGreaterEqual(report.truncation_delta, 0.0)

    def test_position_frame(self):
        report = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=2, frame=Frame.POSITION, n_samples=5)
        self.assertEqual(report.frame, "position")
        self.assertGreater(report.in_measurement.means[0], 0.5)
        self.assertAlmostEqual(report.out_measurement.probabilities.sum(), 1.0)

    def test_full_coupling_emits_longitudinal_photons(self):
        report = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1, coupling=PhotonCoupling.FULL)
        transverse = run_scattering(self.cfg, self.schedule, self.in_spec, cutoff=1)
        self.assertGreater(report.constraint_max, 1e-6)
        self.assertEqual(report.coupling, "full")
        self.assertIn(FULL_COUPLING_NOTE, report.notes)
        self.assertLess(transverse.constraint_max, 1e-12)
        self.assertEqual(transverse.as_dict()["coupling"], "transverse")


class TestReferenceConfiguration(unittest.TestCase):
    """d=1, L=2, n_max=4, dt=0.02 on the full schedule."""

    @classmethod
    def setUpClass(cls):
        cfg = LatticeConfig(1, 2, 1.0)
        spec = WavepacketSpec.from_config(cfg, [{"kind": "b", "peak": [0]}, {"kind": "c", "peak": [1]}])
        cls.report = run_scattering(cfg, build_schedule(2.0, 1.0, 0.02, 0.3), spec, cutoff=4, n_samples=0)
        cls.halved = run_scattering(cfg, build_schedule(2.0, 1.0, 0.01, 0.3), spec, cutoff=4, n_samples=0)

    def test_constraint_bound(self):
        self.assertLessEqual(self.report.constraint_max, CONSTRAINT_EPS)
        self.assertFalse(self.report.constraint_violated)

    def test_constraint_does_not_grow_with_smaller_step(self):
        self.assertLessEqual(self.halved.constraint_max, max(self.report.constraint_max, 1e-12))

    def test_charge_drift(self):
        self.assertAlmostEqual(self.report.charge_in, 0.0)
        self.assertLessEqual(self.report.charge_drift, 1e-10)
        self.assertLessEqual(self.halved.charge_drift, 1e-10)

    def test_norm(self):
        for row in self.report.trace:
            self.assertAlmostEqual(row["norm"], 1.0, places=10)


class TestAmplitudes(unittest.TestCase):

    def setUp(self):
        self.cfg = LatticeConfig(1, 2, 1.0)
        self.b0 = WavepacketSpec.from_config(self.cfg, [{"kind": "b", "peak": [0]}])
        self.c0 = WavepacketSpec.from_config(self.cfg, [{"kind": "c", "peak": [0]}])

    def test_free_amplitudes(self):
        schedule = build_schedule(0.4, 0.2, 0.1, 0.0)
        self.assertAlmostEqual(abs(amplitude_overlap(self.cfg, schedule, self.b0, self.b0, cutoff=1)), 1.0)
        self.assertAlmostEqual(abs(amplitude_overlap(self.cfg, schedule, self.b0, self.c0, cutoff=1)), 0.0)

    def test_exact_and_split_agree_at_small_step(self):
        gaps = []
        for dt in (0.02, 0.01):
            schedule = build_schedule(0.4, 0.2, dt, 0.3)
            split = amplitude_overlap(self.cfg, schedule, self.b0, self.b0, cutoff=1)
            exact = amplitude_overlap(self.cfg, schedule, self.b0, self.b0, cutoff=1, exact=True)
            gaps.append(abs(split - exact))
        self.assertLess(gaps[0], 1e-2)
        self.assertLess(gaps[1], gaps[0])

    def test_charge_selection(self):
        schedule = build_schedule(0.4, 0.2, 0.1, 0.5)
        self.assertAlmostEqual(abs(amplitude_overlap(self.cfg, schedule, self.b0, self.c0, cutoff=1)), 0.0)

    def test_trotter_order(self):
        schedule = build_schedule(0.4, 0.2, 0.04, 0.5)
        fit = trotter_order(self.cfg, schedule, self.b0, [0.04, 0.02, 0.01], cutoff=2)
        self.assertLess(fit.errors[1], fit.errors[0])
        self.assertLess(fit.errors[2], fit.errors[1])
        self.assertAlmostEqual(fit.slope, 1.0, delta=0.1)
        self.assertEqual(fit.as_rows()[0], {"dt": 0.04, "error": fit.errors[0]})


class TestSweep(unittest.IsolatedAsyncioTestCase):

    async def test_sweep_keeps_order(self):
        with patch("cvqed.scattering.run_scattering", side_effect=lambda **kw: kw["tag"]) as mock_run:
            results = await sweep([{"tag": n} for n in range(5)], threads=2)
        self.assertEqual(results, [0, 1, 2, 3, 4])
        self.assertEqual(mock_run.call_count, 5)

    def test_thread_count_from_environment(self):
        with patch.dict(os.environ, {"CVQED_THREADS": "3"}):
            self.assertEqual(thread_count(), 3)
        with patch.dict(os.environ, {"CVQED_THREADS": "many"}):
            self.assertGreaterEqual(thread_count(), 1)


if __name__ == "__main__":
    unittest.main()
