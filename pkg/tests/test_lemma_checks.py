import os
import unittest

try:
    from quantum_feedback.lemma_checks import depolarizing_base_code, run_lemma_battery
except ImportError:
    import sys
    sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
    from quantum_feedback.lemma_checks import depolarizing_base_code, run_lemma_battery
from quantum_feedback.feedback_protocol import error_probability, validate_code

EXPECTED_LEMMAS = {
    'directed_data_processing', 'final_state_variant', 'outcomes_below_output', 'fano_rate_bound',
    'strong_subadditivity', 'trace_distance_monotonicity', 'gentle_measurement', 'hayashi_nagaoka',
    'typical_subspace_overlap', 'typical_subspace_eigenvalue_cap', 'error_recursion',
    'cumulative_disturbance',
}


class TestLemmaBattery(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.report = run_lemma_battery(trials=4, seed=2)

    def test_small_battery_passes(self):
        failed = {k: v for k, v in self.report.lemma_checks.items() if v['failed']}
        self.assertEqual(failed, {})
        self.assertEqual(self.report.status, 'ok')

    def test_every_suite_is_tallied(self):
        self.assertEqual(set(self.report.lemma_checks), EXPECTED_LEMMAS)
        self.assertEqual(self.report.lemma_checks['strong_subadditivity']['trials'], 4)
        self.assertEqual(self.report.lemma_checks['typical_subspace_overlap']['trials'], 1)
        self.assertEqual(len(self.report.table), len(EXPECTED_LEMMAS))

    def test_same_seed_same_report(self):
        again = run_lemma_battery(trials=4, seed=2)
        self.assertEqual(again.to_dict(), self.report.to_dict())

    def test_injected_failure_is_detected(self):
        report = run_lemma_battery(trials=3, seed=2, inject_failure=True)
        self.assertEqual(report.status, 'failed')
        self.assertGreater(report.lemma_checks['hayashi_nagaoka']['failed'], 0)
        self.assertTrue(any('sign-flipped' in note for note in report.notes))


class TestDefaultSizeBattery(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.report = run_lemma_battery(trials=200, seed=0)

    def test_default_battery_passes(self):
        failed = {k: v for k, v in self.report.lemma_checks.items() if v['failed']}
        self.assertEqual(failed, {})
        self.assertEqual(self.report.status, 'ok')

    def test_default_battery_trial_counts(self):
        checks = self.report.lemma_checks
        self.assertEqual(checks['strong_subadditivity']['trials'], 200)
        self.assertEqual(checks['trace_distance_monotonicity']['trials'], 200)
        self.assertEqual(checks['typical_subspace_overlap']['trials'], 20)
        self.assertEqual(checks['directed_data_processing']['trials'], 200)
        self.assertEqual(checks['hayashi_nagaoka']['trials'], 200)


class TestBaseCode(unittest.TestCase):

    def test_depolarizing_base_code(self):
        code = depolarizing_base_code(0.1)
        self.assertEqual(validate_code(code), [])
        self.assertAlmostEqual(error_probability(code).average, 0.095, places=9)


if __name__ == '__main__':
    unittest.main()
