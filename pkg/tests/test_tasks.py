import os
import unittest
from unittest.mock import patch

try:
    from quantum_feedback.tasks import _run_info_logic, _run_optimize_logic, _run_verify_lemmas_logic
except ImportError:
    import sys
    sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
    from quantum_feedback.tasks import _run_info_logic, _run_optimize_logic, _run_verify_lemmas_logic
from quantum_feedback.config import ConfigError
from quantum_feedback.cq_state import CapExceededError

CONFIG_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'configs'))


class TestTaskLogic(unittest.TestCase):

    def test_info_returns_report_dict(self):
        result = _run_info_logic(os.path.join(CONFIG_DIR, 'identity_n1.json'))
        self.assertEqual(result['command'], 'info')
        self.assertEqual(result['status'], 'ok')
        self.assertAlmostEqual(result['rate_report']['directed_total'], 1.0, places=9)

    def test_info_config_error_becomes_failure_dict(self):
        with patch('quantum_feedback.tasks.cmd_info', side_effect=ConfigError('$.channel', 'missing')):
            result = _run_info_logic('whatever.json')
        self.assertEqual(result['status'], 'error')
        self.assertIn('$.channel', result['notes'][0])

    def test_optimize_returns_rates(self):
        result = _run_optimize_logic('depolarizing:1.0', ns=[1], starts=2, seed=0)
        self.assertEqual(result['command'], 'optimize')
        self.assertEqual(result['table'][0]['n'], 1)
        self.assertLessEqual(result['table'][0]['rate'], 1e-6)

    def test_optimize_bad_channel(self):
        result = _run_optimize_logic('nonsense:0.1')
        self.assertEqual(result['status'], 'error')

    def test_verify_lemmas_small_run(self):
        result = _run_verify_lemmas_logic(trials=2, seed=1)
        self.assertEqual(result['command'], 'verify-lemmas')
        self.assertIn('hayashi_nagaoka', result['lemma_checks'])

    def test_verify_lemmas_cap_failure(self):
        with patch('quantum_feedback.tasks.cmd_verify_lemmas', side_effect=CapExceededError('too many')):
            result = _run_verify_lemmas_logic(trials=2)
        self.assertEqual(result, {'command': 'verify-lemmas', 'status': 'error', 'notes': ['too many']})


if __name__ == '__main__':
    unittest.main()
