import io
import json
import os
import tempfile
import unittest
from unittest.mock import patch

try:
    from quantum_feedback import cli
except ImportError:
    import sys
    sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
    from quantum_feedback import cli
from quantum_feedback.settings import DEFAULT_SETTINGS

CONFIG_DIR = os.path.abspath(os.path.join(os.path.dirname(__file__), '..', 'configs'))
IDENTITY = os.path.join(CONFIG_DIR, 'identity_n1.json')
DEPOLARIZING = os.path.join(CONFIG_DIR, 'depolarizing.json')
FULLY_DEPOLARIZING = os.path.join(CONFIG_DIR, 'fully_depolarizing.json')


def _run(argv):
    out = io.StringIO()
    with patch('quantum_feedback.cli.load_settings', return_value=json.loads(json.dumps(DEFAULT_SETTINGS))):
        code = cli.main(argv, stdout=out)
    return code, out.getvalue()


class TestCli(unittest.TestCase):

    def test_validate_shipped_config(self):
        code, text = _run(['validate', IDENTITY])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(json.loads(text)['status'], 'ok')

    def test_validate_reports_non_trace_preserving_channel(self):
        data = {
            "channel": {"name": "kraus", "label": "leaky", "kraus": [[[0.5, 0], [0, 0.5]]]},
            "protocol": {"n": 1, "codebook": ["0", "1"],
                         "letter_states": {"0": {"bloch": [0.0, 0.0]}, "1": {"bloch": [3.141592653589793, 0.0]}}},
        }
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'leaky.json')
            with open(path, 'w') as f:
                json.dump(data, f)
            code, text = _run(['validate', path])
        self.assertEqual(code, cli.EXIT_FAILED)
        report = json.loads(text)
        self.assertEqual(report['status'], 'failed')
        self.assertTrue(any('leaky' in note for note in report['notes']))

    def test_malformed_json_exits_2(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'broken.json')
            with open(path, 'w') as f:
                f.write('{"channel": {')
            code, text = _run(['validate', path])
        self.assertEqual(code, cli.EXIT_PARSE)
        self.assertEqual(text, '')

    def test_unknown_channel_spec_exits_2(self):
        code, _ = _run(['optimize', '--channel', 'teleporter:0.1'])
        self.assertEqual(code, cli.EXIT_PARSE)

    def test_exact_simulation_of_identity_channel(self):
        code, text = _run(['simulate', IDENTITY, '--exact'])
        self.assertEqual(code, cli.EXIT_OK)
        report = json.loads(text)
        self.assertEqual(report['errors']['mode'], 'exact')
        self.assertAlmostEqual(report['errors']['average'], 0.0, places=12)
        self.assertAlmostEqual(sum(row['probability'] for row in report['table']), 1.0, places=12)

    def test_sampled_simulation_is_reproducible(self):
        argv = ['simulate', DEPOLARIZING, '--samples', '300', '--seed', '5']
        first = _run(argv)
        second = _run(argv)
        self.assertEqual(first, second)
        report = json.loads(first[1])
        self.assertEqual(report['errors']['samples'], 300)
        self.assertEqual(sum(row['count'] for row in report['table']), 300)

    def test_info_on_identity_channel(self):
        code, text = _run(['info', IDENTITY])
        self.assertEqual(code, cli.EXIT_OK)
        report = json.loads(text)
        self.assertAlmostEqual(report['rate_report']['directed_total'], 1.0, places=9)
        self.assertEqual(report['table_name'], 'directed_information_terms')
        self.assertEqual(set(report['lemma_checks']),
                         {'outcomes_below_output', 'directed_data_processing', 'final_state_variant'})

    def test_info_on_fully_depolarizing_channel(self):
        code, text = _run(['info', FULLY_DEPOLARIZING])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertAlmostEqual(json.loads(text)['rate_report']['directed_total'], 0.0, places=9)

    def test_achieve_builds_blocked_code(self):
        code, text = _run(['achieve', DEPOLARIZING, '--copies', '2'])
        self.assertEqual(code, cli.EXIT_OK)
        report = json.loads(text)
        self.assertEqual(report['errors']['copies'], 2)
        self.assertAlmostEqual(report['errors']['base_average'], 0.095, places=9)
        self.assertEqual(report['lemma_checks']['cumulative_disturbance']['failed'], 0)
        self.assertEqual(report['table_name'], 'disturbance')

    def test_enumeration_cap_exits_3(self):
        settings = json.loads(json.dumps(DEFAULT_SETTINGS))
        settings['enum_cap'] = 1
        with patch('quantum_feedback.cli.load_settings', return_value=settings):
            code = cli.main(['simulate', FULLY_DEPOLARIZING, '--exact'], stdout=io.StringIO())
        self.assertEqual(code, cli.EXIT_CAP)

    def test_verify_lemmas_inject_failure_exits_1(self):
        code, text = _run(['verify-lemmas', '--trials', '2', '--inject-failure'])
        self.assertEqual(code, cli.EXIT_FAILED)
        report = json.loads(text)
        self.assertGreater(report['lemma_checks']['hayashi_nagaoka']['failed'], 0)

    def test_verify_lemmas_default_size_exits_0(self):
        code, text = _run(['verify-lemmas', '--trials', '200', '--seed', '0'])
        self.assertEqual(code, cli.EXIT_OK)
        self.assertEqual(json.loads(text)['status'], 'ok')

    def test_csv_output_to_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'report.csv')
            code, text = _run(['simulate', IDENTITY, '--exact', '--format', 'csv', '--out', path])
            self.assertEqual(code, cli.EXIT_OK)
            self.assertEqual(text, '')
            with open(path) as f:
                header = f.readline().strip()
        self.assertEqual(header, 'outcomes,probability,word')

    def test_record_timing(self):
        _, text = _run(['validate', IDENTITY, '--record-timing'])
        self.assertIsNotNone(json.loads(text)['wall_clock_seconds'])
        _, text = _run(['validate', IDENTITY])
        self.assertIsNone(json.loads(text)['wall_clock_seconds'])

    def test_optimize_writes_code_file(self):
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'best.json')
            code, text = _run(['optimize', '--channel', 'identity', '--n', '1', '--starts', '3', '--seed', '1',
                               '--max-sweeps', '60', '--code-out', path])
            self.assertEqual(code, cli.EXIT_OK)
            with open(path) as f:
                self.assertEqual(json.load(f)['format'], 'quantum-feedback-code')
        report = json.loads(text)
        self.assertEqual(report['table_name'], 'rates_by_n')
        self.assertGreater(report['table'][0]['rate'], 0.9)


class TestSampledHistograms(unittest.TestCase):

    def test_shipped_configs_sample_close_to_exact(self):
        samples = 10000
        names = sorted(f for f in os.listdir(CONFIG_DIR) if f.endswith('.json'))
        for name in names:
            with self.subTest(config=name):
                path = os.path.join(CONFIG_DIR, name)
                exact = cli.cmd_simulate(path, exact=True).table
                sampled = cli.cmd_simulate(path, samples=samples).table
                counts = {(row['word'], row['outcomes']): row['count'] for row in sampled}
                expected = {(row['word'], row['outcomes']): row['probability'] for row in exact}
                self.assertLessEqual(set(counts), set(expected))
                self.assertEqual(sum(counts.values()), samples)
                for key, p in expected.items():
                    sigma = (samples * p * (1 - p)) ** 0.5
                    self.assertLessEqual(abs(counts.get(key, 0) - samples * p), 3 * sigma + 1, msg=str(key))


if __name__ == '__main__':
    unittest.main()
