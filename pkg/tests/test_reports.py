import io
import os
import tempfile
import unittest

import pandas as pd

try:
    from quantum_feedback.reports import RunReport, emit, parse_structured, write_report
except ImportError:
    import sys
    sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
    from quantum_feedback.reports import RunReport, emit, parse_structured, write_report


def _sample_report():
    report = RunReport(command='simulate', seed=7, channel='depolarizing(0.1)', source='configs/x.json')
    report.errors = {'average': 0.095, 'maximum': 0.095}
    report.rate_report = {'rate': 1.0, 'directed_information': 0.5}
    report.table_name = 'outcome_histogram'
    report.table = [{'word': '0', 'outcomes': '[]', 'count': 12},
                    {'word': '1', 'outcomes': '[]', 'count': 8}]
    report.notes.append('exact evaluation')
    return report


class TestReports(unittest.TestCase):

    def test_structured_round_trip_is_byte_identical(self):
        text = emit(_sample_report(), 'structured')
        again = emit(parse_structured(text), 'structured')
        self.assertEqual(text, again)

    def test_emit_is_deterministic(self):
        self.assertEqual(emit(_sample_report(), 'text'), emit(_sample_report(), 'text'))

    def test_csv_table(self):
        text = emit(_sample_report(), 'csv')
        frame = pd.read_csv(io.StringIO(text))
        self.assertEqual(list(frame.columns), ['count', 'outcomes', 'word'])
        self.assertEqual(frame['count'].sum(), 20)

    def test_csv_without_table_lists_fields(self):
        report = RunReport(command='validate')
        frame = pd.read_csv(io.StringIO(emit(report, 'csv')))
        self.assertEqual(list(frame.columns), ['field', 'value'])
        self.assertIn('command', set(frame['field']))

    def test_text_has_flattened_keys(self):
        text = emit(_sample_report(), 'text')
        self.assertIn('errors.average: 0.095', text)
        self.assertIn('outcome_histogram:', text)

    def test_unknown_format(self):
        with self.assertRaises(ValueError):
            emit(_sample_report(), 'yaml')

    def test_failed_lemma_marks_report_failed(self):
        report = RunReport(command='verify-lemmas')
        report.add_lemma('ok_lemma', 10, 10, 0.1, 1e-9)
        self.assertEqual(report.status, 'ok')
        report.add_lemma('bad_lemma', 10, 9, -0.2, 1e-9)
        self.assertEqual(report.status, 'failed')
        self.assertEqual(report.lemma_checks['bad_lemma']['failed'], 1)

    def test_write_report_to_file_and_stream(self):
        report = _sample_report()
        stream = io.StringIO()
        write_report(report, 'structured', stream=stream)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'report.json')
            write_report(report, 'structured', path=path)
            with open(path) as f:
                self.assertEqual(f.read(), stream.getvalue())


if __name__ == '__main__':
    unittest.main()
