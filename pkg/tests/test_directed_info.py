import os
import unittest
from dataclasses import replace

import numpy as np

try:
    from quantum_feedback.directed_info import (
        RateReport, converse_report, directed_information, directed_information_final, fano_bound,
        message_information, verify_ddpi,
    )
except ImportError:
    import sys
    sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
    from quantum_feedback.directed_info import (
        RateReport, converse_report, directed_information, directed_information_final, fano_bound,
        message_information, verify_ddpi,
    )
from quantum_feedback.channels import depolarizing, identity_channel
from quantum_feedback.code_builders import (
    all_binary_words, placeholder_decoder, product_states, trivial_measurement, with_pgm_decoder,
)
from quantum_feedback.cq_state import CqBranch, CqState, mutual_information
from quantum_feedback.feedback_protocol import Codebook, FeedbackCode, ehs_states
from quantum_feedback.random_objects import random_causal_code, random_channel, random_ket

KETS = {0: np.array([1, 0]), 1: np.array([0, 1])}


def _product_code(channel, n, kets=KETS, probabilities=None):
    words = all_binary_words(n)
    probabilities = probabilities or (1.0 / len(words),) * len(words)
    measurements = tuple(trivial_measurement(2 ** j) for j in range(1, n)) + (placeholder_decoder(2 ** n),)
    code = FeedbackCode(channel, Codebook(2, words), probabilities, tuple(product_states(words, kets)),
                        measurements)
    return with_pgm_decoder(code)


def _letters_to_output_information(code):
    """I(A_1..A_n : Z_1..Z_n) on the final state, no feedback involved."""
    final = ehs_states(code)[-1]
    n = code.n
    return mutual_information(final, [f'A{j}' for j in range(1, n + 1)], list(range(n)))


class TestDirectedInformation(unittest.TestCase):
    def test_identity_single_use_is_one_bit(self):
        report = directed_information(_product_code(identity_channel(), 1))
        self.assertAlmostEqual(report.directed_total, 1.0, places=10)
        self.assertEqual(report.n, 1)

    def test_fully_depolarizing_carries_nothing(self):
        report = directed_information(_product_code(depolarizing(1.0), 2))
        for term in report.per_round + report.final_per_round:
            self.assertLessEqual(abs(term), 1e-10)

    def test_identity_two_uses(self):
        report = directed_information(_product_code(identity_channel(), 2))
        self.assertAlmostEqual(report.directed_total, 2.0, places=10)
        self.assertEqual(len(report.per_round), 2)

    def test_trivial_feedback_reduces_to_mutual_information(self):
        rng = np.random.default_rng(40)
        for _ in range(50):
            n = int(rng.integers(1, 4))
            kets = {a: random_ket(rng, 2) for a in (0, 1)}
            probs = tuple(rng.dirichlet(np.ones(2 ** n)))
            code = _product_code(random_channel(rng, 2, 2, 2), n, kets, probs)
            self.assertAlmostEqual(directed_information(code).directed_total,
                                   _letters_to_output_information(code), delta=1e-9)

    def test_final_state_variant_matches_report(self):
        code = random_causal_code(np.random.default_rng(41), 3)
        report = directed_information(code)
        self.assertAlmostEqual(directed_information_final(code), report.final_total, places=12)
        self.assertLessEqual(report.final_total, report.directed_total + 1e-9)


class TestConverseChain(unittest.TestCase):
    def test_ddpi_on_random_causal_codes(self):
        rng = np.random.default_rng(77)
        for _ in range(200):
            code = random_causal_code(rng, int(rng.integers(1, 4)))
            result = verify_ddpi(code)
            self.assertTrue(result.holds, msg=f"slack {result.slack}")

    def test_message_information_on_identity(self):
        code = _product_code(identity_channel(), 1)
        to_output, to_outcomes = message_information(code)
        self.assertAlmostEqual(to_output, 1.0, places=10)
        self.assertAlmostEqual(to_outcomes, 1.0, places=10)

    def test_repeated_messages_share_a_codeword(self):
        code = _product_code(identity_channel(), 1)
        to_output, _ = message_information(code, [0, 0, 1, 1])
        self.assertAlmostEqual(to_output, 1.0, places=10)

    def test_fano_bound_for_uniform_messages(self):
        rng = np.random.default_rng(78)
        for _ in range(10):
            code = random_causal_code(rng, int(rng.integers(1, 4)))
            size = code.codebook.size
            uniform = replace(code, probabilities=(1.0 / size,) * size)
            rate = np.log2(size) / code.n
            self.assertLessEqual(rate, fano_bound(uniform) + 1e-9)

    def test_converse_report_fields(self):
        code = _product_code(depolarizing(0.1), 1)
        report = converse_report(code)
        self.assertAlmostEqual(report.rate, 1.0)
        self.assertLessEqual(report.message_to_outcomes, report.message_to_output + 1e-9)
        self.assertLessEqual(report.message_to_output, report.directed_total + 1e-9)
        self.assertAlmostEqual(report.average_error, 0.095, places=10)
        restored = RateReport.from_dict(report.to_dict())
        self.assertEqual(restored, report)


if __name__ == '__main__':
    unittest.main()
