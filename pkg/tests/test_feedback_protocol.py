import os
import unittest
from collections import Counter

import numpy as np
from scipy.stats import binom

try:
    from quantum_feedback.feedback_protocol import (
        AdaptiveMeasurement, Codebook, FeedbackCode, causality_violation, decode, ehs_state, ehs_states,
        enumerate_transcripts, intermediate_measurements_projective, error_probability, markov_check, message_distribution,
        outcome_chain, round_update, round_zero, sample_transcript, validate_code,
        x_alphabet_sizes,
    )
except ImportError:
    import sys
    sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))
    from quantum_feedback.feedback_protocol import (
        AdaptiveMeasurement, Codebook, FeedbackCode, causality_violation, decode, ehs_state, ehs_states,
        enumerate_transcripts, intermediate_measurements_projective, error_probability, markov_check, message_distribution,
        outcome_chain, round_update, round_zero, sample_transcript, validate_code,
        x_alphabet_sizes,
    )
from quantum_feedback.channels import PAULI_X, depolarizing, identity_channel
from quantum_feedback.code_builders import (
    placeholder_decoder, product_states, strength_measurement, trivial_measurement, with_pgm_decoder,
)
from quantum_feedback.cq_state import CapExceededError
from quantum_feedback.quantum_core import DensityMatrix, ERASURE, Povm
from quantum_feedback.random_objects import random_causal_code
from quantum_feedback.tensor_linalg import RegisterShape

KETS = {0: np.array([1, 0]), 1: np.array([0, 1])}


def _orthogonal_code(channel, n=1, words=None, measurements=None, feedback_maps=None):
    words = words or tuple((a,) * n for a in (0, 1))
    measurements = measurements or [trivial_measurement(2 ** j) for j in range(1, n)]
    code = FeedbackCode(channel, Codebook(2, words), (1.0 / len(words),) * len(words),
                        tuple(product_states(words, KETS)),
                        tuple(measurements) + (placeholder_decoder(2 ** n),), feedback_maps or {})
    return with_pgm_decoder(code)


class TestValidation(unittest.TestCase):
    def test_valid_code_has_no_problems(self):
        self.assertEqual(validate_code(_orthogonal_code(identity_channel())), [])

    def test_bad_probabilities_reported(self):
        code = _orthogonal_code(identity_channel())
        broken = FeedbackCode(code.channel, code.codebook, (0.7, 0.7), code.states, code.measurements)
        problems = validate_code(broken)
        self.assertTrue(any(p.startswith('probabilities') for p in problems))

    def test_wrong_measurement_dimension(self):
        code = _orthogonal_code(identity_channel(), n=2)
        broken = FeedbackCode(code.channel, code.codebook, code.probabilities, code.states,
                              (trivial_measurement(4),) + code.measurements[1:])
        self.assertTrue(any('measurements[1]' in p for p in validate_code(broken)))

    def test_non_trace_preserving_feedback(self):
        code = _orthogonal_code(identity_channel(), n=3)
        broken = FeedbackCode(code.channel, code.codebook, code.probabilities, code.states,
                              code.measurements, {2: {0: (0.5 * np.eye(2),)}})
        self.assertTrue(any('feedback_maps[2][0]' in p for p in validate_code(broken)))

    def test_codebook_rejects_duplicates(self):
        with self.assertRaises(ValueError):
            Codebook(2, ((0, 1), (0, 1)))


class TestProtocolEngine(unittest.TestCase):
    def test_identity_orthogonal_code_is_error_free(self):
        errors = error_probability(_orthogonal_code(identity_channel()))
        self.assertAlmostEqual(errors.average, 0.0, places=12)
        self.assertAlmostEqual(errors.maximum, 0.0, places=12)

    def test_depolarizing_single_use_error(self):
        # square-root decoder on diag(0.95, 0.05) vs diag(0.05, 0.95): success 0.95^2 + 0.05^2
        errors = error_probability(_orthogonal_code(depolarizing(0.1)))
        self.assertAlmostEqual(errors.average, 0.095, places=10)

    def test_transcript_probabilities_sum_to_one(self):
        rng = np.random.default_rng(4)
        for n in (1, 2, 3):
            code = random_causal_code(rng, n)
            for w in range(code.codebook.size):
                total = sum(tr.probability for tr in enumerate_transcripts(code, w))
                self.assertAlmostEqual(total, 1.0, delta=1e-9)

    def test_transcript_states_follow_round_update(self):
        rng = np.random.default_rng(10)
        code = random_causal_code(rng, 3)
        for tr in enumerate_transcripts(code, 0):
            state = round_zero(code, 0)
            np.testing.assert_allclose(tr.states[0].mat, state.mat, atol=1e-12)
            for m in range(2, code.n + 1):
                _, state = round_update(code, state, m, tr.outcomes[m - 2], tr.outcomes[:m - 2])
                np.testing.assert_allclose(tr.states[m - 1].mat, state.mat, atol=1e-10)
                self.assertAlmostEqual(np.trace(state.mat).real, 1.0, delta=1e-9)

    def test_round_update_rejects_bad_round(self):
        code = _orthogonal_code(identity_channel(), n=2)
        with self.assertRaises(ValueError):
            round_update(code, round_zero(code, 0), 3, 0)

    def test_feedback_unitary_is_applied(self):
        # measure register 0 and flip register 2 when the outcome is 1
        measure = strength_measurement(0.0, 0.0, 1.0, 1)
        flip = {1: (PAULI_X,)}
        words = ((1, 0, 0), (0, 0, 0))
        code = _orthogonal_code(identity_channel(), n=3, words=words,
                                measurements=[measure, trivial_measurement(4)],
                                feedback_maps={2: flip})
        levels = {tr.outcomes[:2]: tr.states[-1] for tr in enumerate_transcripts(code, 0)}
        final = levels[(1, 0)]
        expected = product_states([(1, 0, 1)], KETS)[0]
        np.testing.assert_allclose(final.mat, expected.mat, atol=1e-12)

    def test_adaptive_measurement_follows_history(self):
        measure = strength_measurement(0.0, 0.0, 1.0, 1)
        second = AdaptiveMeasurement({(0,): trivial_measurement(4),
                                      (1,): Povm({'a': np.eye(4)})})
        code = FeedbackCode(identity_channel(), Codebook(2, ((0, 0, 0), (1, 0, 0))), (0.5, 0.5),
                            tuple(product_states(((0, 0, 0), (1, 0, 0)), KETS)),
                            (measure, second, placeholder_decoder(8)))
        outcomes = {tr.outcomes[:2] for tr in enumerate_transcripts(code, 1)}
        self.assertEqual(outcomes, {(1, 'a')})

    def test_cap_exceeded(self):
        rng = np.random.default_rng(1)
        code = random_causal_code(rng, 3, strength=0.5)
        with self.assertRaises(CapExceededError):
            enumerate_transcripts(code, 0, enum_cap=1)

    def test_decode_defaults_to_erasure(self):
        code = _orthogonal_code(identity_channel())
        self.assertEqual(decode(code, ((0,),)), (0,))
        self.assertEqual(decode(code, (ERASURE,)), ERASURE)


class TestSampling(unittest.TestCase):
    def test_same_seed_same_transcript(self):
        code = random_causal_code(np.random.default_rng(3), 2)
        a = sample_transcript(code, 0, 99)
        b = sample_transcript(code, 0, 99)
        self.assertEqual(a.outcomes, b.outcomes)

    def test_sampled_frequencies_match_enumeration(self):
        code = random_causal_code(np.random.default_rng(8), 2, strength=0.7)
        exact = {tr.outcomes: tr.probability for tr in enumerate_transcripts(code, 0)}
        rng = np.random.default_rng(2024)
        samples = 4000
        counts = Counter(sample_transcript(code, 0, rng).outcomes for _ in range(samples))
        for outcomes, p in exact.items():
            sigma = np.sqrt(samples * p * (1 - p))
            # 5 sigma keeps the per-outcome check robust across all outcomes
            self.assertLessEqual(abs(counts[outcomes] - samples * p), 5 * sigma + 1)

    def test_single_bit_counts_are_binomial(self):
        code = _orthogonal_code(depolarizing(0.2))
        rng = np.random.default_rng(6)
        wrong = sum(sample_transcript(code, 0, rng).decoded != (0,) for _ in range(2000))
        low, high = binom.interval(0.9999, 2000, 0.18)
        self.assertTrue(low <= wrong <= high)


class TestDerivedQuantities(unittest.TestCase):
    def test_outcome_chain_is_a_distribution(self):
        code = random_causal_code(np.random.default_rng(14), 3)
        self.assertAlmostEqual(sum(outcome_chain(code).values()), 1.0, delta=1e-9)

    def test_ehs_states_record_outcomes_progressively(self):
        code = random_causal_code(np.random.default_rng(15), 3, strength=0.8)
        states = ehs_states(code)
        self.assertEqual(len(states), 3)
        self.assertEqual(states[0].register_names, ('A1', 'A2', 'A3', 'X1', 'X2'))
        self.assertEqual(x_alphabet_sizes(code), [2, 2])
        for b in states[0].branches:
            self.assertEqual(b.labels[3:], (0, 0))
        for b in states[1].branches:
            self.assertEqual(b.labels[4], 0)
        single = ehs_state(code, 1)
        self.assertEqual([b.labels for b in single.branches], [b.labels for b in states[1].branches])
        with self.assertRaises(ValueError):
            ehs_state(code, 3)

    def test_message_distribution_splits_evenly(self):
        code = _orthogonal_code(identity_channel())
        dist = message_distribution(code, [0, 0, 1])
        self.assertEqual([(m, w) for m, w, _ in dist], [(0, 0), (1, 0), (2, 1)])
        self.assertAlmostEqual(dist[0][2], 0.25)
        with self.assertRaises(ValueError):
            message_distribution(code, [0, 0])

    def test_markov_chain_through_codeword(self):
        code = random_causal_code(np.random.default_rng(16), 2)
        self.assertLessEqual(markov_check(code, [0] + list(range(code.codebook.size))), 1e-12)

    def test_projective_intermediate_measurements(self):
        rng = np.random.default_rng(18)
        self.assertTrue(intermediate_measurements_projective(random_causal_code(rng, 3, strength=1.0)))
        self.assertFalse(intermediate_measurements_projective(random_causal_code(rng, 3, strength=0.5)))

    def test_causality_violation(self):
        code = random_causal_code(np.random.default_rng(17), 3)
        self.assertLessEqual(causality_violation(code), 1e-10)
        # words share their first letter but the first register differs
        words = ((0, 0), (0, 1))
        states = (DensityMatrix.from_ket([1, 0, 0, 0], RegisterShape((2, 2))),
                  DensityMatrix.from_ket([0, 0, 0, 1], RegisterShape((2, 2))))
        acausal = FeedbackCode(identity_channel(), Codebook(2, words), (0.5, 0.5), states,
                               (trivial_measurement(2), placeholder_decoder(4)))
        self.assertAlmostEqual(causality_violation(acausal), 1.0)


if __name__ == '__main__':
    unittest.main()
