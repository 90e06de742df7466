"""
Randomised verification battery behind `verify-lemmas`: every inequality of
the converse chain and of the achievability analysis is measured on seeded
random instances and tallied (trials, passes, worst slack).
"""
import logging
import math
from dataclasses import replace

import numpy as np

from .achievability import (
    CHECK_TOL, build_double_blocked_code, error_recursion, gentle_measurement_check,
    hayashi_nagaoka_check, cumulative_disturbance_check,
)
from .channels import depolarizing
from .code_builders import placeholder_decoder, product_states, with_pgm_decoder
from .cq_state import conditional_mutual_information
from .directed_info import DDPI_TOL, converse_report, directed_information, message_information
from .feedback_protocol import Codebook, FeedbackCode
from .quantum_core import apply_channel
from .random_objects import (
    random_causal_code, random_channel, random_cq_state, random_density_matrix,
    random_effect_pair, random_gentle_instance,
)
from .reports import RunReport
from .tensor_linalg import trace_distance
from .typicality import TypicalityParams, provable_exponent_constant, typicality_bounds_check

logger = logging.getLogger(__name__)

TYPICALITY_TRIAL_FRACTION = 10


class _Tally:
    def __init__(self, tolerance):
        self.tolerance = tolerance
        self.trials = 0
        self.passed = 0
        self.skipped = 0
        self.worst = None

    def record(self, slack):
        self.trials += 1
        if slack >= -self.tolerance:
            self.passed += 1
        self.worst = slack if self.worst is None else min(self.worst, slack)

    def into(self, report, name):
        report.add_lemma(name, self.trials, self.passed, self.worst, self.tolerance, self.skipped)
        logger.info(f"{name}: {self.passed}/{self.trials} passed, worst slack {self.worst}")


def _code_suites(rng, trials, report):
    ddpi, final, holevo = _Tally(DDPI_TOL), _Tally(DDPI_TOL), _Tally(DDPI_TOL)
    fano = _Tally(DDPI_TOL)
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        projective = rng.uniform() < 0.5
        code = random_causal_code(rng, n, strength=1.0 if projective else None)
        directed = directed_information(code)
        to_output, to_outcomes = message_information(code)
        ddpi.record(directed.directed_total - to_output)
        final.record(directed.directed_total - directed.final_total)
        if projective:
            holevo.record(to_output - to_outcomes)
        size = code.codebook.size
        uniform = converse_report(replace(code, probabilities=(1.0 / size,) * size))
        fano.record(uniform.fano_bound - uniform.rate)
    ddpi.into(report, 'directed_data_processing')
    final.into(report, 'final_state_variant')
    holevo.into(report, 'outcomes_below_output')
    fano.into(report, 'fano_rate_bound')


def _ssa_suite(rng, trials, report):
    tally = _Tally(CHECK_TOL)
    for _ in range(trials):
        state = random_cq_state(rng, (2, 2), (2, 2), num_branches=int(rng.integers(1, 5)))
        tally.record(conditional_mutual_information(state, ['C0', 0], ['C1'], [1]))
    tally.into(report, 'strong_subadditivity')


def _monotonicity_suite(rng, trials, report):
    tally = _Tally(CHECK_TOL)
    for _ in range(trials):
        d = int(rng.integers(2, 4))
        d_out = int(rng.integers(2, 4))
        phi = random_channel(rng, d, d_out, int(rng.integers(math.ceil(d / d_out), 4)))
        rho, sigma = random_density_matrix(rng, d), random_density_matrix(rng, d)
        before = trace_distance(rho.mat, sigma.mat)
        after = trace_distance(apply_channel(phi, rho).mat, apply_channel(phi, sigma).mat)
        tally.record(before - after)
    tally.into(report, 'trace_distance_monotonicity')


def _gentle_suite(rng, trials, report):
    tally = _Tally(CHECK_TOL)
    for _ in range(trials):
        rho, effect, eps = random_gentle_instance(rng, int(rng.integers(2, 5)))
        result = gentle_measurement_check(rho, effect, eps)
        if not result.hypothesis_met:
            tally.skipped += 1
            continue
        tally.record(result.slack)
    tally.into(report, 'gentle_measurement')


def _hayashi_nagaoka_suite(rng, trials, report, flip_sign):
    tally = _Tally(CHECK_TOL)
    for _ in range(trials):
        s, t = random_effect_pair(rng, int(rng.integers(2, 5)))
        tally.record(hayashi_nagaoka_check(s, t, flip_sign=flip_sign).min_eigenvalue)
    tally.into(report, 'hayashi_nagaoka')


def _typicality_suite(rng, trials, report):
    overlap, cap = _Tally(1e-12), _Tally(1e-12)
    for _ in range(trials):
        rho = random_density_matrix(rng, 2)
        n = int(rng.integers(4, 11))
        delta = float(rng.uniform(0.05, 0.4))
        c = provable_exponent_constant(rho)
        result = typicality_bounds_check(rho, n, delta, c)
        overlap.record(result.overlap - result.overlap_bound)
        cap.record(result.eigenvalue_bound - result.max_compressed_eigenvalue)
    overlap.into(report, 'typical_subspace_overlap')
    cap.into(report, 'typical_subspace_eigenvalue_cap')


def _recursion_suite(rng, trials, report):
    tally = _Tally(1e-12)
    for _ in range(trials):
        q = rng.uniform(0.0, 0.3, int(rng.integers(1, 8)))
        p = error_recursion(q)
        closed = 1.0 - float(np.prod(1.0 - q))
        tally.record(min(float(np.sum(q)) - p[-1], 1e-12 - abs(p[-1] - closed)))
    tally.into(report, 'error_recursion')


def depolarizing_base_code(p=0.1):
    """n = 1, letters |0>, |1> over depolarizing(p), square-root decoder."""
    words = ((0,), (1,))
    kets = {0: np.array([1, 0], dtype=np.complex128), 1: np.array([0, 1], dtype=np.complex128)}
    channel = depolarizing(p)
    code = FeedbackCode(channel, Codebook(2, words), (0.5, 0.5), tuple(product_states(words, kets)),
                        (placeholder_decoder(2),))
    return with_pgm_decoder(code)


def _disturbance_suite(report, params):
    tally = _Tally(CHECK_TOL)
    base = depolarizing_base_code(0.1)
    for l in (2, 3):
        blocked = build_double_blocked_code(base, l, TypicalityParams(params.delta, params.c, l))
        for record in cumulative_disturbance_check(base, blocked):
            tally.record(record.bound - record.distance)
    tally.into(report, 'cumulative_disturbance')


def run_lemma_battery(trials, seed, params=None, inject_failure=False):
    """
    Runs every suite over `trials` seeded instances (the typicality suite uses
    trials // 10 since each instance enumerates a typical set). With
    inject_failure the Hayashi-Nagaoka check runs sign-flipped, so the report
    must come back failed.
    """
    params = params or TypicalityParams()
    report = RunReport(command='verify-lemmas', seed=seed)
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(7)]
    _code_suites(streams[0], max(1, trials), report)
    _ssa_suite(streams[1], trials, report)
    _monotonicity_suite(streams[2], trials, report)
    _gentle_suite(streams[3], trials, report)
    _hayashi_nagaoka_suite(streams[4], trials, report, inject_failure)
    _typicality_suite(streams[5], max(1, trials // TYPICALITY_TRIAL_FRACTION), report)
    _recursion_suite(streams[6], trials, report)
    _disturbance_suite(report, params)
    if inject_failure:
        report.notes.append("hayashi_nagaoka ran sign-flipped (self-test)")
    report.table_name = 'lemma_tallies'
    report.table = [dict(lemma=name, **tally) for name, tally in sorted(report.lemma_checks.items())]
    return report
