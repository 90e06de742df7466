"""
Command-line harness:

  python -m quantum_feedback.cli validate CONFIG
  python -m quantum_feedback.cli simulate CONFIG [--samples N | --exact]
  python -m quantum_feedback.cli info CONFIG
  python -m quantum_feedback.cli achieve CONFIG
  python -m quantum_feedback.cli optimize (--channel SPEC | --config CONFIG) [--n 1 2]
  python -m quantum_feedback.cli verify-lemmas [--trials T]

Exit codes: 0 success, 1 validation or inequality failure, 2 unreadable or
malformed input, 3 resource cap exceeded.
"""
import argparse
import json
import logging
import sys
import time
from collections import Counter
from dataclasses import replace

import numpy as np

from .achievability import build_double_blocked_code, cumulative_disturbance_check, realized_rate_split
from .capacity import estimate_feedback_capacity, holevo_capacity
from .channels import parse_channel_spec
from .config import ConfigError, load_config
from .cq_state import CapExceededError
from .directed_info import DDPI_TOL, converse_report
from .feedback_protocol import (
    ENUM_CAP, causality_violation, error_probability, intermediate_measurements_projective, markov_check,
    outcome_chain, sample_transcript, validate_code,
)
from .lemma_checks import run_lemma_battery
from .optimizer import OptimizerConfig
from .reports import FORMATS, RunReport, write_report
from .serialization import encode_code, encode_label
from .settings import configure_logging, load_settings
from .typicality import TypicalityParams

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_FAILED, EXIT_PARSE, EXIT_CAP = 0, 1, 2, 3


def _label_text(label):
    return json.dumps(encode_label(label), separators=(',', ':'))


def _word_text(word):
    return ''.join(str(a) for a in word) if isinstance(word, tuple) else str(word)


def _load(path):
    config = load_config(path)
    channel = config.build_channel()
    try:
        code = config.build_code(channel)
    except OSError as e:
        raise ConfigError('$.protocol.code_file', str(e))
    except (KeyError, TypeError) as e:
        raise ConfigError('$.protocol', f"malformed protocol: {e}")
    return config, channel, code


def cmd_validate(config_path):
    report = RunReport(command='validate', source=config_path)
    config = load_config(config_path)
    try:
        channel = config.build_channel()
        report.channel = channel.label
    except ValueError as e:
        report.status = 'failed'
        report.notes.append(f"channel '{config.channel.label or config.channel.name}': {e}")
        return report
    try:
        code = config.build_code(channel)
    except OSError as e:
        raise ConfigError('$.protocol.code_file', str(e))
    except (ValueError, KeyError, TypeError, IndexError) as e:
        report.status = 'failed'
        report.notes.append(f"protocol: {e}")
        return report
    problems = validate_code(code)
    if problems:
        report.status = 'failed'
        report.notes.extend(problems)
    else:
        report.notes.append(f"valid: n={code.n}, {code.codebook.size} codewords, channel {channel.label}")
    return report


def cmd_simulate(config_path, samples=None, exact=False, seed=None, enum_cap=ENUM_CAP, default_samples=None):
    config, channel, code = _load(config_path)
    seed = config.simulation.seed if seed is None else seed
    samples = samples or config.simulation.samples or default_samples
    exact = exact or config.simulation.exact or not samples
    report = RunReport(command='simulate', seed=seed, channel=channel.label, source=config_path)
    if exact:
        errors = error_probability(code, enum_cap)
        report.errors = {'average': errors.average, 'maximum': errors.maximum, 'mode': 'exact'}
        chain = sorted(outcome_chain(code, enum_cap).items(), key=lambda item: (item[0][0], _label_text(item[0][1])))
        report.table = [{'word': _word_text(code.codebook.words[w]), 'outcomes': _label_text(k), 'probability': p}
                        for (w, k), p in chain]
    else:
        rng = np.random.default_rng(seed)
        counts = Counter()
        wrong = 0
        for _ in range(samples):
            w = int(rng.choice(code.codebook.size, p=np.array(code.probabilities)))
            tr = sample_transcript(code, w, rng)
            counts[(w, _label_text(tr.outcomes))] += 1
            wrong += tr.decoded != code.codebook.words[w]
        report.errors = {'average': wrong / samples, 'samples': samples, 'mode': 'sampled'}
        report.table = [{'word': _word_text(code.codebook.words[w]), 'outcomes': k, 'count': c}
                        for (w, k), c in sorted(counts.items())]
    report.table_name = 'outcome_histogram'
    return report


def _chain_lemmas(report, r, projective):
    checks = [
        ('directed_data_processing', r['directed_total'] - r['message_to_output']),
        ('final_state_variant', r['directed_total'] - r['final_total']),
    ]
    if projective:
        checks.insert(0, ('outcomes_below_output', r['message_to_output'] - r['message_to_outcomes']))
    else:
        report.notes.append("outcomes_below_output not checked: intermediate measurements are not projective")
    for name, slack in checks:
        report.add_lemma(name, 1, int(slack >= -DDPI_TOL), slack, DDPI_TOL)


def cmd_info(config_path, enum_cap=ENUM_CAP):
    config, channel, code = _load(config_path)
    report = RunReport(command='info', channel=channel.label, source=config_path)
    rate = converse_report(code, config.protocol.message_map, enum_cap=enum_cap)
    report.rate_report = rate.to_dict()
    report.rate_report['markov_gap'] = markov_check(code, config.protocol.message_map, enum_cap)
    report.rate_report['causality_violation'] = causality_violation(code)
    _chain_lemmas(report, report.rate_report, intermediate_measurements_projective(code))
    cumulative = np.cumsum(rate.per_round)
    report.table_name = 'directed_information_terms'
    report.table = [{'round': t, 'term': term, 'final_state_term': final, 'cumulative': float(c)}
                    for t, (term, final, c) in enumerate(zip(rate.per_round, rate.final_per_round, cumulative), start=1)]
    return report


def cmd_achieve(config_path, copies=None):
    config, channel, base = _load(config_path)
    params = config.typicality
    if copies is not None:
        params = TypicalityParams(params.delta, params.c, copies)
    blocked = build_double_blocked_code(base, params.l, params)
    report = RunReport(command='achieve', channel=channel.label, source=config_path)
    errors = error_probability(blocked)
    base_errors = error_probability(base)
    report.errors = {'average': errors.average, 'maximum': errors.maximum,
                     'base_average': base_errors.average, 'copies': params.l}
    report.notes.append(f"realized rate split: {realized_rate_split(blocked)}")
    records = cumulative_disturbance_check(base, blocked)
    passed = sum(r.passed for r in records)
    worst = min((r.bound - r.distance for r in records), default=None)
    report.add_lemma('cumulative_disturbance', len(records), passed, worst, 1e-9)
    report.table_name = 'disturbance'
    report.table = [{'word': r.word_index, 'round': r.global_round, 'distance': r.distance, 'bound': r.bound}
                    for r in records]
    return report


def cmd_optimize(channel_spec=None, ns=None, config_path=None, optimizer=None, family=None,
                 feedback=None, code_out=None):
    if config_path:
        config = load_config(config_path)
        channel = config.build_channel()
        optimizer = optimizer or config.optimizer
        ns = ns or config.optimize_n
        family = family or config.optimize_family
        feedback = config.optimize_feedback if feedback is None else feedback
    else:
        try:
            channel = parse_channel_spec(channel_spec)
        except ValueError as e:
            raise ConfigError('--channel', str(e))
    optimizer = optimizer or OptimizerConfig()
    ns = ns or (1,)
    family = family or 'product'
    feedback = True if feedback is None else feedback
    report = RunReport(command='optimize', seed=optimizer.seed, channel=channel.label)
    best = None
    for n in ns:
        estimate = estimate_feedback_capacity(channel, n, optimizer, family, feedback)
        report.table.append(estimate.to_dict())
        if best is None or estimate.rate > best.rate:
            best = estimate
    holevo = holevo_capacity(channel, optimizer) if channel.in_dim <= 4 else None
    if holevo is not None:
        report.notes.append(f"holevo estimate: {holevo.value}")
    report.table_name = 'rates_by_n'
    report.rate_report = converse_report(best.code).to_dict()
    if code_out:
        with open(code_out, 'w') as f:
            json.dump(encode_code(best.code), f, indent=2, sort_keys=True)
        report.notes.append(f"best code (n={best.n}) written to {code_out}")
    return report


def cmd_verify_lemmas(trials, seed, inject_failure=False, params=None):
    return run_lemma_battery(trials, seed, params, inject_failure=inject_failure)


def build_parser(settings):
    parser = argparse.ArgumentParser(prog='quantum_feedback',
                                     description='Feedback-assisted classical communication over quantum channels.')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--out', help='write the report to this file instead of stdout')
    common.add_argument('--format', choices=FORMATS, default='structured')
    common.add_argument('--seed', type=int, default=None)
    common.add_argument('--record-timing', action='store_true', help='add wall-clock seconds to the report')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('validate', parents=[common], help='check a config without running it')
    p.add_argument('config')
    p = sub.add_parser('simulate', parents=[common], help='run the protocol and tally outcomes')
    p.add_argument('config')
    mode = p.add_mutually_exclusive_group()
    mode.add_argument('--samples', type=int)
    mode.add_argument('--exact', action='store_true')
    p = sub.add_parser('info', parents=[common], help='directed information and the converse chain')
    p.add_argument('config')
    p = sub.add_parser('achieve', parents=[common], help='double-blocked code from the configured base code')
    p.add_argument('config')
    p.add_argument('--copies', type=int, help='number of interleaved copies (overrides typicality.l)')
    p = sub.add_parser('optimize', parents=[common], help='estimate the n-use feedback capacity')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--channel', help="channel spec such as 'depolarizing:0.1'")
    source.add_argument('--config')
    p.add_argument('--n', type=int, nargs='+', default=None)
    p.add_argument('--starts', type=int, default=None)
    p.add_argument('--max-sweeps', type=int, default=None)
    p.add_argument('--family', choices=('product', 'entangled'), default=None)
    p.add_argument('--no-feedback', action='store_true')
    p.add_argument('--code-out', help='write the best code as JSON')
    p = sub.add_parser('verify-lemmas', parents=[common], help='randomised inequality battery')
    p.add_argument('--trials', type=int, default=settings['verify_trials'])
    p.add_argument('--inject-failure', action='store_true', help='run the Hayashi-Nagaoka check sign-flipped')
    return parser


def _optimizer_from(args, base):
    overrides = {key: value for key, value in
                 (('seed', args.seed), ('starts', args.starts), ('max_sweeps', args.max_sweeps))
                 if value is not None}
    return replace(base, **overrides)


def dispatch(args, settings):
    enum_cap = settings['enum_cap']
    if args.command == 'validate':
        return cmd_validate(args.config)
    if args.command == 'simulate':
        return cmd_simulate(args.config, args.samples, args.exact, args.seed, enum_cap, settings['samples'])
    if args.command == 'info':
        return cmd_info(args.config, enum_cap)
    if args.command == 'achieve':
        return cmd_achieve(args.config, args.copies)
    if args.command == 'optimize':
        base = load_config(args.config).optimizer if args.config else OptimizerConfig(**settings['optimizer'])
        return cmd_optimize(args.channel, tuple(args.n) if args.n else None, args.config,
                            _optimizer_from(args, base), args.family,
                            False if args.no_feedback else None, args.code_out)
    if args.command == 'verify-lemmas':
        seed = 0 if args.seed is None else args.seed
        return cmd_verify_lemmas(args.trials, seed, args.inject_failure, TypicalityParams(**settings['typicality']))
    raise ValueError(f"Unknown command {args.command}")


def main(argv=None, stdout=None):
    settings = load_settings()
    configure_logging(settings)
    parser = build_parser(settings)
    args = parser.parse_args(argv)
    stdout = stdout or sys.stdout
    started = time.perf_counter()
    try:
        report = dispatch(args, settings)
    except ConfigError as e:
        logger.error(f"Configuration error at {e.path}: {e.message}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as e:
        logger.error(f"I/O failure: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except CapExceededError as e:
        logger.error(f"Resource cap exceeded: {e}")
        hint = " (try --samples N)" if args.command == 'simulate' else ''
        print(f"error: {e}{hint}", file=sys.stderr)
        return EXIT_CAP
    except ValueError as e:
        logger.error(f"{args.command} failed: {e}", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILED
    if args.record_timing:
        report.wall_clock_seconds = time.perf_counter() - started
    write_report(report, args.format, args.out, stdout)
    return EXIT_OK if report.status == 'ok' else EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
