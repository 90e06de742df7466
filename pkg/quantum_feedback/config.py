"""
Experiment configuration: JSON documents describing a channel, a feedback
protocol (parametrised or a serialised code file), typicality, optimiser and
simulation settings. Every parse error names the offending field path.
"""
import json
import logging
import os
from dataclasses import dataclass, field

import numpy as np

from .channels import CHANNEL_LIBRARY, bloch_ket, euler_unitary, from_kraus
from .code_builders import (
    entangled_states, next_register_unitaries, placeholder_decoder, product_states,
    strength_measurement, trivial_measurement, with_pgm_decoder,
)
from .feedback_protocol import Codebook, FeedbackCode
from .optimizer import OptimizerConfig
from .serialization import decode_code, decode_matrix, decode_vector
from .typicality import TypicalityParams

logger = logging.getLogger(__name__)


class ConfigError(ValueError):
    """A configuration document that cannot be parsed; `path` is the dotted field path."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path
        self.message = message


class _Reader:
    """Walks a dict, remembering the field path and the keys consumed."""

    def __init__(self, data, path):
        if not isinstance(data, dict):
            raise ConfigError(path, f"expected an object, got {type(data).__name__}")
        self.data = data
        self.path = path
        self.seen = set()

    def child(self, key):
        return f"{self.path}.{key}"

    def has(self, key):
        return key in self.data

    def get(self, key, kind, default=None, required=False):
        self.seen.add(key)
        if key not in self.data:
            if required:
                raise ConfigError(self.child(key), "missing required field")
            return default
        value = self.data[key]
        if kind is float and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if kind is not None and (not isinstance(value, kind) or (isinstance(value, bool) and kind is not bool)):
            raise ConfigError(self.child(key), f"expected {getattr(kind, '__name__', kind)}, got {type(value).__name__}")
        return value

    def sub(self, key, required=False):
        value = self.get(key, dict, required=required)
        return None if value is None else _Reader(value, self.child(key))

    def finish(self):
        unknown = sorted(set(self.data) - self.seen)
        if unknown:
            raise ConfigError(self.child(unknown[0]), "unknown field")


@dataclass(frozen=True)
class ChannelSpec:
    name: str
    param: float = None
    kraus: tuple = None
    label: str = None


@dataclass(frozen=True)
class ProtocolSpec:
    n: int = None
    alphabet_size: int = 2
    codebook: tuple = ()
    probabilities: object = 'uniform'
    family: str = 'product'
    letter_states: dict = field(default_factory=dict)
    alpha: float = 0.0
    measurements: tuple = ()
    feedback: dict = field(default_factory=dict)
    message_map: tuple = None
    code_file: str = None


@dataclass(frozen=True)
class SimulationSpec:
    samples: int = None
    seed: int = 0
    exact: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    channel: ChannelSpec
    protocol: ProtocolSpec
    typicality: TypicalityParams = TypicalityParams()
    optimizer: OptimizerConfig = OptimizerConfig()
    optimize_n: tuple = (1,)
    optimize_family: str = 'product'
    optimize_feedback: bool = True
    simulation: SimulationSpec = SimulationSpec()
    source_dir: str = '.'

    def build_channel(self):
        spec = self.channel
        if spec.name == 'kraus':
            return from_kraus(spec.kraus, label=spec.label or 'kraus')
        factory = CHANNEL_LIBRARY[spec.name]
        return factory() if spec.param is None else factory(spec.param)

    def build_code(self, channel=None):
        channel = channel or self.build_channel()
        p = self.protocol
        if p.code_file:
            path = p.code_file if os.path.isabs(p.code_file) else os.path.join(self.source_dir, p.code_file)
            with open(path, 'r') as f:
                return decode_code(json.load(f))
        return build_configured_code(channel, p)


def build_configured_code(channel, p):
    words = tuple(p.codebook)
    n = p.n
    probs = (np.full(len(words), 1.0 / len(words)) if p.probabilities == 'uniform'
             else np.asarray(p.probabilities, dtype=float))
    if p.family == 'product':
        kets = {}
        for a, spec in p.letter_states.items():
            kets[a] = bloch_ket(*spec['bloch']) if 'bloch' in spec else spec['ket']
        states = product_states(words, kets)
    else:
        unitaries = {a: euler_unitary(*spec['euler']) for a, spec in p.letter_states.items()}
        states = entangled_states(words, unitaries, p.alpha)
    d_out = channel.out_dim
    measurements = []
    for j, spec in enumerate(p.measurements, start=1):
        if spec['kind'] == 'trivial':
            measurements.append(trivial_measurement(d_out ** j))
        else:
            measurements.append(strength_measurement(spec['theta'], spec['phi'], spec['strength'], j))
    measurements.append(placeholder_decoder(d_out ** n))
    feedback = {m: next_register_unitaries({k: euler_unitary(*angles) for k, angles in us.items()}, n - m)
                for m, us in p.feedback.items()}
    code = FeedbackCode(channel, Codebook(p.alphabet_size, words), tuple(probs), tuple(states),
                        tuple(measurements), feedback)
    return with_pgm_decoder(code)


def _parse_channel(r):
    name = r.get('name', str, required=True)
    if name == 'kraus':
        raw = r.get('kraus', list, required=True)
        try:
            kraus = tuple(decode_matrix(k) for k in raw)
        except ValueError as e:
            raise ConfigError(r.child('kraus'), str(e))
        label = r.get('label', str, default='kraus')
        r.finish()
        return ChannelSpec('kraus', kraus=kraus, label=label)
    if name not in CHANNEL_LIBRARY:
        raise ConfigError(r.child('name'), f"unknown channel '{name}' (known: {sorted(CHANNEL_LIBRARY)} or 'kraus')")
    param = r.get('param', float)
    if param is None and name != 'identity':
        raise ConfigError(r.child('param'), f"channel '{name}' needs a parameter")
    r.finish()
    return ChannelSpec(name, param=param)


def _parse_word(value, path, alphabet):
    if isinstance(value, str):
        if not value.isdigit():
            raise ConfigError(path, f"codeword '{value}' must be a string of digits")
        word = tuple(int(ch) for ch in value)
    elif isinstance(value, list) and all(isinstance(a, int) and not isinstance(a, bool) for a in value):
        word = tuple(value)
    else:
        raise ConfigError(path, "codeword must be a digit string or a list of integers")
    if any(a < 0 or a >= alphabet for a in word):
        raise ConfigError(path, f"codeword {word} uses letters outside alphabet of size {alphabet}")
    return word


def _parse_letter(r, family):
    if family == 'entangled':
        value = {'euler': _numbers(r.get('euler', list, required=True), 3, r.child('euler'))}
    elif r.has('bloch'):
        value = {'bloch': _numbers(r.get('bloch', list), 2, r.child('bloch'))}
    else:
        raw = r.get('ket', list, required=True)
        try:
            value = {'ket': decode_vector(raw)}
        except ValueError as e:
            raise ConfigError(r.child('ket'), str(e))
    r.finish()
    return value


def _numbers(values, count, path):
    if len(values) != count or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values):
        raise ConfigError(path, f"expected {count} numbers")
    return [float(v) for v in values]


def _parse_protocol(r):
    if r.has('code_file'):
        code_file = r.get('code_file', str)
        r.finish()
        return ProtocolSpec(code_file=code_file)
    n = r.get('n', int, required=True)
    if n < 1:
        raise ConfigError(r.child('n'), "block length must be at least 1")
    alphabet = r.get('alphabet_size', int, default=2)
    if alphabet < 1:
        raise ConfigError(r.child('alphabet_size'), "alphabet must be non-empty")
    raw_words = r.get('codebook', list, required=True)
    words = tuple(_parse_word(w, f"{r.child('codebook')}[{i}]", alphabet) for i, w in enumerate(raw_words))
    if not words:
        raise ConfigError(r.child('codebook'), "codebook is empty")
    for i, w in enumerate(words):
        if len(w) != n:
            raise ConfigError(f"{r.child('codebook')}[{i}]", f"codeword length {len(w)} != n={n}")
    if len(set(words)) != len(words):
        raise ConfigError(r.child('codebook'), "codewords must be distinct")
    probabilities = r.get('probabilities', None, default='uniform')
    if probabilities != 'uniform':
        if not isinstance(probabilities, list):
            raise ConfigError(r.child('probabilities'), "expected 'uniform' or a list of numbers")
        probabilities = tuple(_numbers(probabilities, len(words), r.child('probabilities')))
    family = r.get('family', str, default='product')
    if family not in ('product', 'entangled'):
        raise ConfigError(r.child('family'), f"unknown family '{family}'")
    letters_reader = r.sub('letter_states', required=True)
    letter_states = {}
    for key in letters_reader.data:
        if not key.isdigit() or int(key) >= alphabet:
            raise ConfigError(letters_reader.child(key), "letter keys must be digits inside the alphabet")
        sub = letters_reader.sub(key)
        letter_states[int(key)] = _parse_letter(sub, family)
    letters_reader.finish()
    used = {a for w in words for a in w}
    missing = sorted(used - set(letter_states))
    if missing:
        raise ConfigError(r.child('letter_states'), f"no state for letters {missing}")
    alpha = r.get('alpha', float, default=0.0)
    measurements = []
    raw_measurements = r.get('measurements', list, default=[{'kind': 'trivial'}] * (n - 1))
    if len(raw_measurements) != n - 1:
        raise ConfigError(r.child('measurements'), f"expected {n - 1} intermediate measurements")
    for i, entry in enumerate(raw_measurements):
        mr = _Reader(entry, f"{r.child('measurements')}[{i}]")
        kind = mr.get('kind', str, required=True)
        if kind == 'trivial':
            measurements.append({'kind': 'trivial'})
        elif kind == 'projective':
            strength = mr.get('strength', float, default=1.0)
            if not 0.0 <= strength <= 1.0:
                raise ConfigError(mr.child('strength'), "strength must lie in [0, 1]")
            measurements.append({'kind': 'projective', 'theta': mr.get('theta', float, default=0.0),
                                 'phi': mr.get('phi', float, default=0.0), 'strength': strength})
        else:
            raise ConfigError(mr.child('kind'), f"unknown measurement kind '{kind}'")
        mr.finish()
    feedback = {}
    for i, entry in enumerate(r.get('feedback', list, default=[])):
        fr = _Reader(entry, f"{r.child('feedback')}[{i}]")
        m = fr.get('round', int, required=True)
        if not 2 <= m <= n - 1:
            raise ConfigError(fr.child('round'), f"feedback rounds with a target lie in 2..{n - 1}")
        ur = fr.sub('unitaries', required=True)
        unitaries = {}
        for key in ur.data:
            if not key.isdigit():
                raise ConfigError(ur.child(key), "outcome keys must be digits")
            unitaries[int(key)] = _numbers(ur.get(key, list), 3, ur.child(key))
        ur.finish()
        fr.finish()
        feedback[m] = unitaries
    message_map = r.get('message_map', list)
    if message_map is not None:
        if not all(isinstance(w, int) and 0 <= w < len(words) for w in message_map):
            raise ConfigError(r.child('message_map'), "entries must be codeword indices")
        message_map = tuple(message_map)
    decoder = r.get('decoder', str, default='pgm')
    if decoder != 'pgm':
        raise ConfigError(r.child('decoder'), f"unknown decoder '{decoder}'")
    r.finish()
    return ProtocolSpec(n=n, alphabet_size=alphabet, codebook=words, probabilities=probabilities,
                        family=family, letter_states=letter_states, alpha=alpha,
                        measurements=tuple(measurements), feedback=feedback, message_map=message_map)


def _parse_typicality(r):
    if r is None:
        return TypicalityParams()
    delta = r.get('delta', float, default=0.5)
    c = r.get('c', float, default=1.0)
    l = r.get('l', int, default=2)
    r.finish()
    try:
        return TypicalityParams(delta, c, l)
    except ValueError as e:
        raise ConfigError(r.path, str(e))


def _parse_optimizer(r):
    if r is None:
        return OptimizerConfig(), (1,), 'product', True
    kwargs = {}
    for key, kind in (('starts', int), ('seed', int), ('step', float), ('tolerance', float), ('max_sweeps', int)):
        value = r.get(key, kind)
        if value is not None:
            kwargs[key] = value
    ns = r.get('n', list, default=[1])
    if not ns or not all(isinstance(x, int) and x >= 1 for x in ns):
        raise ConfigError(r.child('n'), "expected a non-empty list of positive block lengths")
    family = r.get('family', str, default='product')
    if family not in ('product', 'entangled'):
        raise ConfigError(r.child('family'), f"unknown family '{family}'")
    feedback = r.get('feedback', bool, default=True)
    r.finish()
    try:
        return OptimizerConfig(**kwargs), tuple(ns), family, feedback
    except ValueError as e:
        raise ConfigError(r.path, str(e))


def _parse_simulation(r):
    if r is None:
        return SimulationSpec()
    samples = r.get('samples', int)
    if samples is not None and samples < 1:
        raise ConfigError(r.child('samples'), "samples must be positive")
    spec = SimulationSpec(samples, r.get('seed', int, default=0), r.get('exact', bool, default=False))
    r.finish()
    return spec


def parse_config(data, source_dir='.'):
    """Builds an ExperimentConfig from a decoded JSON document."""
    r = _Reader(data, '$')
    channel = _parse_channel(r.sub('channel', required=True))
    protocol = _parse_protocol(r.sub('protocol', required=True))
    typicality = _parse_typicality(r.sub('typicality'))
    optimizer, ns, family, feedback = _parse_optimizer(r.sub('optimizer'))
    simulation = _parse_simulation(r.sub('simulation'))
    r.finish()
    return ExperimentConfig(channel, protocol, typicality, optimizer, ns, family, feedback,
                            simulation, source_dir)


def load_config(path):
    """Reads and parses a config file; any failure becomes a ConfigError."""
    try:
        with open(path, 'r') as f:
            data = json.load(f)
    except OSError as e:
        raise ConfigError('$', f"cannot read {path}: {e}")
    except json.JSONDecodeError as e:
        raise ConfigError('$', f"invalid JSON at line {e.lineno} column {e.colno}: {e.msg}")
    try:
        return parse_config(data, os.path.dirname(os.path.abspath(path)))
    except ConfigError:
        raise
    except (TypeError, ValueError, KeyError, AttributeError) as e:
        raise ConfigError('$', f"malformed configuration: {e}")
