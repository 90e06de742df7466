"""
JSON codecs: complex matrices as row-major lists of [re, im] pairs, outcome
labels (ints, strings, nested tuples as lists), and whole feedback codes.
"""
import logging

import numpy as np

from .feedback_protocol import AdaptiveMeasurement, Codebook, FeedbackCode
from .quantum_core import DensityMatrix, Povm, QuantumChannel
from .tensor_linalg import RegisterShape

logger = logging.getLogger(__name__)

CODE_FORMAT = 'quantum-feedback-code'
CODE_FORMAT_VERSION = 1


def encode_complex(z):
    z = complex(z)
    return [z.real, z.imag]


def decode_complex(value):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, list) and len(value) == 2 and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return complex(value[0], value[1])
    raise ValueError(f"Expected a number or a [re, im] pair, got {value!r}")


def encode_matrix(m):
    return [[encode_complex(z) for z in row] for row in np.asarray(m)]


def decode_matrix(value):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ValueError("Expected a non-empty list of matrix rows")
    width = len(value[0])
    if any(len(r) != width for r in value):
        raise ValueError("Matrix rows have different lengths")
    return np.array([[decode_complex(z) for z in row] for row in value], dtype=np.complex128)


def decode_vector(value):
    if not isinstance(value, list) or not value:
        raise ValueError("Expected a non-empty list of amplitudes")
    return np.array([decode_complex(z) for z in value], dtype=np.complex128)


def encode_label(label):
    if isinstance(label, tuple):
        return [encode_label(x) for x in label]
    if isinstance(label, (np.integer,)):
        return int(label)
    return label


def decode_label(value):
    if isinstance(value, list):
        return tuple(decode_label(x) for x in value)
    return value


def encode_channel(phi):
    return {'label': phi.label, 'kraus': [encode_matrix(k) for k in phi.kraus]}


def decode_channel(data):
    return QuantumChannel(tuple(decode_matrix(k) for k in data['kraus']), label=data.get('label', 'kraus'))


def encode_povm(povm):
    return {'mode': povm.mode, 'label': povm.label,
            'operators': [[encode_label(k), encode_matrix(f)] for k, f in povm.operators.items()]}


def decode_povm(data):
    ops = {decode_label(k): decode_matrix(f) for k, f in data['operators']}
    return Povm(ops, mode=data.get('mode', 'complete'), label=data.get('label', 'povm'))


def encode_code(c):
    measurements = []
    for entry in c.measurements:
        if isinstance(entry, AdaptiveMeasurement):
            measurements.append({'kind': 'adaptive', 'by_history': [
                [encode_label(h), encode_povm(p)] for h, p in entry.by_history.items()]})
        else:
            measurements.append({'kind': 'fixed', 'povm': encode_povm(entry)})
    feedback = [[m, encode_label(k), [encode_matrix(x) for x in maps]]
                for m, by_outcome in sorted(c.feedback_maps.items())
                for k, maps in by_outcome.items()]
    table = None
    if c.decode_table is not None:
        table = [[encode_label(h), encode_label(w)] for h, w in c.decode_table.items()]
    return {
        'format': CODE_FORMAT,
        'version': CODE_FORMAT_VERSION,
        'channel': encode_channel(c.channel),
        'alphabet_size': c.codebook.alphabet_size,
        'words': [list(w) for w in c.codebook.words],
        'probabilities': list(c.probabilities),
        'states': [encode_matrix(s.mat) for s in c.states],
        'measurements': measurements,
        'feedback_maps': feedback,
        'decode_table': table,
    }


def decode_code(data):
    if data.get('format') != CODE_FORMAT:
        raise ValueError(f"Not a serialised feedback code (format={data.get('format')!r})")
    phi = decode_channel(data['channel'])
    codebook = Codebook(int(data['alphabet_size']), tuple(tuple(w) for w in data['words']))
    shape = RegisterShape((phi.in_dim,) * codebook.block_length)
    states = tuple(DensityMatrix(decode_matrix(s), shape) for s in data['states'])
    measurements = []
    for entry in data['measurements']:
        if entry['kind'] == 'adaptive':
            measurements.append(AdaptiveMeasurement(
                {decode_label(h): decode_povm(p) for h, p in entry['by_history']}))
        else:
            measurements.append(decode_povm(entry['povm']))
    feedback = {}
    for m, k, maps in data.get('feedback_maps', []):
        feedback.setdefault(int(m), {})[decode_label(k)] = tuple(decode_matrix(x) for x in maps)
    table = data.get('decode_table')
    if table is not None:
        table = {decode_label(h): decode_label(w) for h, w in table}
    return FeedbackCode(phi, codebook, tuple(data['probabilities']), states, tuple(measurements),
                        feedback, table)
