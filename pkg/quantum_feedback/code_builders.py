"""
Constructors for feedback codes over qubit channels: codeword families,
single-register feedback measurements and unitaries, the square-root decoder
on the final averaged output ensemble, and the flat parameter layout the
capacity optimiser searches over.
"""
import dataclasses
import itertools
import logging

import numpy as np

from .achievability import square_root_measurement
from .channels import PAULI_X, PAULI_Y, PAULI_Z, bloch_ket, euler_unitary
from .feedback_protocol import Codebook, FeedbackCode, averaged_final_states
from .quantum_core import DensityMatrix, ERASURE, Povm
from .tensor_linalg import RegisterShape, kron_all, psd_sqrt

logger = logging.getLogger(__name__)


def all_binary_words(n):
    return tuple(itertools.product((0, 1), repeat=n))


def product_states(words, letter_kets):
    """rho_w = (x)_j |psi_{w_j}><psi_{w_j}|."""
    out = []
    for word in words:
        ket = kron_all([np.asarray(letter_kets[a]).reshape(-1, 1) for a in word]).reshape(-1)
        d = len(letter_kets[word[0]])
        out.append(DensityMatrix.from_ket(ket, RegisterShape((d,) * len(word))))
    return out


def entangled_states(words, letter_unitaries, alpha):
    """
    Registers (0,1), (2,3), ... share cos(alpha)|00> + sin(alpha)|11>, a trailing
    odd register starts in |0>; letter a applies letter_unitaries[a] locally.
    """
    n = len(words[0])
    pair = np.zeros(4, dtype=np.complex128)
    pair[0], pair[3] = np.cos(alpha), np.sin(alpha)
    pieces = [pair] * (n // 2) + ([np.array([1, 0], dtype=np.complex128)] if n % 2 else [])
    resource = kron_all([p.reshape(-1, 1) for p in pieces]).reshape(-1)
    out = []
    for word in words:
        u = kron_all([letter_unitaries[a] for a in word])
        out.append(DensityMatrix.from_ket(u @ resource, RegisterShape((2,) * n)))
    return out


def strength_measurement(theta, phi, strength, num_registers):
    """
    Two-outcome Lueders measurement of the last of `num_registers` qubits along
    the Bloch direction (theta, phi): effects (I +- s n.sigma)/2, s in [0, 1].
    s = 1 is the rank-1 projective measurement, s = 0 learns nothing.
    """
    direction = (np.sin(theta) * np.cos(phi) * PAULI_X + np.sin(theta) * np.sin(phi) * PAULI_Y
                 + np.cos(theta) * PAULI_Z)
    eye = np.eye(2 ** (num_registers - 1))
    ops = {}
    for k, sign in ((0, 1.0), (1, -1.0)):
        f = psd_sqrt((np.eye(2) + sign * strength * direction) / 2)
        ops[k] = np.kron(eye, f)
    return Povm(ops, label=f'strength({strength:.3f})')


def trivial_measurement(dim):
    return Povm({0: np.eye(dim)}, label='trivial')


def placeholder_decoder(dim):
    return Povm({ERASURE: np.eye(dim)}, label='undecided')


def next_register_unitaries(unitaries, remaining):
    """Feedback maps acting with unitaries[k] on the first of `remaining` qubits."""
    eye = np.eye(2 ** (remaining - 1))
    return {k: (np.kron(u, eye),) for k, u in unitaries.items()}


def pgm_decoder(code):
    """Square-root measurement for the ensemble {p_w, averaged final state of w}."""
    finals = averaged_final_states(code)
    gammas = {w: p * s.mat for w, p, s in zip(code.codebook.words, code.probabilities, finals) if p > 0}
    return square_root_measurement(gammas).to_povm(label='pgm')


def with_pgm_decoder(code):
    return dataclasses.replace(code, measurements=code.measurements[:-1] + (pgm_decoder(code),),
                               decode_table=None)


@dataclasses.dataclass(frozen=True)
class QubitCodeLayout:
    """
    Flat parameter vector of the qubit code family:
      probs      one simplex block over the 2^n binary codewords
      letters    Bloch angles (product) or Euler angles (entangled) per letter
      alpha      pair entanglement angle (entangled family only)
      measure    (theta, phi, beta) per intermediate round, strength sin(beta)^2
      feedback   Euler angles per round m = 2..n-1 and outcome k in {0, 1}
    """
    n: int
    family: str = 'product'
    feedback: bool = True

    def __post_init__(self):
        if self.family not in ('product', 'entangled'):
            raise ValueError(f"Unknown codeword family '{self.family}'")
        if self.n < 1:
            raise ValueError(f"Block length must be positive, got {self.n}")

    @property
    def words(self):
        return all_binary_words(self.n)

    def block_sizes(self):
        sizes = {'probs': 2 ** self.n,
                 'letters': 2 * (2 if self.family == 'product' else 3),
                 'alpha': 1 if self.family == 'entangled' else 0}
        sizes['measure'] = 3 * (self.n - 1) if self.feedback else 0
        sizes['feedback'] = 6 * max(self.n - 2, 0) if self.feedback else 0
        return sizes

    def slices(self):
        out, start = {}, 0
        for name, size in self.block_sizes().items():
            out[name] = slice(start, start + size)
            start += size
        return out

    @property
    def size(self):
        return sum(self.block_sizes().values())

    def simplex_blocks(self):
        return [self.slices()['probs']]

    def random_point(self, rng):
        x = rng.uniform(0.0, 2.0 * np.pi, self.size)
        x[self.slices()['probs']] = rng.dirichlet(np.ones(2 ** self.n))
        return x

    def lift(self, x, other):
        """Copies the shared blocks of x (laid out by `other`) and zeroes feedback blocks."""
        y = np.zeros(self.size)
        mine, theirs = self.slices(), other.slices()
        for name in ('probs', 'letters', 'alpha'):
            y[mine[name]] = x[theirs[name]]
        return y

    def build(self, channel, x):
        """FeedbackCode for parameter vector x, with a placeholder final measurement."""
        if channel.in_dim != 2 or channel.out_dim != 2:
            raise ValueError(f"The qubit code family needs a qubit channel, got {channel.in_dim}->{channel.out_dim}")
        sl = self.slices()
        n, words = self.n, self.words
        probs = np.clip(x[sl['probs']], 0.0, None)
        probs = probs / probs.sum()
        letters = x[sl['letters']]
        if self.family == 'product':
            kets = {a: bloch_ket(letters[2 * a], letters[2 * a + 1]) for a in (0, 1)}
            states = product_states(words, kets)
        else:
            unitaries = {a: euler_unitary(*letters[3 * a:3 * a + 3]) for a in (0, 1)}
            states = entangled_states(words, unitaries, x[sl['alpha']][0])
        measurements, feedback_maps = [], {}
        for j in range(1, n):
            if self.feedback:
                theta, phi, beta = x[sl['measure']][3 * (j - 1):3 * j]
                measurements.append(strength_measurement(theta, phi, np.sin(beta) ** 2, j))
            else:
                measurements.append(trivial_measurement(2 ** j))
        measurements.append(placeholder_decoder(2 ** n))
        if self.feedback:
            angles = x[sl['feedback']]
            for m in range(2, n):
                base = 6 * (m - 2)
                unitaries = {k: euler_unitary(*angles[base + 3 * k:base + 3 * k + 3]) for k in (0, 1)}
                feedback_maps[m] = next_register_unitaries(unitaries, n - m)
        return FeedbackCode(channel, Codebook(2, words), tuple(probs), tuple(states),
                            tuple(measurements), feedback_maps)
