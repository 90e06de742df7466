"""
Seeded random generators for the randomised inequality suites: states,
channels, POVMs, operator pairs and causal feedback codes.
"""
import logging

import numpy as np
from scipy.stats import unitary_group

from .code_builders import (
    entangled_states, next_register_unitaries, product_states, strength_measurement,
    placeholder_decoder, with_pgm_decoder,
)
from .cq_state import CqBranch, CqState
from .feedback_protocol import Codebook, FeedbackCode
from .quantum_core import DensityMatrix, Povm, QuantumChannel
from .tensor_linalg import DimensionMismatchError, RegisterShape, pinv_sqrt, psd_sqrt

logger = logging.getLogger(__name__)


def random_unitary(rng, dim):
    if dim == 1:
        return np.ones((1, 1), dtype=np.complex128)
    return unitary_group.rvs(dim, random_state=rng)


def _ginibre(rng, rows, cols):
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_ket(rng, dim):
    v = _ginibre(rng, dim, 1).reshape(-1)
    return v / np.linalg.norm(v)


def random_pure_state(rng, dim):
    return DensityMatrix.from_ket(random_ket(rng, dim))


def random_density_matrix(rng, dim, rank=None, shape=None):
    g = _ginibre(rng, dim, rank or dim)
    mat = g @ g.conj().T
    return DensityMatrix(mat / np.trace(mat).real, shape or RegisterShape((dim,)), check=False)


def random_channel(rng, d_in, d_out, num_kraus=2, label='random'):
    """Isometry from orthonormalised Gaussian columns, split into Kraus blocks."""
    if d_out * num_kraus < d_in:
        raise DimensionMismatchError(
            f"{num_kraus} Kraus operators of shape {d_out}x{d_in} cannot form a trace-preserving map")
    q, _ = np.linalg.qr(_ginibre(rng, d_out * num_kraus, d_in))
    kraus = tuple(q[i * d_out:(i + 1) * d_out, :] for i in range(num_kraus))
    return QuantumChannel(kraus, label=label)


def random_povm(rng, dim, outcomes):
    """F_k = sqrt(S^{-1/2} G_k S^{-1/2}) for random positive G_k with S = sum G_k."""
    gs = []
    for _ in range(outcomes):
        g = _ginibre(rng, dim, dim)
        gs.append(g @ g.conj().T)
    root = pinv_sqrt(sum(gs))
    return Povm({k: psd_sqrt(root @ g @ root) for k, g in enumerate(gs)}, label='random')


def random_effect_pair(rng, dim):
    """(S, T) with 0 <= S <= I and T >= 0."""
    u = random_unitary(rng, dim)
    s = u @ np.diag(rng.uniform(0.0, 1.0, dim)) @ u.conj().T
    g = _ginibre(rng, dim, int(rng.integers(1, dim + 1)))
    t = rng.uniform(0.0, 1.0) * (g @ g.conj().T) / dim
    return (s + s.conj().T) / 2, (t + t.conj().T) / 2


def random_gentle_instance(rng, dim, eps=None):
    """(rho, R, eps) with 0 <= R <= I and tr(rho R) >= 1 - 3 eps; eps is drawn when not given."""
    eps = float(rng.uniform(1e-4, 0.3)) if eps is None else float(eps)
    eta = float(rng.uniform(0.0, 3.0 * eps))
    if rng.uniform() < 0.5:
        rho = random_density_matrix(rng, dim)
        u = random_unitary(rng, dim)
        q = u @ np.diag(rng.uniform(0.0, 1.0, dim)) @ u.conj().T
        effect = (1.0 - eta) * np.eye(dim) + eta * q
    else:
        ket = random_ket(rng, dim)
        pure = np.outer(ket, ket.conj())
        mixed = random_density_matrix(rng, dim).mat
        rho = DensityMatrix((1.0 - eta / 2) * pure + (eta / 2) * mixed, RegisterShape((dim,)), check=False)
        effect = pure
    return rho, (effect + effect.conj().T) / 2, eps


def random_cq_state(rng, alphabet_sizes, quantum_dims, num_branches=4):
    """Random labels (distinct) and random mixed states."""
    shape = RegisterShape(tuple(quantum_dims))
    labels = set()
    while len(labels) < num_branches:
        labels.add(tuple(int(rng.integers(0, a)) for a in alphabet_sizes))
    weights = rng.dirichlet(np.ones(num_branches))
    branches = tuple(CqBranch(lab, float(w), random_density_matrix(rng, shape.total, shape=shape))
                     for lab, w in zip(sorted(labels), weights))
    registers = tuple((f'C{i}', a) for i, a in enumerate(alphabet_sizes))
    return CqState(registers, shape, branches)


def random_causal_code(rng, n, num_words=None, channel=None, family=None, strength=None):
    """
    Random code whose prefix marginals depend only on the letters sent so far:
    product or entangled-pair codewords, single-register Lueders feedback
    measurements, next-register unitary feedback, square-root final decoder.
    """
    channel = channel or random_channel(rng, 2, 2, int(rng.integers(1, 4)))
    family = family or ('entangled' if n >= 2 and rng.uniform() < 0.5 else 'product')
    num_words = num_words or int(rng.integers(2, min(4, 2 ** n) + 1))
    chosen = rng.choice(2 ** n, size=num_words, replace=False)
    words = tuple(tuple(int(b) for b in np.binary_repr(int(i), width=n)) for i in sorted(chosen))
    if family == 'product':
        states = product_states(words, {a: random_ket(rng, 2) for a in (0, 1)})
    else:
        unitaries = {a: random_unitary(rng, 2) for a in (0, 1)}
        states = entangled_states(words, unitaries, float(rng.uniform(0, np.pi / 2)))
    measurements = []
    for j in range(1, n):
        s = float(rng.uniform()) if strength is None else strength
        measurements.append(strength_measurement(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi), s, j))
    measurements.append(placeholder_decoder(channel.out_dim ** n))
    feedback_maps = {m: next_register_unitaries({k: random_unitary(rng, 2) for k in (0, 1)}, n - m)
                     for m in range(2, n)}
    probs = rng.dirichlet(np.ones(num_words))
    code = FeedbackCode(channel, Codebook(2, words), tuple(probs), tuple(states),
                        tuple(measurements), feedback_maps)
    return with_pgm_decoder(code)
