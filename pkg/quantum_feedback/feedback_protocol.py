"""
Feedback-assisted codes over a quantum channel and the round-by-round
protocol engine.

Round convention (registers 0-based in code):
  round 1  : omega^0 = channel applied to register 0 of the codeword state.
  round m  : channel on register m-1, measurement M_{m-1} on registers
             0..m-2 (renormalised on its outcome k_{m-1}), then the feedback
             map N_m^{(k_{m-1})} on registers m..n-1.
  final    : M_n on all n registers of omega^{n-1} yields k_n.
"""
import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from .cq_state import CapExceededError, CqBranch, CqState
from .quantum_core import (
    DensityMatrix, Povm, QuantumChannel, ZeroProbabilityError, ERASURE, PROB_FLOOR,
    COMPLETENESS_TOL, apply_channel_at,
)
from .tensor_linalg import RegisterShape, as_matrix, dagger, partial_trace, trace_distance

logger = logging.getLogger(__name__)

ENUM_CAP = 10 ** 6


@dataclass(frozen=True)
class Codebook:
    """Distinct length-n words over the alphabet {0..alphabet_size-1}."""
    alphabet_size: int
    words: tuple

    def __post_init__(self):
        words = tuple(tuple(int(a) for a in w) for w in self.words)
        if not words:
            raise ValueError("Codebook is empty")
        lengths = {len(w) for w in words}
        if len(lengths) != 1 or 0 in lengths:
            raise ValueError(f"Codewords must share a positive block length, got lengths {sorted(lengths)}")
        if len(set(words)) != len(words):
            raise ValueError("Codewords must be distinct")
        for w in words:
            if any(a < 0 or a >= self.alphabet_size for a in w):
                raise ValueError(f"Codeword {w} uses letters outside alphabet of size {self.alphabet_size}")
        object.__setattr__(self, 'words', words)

    @property
    def block_length(self):
        return len(self.words[0])

    @property
    def size(self):
        return len(self.words)

    def index(self, word):
        return self.words.index(tuple(word))


@dataclass(frozen=True, eq=False)
class AdaptiveMeasurement:
    """A measurement chosen by the outcome history k_1..k_{j-1}."""
    by_history: dict

    def povm_for(self, history):
        try:
            return self.by_history[tuple(history)]
        except KeyError:
            raise ValueError(f"Adaptive measurement has no POVM for history {history}")

    def povms(self):
        return list(self.by_history.values())


def _povms_of(entry):
    return entry.povms() if isinstance(entry, AdaptiveMeasurement) else [entry]


@dataclass(frozen=True, eq=False)
class FeedbackCode:
    """
    channel        : the memoryless channel used n times.
    codebook       : words over the input alphabet.
    probabilities  : prior over codewords.
    states         : one DensityMatrix per word on n input registers.
    measurements   : M_1..M_n; M_j acts on registers 0..j-1 (Povm or AdaptiveMeasurement).
    feedback_maps  : {m: {k_{m-1}: Kraus tuple on registers m..n-1}} for 2 <= m <= n;
                     missing entries act as the identity.
    decode_table   : {outcome tuple: word or 'er'}, or None to take k_n as the decision.
    """
    channel: QuantumChannel
    codebook: Codebook
    probabilities: tuple
    states: tuple
    measurements: tuple
    feedback_maps: dict = field(default_factory=dict)
    decode_table: dict = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, 'probabilities', tuple(float(p) for p in self.probabilities))
        object.__setattr__(self, 'states', tuple(self.states))
        object.__setattr__(self, 'measurements', tuple(self.measurements))

    @property
    def n(self):
        return self.codebook.block_length

    @property
    def input_shape(self):
        return RegisterShape((self.channel.in_dim,) * self.n)

    def measurement_for(self, j, history):
        entry = self.measurements[j - 1]
        if isinstance(entry, AdaptiveMeasurement):
            return entry.povm_for(history)
        return entry


@dataclass(frozen=True, eq=False)
class ProtocolTranscript:
    word_index: int
    outcomes: tuple
    probability: float
    states: tuple
    decoded: object


@dataclass(frozen=True)
class ErrorProbabilities:
    average: float
    maximum: float


@dataclass(frozen=True, eq=False)
class ProtocolNode:
    history: tuple
    indices: tuple
    prob: float
    state: DensityMatrix


def _check_trace_preserving(maps, dim):
    total = sum(dagger(k) @ k for k in maps)
    return float(np.max(np.abs(total - np.eye(dim))))


def validate_code(c):
    """Returns a list of violated-invariant descriptions; empty when the code is valid."""
    problems = []
    n = c.n
    N = c.codebook.size
    d_in, d_out = c.channel.in_dim, c.channel.out_dim
    probs = np.array(c.probabilities)
    if probs.size != N:
        problems.append(f"probabilities: expected {N} entries, got {probs.size}")
    elif np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
        problems.append(f"probabilities: must be non-negative and sum to 1 (sum={probs.sum():.15f})")
    if len(c.states) != N:
        problems.append(f"states: expected {N} codeword states, got {len(c.states)}")
    for i, s in enumerate(c.states):
        if s.shape != c.input_shape:
            problems.append(f"states[{i}]: register shape {s.shape.dims} != {c.input_shape.dims}")
            continue
        try:
            DensityMatrix(s.mat, s.shape)
        except ValueError as e:
            problems.append(f"states[{i}]: {e}")
    if len(c.measurements) != n:
        problems.append(f"measurements: expected {n} entries, got {len(c.measurements)}")
    words = set(c.codebook.words)
    for j, entry in enumerate(c.measurements, start=1):
        for povm in _povms_of(entry):
            if povm.dim != d_out ** j:
                problems.append(f"measurements[{j}]: acts on dimension {povm.dim}, expected {d_out ** j}")
            if j == n and c.decode_table is None:
                stray = [k for k in povm.labels() if k != ERASURE and k not in words]
                if stray:
                    problems.append(f"measurements[{n}]: outcomes {stray} are neither codewords nor '{ERASURE}'")
    for m, by_outcome in c.feedback_maps.items():
        if not 2 <= m <= n:
            problems.append(f"feedback_maps[{m}]: round outside 2..{n}")
            continue
        dim = d_in ** (n - m)
        for k, maps in by_outcome.items():
            if any(as_matrix(x).shape != (dim, dim) for x in maps):
                problems.append(f"feedback_maps[{m}][{k}]: operators must be {dim}x{dim}")
                continue
            gap = _check_trace_preserving(maps, dim)
            if gap > COMPLETENESS_TOL:
                problems.append(f"feedback_maps[{m}][{k}]: not trace preserving (deviation {gap:.3e})")
    if c.decode_table is not None:
        bad = [v for v in c.decode_table.values() if v != ERASURE and tuple(v) not in words]
        if bad:
            problems.append(f"decode_table: decisions {bad[:3]} are not codewords")
    for p in problems:
        logger.debug(f"validate_code: {p}")
    return problems


def decode(c, outcomes):
    outcomes = tuple(outcomes)
    if c.decode_table is None:
        last = outcomes[-1]
        return last if last in c.codebook.words else ERASURE
    return c.decode_table.get(outcomes, ERASURE)


def round_zero(c, word):
    """omega^0 for the codeword `word` (index or letter tuple)."""
    idx = word if isinstance(word, int) else c.codebook.index(word)
    return apply_channel_at(c.channel, c.states[idx], 0)


def _apply_feedback(c, state, m, outcome):
    maps = c.feedback_maps.get(m, {}).get(outcome)
    if not maps:
        return state
    prefix = math.prod(state.shape.dims[:m])
    eye = np.eye(prefix)
    mat = np.zeros_like(state.mat)
    for k in maps:
        full = np.kron(eye, as_matrix(k))
        mat += full @ state.mat @ dagger(full)
    return DensityMatrix(mat, state.shape, check=False)


def _pad_left(op, state, registers):
    rest = math.prod(state.shape.dims[registers:])
    return np.kron(op, np.eye(rest))


def _round_branches(c, state, m, history, prob_floor):
    """Yields (label, index, probability, omega^{m-1}) for every outcome of M_{m-1}."""
    shifted = apply_channel_at(c.channel, state, m - 1)
    povm = c.measurement_for(m - 1, history)
    for index, (label, f) in enumerate(povm.completed().items()):
        full = _pad_left(f, shifted, m - 1)
        unnormalised = full @ shifted.mat @ dagger(full)
        p = float(np.real(np.trace(unnormalised)))
        if p < prob_floor:
            continue
        post = DensityMatrix(unnormalised / p, shifted.shape, check=False)
        yield label, index, p, _apply_feedback(c, post, m, label)


def round_update(c, state, m, outcome, history=(), prob_floor=PROB_FLOOR):
    """
    One protocol round m (2 <= m <= n) from omega^{m-2} conditioned on
    M_{m-1} = outcome. Returns (probability, omega^{m-1}).
    """
    if not 2 <= m <= c.n:
        raise ValueError(f"Round {m} outside 2..{c.n}")
    for label, _, p, post in _round_branches(c, state, m, history, 0.0):
        if label == outcome:
            if p < prob_floor:
                raise ZeroProbabilityError(f"Outcome {outcome!r} of M_{m - 1} has probability {p:.3e}")
            return p, post
    raise ValueError(f"{outcome!r} is not an outcome of M_{m - 1}")


def final_measurement(c, state, history=(), prob_floor=PROB_FLOOR):
    """Applies M_n to omega^{n-1}: {label: (probability, index, post_state)}."""
    povm = c.measurement_for(c.n, history)
    results = {}
    for index, (label, f) in enumerate(povm.completed().items()):
        unnormalised = f @ state.mat @ dagger(f)
        p = float(np.real(np.trace(unnormalised)))
        if p >= prob_floor:
            results[label] = (p, index, DensityMatrix(unnormalised / p, state.shape, check=False))
    return results


def unroll_levels(c, word_index, enum_cap=ENUM_CAP, prob_floor=PROB_FLOOR):
    """levels[t] lists the ProtocolNodes (history, probability, omega^t) for t = 0..n-1."""
    levels = [[ProtocolNode((), (), 1.0, round_zero(c, word_index))]]
    for m in range(2, c.n + 1):
        nxt = []
        for node in levels[-1]:
            for label, index, p, post in _round_branches(c, node.state, m, node.history, prob_floor):
                prob = node.prob * p
                if prob < prob_floor:
                    continue
                nxt.append(ProtocolNode(node.history + (label,), node.indices + (index,), prob, post))
        if len(nxt) > enum_cap:
            raise CapExceededError(f"Round {m} produces {len(nxt)} branches, above the cap {enum_cap}")
        levels.append(nxt)
    return levels


def enumerate_transcripts(c, word, enum_cap=ENUM_CAP, prob_floor=PROB_FLOOR):
    """Every outcome sequence with probability >= prob_floor for one codeword."""
    idx = word if isinstance(word, int) else c.codebook.index(word)
    levels = unroll_levels(c, idx, enum_cap, prob_floor)
    paths = {(): []}
    for level in levels:
        for node in level:
            paths[node.history] = paths.get(node.history[:-1], []) + [node.state]
    transcripts = []
    for node in levels[-1]:
        for label, (p, _, _) in final_measurement(c, node.state, node.history, 0.0).items():
            prob = node.prob * p
            if prob < prob_floor:
                continue
            outcomes = node.history + (label,)
            transcripts.append(ProtocolTranscript(idx, outcomes, prob, tuple(paths[node.history]),
                                                  decode(c, outcomes)))
        if len(transcripts) > enum_cap:
            raise CapExceededError(f"More than {enum_cap} transcripts for codeword {idx}")
    return transcripts


def _draw(rng, labels, probs):
    probs = np.asarray(probs, dtype=float)
    return labels[int(rng.choice(len(labels), p=probs / probs.sum()))]


def sample_transcript(c, word, seed):
    """One transcript drawn with a numpy Generator (or a seed for one)."""
    rng = np.random.default_rng(seed)
    idx = word if isinstance(word, int) else c.codebook.index(word)
    state = round_zero(c, idx)
    history, states, prob = (), [state], 1.0
    for m in range(2, c.n + 1):
        branches = list(_round_branches(c, state, m, history, PROB_FLOOR))
        chosen = _draw(rng, list(range(len(branches))), [b[2] for b in branches])
        label, _, p, state = branches[chosen]
        history += (label,)
        prob *= p
        states.append(state)
    final = final_measurement(c, state, history)
    labels = list(final)
    label = _draw(rng, labels, [final[k][0] for k in labels])
    outcomes = history + (label,)
    return ProtocolTranscript(idx, outcomes, prob * final[label][0], tuple(states), decode(c, outcomes))


def x_alphabet_sizes(c):
    """Alphabet size of each recorded outcome register X_1..X_{n-1}."""
    return [max(len(p.labels()) for p in _povms_of(c.measurements[j - 1])) for j in range(1, c.n)]


def ehs_states(c, enum_cap=ENUM_CAP):
    """
    The cq-states rho^0..rho^{n-1}: classical A_1..A_n (codeword letters) and
    X_1..X_{n-1} (outcome indices recorded so far, 0 when not yet measured),
    quantum part omega^t.
    """
    n = c.n
    registers = tuple((f'A{j}', c.codebook.alphabet_size) for j in range(1, n + 1))
    registers += tuple((f'X{j}', size) for j, size in enumerate(x_alphabet_sizes(c), start=1))
    per_t = [[] for _ in range(n)]
    for idx, (word, p_word) in enumerate(zip(c.codebook.words, c.probabilities)):
        if p_word <= 0.0:
            continue
        for t, level in enumerate(unroll_levels(c, idx, enum_cap)):
            for node in level:
                labels = word + node.indices + (0,) * (n - 1 - t)
                per_t[t].append(CqBranch(labels, p_word * node.prob, node.state))
    states = []
    for t, branches in enumerate(per_t):
        states.append(CqState.from_weights(registers, branches[0].state.shape, branches))
    return states


def ehs_state(c, t, enum_cap=ENUM_CAP):
    if not 0 <= t <= c.n - 1:
        raise ValueError(f"EHS index {t} outside 0..{c.n - 1}")
    return ehs_states(c, enum_cap)[t]


def outcome_chain(c, enum_cap=ENUM_CAP):
    """Joint distribution {(word_index, (k_1..k_n)): probability}."""
    joint = {}
    for idx, p_word in enumerate(c.probabilities):
        if p_word <= 0.0:
            continue
        for tr in enumerate_transcripts(c, idx, enum_cap):
            joint[(idx, tr.outcomes)] = joint.get((idx, tr.outcomes), 0.0) + p_word * tr.probability
    return joint


def error_probability(c, enum_cap=ENUM_CAP):
    """Average and maximal decoding error over the codebook."""
    correct = []
    for idx, word in enumerate(c.codebook.words):
        hit = sum(tr.probability for tr in enumerate_transcripts(c, idx, enum_cap) if tr.decoded == word)
        correct.append(min(hit, 1.0))
    correct = np.array(correct)
    average = float(1.0 - np.dot(np.array(c.probabilities), correct))
    maximum = float(np.max(1.0 - correct))
    return ErrorProbabilities(max(average, 0.0), max(maximum, 0.0))


def message_distribution(c, message_map=None):
    """
    [(message, word_index, probability)]. message_map[i] is the word index of
    message i (identity when None); a word's probability is split evenly over
    its messages.
    """
    message_map = list(range(c.codebook.size)) if message_map is None else list(message_map)
    counts = defaultdict(int)
    for w in message_map:
        if not 0 <= w < c.codebook.size:
            raise ValueError(f"Message map points at codeword {w}, codebook has {c.codebook.size}")
        counts[w] += 1
    missing = [w for w, p in enumerate(c.probabilities) if p > 0 and counts[w] == 0]
    if missing:
        raise ValueError(f"Codewords {missing} carry probability but no message")
    return [(i, w, c.probabilities[w] / counts[w]) for i, w in enumerate(message_map)]


def markov_check(c, message_map=None, enum_cap=ENUM_CAP):
    """
    max |P(k_n | k^{n-1}, L, M) - P(k_n | k^{n-1}, L)| over the protocol;
    zero up to rounding when the message only enters through its codeword.
    """
    messages = message_distribution(c, message_map)
    transcripts = {w: enumerate_transcripts(c, w, enum_cap) for w in {w for _, w, _ in messages}}
    with_message = defaultdict(float)
    without = defaultdict(float)
    for m, w, pm in messages:
        for tr in transcripts[w]:
            with_message[(m, w, tr.outcomes)] += pm * tr.probability
            without[(w, tr.outcomes)] += pm * tr.probability

    def conditional(table):
        totals = defaultdict(float)
        for key, p in table.items():
            totals[key[:-1] + (key[-1][:-1],)] += p
        return {key: p / totals[key[:-1] + (key[-1][:-1],)] for key, p in table.items()}

    cond_with = conditional(with_message)
    cond_without = conditional(without)
    worst = 0.0
    for (m, w, outcomes), p in cond_with.items():
        worst = max(worst, abs(p - cond_without[(w, outcomes)]))
    return worst


def averaged_final_states(c, enum_cap=ENUM_CAP):
    """Per codeword, sum over histories of P(history) omega^{n-1}."""
    out = []
    for idx in range(c.codebook.size):
        level = unroll_levels(c, idx, enum_cap)[-1]
        mat = sum(node.prob * node.state.mat for node in level)
        out.append(DensityMatrix(mat / np.real(np.trace(mat)), level[0].state.shape, check=False))
    return out


def intermediate_measurements_projective(c):
    """True when every effect of M_1..M_{n-1} is a projector."""
    for j in range(1, c.n):
        for povm in _povms_of(c.measurements[j - 1]):
            for effect in povm.effects().values():
                if np.max(np.abs(effect @ effect - effect)) > COMPLETENESS_TOL:
                    return False
    return True


def causality_violation(c):
    """
    Largest trace distance between the register-0..t-1 marginals of two
    codewords that share their first t letters (0 for causal codes).
    """
    worst = 0.0
    shape = c.input_shape
    for t in range(1, c.n):
        groups = defaultdict(list)
        for word, state in zip(c.codebook.words, c.states):
            groups[word[:t]].append(partial_trace(state.mat, shape, range(t)))
        for members in groups.values():
            for other in members[1:]:
                worst = max(worst, trace_distance(members[0], other))
    return worst
