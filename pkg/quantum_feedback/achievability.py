"""
Achievability machinery: Gamma operators and square-root measurements, the
gentle-measurement and Hayashi-Nagaoka operator checks, the error
recursion, and the double-blocked code that runs l interleaved copies of a
base feedback code with a square-root decoder after every global round.
"""
import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np

from .feedback_protocol import (
    AdaptiveMeasurement, Codebook, FeedbackCode, PROB_FLOOR, final_measurement, unroll_levels,
)
from .quantum_core import DensityMatrix, ERASURE, Povm
from .tensor_linalg import (
    DimensionMismatchError, PSD_TOL, RegisterShape, as_matrix, dagger, eigvals_hermitian, embed_operator,
    herm_eig, kron_all, partial_trace, permute_registers, pinv_sqrt, psd_sqrt, trace_norm,
)
from .typicality import TypicalityParams, cond_typical_projector

logger = logging.getLogger(__name__)

GAMMA_ZERO_TOL = 1e-12
CHECK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SubPovm:
    """Effects R_r with sum <= I, and the remainder R_0 = I - sum R_r."""
    elements: dict
    remainder: np.ndarray

    def to_povm(self, label='square-root'):
        ops = {r: psd_sqrt(e) for r, e in self.elements.items()}
        return Povm(ops, mode='sub', label=label)


def gamma_operator(avg_proj, cond_proj):
    """Pi Pi_r Pi."""
    p = as_matrix(avg_proj)
    q = as_matrix(cond_proj)
    if p.shape != q.shape or p.shape[0] != p.shape[1]:
        raise DimensionMismatchError(f"Projectors of shape {p.shape} and {q.shape} cannot be sandwiched")
    return p @ q @ p


def _clip_to_identity(elements):
    """
    Rescales the effects by K = min(1, S^{-1/2}) with S their sum, so that the
    sum is at most I. Inverting near-kernel eigenvalues of T can push S a
    little above I; K commutes with S and is the identity when S <= I.
    """
    values, vectors = herm_eig(sum(elements.values()))
    if not values.size or values[0] <= 1.0:
        return elements
    factors = np.ones_like(values)
    over = values > 1.0
    factors[over] = 1.0 / np.sqrt(values[over])
    k = (vectors * factors) @ vectors.conj().T
    logger.debug(f"Square-root effects summed to {values[0]:.12f}; rescaled to the identity")
    clipped = {}
    for r, e in elements.items():
        e = k @ e @ k
        clipped[r] = (e + dagger(e)) / 2
    return clipped


def square_root_measurement(gammas):
    """R_r = T^{-1/2} Gamma_r T^{-1/2} with T = sum Gamma (inverse on the support of T)."""
    gammas = {r: as_matrix(g) for r, g in gammas.items()}
    if not gammas:
        raise ValueError("No Gamma operators given")
    total = sum(gammas.values())
    if float(np.max(np.abs(total))) <= GAMMA_ZERO_TOL:
        raise ValueError("Every Gamma operator vanishes; no square-root measurement exists")
    root = pinv_sqrt((total + dagger(total)) / 2)
    elements = {}
    for r, g in gammas.items():
        e = root @ g @ root
        elements[r] = (e + dagger(e)) / 2
    elements = _clip_to_identity(elements)
    remainder = np.eye(total.shape[0]) - sum(elements.values())
    return SubPovm(elements, (remainder + dagger(remainder)) / 2)


@dataclass(frozen=True)
class GentleMeasurementResult:
    distance: float
    bound: float
    hypothesis_met: bool
    passed: bool

    @property
    def slack(self):
        return self.bound - self.distance


def gentle_measurement_bound(eps):
    return math.sqrt(24.0 * eps) + 6.0 * eps


def gentle_measurement_check(rho, effect, eps):
    """
    Trace-norm distance between rho and sqrt(R) rho sqrt(R) / tr(rho R) against
    sqrt(24 eps) + 6 eps; the bound is only promised when tr(rho R) >= 1 - 3 eps.
    """
    rho = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
    effect = as_matrix(effect)
    accept = float(np.real(np.trace(rho @ effect)))
    root = psd_sqrt(effect)
    post = root @ rho @ root
    distance = trace_norm(rho - post / accept) if accept > 0 else 2.0
    bound = gentle_measurement_bound(eps)
    return GentleMeasurementResult(distance, bound, accept >= 1.0 - 3.0 * eps - CHECK_TOL,
                                   distance <= bound + CHECK_TOL)


@dataclass(frozen=True)
class OperatorInequalityResult:
    min_eigenvalue: float
    passed: bool


def hayashi_nagaoka_check(s, t, flip_sign=False):
    """
    Lowest eigenvalue of 2(I - S) + 4T - (I - (S+T)^{-1/2} S (S+T)^{-1/2}),
    which must be >= -1e-9 for 0 <= S <= I and T >= 0. flip_sign negates the
    difference, which makes the check fail on generic inputs.
    """
    s, t = as_matrix(s), as_matrix(t)
    eye = np.eye(s.shape[0])
    if eigvals_hermitian(s)[-1] < -PSD_TOL or eigvals_hermitian(eye - s)[-1] < -PSD_TOL:
        raise ValueError("S must satisfy 0 <= S <= I")
    if eigvals_hermitian(t)[-1] < -PSD_TOL:
        raise ValueError("T must be positive semidefinite")
    root = pinv_sqrt(s + t)
    lhs = eye - root @ s @ root
    rhs = 2.0 * (eye - s) + 4.0 * t
    diff = lhs - rhs if flip_sign else rhs - lhs
    lowest = float(eigvals_hermitian((diff + dagger(diff)) / 2)[-1])
    return OperatorInequalityResult(lowest, lowest >= -CHECK_TOL)


def disturbance_accumulator(params, t):
    """sum_{s=1}^{t} sqrt(24 eps_s) + 6 eps_s with eps_s = 2^{-s l c delta^2}."""
    if t < 0:
        raise ValueError(f"Round count must be non-negative, got {t}")
    exponent = params.l * params.c * params.delta ** 2
    return sum(gentle_measurement_bound(2.0 ** (-s * exponent)) for s in range(1, t + 1))


def error_recursion(q):
    """P_t = P_{t-1} + q_t (1 - P_{t-1}), P_0 = 0; returns [P_1..P_n]."""
    out, p = [], 0.0
    for qt in q:
        if not 0.0 <= qt <= 1.0:
            raise ValueError(f"Per-round error {qt} outside [0, 1]")
        p = p + qt * (1.0 - p)
        out.append(p)
    return out


def union_bound_total(q):
    return float(sum(q))


# ---------------------------------------------------------------------------
# Double-blocked code
# ---------------------------------------------------------------------------

def _copy_states(base, prob_floor):
    """
    {(t, w, h): (P(h | w), received state)} for one copy: t < n is the state
    of registers 0..t-1 right after M_t, t = n the full omega^{n-1}.
    """
    n = base.n
    table = {}
    for w in range(base.codebook.size):
        levels = unroll_levels(base, w)
        for t in range(1, n):
            for node in levels[t - 1]:
                shape = node.state.shape
                rest = np.eye(math.prod(shape.dims[t:]))
                for k, f in base.measurement_for(t, node.history).completed().items():
                    full = np.kron(f, rest)
                    unnormalised = full @ node.state.mat @ dagger(full)
                    p = float(np.real(np.trace(unnormalised)))
                    if node.prob * p < prob_floor:
                        continue
                    reduced = partial_trace(unnormalised / p, shape, range(t))
                    table[(t, w, node.history + (k,))] = (node.prob * p, reduced)
        for node in levels[n - 1]:
            table[(n, w, node.history)] = (node.prob, node.state.mat)
    return table


def _copy_major_to_interleaved(t, l):
    """order[q] for permute_registers: nl position (s, j) <- copy-major position (j, s)."""
    return [j * t + s for s in range(t) for j in range(l)]


def _parse_history(history, n, l):
    """Splits an outcome history into per-copy feedback outcomes and decoded round strings."""
    ks = [[] for _ in range(l)]
    decoded = []
    for pos, label in enumerate(history):
        if label == ERASURE:
            return None
        t, j = divmod(pos, l)
        if t < n - 1:
            if j < l - 1:
                ks[j].append(label)
            else:
                k, r = label
                if r == ERASURE:
                    return None
                ks[j].append(k)
                decoded.append(r)
        elif j == l - 1:
            decoded.append(label)
    return [tuple(k) for k in ks], decoded


class _DoubleBlockedBuilder:
    """Holds the per-copy state tables and memoised square-root decoders."""

    def __init__(self, base, l, params, rate_split, prob_floor):
        self.base = base
        self.l = l
        self.n = base.n
        self.params = params
        self.prob_floor = prob_floor
        self.d_out = base.channel.out_dim
        self.table = _copy_states(base, prob_floor)
        self.decoders = {}
        self.words = self._select_words(rate_split)

    def _round_string(self, combo, t):
        return tuple(self.base.codebook.words[w][t] for w in combo)

    def _select_words(self, rate_split):
        combos = list(itertools.product(range(self.base.codebook.size), repeat=self.l))
        if rate_split is None:
            return combos
        if len(rate_split) != self.n:
            raise ValueError(f"rate_split needs {self.n} entries, got {len(rate_split)}")
        allowed = []
        for t, rate in enumerate(rate_split):
            strings = sorted({self._round_string(c, t) for c in combos})
            keep = max(1, int(math.floor(2.0 ** (self.l * rate) + 1e-9)))
            allowed.append(set(strings[:keep]))
        selected = [c for c in combos if all(self._round_string(c, t) in allowed[t] for t in range(self.n))]
        logger.info(f"Rate split {list(rate_split)} keeps {len(selected)} of {len(combos)} interleaved words")
        return selected

    def word_prior(self, combo):
        return math.prod(self.base.probabilities[w] for w in combo)

    def letters(self, combo):
        return tuple(self.base.codebook.words[combo[j]][s] for s in range(self.n) for j in range(self.l))

    def decoder(self, t, ks, decoded):
        """Square-root decoder for global round t (1-based) or None when nothing is consistent."""
        key = (t, tuple(ks), tuple(decoded))
        if key not in self.decoders:
            self.decoders[key] = self._build_decoder(t, ks, decoded)
        return self.decoders[key]

    def _build_decoder(self, t, ks, decoded):
        base_words = self.base.codebook.words
        prefixes = [tuple(decoded[s][j] for s in range(t - 1)) for j in range(self.l)]
        posterior = {}
        for combo in self.words:
            if any(base_words[combo[j]][:t - 1] != prefixes[j] for j in range(self.l)):
                continue
            weight = self.word_prior(combo)
            for j in range(self.l):
                entry = self.table.get((t, combo[j], ks[j]))
                weight *= entry[0] if entry else 0.0
            if weight >= self.prob_floor:
                posterior[combo] = weight
        if not posterior:
            return None
        # per-label states: label = (letter prefix, copy outcome history)
        sums, avg_sums = {}, {}
        for j in range(self.l):
            for w, word in enumerate(base_words):
                entry = self.table.get((t, w, ks[j]))
                if word[:t - 1] != prefixes[j] or entry is None:
                    continue
                weight = self.base.probabilities[w] * entry[0]
                if weight <= 0:
                    continue
                full_label = (word[:t], ks[j])
                acc = sums.setdefault(full_label, [0.0, 0])
                acc[0] += weight
                acc[1] = acc[1] + weight * entry[1]
                avg = avg_sums.setdefault((prefixes[j], ks[j]), [0.0, 0])
                avg[0] += weight
                avg[1] = avg[1] + weight * entry[1]
        states = {label: m / w for label, (w, m) in sums.items()}
        averages = {label: m / w for label, (w, m) in avg_sums.items()}
        delta = self.params.delta
        average_projector = cond_typical_projector(averages, [(prefixes[j], ks[j]) for j in range(self.l)], delta)
        strings = sorted({self._round_string(combo, t - 1) for combo in posterior})
        conditional = {}
        for r in strings:
            labels = [(prefixes[j] + (r[j],), ks[j]) for j in range(self.l)]
            conditional[r] = cond_typical_projector(states, labels, delta)
        gammas = {r: gamma_operator(average_projector, pr) for r, pr in conditional.items()}
        if all(float(np.max(np.abs(g))) <= GAMMA_ZERO_TOL for g in gammas.values()):
            logger.warning(f"Global round {t}: typical projectors are disjoint at delta={delta}; "
                           f"decoding with the conditional projectors alone.")
            gammas = conditional
            if all(float(np.max(np.abs(g))) <= GAMMA_ZERO_TOL for g in gammas.values()):
                return None
        copy_major = RegisterShape((self.d_out,) * (self.l * t))
        order = _copy_major_to_interleaved(t, self.l)
        interleaved = {r: permute_registers(g, copy_major, order)[0] for r, g in gammas.items()}
        return square_root_measurement(interleaved)

    def measurement(self, r_index, history):
        """M_r (1-based) of the interleaved code for an outcome history."""
        dims = RegisterShape((self.d_out,) * r_index)
        eye = np.eye(dims.total)
        parsed = _parse_history(history, self.n, self.l)
        if parsed is None:
            return Povm({ERASURE: eye}, label=f'M{r_index}:stopped')
        ks, decoded = parsed
        t, j = divmod(r_index - 1, self.l)
        t += 1
        if j < self.l - 1:
            if t == self.n:
                return Povm({0: eye}, label=f'M{r_index}:idle')
            ops = self.base.measurement_for(t, ks[j]).completed()
            targets = [s * self.l + j for s in range(t)]
            return Povm({k: embed_operator(f, dims, targets) for k, f in ops.items()},
                        label=f'M{r_index}:copy{j + 1}')
        targets = [s * self.l + j for s in range(t)]
        if t < self.n:
            feedback_ops = {k: embed_operator(f, dims, targets)
                            for k, f in self.base.measurement_for(t, ks[j]).completed().items()}
        else:
            feedback_ops = {None: eye}
        ops = {}
        for k, f in feedback_ops.items():
            copy_ks = list(ks)
            if k is not None:
                copy_ks[j] = ks[j] + (k,)
            sub = self.decoder(t, copy_ks, decoded)
            def tag(r, k=k):
                return r if k is None else (k, r)
            if sub is None:
                ops[tag(ERASURE)] = f
                continue
            for r, effect in sub.elements.items():
                ops[tag(r)] = psd_sqrt(effect) @ f
            ops[tag(ERASURE)] = psd_sqrt(sub.remainder) @ f
        return Povm(ops, label=f'M{r_index}:decode{t}')

    def feedback_maps(self, measurements):
        nl = self.n * self.l
        d_in = self.base.channel.in_dim
        maps = {}
        for r_index in range(1, nl):
            t, j = divmod(r_index - 1, self.l)
            t += 1
            if t >= self.n:
                continue
            m = r_index + 1
            base_maps = self.base.feedback_maps.get(t + 1, {})
            if not base_maps:
                continue
            suffix = RegisterShape((d_in,) * (nl - m))
            targets = [s * self.l + j - m for s in range(t + 1, self.n)]
            labels = {lab for povm in measurements[r_index - 1].povms() for lab in povm.labels()}
            per_label = {}
            for label in labels:
                k = label[0] if isinstance(label, tuple) and j == self.l - 1 else label
                if k == ERASURE or k not in base_maps:
                    continue
                per_label[label] = tuple(embed_operator(x, suffix, targets) for x in base_maps[k])
            if per_label:
                maps[m] = per_label
        return maps


def build_double_blocked_code(base, l, params=None, rate_split=None, prob_floor=PROB_FLOOR):
    """
    Block-length n*l code running l interleaved copies of `base`: transmission
    round (t-1)*l + j carries letter t of copy j, each copy keeps its own
    feedback measurements and maps, and after the last copy of every global
    round t the receiver applies a square-root decoder for the round-t letters
    of all copies, conditioned on all feedback outcomes and earlier decisions.
    Decisions are 'er' as soon as any decoder lands on its remainder.
    """
    params = params or TypicalityParams(l=l)
    if l < 1:
        raise ValueError(f"Number of copies must be at least 1, got {l}")
    builder = _DoubleBlockedBuilder(base, l, params, rate_split, prob_floor)
    n, nl = base.n, base.n * l
    logger.info(f"Building double-blocked code: n={n}, l={l}, {len(builder.words)} words, delta={params.delta}")

    in_shape = RegisterShape((base.channel.in_dim,) * nl)
    copy_major = RegisterShape((base.channel.in_dim,) * nl)
    order = [j * n + s for s in range(n) for j in range(l)]
    states, priors, letters = [], [], []
    for combo in builder.words:
        mat = kron_all([base.states[w].mat for w in combo])
        mat, _ = permute_registers(mat, copy_major, order)
        states.append(DensityMatrix(mat, in_shape, check=False))
        priors.append(builder.word_prior(combo))
        letters.append(builder.letters(combo))
    total = sum(priors)
    if total <= 0:
        raise ValueError("Selected interleaved codewords carry no probability")
    priors = [p / total for p in priors]

    measurements = []
    histories = [()]
    for r_index in range(1, nl + 1):
        by_history = {h: builder.measurement(r_index, h) for h in histories}
        measurements.append(AdaptiveMeasurement(by_history))
        histories = [h + (label,) for h in histories for label in by_history[h].labels()]

    decode_table = {}
    words = set(letters)
    for h in histories:
        parsed = _parse_history(h, n, l)
        if parsed is None or len(parsed[1]) != n:
            continue
        decoded = parsed[1]
        word = tuple(decoded[s][j] for s in range(n) for j in range(l))
        if word in words:
            decode_table[h] = word

    code = FeedbackCode(
        channel=base.channel,
        codebook=Codebook(base.codebook.alphabet_size, tuple(letters)),
        probabilities=tuple(priors),
        states=tuple(states),
        measurements=tuple(measurements),
        feedback_maps=builder.feedback_maps(measurements),
        decode_table=decode_table,
        metadata={'double_blocked': {'copies': l, 'base_n': n, 'delta': params.delta,
                                     'words': tuple(builder.words)},
                  'decoders': builder.decoders},
    )
    logger.info(f"Double-blocked code ready: {len(histories)} outcome histories, "
                f"{len(builder.decoders)} square-root decoders")
    return code


def realized_rate_split(blocked):
    """log2(#distinct round-t letter strings) / l for every global round t."""
    info = blocked.metadata['double_blocked']
    l, n = info['copies'], info['base_n']
    rates = []
    for t in range(n):
        strings = {w[t * l:(t + 1) * l] for w in blocked.codebook.words}
        rates.append(math.log2(len(strings)) / l)
    return rates


@dataclass(frozen=True)
class DisturbanceRecord:
    word_index: int
    global_round: int
    distance: float
    bound: float
    epsilons: tuple

    @property
    def passed(self):
        return self.distance <= self.bound + CHECK_TOL


def cumulative_disturbance_check(base, blocked):
    """
    Along every correctly decoded branch of the interleaved code, compares the
    received state after each global round with the product of the per-copy
    states that never saw a decoder, against the accumulated gentle-measurement
    bound with eps_s = (1 - tr(ideal_s R_s)) / 3.
    """
    info = blocked.metadata['double_blocked']
    l, n = info['copies'], info['base_n']
    table = _copy_states(base, PROB_FLOOR)
    decoders = blocked.metadata['decoders']
    d_out = base.channel.out_dim
    records = []
    for idx, combo in enumerate(info['words']):
        if blocked.probabilities[idx] <= 0:
            continue
        truth = [tuple(base.codebook.words[combo[j]][t] for j in range(l)) for t in range(n)]
        levels = unroll_levels(blocked, idx)
        branches = []
        for t in range(1, n + 1):
            if t < n:
                nodes = [(node.history, node.state) for node in levels[t * l]]
            else:
                nodes = []
                for node in levels[-1]:
                    for label, (_, _, post) in final_measurement(blocked, node.state, node.history).items():
                        nodes.append((node.history + (label,), post))
            branches.append(nodes)
        for t, nodes in enumerate(branches, start=1):
            for history, state in nodes:
                parsed = _parse_history(history, n, l)
                if parsed is None or parsed[1] != truth[:t]:
                    continue
                ks, _ = parsed
                epsilons = []
                for s in range(1, t + 1):
                    copy_ks = [k[:s] if s < n else k[:n - 1] for k in ks]
                    ideal = _ideal_state(table, combo, s, copy_ks, d_out, l)
                    if ideal is None:
                        break
                    sub = decoders.get((s, tuple(copy_ks), tuple(truth[:s - 1])))
                    if sub is None or truth[s - 1] not in sub.elements:
                        epsilons.append(1.0 / 3.0)
                        continue
                    accept = float(np.real(np.trace(ideal @ sub.elements[truth[s - 1]])))
                    epsilons.append(max((1.0 - accept) / 3.0, 0.0))
                ideal = _ideal_state(table, combo, t, [k[:t] if t < n else k for k in ks], d_out, l)
                if ideal is None or len(epsilons) < t:
                    logger.debug(f"Word {idx}, round {t}: branch impossible without decoders, skipped")
                    continue
                actual = partial_trace(state.mat, state.shape, range(t * l))
                distance = trace_norm(ideal - actual)
                bound = sum(gentle_measurement_bound(e) for e in epsilons)
                records.append(DisturbanceRecord(idx, t, distance, bound, tuple(epsilons)))
    return records


def _ideal_state(table, combo, t, copy_ks, d_out, l):
    entries = [table.get((t, combo[j], tuple(copy_ks[j]))) for j in range(l)]
    if any(e is None for e in entries):
        return None
    mats = [e[1] for e in entries]
    shape = RegisterShape((d_out,) * (t * l))
    mat, _ = permute_registers(kron_all(mats), shape, _copy_major_to_interleaved(t, l))
    return mat
