"""
Directed information of a feedback code and the converse chain around it:
message information, the directed data-processing inequality and the Fano
rate bound.
"""
import logging
import math
from collections import defaultdict
from dataclasses import asdict, dataclass

from .cq_state import CqBranch, CqState, conditional_mutual_information, mutual_information
from .feedback_protocol import (
    ENUM_CAP, ehs_state, ehs_states, enumerate_transcripts, error_probability, message_distribution,
    unroll_levels, x_alphabet_sizes,
)
from .quantum_core import shannon_entropy

logger = logging.getLogger(__name__)

DDPI_TOL = 1e-9


@dataclass(frozen=True)
class RateReport:
    """Per-round directed-information terms and the quantities of the converse chain (bits)."""
    n: int
    per_round: tuple
    directed_total: float
    final_per_round: tuple = None
    final_total: float = None
    message_to_output: float = None
    message_to_outcomes: float = None
    average_error: float = None
    rate: float = None
    fano_bound: float = None

    def to_dict(self):
        out = asdict(self)
        for key in ('per_round', 'final_per_round'):
            if out[key] is not None:
                out[key] = list(out[key])
        return out

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        for key in ('per_round', 'final_per_round'):
            if data.get(key) is not None:
                data[key] = tuple(data[key])
        return cls(**data)


def _term(state, t):
    """I(A_1..A_t : Z_t | Z_1..Z_{t-1}) with Z_t the quantum register t-1."""
    letters = [f'A{j}' for j in range(1, t + 1)]
    return conditional_mutual_information(state, letters, [t - 1], list(range(t - 1)))


def _directed_terms(c, enum_cap):
    states = ehs_states(c, enum_cap)
    n = c.n
    per_round = tuple(_term(states[t - 1], t) for t in range(1, n + 1))
    final = tuple(_term(states[n - 1], t) for t in range(1, n + 1))
    return per_round, final


def directed_information(c, enum_cap=ENUM_CAP):
    """
    I(A -> Z) = sum_t I(A_1^t : Z_t | Z_1^{t-1}); term t is read off rho^{t-1},
    the first protocol state in which Z_t has passed the channel. The variant
    with every term read off the final state rho^{n-1} is reported alongside.
    """
    per_round, final = _directed_terms(c, enum_cap)
    report = RateReport(c.n, per_round, float(sum(per_round)), final, float(sum(final)))
    logger.debug(f"Directed information terms {per_round}, final-state terms {final}")
    return report


def directed_information_final(c, enum_cap=ENUM_CAP):
    """Sum of the directed-information terms all evaluated on the final state rho^{n-1}."""
    state = ehs_state(c, c.n - 1, enum_cap)
    return float(sum(_term(state, t) for t in range(1, c.n + 1)))


def _final_message_state(c, messages, enum_cap):
    registers = (('M', len(messages)),)
    registers += tuple((f'X{j}', size) for j, size in enumerate(x_alphabet_sizes(c), start=1))
    levels = {w: unroll_levels(c, w, enum_cap)[-1] for w in {w for _, w, _ in messages}}
    branches = []
    for m, w, pm in messages:
        if pm <= 0:
            continue
        for node in levels[w]:
            branches.append(CqBranch((m,) + node.indices, pm * node.prob, node.state))
    return CqState.from_weights(registers, branches[0].state.shape, branches)


def message_information(c, message_map=None, enum_cap=ENUM_CAP):
    """(I(M : Z_1^n) on the final protocol state, I(M : K_1^n) of the outcome record)."""
    messages = message_distribution(c, message_map)
    state = _final_message_state(c, messages, enum_cap)
    to_output = mutual_information(state, ['M'], list(range(c.n)))
    transcripts = {w: enumerate_transcripts(c, w, enum_cap) for w in {w for _, w, _ in messages}}
    joint, p_m, p_k = defaultdict(float), defaultdict(float), defaultdict(float)
    for m, w, pm in messages:
        for tr in transcripts[w]:
            p = pm * tr.probability
            joint[(m, tr.outcomes)] += p
            p_m[m] += p
            p_k[tr.outcomes] += p
    to_outcomes = (shannon_entropy(list(p_m.values())) + shannon_entropy(list(p_k.values()))
                   - shannon_entropy(list(joint.values())))
    return to_output, to_outcomes


@dataclass(frozen=True)
class DdpiResult:
    lhs: float
    rhs: float
    slack: float
    holds: bool


def verify_ddpi(c, message_map=None, enum_cap=ENUM_CAP):
    """I(M : Z_1^n) <= I(A -> Z); holds within DDPI_TOL for causal codes."""
    lhs, _ = message_information(c, message_map, enum_cap)
    rhs = directed_information(c, enum_cap).directed_total
    return DdpiResult(lhs, rhs, rhs - lhs, lhs <= rhs + DDPI_TOL)


def _default_rate(c, message_map):
    count = c.codebook.size if message_map is None else len(message_map)
    return math.log2(count) / c.n


def fano_bound(c, rate=None, message_map=None, enum_cap=ENUM_CAP):
    """(1 + P_e n R + I(M : K)) / n with P_e the average decoding error."""
    rate = _default_rate(c, message_map) if rate is None else rate
    _, to_outcomes = message_information(c, message_map, enum_cap)
    error = error_probability(c, enum_cap).average
    return (1.0 + error * c.n * rate + to_outcomes) / c.n


def converse_report(c, message_map=None, rate=None, enum_cap=ENUM_CAP):
    """Every quantity of the converse chain in one RateReport."""
    rate = _default_rate(c, message_map) if rate is None else rate
    per_round, final = _directed_terms(c, enum_cap)
    to_output, to_outcomes = message_information(c, message_map, enum_cap)
    error = error_probability(c, enum_cap).average
    report = RateReport(
        n=c.n, per_round=per_round, directed_total=float(sum(per_round)),
        final_per_round=final, final_total=float(sum(final)),
        message_to_output=to_output, message_to_outcomes=to_outcomes,
        average_error=error, rate=rate,
        fano_bound=(1.0 + error * c.n * rate + to_outcomes) / c.n,
    )
    logger.info(f"Converse chain: I(M:K)={to_outcomes:.6f} <= I(M:Z)={to_output:.6f} "
                f"<= I(A->Z)={report.directed_total:.6f}, Fano bound {report.fano_bound:.6f}")
    return report
