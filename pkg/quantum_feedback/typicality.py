"""
Strongly typical sets and the (conditionally) typical projectors built from
them, plus the numeric check of the standard typical-subspace bounds.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from .cq_state import CapExceededError, MATERIALIZE_CAP
from .quantum_core import entropy
from .tensor_linalg import RANK_TOL, RegisterShape, as_matrix, herm_eig, kron_all, permute_registers

logger = logging.getLogger(__name__)

TYPICAL_ENUM_CAP = 2 ** 20
COUNT_TOL = 1e-12


@dataclass(frozen=True)
class TypicalityParams:
    """Typicality width delta, exponent constant c and the number of interleaved copies l."""
    delta: float = 0.5
    c: float = 1.0
    l: int = 2

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if self.c <= 0:
            raise ValueError(f"c must be positive, got {self.c}")
        if self.l < 1:
            raise ValueError(f"l must be at least 1, got {self.l}")


def _support(p):
    p = np.asarray(p, dtype=float)
    top = p.max() if p.size else 0.0
    return [x for x in range(p.size) if p[x] > RANK_TOL * top]


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _arrangements(counts):
    """Distinct strings with the given letter counts, in lexicographic order."""
    if not any(counts.values()):
        yield ()
        return
    for letter in sorted(counts):
        if counts[letter] == 0:
            continue
        counts[letter] -= 1
        for rest in _arrangements(counts):
            yield (letter,) + rest
        counts[letter] += 1


def typical_set(p, n, delta, enum_cap=TYPICAL_ENUM_CAP):
    """
    Strings x^n with |N(x) - n p(x)| <= n delta for every letter and no
    letter of zero probability, sorted lexicographically.
    """
    p = np.asarray(p, dtype=float)
    if np.any(p < -COUNT_TOL) or abs(p.sum() - 1.0) > 1e-9:
        raise ValueError(f"Not a probability vector: {p}")
    if n < 1 or delta <= 0:
        raise ValueError(f"Need n >= 1 and delta > 0, got n={n}, delta={delta}")
    support = _support(p)
    typical_counts = []
    size = 0
    for counts in _compositions(n, len(support)):
        if all(abs(k - n * p[x]) <= n * delta + COUNT_TOL for x, k in zip(support, counts)):
            typical_counts.append(counts)
            size += math.factorial(n) // math.prod(math.factorial(k) for k in counts)
    if size > enum_cap:
        raise CapExceededError(f"Typical set has {size} strings, above the cap {enum_cap}")
    strings = []
    for counts in typical_counts:
        strings.extend(_arrangements(dict(zip(support, counts))))
    return tuple(sorted(strings))


@dataclass(frozen=True, eq=False)
class LazyProjector:
    """Typical projector kept as eigenbasis + typical index strings."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n: int
    strings: tuple

    @property
    def rank(self):
        return len(self.strings)

    @property
    def dim(self):
        return self.eigenvectors.shape[0] ** self.n

    def compressed_eigenvalues(self):
        """Eigenvalues of Pi rho^{(x)n} Pi on the typical subspace."""
        logs = np.log(np.clip(self.eigenvalues, 1e-300, None))
        return np.array([math.exp(sum(logs[x] for x in s)) for s in self.strings])

    def overlap(self):
        """tr(rho^{(x)n} Pi)."""
        return float(np.sum(self.compressed_eigenvalues()))

    def materialize(self, cap=MATERIALIZE_CAP):
        if self.dim > cap:
            raise CapExceededError(f"Typical projector of dimension {self.dim} exceeds cap {cap}")
        d = self.eigenvectors.shape[0]
        basis = kron_all([self.eigenvectors] * self.n)
        mask = np.zeros(self.dim)
        for s in self.strings:
            mask[int(np.ravel_multi_index(s, (d,) * self.n))] = 1.0
        return (basis * mask) @ basis.conj().T


def _spectrum(rho):
    mat = rho.mat if hasattr(rho, 'mat') else as_matrix(rho)
    values, vectors = herm_eig(mat)
    values = np.clip(values, 0.0, None)
    values[values <= RANK_TOL * max(values[0], 0.0)] = 0.0
    return values / values.sum(), vectors


def typical_projector(rho, n, delta, lazy=False, cap=MATERIALIZE_CAP):
    """Projector onto span{|e_{x_1}> ... |e_{x_n}> : x^n typical for spec(rho)}."""
    values, vectors = _spectrum(rho)
    projector = LazyProjector(values, vectors, n, typical_set(values, n, delta))
    if lazy:
        return projector
    return projector.materialize(cap)


def cond_typical_projector(states, u, delta, cap=MATERIALIZE_CAP):
    """
    Tensor product over labels a of the typical projector of states[a] on the
    positions where u equals a, returned in positional order.
    """
    u = list(u)
    if not u:
        return np.ones((1, 1), dtype=np.complex128)
    groups = {}
    for position, label in enumerate(u):
        groups.setdefault(label, []).append(position)
    dims = []
    for label in u:
        if label not in states:
            raise KeyError(f"No state for label {label!r}")
        st = states[label]
        dims.append((st.mat if hasattr(st, 'mat') else as_matrix(st)).shape[0])
    total = math.prod(dims)
    if total > cap:
        raise CapExceededError(f"Conditionally typical projector of dimension {total} exceeds cap {cap}")
    blocks, grouped_positions = [], []
    for label, positions in groups.items():
        blocks.append(typical_projector(states[label], len(positions), delta, cap=cap))
        grouped_positions.extend(positions)
    grouped = RegisterShape(tuple(dims[p] for p in grouped_positions))
    order = [grouped_positions.index(p) for p in range(len(u))]
    projector, _ = permute_registers(kron_all(blocks), grouped, order)
    return projector


@dataclass(frozen=True)
class TypicalityReport:
    overlap: float
    overlap_bound: float
    overlap_holds: bool
    max_compressed_eigenvalue: float
    eigenvalue_bound: float
    eigenvalue_bound_holds: bool
    required_c: float
    entropy: float
    rank: int


def typicality_bounds_check(rho, n, delta, c=1.0):
    """
    Measures tr(rho^{(x)n} Pi) against 1 - 2|supp| exp(-2 n delta^2) and the
    largest eigenvalue of Pi rho^{(x)n} Pi against 2^{-n(S(rho) - c delta)}.
    required_c is the smallest constant for which the eigenvalue cap holds.
    """
    projector = typical_projector(rho, n, delta, lazy=True)
    s = entropy(rho)
    support = int(np.count_nonzero(projector.eigenvalues))
    overlap = projector.overlap()
    overlap_bound = 1.0 - 2.0 * support * math.exp(-2.0 * n * delta ** 2)
    eigs = projector.compressed_eigenvalues()
    top = float(eigs.max()) if eigs.size else 0.0
    cap = 2.0 ** (-n * (s - c * delta))
    required = max((math.log2(top) + n * s) / (n * delta), 0.0) if top > 0 else 0.0
    report = TypicalityReport(overlap, overlap_bound, overlap >= overlap_bound - 1e-12,
                              top, cap, top <= cap * (1 + 1e-12), required, s, projector.rank)
    logger.debug(f"Typicality check n={n} delta={delta} c={c}: {report}")
    return report


def provable_exponent_constant(rho):
    """sum_x |log2 lambda_x| over the support: the cap holds for any c at least this large."""
    values, _ = _spectrum(rho)
    return float(sum(abs(math.log2(v)) for v in values if v > 0))
