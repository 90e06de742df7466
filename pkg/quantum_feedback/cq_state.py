"""
Classical-quantum states: a weighted list of branches, each carrying a tuple
of classical labels and a quantum state on a common register shape.

Register subsets ("parts") are given as iterables of keys: a str names a
classical register, an int indexes a quantum register.
"""
import logging
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .quantum_core import DensityMatrix, PROB_FLOOR, entropy, shannon_entropy
from .tensor_linalg import RegisterShape, partial_trace

logger = logging.getLogger(__name__)

MATERIALIZE_CAP = 4096
WEIGHT_TOL = 1e-10


class CapExceededError(RuntimeError):
    """Raised when an enumeration or materialisation would exceed its configured cap."""


@dataclass(frozen=True, eq=False)
class CqBranch:
    labels: tuple
    weight: float
    state: DensityMatrix


@dataclass(frozen=True, eq=False)
class CqState:
    """
    classical_registers: tuple of (name, alphabet_size).
    quantum_shape: RegisterShape shared by every branch state.
    branches: CqBranch tuple with distinct label tuples and weights summing to 1.
    """
    classical_registers: tuple
    quantum_shape: RegisterShape
    branches: tuple

    def __post_init__(self):
        registers = tuple((str(n), int(a)) for n, a in self.classical_registers)
        object.__setattr__(self, 'classical_registers', registers)
        branches = tuple(self.branches)
        object.__setattr__(self, 'branches', branches)
        names = [n for n, _ in registers]
        if len(set(names)) != len(names):
            raise ValueError(f"Duplicate classical register names in {names}")
        seen = set()
        total = 0.0
        for b in branches:
            if len(b.labels) != len(registers):
                raise ValueError(f"Branch labels {b.labels} do not match registers {names}")
            for (name, size), value in zip(registers, b.labels):
                if not 0 <= value < size:
                    raise ValueError(f"Label {value} outside alphabet of register '{name}' (size {size})")
            if b.labels in seen:
                raise ValueError(f"Duplicate branch labels {b.labels}")
            seen.add(b.labels)
            if b.weight < 0:
                raise ValueError(f"Negative branch weight {b.weight}")
            if b.state.shape != self.quantum_shape:
                raise ValueError(f"Branch state shape {b.state.shape.dims} != {self.quantum_shape.dims}")
            total += b.weight
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValueError(f"Branch weights sum to {total:.12f}, expected 1")

    @property
    def register_names(self):
        return tuple(n for n, _ in self.classical_registers)

    def register_index(self, name):
        try:
            return self.register_names.index(name)
        except ValueError:
            raise KeyError(f"No classical register named '{name}'")

    @classmethod
    def from_weights(cls, classical_registers, quantum_shape, branches, prob_floor=PROB_FLOOR):
        """Builds a state from unnormalised branches: drops those lighter than prob_floor, renormalises the rest."""
        kept = [b for b in branches if b.weight >= prob_floor]
        total = sum(b.weight for b in kept)
        if total <= 0.0:
            raise ValueError("No branch carries weight above the probability floor")
        return cls(classical_registers, quantum_shape,
                   tuple(CqBranch(b.labels, b.weight / total, b.state) for b in kept))


def _split_part(part):
    classical = [k for k in part if isinstance(k, str)]
    quantum = [k for k in part if not isinstance(k, str)]
    return classical, sorted(int(q) for q in quantum)


def _grouped(s, classical, quantum):
    """Groups branches by the labels of `classical`; returns [(p, reduced matrix)]."""
    idx = [s.register_index(n) for n in classical]
    weights = defaultdict(float)
    mats = {}
    for b in s.branches:
        key = tuple(b.labels[i] for i in idx)
        weights[key] += b.weight
        mats[key] = mats.get(key, 0) + b.weight * b.state.mat
    groups = []
    for key, p in weights.items():
        if p <= 0.0:
            continue
        if quantum:
            reduced = partial_trace(mats[key] / p, s.quantum_shape, quantum)
        else:
            reduced = None
        groups.append((p, reduced))
    return groups


def cq_entropy(s, classical_subset=(), quantum_subset=()):
    """
    Entropy of the marginal on the chosen registers:
    H(classical) + sum_a p_a S(rho_a restricted to quantum_subset).
    """
    groups = _grouped(s, list(classical_subset), sorted(quantum_subset))
    h = shannon_entropy([p for p, _ in groups])
    if quantum_subset:
        h += sum(p * entropy(m) for p, m in groups)
    return h


def part_entropy(s, part):
    classical, quantum = _split_part(part)
    return cq_entropy(s, classical, quantum)


def mutual_information(s, part_a, part_b):
    """I(A:B) = S(A) + S(B) - S(AB) for disjoint register subsets."""
    a, b = list(part_a), list(part_b)
    if set(a) & set(b):
        raise ValueError(f"Parts overlap: {set(a) & set(b)}")
    return part_entropy(s, a) + part_entropy(s, b) - part_entropy(s, a + b)


def conditional_mutual_information(s, part_a, part_b, part_c):
    """I(A:B|C) = S(AC) + S(BC) - S(ABC) - S(C)."""
    a, b, c = list(part_a), list(part_b), list(part_c)
    if (set(a) & set(b)) or (set(a) & set(c)) or (set(b) & set(c)):
        raise ValueError("Parts of a conditional mutual information must be disjoint")
    return (part_entropy(s, a + c) + part_entropy(s, b + c)
            - part_entropy(s, a + b + c) - part_entropy(s, c))


def marginalize(s, keep_classical=None, keep_quantum=None):
    """Keeps the named classical registers and quantum indices, merging branches."""
    names = s.register_names if keep_classical is None else tuple(keep_classical)
    quantum = list(range(len(s.quantum_shape))) if keep_quantum is None else sorted(keep_quantum)
    idx = [s.register_index(n) for n in names]
    weights = defaultdict(float)
    mats = {}
    for b in s.branches:
        key = tuple(b.labels[i] for i in idx)
        weights[key] += b.weight
        mats[key] = mats.get(key, 0) + b.weight * b.state.mat
    shape = s.quantum_shape.subshape(quantum)
    branches = []
    for key, p in weights.items():
        if p <= 0.0:
            continue
        reduced = partial_trace(mats[key] / p, s.quantum_shape, quantum)
        branches.append(CqBranch(key, p, DensityMatrix(reduced, shape, check=False)))
    registers = tuple(s.classical_registers[i] for i in idx)
    return CqState(registers, shape, tuple(branches))


def materialize(s, cap=MATERIALIZE_CAP):
    """Block-diagonal density matrix: classical registers first (as basis states), then quantum."""
    sizes = [a for _, a in s.classical_registers]
    classical_dim = int(np.prod(sizes)) if sizes else 1
    total = classical_dim * s.quantum_shape.total
    if total > cap:
        raise CapExceededError(f"Materialising a cq-state of dimension {total} exceeds cap {cap}")
    mat = np.zeros((total, total), dtype=np.complex128)
    dq = s.quantum_shape.total
    for b in s.branches:
        pos = int(np.ravel_multi_index(b.labels, sizes)) if sizes else 0
        mat[pos * dq:(pos + 1) * dq, pos * dq:(pos + 1) * dq] += b.weight * b.state.mat
    shape = RegisterShape(tuple(sizes) + s.quantum_shape.dims)
    return DensityMatrix(mat, shape, check=False)
