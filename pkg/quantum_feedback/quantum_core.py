"""
Density matrices, channels, measurements and ensembles, plus the basic
quantum-information operations on them (channel application, measurement,
von Neumann entropy, Holevo quantity).
"""
import logging
import math
from dataclasses import dataclass, InitVar

import numpy as np
from scipy.special import entr

from .tensor_linalg import (
    RegisterShape, DimensionMismatchError, NotHermitianError, NotPositiveError,
    PSD_TOL, HERM_TOL, as_matrix, dagger, eigvals_hermitian, is_hermitian,
    partial_trace, psd_sqrt,
)

logger = logging.getLogger(__name__)

PROB_FLOOR = 1e-14
TRACE_TOL = 1e-9
COMPLETENESS_TOL = 1e-9
ERASURE = 'er'


class NotTracePreservingError(ValueError):
    """Raised when Kraus operators do not sum to the identity (E^dagger E summed)."""


class ZeroProbabilityError(ValueError):
    """Raised when conditioning on an outcome whose probability is below PROB_FLOOR."""


LN2 = math.log(2.0)


def shannon_entropy(probs):
    """Shannon entropy in bits; zero entries contribute nothing."""
    p = np.clip(np.asarray(probs, dtype=float), 0.0, None)
    return float(np.sum(entr(p)) / LN2)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A unit-trace PSD operator on a register-structured space."""
    mat: np.ndarray
    shape: RegisterShape
    check: InitVar[bool] = True

    def __post_init__(self, check):
        mat = as_matrix(self.mat)
        object.__setattr__(self, 'mat', mat)
        if mat.shape != (self.shape.total, self.shape.total):
            raise DimensionMismatchError(
                f"Density matrix of size {mat.shape} does not match registers {self.shape.dims}")
        if check:
            if not is_hermitian(mat, HERM_TOL):
                raise NotHermitianError("Density matrix is not Hermitian")
            tr = np.trace(mat).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise ValueError(f"Density matrix has trace {tr:.12f}, expected 1")
            lowest = eigvals_hermitian(mat)[-1]
            if lowest < -PSD_TOL:
                raise NotPositiveError(f"Density matrix has eigenvalue {lowest:.3e}")

    @classmethod
    def from_ket(cls, ket, shape=None):
        ket = np.asarray(ket, dtype=np.complex128).reshape(-1)
        norm = np.linalg.norm(ket)
        if norm == 0.0:
            raise ValueError("Cannot build a state from the zero vector")
        ket = ket / norm
        shape = shape or RegisterShape((ket.size,))
        return cls(np.outer(ket, ket.conj()), shape, check=False)

    @property
    def dim(self):
        return self.shape.total

    def reduce(self, keep):
        keep = sorted(keep)
        return DensityMatrix(partial_trace(self.mat, self.shape, keep),
                             self.shape.subshape(keep), check=False)

    def tensor(self, other):
        return DensityMatrix(np.kron(self.mat, other.mat), self.shape.concat(other.shape), check=False)


def _kraus_sum(kraus):
    return sum(dagger(k) @ k for k in kraus)


@dataclass(frozen=True, eq=False)
class QuantumChannel:
    """A CPTP map given by Kraus operators E_i : d_in -> d_out."""
    kraus: tuple
    label: str = 'channel'

    def __post_init__(self):
        kraus = tuple(as_matrix(k) for k in self.kraus)
        if not kraus:
            raise NotTracePreservingError(f"Channel '{self.label}' has no Kraus operators")
        shapes = {k.shape for k in kraus}
        if len(shapes) != 1:
            raise DimensionMismatchError(f"Channel '{self.label}' has Kraus operators of shapes {shapes}")
        d_in = kraus[0].shape[1]
        gap = float(np.max(np.abs(_kraus_sum(kraus) - np.eye(d_in))))
        if gap > COMPLETENESS_TOL:
            raise NotTracePreservingError(
                f"Channel '{self.label}' is not trace preserving (deviation {gap:.3e})")
        object.__setattr__(self, 'kraus', kraus)

    @property
    def in_dim(self):
        return self.kraus[0].shape[1]

    @property
    def out_dim(self):
        return self.kraus[0].shape[0]


@dataclass(frozen=True, eq=False)
class Povm:
    """
    A measurement given by measurement operators F_k (effects F_k^dagger F_k),
    keyed by hashable outcome labels in a fixed order.
    In 'sub' mode the effects sum to at most the identity and the remainder
    I - sum F_k^dagger F_k is reported as the outcome 'er'.
    """
    operators: dict
    mode: str = 'complete'
    label: str = 'povm'

    def __post_init__(self):
        if self.mode not in ('complete', 'sub'):
            raise ValueError(f"Unknown POVM mode '{self.mode}'")
        ops = {k: as_matrix(v) for k, v in dict(self.operators).items()}
        if not ops:
            raise ValueError(f"POVM '{self.label}' has no outcomes")
        dims = {v.shape for v in ops.values()}
        if len(dims) != 1 or next(iter(dims))[0] != next(iter(dims))[1]:
            raise DimensionMismatchError(f"POVM '{self.label}' has operators of shapes {dims}")
        if self.mode == 'sub' and ERASURE in ops:
            raise ValueError(f"Sub-POVM '{self.label}' must not list the '{ERASURE}' outcome itself")
        object.__setattr__(self, 'operators', ops)
        total = self.effect_sum()
        d = total.shape[0]
        if self.mode == 'complete':
            gap = float(np.max(np.abs(total - np.eye(d))))
            if gap > COMPLETENESS_TOL:
                raise ValueError(f"POVM '{self.label}' effects do not sum to identity (deviation {gap:.3e})")
        else:
            lowest = eigvals_hermitian(np.eye(d) - total)[-1]
            if lowest < -PSD_TOL:
                raise ValueError(f"Sub-POVM '{self.label}' effects exceed the identity ({lowest:.3e})")

    @property
    def dim(self):
        return next(iter(self.operators.values())).shape[0]

    def effect_sum(self):
        return _kraus_sum(self.operators.values())

    def effects(self):
        return {k: dagger(f) @ f for k, f in self.operators.items()}

    def completed(self):
        """Measurement operators including the remainder outcome (sub mode)."""
        if self.mode == 'complete':
            return dict(self.operators)
        ops = dict(self.operators)
        remainder = np.eye(self.dim) - self.effect_sum()
        ops[ERASURE] = psd_sqrt((remainder + dagger(remainder)) / 2)
        return ops

    def labels(self):
        return list(self.completed().keys())


@dataclass(frozen=True, eq=False)
class Ensemble:
    """A finite list of (probability, state) pairs on a common register shape."""
    items: tuple

    def __post_init__(self):
        items = tuple((float(p), s) for p, s in self.items)
        if not items:
            raise ValueError("Ensemble is empty")
        probs = np.array([p for p, _ in items])
        if np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"Ensemble probabilities must be non-negative and sum to 1, got {probs}")
        if len({s.shape for _, s in items}) != 1:
            raise DimensionMismatchError("Ensemble states live on different register shapes")
        object.__setattr__(self, 'items', items)

    @property
    def shape(self):
        return self.items[0][1].shape

    def average(self):
        mat = sum(p * s.mat for p, s in self.items)
        return DensityMatrix(mat, self.shape, check=False)


def apply_channel(phi, rho):
    """Applies phi to a single-register state."""
    if rho.dim != phi.in_dim:
        raise DimensionMismatchError(f"Channel '{phi.label}' expects dimension {phi.in_dim}, got {rho.dim}")
    mat = sum(e @ rho.mat @ dagger(e) for e in phi.kraus)
    return DensityMatrix(mat, RegisterShape((phi.out_dim,)), check=False)


def apply_channel_at(phi, rho, register):
    """Applies phi to one register of a multi-register state, identity elsewhere."""
    dims = rho.shape.dims
    if not 0 <= register < len(dims):
        raise DimensionMismatchError(f"Register {register} out of range for shape {dims}")
    if dims[register] != phi.in_dim:
        raise DimensionMismatchError(
            f"Channel '{phi.label}' expects dimension {phi.in_dim} on register {register}, got {dims[register]}")
    left = np.eye(math.prod(dims[:register]))
    right = np.eye(math.prod(dims[register + 1:]))
    mat = np.zeros((rho.dim // phi.in_dim * phi.out_dim,) * 2, dtype=np.complex128)
    for e in phi.kraus:
        full = np.kron(np.kron(left, e), right)
        mat += full @ rho.mat @ dagger(full)
    return DensityMatrix(mat, rho.shape.replace(register, phi.out_dim), check=False)


def apply_cp_map(maps, rho):
    """Applies a Kraus family acting on the whole space of rho; must be trace preserving."""
    maps = [as_matrix(k) for k in maps]
    gap = float(np.max(np.abs(_kraus_sum(maps) - np.eye(rho.dim))))
    if gap > COMPLETENESS_TOL:
        raise NotTracePreservingError(f"Kraus family is not trace preserving (deviation {gap:.3e})")
    mat = sum(k @ rho.mat @ dagger(k) for k in maps)
    return DensityMatrix(mat, rho.shape, check=False)


def entropy(rho):
    """Von Neumann entropy in bits."""
    mat = rho.mat if isinstance(rho, DensityMatrix) else as_matrix(rho)
    values = np.clip(eigvals_hermitian(mat), 0.0, None)
    return float(np.sum(entr(values)) / LN2)


def measure(povm, rho, prob_floor=PROB_FLOOR):
    """
    Measures rho. Returns {label: (probability, post_state)} in outcome order,
    omitting outcomes with probability below prob_floor. Sub-mode POVMs report
    the remainder as 'er'.
    """
    if povm.dim != rho.dim:
        raise DimensionMismatchError(f"POVM '{povm.label}' acts on dimension {povm.dim}, state has {rho.dim}")
    results = {}
    for k, f in povm.completed().items():
        unnormalised = f @ rho.mat @ dagger(f)
        p = float(np.real(np.trace(unnormalised)))
        if p < prob_floor:
            continue
        results[k] = (p, DensityMatrix(unnormalised / p, rho.shape, check=False))
    if not results:
        raise ZeroProbabilityError(f"Every outcome of '{povm.label}' has probability below {prob_floor}")
    return results


def holevo_chi(ensemble):
    """chi = S(sum p rho) - sum p S(rho)."""
    average = entropy(ensemble.average())
    return average - sum(p * entropy(s) for p, s in ensemble.items if p > 0)
