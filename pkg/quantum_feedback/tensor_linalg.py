"""
Dense complex linear algebra on register-structured Hilbert spaces.

Matrices are plain numpy complex128 arrays; the register structure is carried
separately by a RegisterShape so that tensor products, partial traces and
register permutations can be done by reshaping.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

HERM_TOL = 1e-10
PSD_TOL = 1e-9
EIG_TOL = 1e-9
RANK_TOL = 1e-10
JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOL = 1e-14


class DimensionMismatchError(ValueError):
    """Raised when matrix dimensions disagree with each other or with a register shape."""


class NotHermitianError(ValueError):
    """Raised when a matrix expected to be Hermitian is not, within HERM_TOL."""


class NotPositiveError(ValueError):
    """Raised when a matrix has an eigenvalue below -PSD_TOL."""


class EigenConvergenceError(RuntimeError):
    """Raised when the Jacobi solver does not reach EIG_TOL within its sweep budget."""


@dataclass(frozen=True)
class RegisterShape:
    """Ordered register dimensions d_1..d_k of a tensor-product space."""
    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if any(d < 1 for d in dims):
            raise DimensionMismatchError(f"Register dimensions must be >= 1, got {dims}")
        object.__setattr__(self, 'dims', dims)

    @property
    def total(self):
        return math.prod(self.dims)

    def __len__(self):
        return len(self.dims)

    def subshape(self, registers):
        return RegisterShape(tuple(self.dims[r] for r in registers))

    def replace(self, register, dim):
        dims = list(self.dims)
        dims[register] = dim
        return RegisterShape(tuple(dims))

    def concat(self, other):
        return RegisterShape(self.dims + other.dims)


def as_matrix(m):
    """Returns m as a 2-d complex128 array."""
    arr = np.asarray(m, dtype=np.complex128)
    if arr.ndim != 2:
        raise DimensionMismatchError(f"Expected a 2-d matrix, got shape {arr.shape}")
    return arr


def kron(a, b):
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(mats):
    """Tensor product of a sequence of matrices, left to right. Empty sequence gives [[1]]."""
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, as_matrix(m))
    return out


def dagger(m):
    return np.conj(as_matrix(m)).T


def _check_square(m, shape):
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"Expected a square matrix, got {m.shape}")
    if shape is not None and m.shape[0] != shape.total:
        raise DimensionMismatchError(
            f"Matrix of size {m.shape[0]} does not match register shape {shape.dims}")


def partial_trace(m, shape, keep):
    """
    Traces out every register not listed in `keep`.
    Kept registers stay in their original relative order; keeping none returns
    the 1x1 matrix [[tr m]].
    """
    m = as_matrix(m)
    _check_square(m, shape)
    keep = sorted(set(keep))
    if any(r < 0 or r >= len(shape) for r in keep):
        raise DimensionMismatchError(f"Register index out of range in {keep} for shape {shape.dims}")
    if len(keep) == len(shape):
        return m.copy()
    n = len(shape)
    tensor = m.reshape(shape.dims + shape.dims)
    row = list(range(n))
    col = [n + i for i in range(n)]
    for r in range(n):
        if r not in keep:
            col[r] = row[r]
    out_idx = [row[r] for r in keep] + [col[r] for r in keep]
    reduced = np.einsum(tensor, row + col, out_idx)
    d = math.prod(shape.dims[r] for r in keep)
    return np.asarray(reduced).reshape(d, d)


def permute_registers(m, shape, order):
    """
    Reorders registers: register q of the result is register order[q] of m.
    Returns (matrix, new_shape).
    """
    m = as_matrix(m)
    _check_square(m, shape)
    order = list(order)
    if sorted(order) != list(range(len(shape))):
        raise DimensionMismatchError(f"{order} is not a permutation of {len(shape)} registers")
    n = len(shape)
    tensor = m.reshape(shape.dims + shape.dims)
    tensor = tensor.transpose(order + [n + o for o in order])
    new_shape = RegisterShape(tuple(shape.dims[o] for o in order))
    return tensor.reshape(new_shape.total, new_shape.total), new_shape


def embed_operator(op, shape, targets):
    """
    Pads a square operator acting on `targets` (in that order) with identities
    on the remaining registers of `shape`.
    """
    op = as_matrix(op)
    targets = list(targets)
    target_dim = math.prod(shape.dims[t] for t in targets)
    if op.shape != (target_dim, target_dim):
        raise DimensionMismatchError(
            f"Operator of shape {op.shape} does not act on registers {targets} of {shape.dims}")
    rest = [r for r in range(len(shape)) if r not in targets]
    rest_dim = math.prod(shape.dims[r] for r in rest)
    full = np.kron(op, np.eye(rest_dim, dtype=np.complex128))
    grouped = RegisterShape(tuple(shape.dims[r] for r in targets + rest))
    # register targets+rest[i] now sits at position i; invert that placement
    source = targets + rest
    inverse = [source.index(r) for r in range(len(shape))]
    out, _ = permute_registers(full, grouped, inverse)
    return out


def is_hermitian(m, tol=HERM_TOL):
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def _require_hermitian(m):
    m = as_matrix(m)
    _check_square(m, None)
    if not is_hermitian(m):
        gap = float(np.max(np.abs(m - m.conj().T)))
        raise NotHermitianError(f"Matrix is not Hermitian (max |m - m^dagger| = {gap:.3e})")
    return (m + m.conj().T) / 2


def _sorted_descending(values, vectors):
    order = np.argsort(-values, kind='stable')
    return values[order], vectors[:, order]


def _jacobi_eig(a):
    """Cyclic complex Jacobi rotations; returns unsorted (eigenvalues, eigenvectors)."""
    a = a.copy()
    n = a.shape[0]
    v = np.eye(n, dtype=np.complex128)
    scale = max(np.linalg.norm(a), 1.0)
    previous = None
    for sweep in range(JACOBI_MAX_SWEEPS):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        # rounding floor reached, or a sweep stopped shrinking an already tiny residue
        if off <= JACOBI_OFF_TOL * scale or (previous is not None and off >= previous and off <= EIG_TOL * scale):
            return np.real(np.diag(a)).copy(), v
        previous = off
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * r)
                if tau == 0.0:
                    t = 1.0
                else:
                    t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]],
                               dtype=np.complex128)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = rot.conj().T @ a[idx, :]
                a[p, q] = 0.0
                a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot
        logger.debug(f"Jacobi sweep {sweep}: off-diagonal norm {off:.3e}")
    raise EigenConvergenceError(
        f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps (n={n})")


def herm_eig(m, method='lapack'):
    """
    Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues, eigenvectors) with eigenvalues real and in descending
    order, ties kept in solver order, and eigenvectors as orthonormal columns,
    so that m = V diag(lambda) V^dagger.
    method='lapack' uses numpy.linalg.eigh; method='jacobi' runs cyclic Jacobi
    rotations, which is only sensible for small matrices.
    """
    a = _require_hermitian(m)
    if method == 'lapack':
        values, vectors = np.linalg.eigh(a)
    elif method == 'jacobi':
        values, vectors = _jacobi_eig(a)
    else:
        raise ValueError(f"Unknown eigensolver method '{method}'")
    return _sorted_descending(np.asarray(values, dtype=float), vectors)


def eigvals_hermitian(m):
    """Eigenvalues only, descending."""
    a = _require_hermitian(m)
    return np.sort(np.linalg.eigvalsh(a))[::-1]


def psd_sqrt(m):
    """Square root of a PSD matrix; eigenvalues in [-PSD_TOL, 0) are clamped to 0."""
    values, vectors = herm_eig(m)
    if values.size and values[-1] < -PSD_TOL:
        raise NotPositiveError(f"Matrix has eigenvalue {values[-1]:.3e} below -{PSD_TOL}")
    root = np.sqrt(np.clip(values, 0.0, None))
    return (vectors * root) @ vectors.conj().T


def pinv_sqrt(m):
    """Generalized inverse square root on the support (eigenvalues above RANK_TOL * lambda_max)."""
    values, vectors = herm_eig(m)
    top = values[0] if values.size else 0.0
    if top <= 0.0:
        return np.zeros_like(as_matrix(m))
    inv = np.zeros_like(values)
    support = values > RANK_TOL * top
    inv[support] = 1.0 / np.sqrt(values[support])
    return (vectors * inv) @ vectors.conj().T


def trace_norm(m):
    """Schatten-1 norm of a Hermitian matrix."""
    return float(np.sum(np.abs(eigvals_hermitian(m))))


def trace_distance(a, b):
    """Half the trace norm of a - b."""
    return 0.5 * trace_norm(as_matrix(a) - as_matrix(b))
