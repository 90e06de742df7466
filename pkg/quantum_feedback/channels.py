"""
Built-in channel library and qubit helpers (Pauli matrices, Bloch kets,
Euler-angle unitaries), plus the 'name:param' channel spec parser used by the
CLI.
"""
import logging

import numpy as np

from .quantum_core import QuantumChannel

logger = logging.getLogger(__name__)

I2 = np.eye(2, dtype=np.complex128)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)


def bloch_ket(theta, phi):
    """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
    return np.array([np.cos(theta / 2), np.exp(1j * phi) * np.sin(theta / 2)], dtype=np.complex128)


def euler_unitary(alpha, beta, gamma):
    """Rz(alpha) Ry(beta) Rz(gamma)."""
    def rz(a):
        return np.diag([np.exp(-0.5j * a), np.exp(0.5j * a)])

    ry = np.array([[np.cos(beta / 2), -np.sin(beta / 2)],
                   [np.sin(beta / 2), np.cos(beta / 2)]], dtype=np.complex128)
    return rz(alpha) @ ry @ rz(gamma)


def identity_channel(dim=2):
    return QuantumChannel((np.eye(dim, dtype=np.complex128),), label=f'identity({dim})')


def depolarizing(p):
    """Qubit depolarizing channel rho -> (1-p) rho + p I/2; p = 1 is fully depolarizing."""
    if not 0.0 <= p <= 4.0 / 3.0:
        raise ValueError(f"Depolarizing parameter must lie in [0, 4/3], got {p}")
    kraus = (np.sqrt(1 - 3 * p / 4) * I2,
             np.sqrt(p / 4) * PAULI_X,
             np.sqrt(p / 4) * PAULI_Y,
             np.sqrt(p / 4) * PAULI_Z)
    return QuantumChannel(kraus, label=f'depolarizing({p})')


def amplitude_damping(gamma):
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"Damping parameter must lie in [0, 1], got {gamma}")
    k0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=np.complex128)
    k1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=np.complex128)
    return QuantumChannel((k0, k1), label=f'amplitude_damping({gamma})')


def dephasing(p):
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Dephasing parameter must lie in [0, 1], got {p}")
    return QuantumChannel((np.sqrt(1 - p) * I2, np.sqrt(p) * PAULI_Z), label=f'dephasing({p})')


def from_kraus(kraus, label='kraus'):
    return QuantumChannel(tuple(kraus), label=label)


CHANNEL_LIBRARY = {
    'identity': lambda param=2: identity_channel(int(param)),
    'depolarizing': depolarizing,
    'amplitude_damping': amplitude_damping,
    'dephasing': dephasing,
}


def depolarizing_capacity(p):
    """Product-state capacity 1 - h(p/2) of the qubit depolarizing channel."""
    q = p / 2
    if q <= 0.0:
        return 1.0
    return float(1 + q * np.log2(q) + (1 - q) * np.log2(1 - q))


def parse_channel_spec(spec):
    """
    Parses 'name' or 'name:param' (e.g. 'depolarizing:0.1') into a channel.
    """
    name, _, raw = spec.partition(':')
    name = name.strip().lower()
    if name not in CHANNEL_LIBRARY:
        raise ValueError(f"Unknown channel '{name}'. Known: {sorted(CHANNEL_LIBRARY)}")
    factory = CHANNEL_LIBRARY[name]
    if not raw:
        if name == 'identity':
            return factory()
        raise ValueError(f"Channel '{name}' needs a parameter, e.g. '{name}:0.1'")
    try:
        value = float(raw)
    except ValueError:
        raise ValueError(f"Channel parameter '{raw}' is not a number")
    logger.debug(f"Parsed channel spec '{spec}' -> {name}({value})")
    return factory(value)
