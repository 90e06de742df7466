"""
Numerical lower estimates of the n-use feedback capacity (directed
information over the qubit code family) and of the Holevo capacity.
"""
import logging
import math

import numpy as np

from .code_builders import QubitCodeLayout, with_pgm_decoder
from .directed_info import directed_information
from .optimizer import OptimizerConfig, multi_start, project_to_simplex
from .quantum_core import DensityMatrix, Ensemble, apply_channel, holevo_chi

logger = logging.getLogger(__name__)

HOLEVO_MAX_INPUT_DIM = 4


class CapacityEstimate:
    """Best rate found for block length n, the code attaining it and the optimiser record."""

    def __init__(self, n, rate, code, result, layout):
        self.n = n
        self.rate = rate
        self.code = code
        self.result = result
        self.layout = layout

    def to_dict(self):
        return {'n': self.n, 'rate': self.rate, 'directed_information': self.result.value,
                'converged': self.result.converged, 'start_index': self.result.start_index,
                'family': self.layout.family, 'feedback': self.layout.feedback}


def estimate_feedback_capacity(phi, n, config=None, family='product', feedback=True):
    """
    max I(A -> Z) / n over the qubit code family. With feedback enabled the
    best feedback-free point is used as an extra (first) start, so enabling
    feedback never lowers the estimate.
    """
    config = config or OptimizerConfig()
    layout = QubitCodeLayout(n, family, feedback)
    warm = []
    if feedback and layout.block_sizes()['measure'] > 0:
        plain = estimate_feedback_capacity(phi, n, config, family, feedback=False)
        warm = [layout.lift(plain.result.point, plain.layout)]

    def objective(x):
        return directed_information(layout.build(phi, x)).directed_total

    logger.info(f"Estimating feedback capacity of '{phi.label}' for n={n} "
                f"({family}, feedback={feedback}, {config.starts} starts)")
    result = multi_start(objective, layout.random_point, config, layout.simplex_blocks(), warm)
    code = with_pgm_decoder(layout.build(phi, result.point))
    rate = result.value / n
    logger.info(f"n={n}: best directed information {result.value:.8f} (rate {rate:.8f})")
    return CapacityEstimate(n, rate, code, result, layout)


def _ensemble_from_point(x, k, d):
    probs = project_to_simplex(x[:k])
    vectors = x[k:].reshape(k, 2 * d)
    items = []
    for p, v in zip(probs, vectors):
        ket = v[:d] + 1j * v[d:]
        if np.linalg.norm(ket) < 1e-12:
            ket = np.eye(d)[0]
        items.append((p, DensityMatrix.from_ket(ket)))
    return Ensemble(tuple(items))


def holevo_capacity(phi, config=None):
    """
    max over ensembles of at most d^2 pure inputs of chi({p_i, phi(psi_i)}).
    Returns an OptimizationResult whose value is the estimate in bits.
    """
    config = config or OptimizerConfig()
    d = phi.in_dim
    if d > HOLEVO_MAX_INPUT_DIM:
        raise ValueError(f"Holevo optimisation supports input dimension <= {HOLEVO_MAX_INPUT_DIM}, got {d}")
    k = d * d

    def objective(x):
        ensemble = _ensemble_from_point(x, k, d)
        outputs = Ensemble(tuple((p, apply_channel(phi, s)) for p, s in ensemble.items))
        return holevo_chi(outputs)

    def sampler(rng):
        return np.concatenate([rng.dirichlet(np.ones(k)), rng.standard_normal(2 * d * k)])

    result = multi_start(objective, sampler, config, [slice(0, k)])
    logger.info(f"Holevo estimate for '{phi.label}': {result.value:.8f} bits "
                f"(upper limit {math.log2(phi.out_dim):.3f})")
    return result
