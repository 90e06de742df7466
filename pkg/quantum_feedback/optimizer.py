"""
Derivative-free multi-start coordinate ascent with central finite
differences, used for the feedback-capacity and Holevo optimisations.
"""
import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

MAX_BACKTRACKS = 30
MAX_MOVE = np.pi / 2


@dataclass(frozen=True)
class OptimizerConfig:
    starts: int = 16
    seed: int = 0
    step: float = 1e-4
    tolerance: float = 1e-8
    max_sweeps: int = 200

    def __post_init__(self):
        if self.starts < 1 or self.max_sweeps < 1:
            raise ValueError("Optimizer needs at least one start and one sweep")
        if self.step <= 0 or self.tolerance <= 0:
            raise ValueError("Optimizer step and tolerance must be positive")


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    value: float
    point: np.ndarray
    converged: bool
    start_index: int
    sweeps: int
    start_values: tuple


def project_to_simplex(v):
    """Euclidean projection onto {x >= 0, sum x = 1} (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (1.0 - cumulative) / ks > 0)[0][-1]
    shift = (1.0 - cumulative[rho]) / (rho + 1.0)
    return np.maximum(v + shift, 0.0)


def _safe(objective):
    def wrapped(x):
        try:
            value = float(objective(x))
        except (ValueError, ArithmeticError) as e:
            logger.debug(f"Objective failed at a trial point: {e}")
            return -np.inf
        return value if np.isfinite(value) else -np.inf
    return wrapped


def _projector(simplex_blocks, size):
    owner = {}
    for block in simplex_blocks:
        for i in range(block.start, block.stop):
            owner[i] = block

    def project(x, i):
        block = owner.get(i)
        if block is not None:
            x[block] = project_to_simplex(x[block])
        return x
    return project, owner


def coordinate_ascent(objective, x0, config, simplex_blocks=()):
    """
    Sweeps the coordinates; each coordinate takes a Newton step along its axis
    when the finite-difference curvature is negative (a gradient step
    otherwise) with backtracking. Coordinates inside a simplex block are
    re-projected after every move. Stops when a sweep gains less than
    config.tolerance. Returns (x, value, converged, sweeps).
    """
    f = _safe(objective)
    x = np.array(x0, dtype=float)
    project, owner = _projector(simplex_blocks, x.size)
    for block in simplex_blocks:
        x[block] = project_to_simplex(x[block])
    value = f(x)
    h = config.step
    for sweep in range(1, config.max_sweeps + 1):
        start_value = value
        for i in range(x.size):
            plus = project(_moved(x, i, h), i)
            minus = project(_moved(x, i, -h), i)
            fp, fm = f(plus), f(minus)
            if not (np.isfinite(fp) and np.isfinite(fm)):
                continue
            grad = (fp - fm) / (2 * h)
            curvature = (fp - 2 * value + fm) / h ** 2
            if abs(grad) < 1e-14:
                continue
            move = -grad / curvature if curvature < 0 else grad
            limit = 0.5 if i in owner else MAX_MOVE
            move = float(np.clip(move, -limit, limit))
            for _ in range(MAX_BACKTRACKS):
                candidate = project(_moved(x, i, move), i)
                fc = f(candidate)
                if fc > value:
                    x, value = candidate, fc
                    break
                move /= 2
            else:
                if max(fp, fm) > value:
                    x, value = (plus, fp) if fp >= fm else (minus, fm)
        gain = value - start_value
        logger.debug(f"Sweep {sweep}: value {value:.12f} (gain {gain:.3e})")
        if gain < config.tolerance:
            return x, value, True, sweep
    return x, value, False, config.max_sweeps


def _moved(x, i, delta):
    y = x.copy()
    y[i] += delta
    return y


def multi_start(objective, sampler, config, simplex_blocks=(), initial_points=()):
    """
    Runs coordinate ascent from each explicit initial point, then from
    config.starts points drawn by sampler(rng) with per-start generators spawned
    from config.seed. The best value wins; ties go to the lowest start index.
    """
    seeds = np.random.SeedSequence(config.seed).spawn(config.starts)
    starts = [np.asarray(p, dtype=float) for p in initial_points]
    starts += [sampler(np.random.default_rng(s)) for s in seeds]
    best, values = None, []
    for index, x0 in enumerate(starts):
        x, value, converged, sweeps = coordinate_ascent(objective, x0, config, simplex_blocks)
        values.append(value)
        logger.info(f"Start {index}: value {value:.10f} after {sweeps} sweeps (converged={converged})")
        if best is None or value > best.value:
            best = OptimizationResult(value, x, converged, index, sweeps, ())
    if not best.converged:
        logger.warning(f"Best start {best.start_index} stopped at the sweep limit without converging")
    return OptimizationResult(best.value, best.point, best.converged, best.start_index, best.sweeps,
                              tuple(values))
