from worker import celery_app as celery
import logging

from .cli import cmd_info, cmd_optimize, cmd_verify_lemmas
from .config import ConfigError
from .cq_state import CapExceededError
from .optimizer import OptimizerConfig

logger = logging.getLogger(__name__)


def _failure(command, error):
    return {'command': command, 'status': 'error', 'notes': [str(error)]}


def _run_optimize_logic(channel_spec, ns=(1,), starts=16, seed=0, family='product', feedback=True):
    """
    Capacity estimate for one channel over several block lengths; returns the
    structured report as a plain dict.
    """
    logger.info(f"Optimize task: channel={channel_spec}, n={list(ns)}, starts={starts}, seed={seed}")
    try:
        config = OptimizerConfig(starts=starts, seed=seed)
        report = cmd_optimize(channel_spec, tuple(ns), optimizer=config, family=family, feedback=feedback)
        return report.to_dict()
    except (ConfigError, CapExceededError, ValueError) as e:
        logger.error(f"Optimize task failed: {e}", exc_info=True)
        return _failure('optimize', e)


def _run_verify_lemmas_logic(trials=200, seed=0):
    logger.info(f"Lemma battery task: trials={trials}, seed={seed}")
    try:
        report = cmd_verify_lemmas(trials, seed)
        if report.status != 'ok':
            logger.warning(f"Lemma battery reported failures: {sorted(k for k, v in report.lemma_checks.items() if v['failed'])}")
        return report.to_dict()
    except (CapExceededError, ValueError) as e:
        logger.error(f"Lemma battery task failed: {e}", exc_info=True)
        return _failure('verify-lemmas', e)


def _run_info_logic(config_path):
    logger.info(f"Info task: {config_path}")
    try:
        return cmd_info(config_path).to_dict()
    except (ConfigError, CapExceededError, ValueError) as e:
        logger.error(f"Info task failed for {config_path}: {e}", exc_info=True)
        return _failure('info', e)


@celery.task(name='quantum_feedback.tasks.run_optimize')
def run_optimize_task(channel_spec, ns=(1,), starts=16, seed=0, family='product', feedback=True):
    """
    Runs a feedback-capacity search on a worker. Arguments and the returned
    report are JSON-serialisable.
    """
    return _run_optimize_logic(channel_spec, ns, starts, seed, family, feedback)


@celery.task(name='quantum_feedback.tasks.run_verify_lemmas')
def run_verify_lemmas_task(trials=200, seed=0):
    return _run_verify_lemmas_logic(trials, seed)


@celery.task(name='quantum_feedback.tasks.run_info')
def run_info_task(config_path):
    """Directed-information report for a config file visible to the worker."""
    return _run_info_logic(config_path)
