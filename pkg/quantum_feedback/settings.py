"""
Run defaults loaded from the repository-level settings.json.
"""
import json
import logging
import os

from dotenv import load_dotenv

load_dotenv()

SETTINGS_FILE = os.path.join(os.path.dirname(os.path.abspath(__file__)), '..', 'settings.json')
LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'

DEFAULT_SETTINGS = {
    "log_level": "INFO",
    "enum_cap": 1000000,
    "samples": 10000,
    "verify_trials": 200,
    "optimizer": {"starts": 16, "seed": 0, "step": 1e-4, "tolerance": 1e-8, "max_sweeps": 200},
    "typicality": {"delta": 0.5, "c": 1.0, "l": 2},
}


def settings_path():
    return os.getenv('QFB_SETTINGS_FILE', SETTINGS_FILE)


def load_settings():
    """Loads run defaults; falls back to DEFAULT_SETTINGS when the file is missing or corrupt."""
    logger = logging.getLogger(__name__)
    path = settings_path()
    try:
        with open(path, 'r') as f:
            loaded = json.load(f)
        logger.debug(f"Loaded settings from {path}")
    except (FileNotFoundError, json.JSONDecodeError) as e:
        logger.error(f"Could not load or parse {path}: {e}. Using default settings.")
        return json.loads(json.dumps(DEFAULT_SETTINGS))
    settings = json.loads(json.dumps(DEFAULT_SETTINGS))
    for key, value in loaded.items():
        if isinstance(value, dict) and isinstance(settings.get(key), dict):
            settings[key].update(value)
        else:
            settings[key] = value
    return settings


def configure_logging(settings=None):
    """Root logger to stderr; level from QFB_LOG_LEVEL or settings."""
    settings = settings or DEFAULT_SETTINGS
    level = os.getenv('QFB_LOG_LEVEL', settings.get('log_level', 'INFO')).upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO), format=LOG_FORMAT)
