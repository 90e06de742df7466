"""
Run reports: one record per CLI command, emitted as text, CSV (via pandas) or
structured JSON. Structured output re-parses into an identical report.
"""
import json
import logging
from dataclasses import asdict, dataclass, field

import pandas as pd

from . import __version__

logger = logging.getLogger(__name__)

FORMATS = ('text', 'csv', 'structured')


@dataclass
class RunReport:
    command: str
    seed: int = None
    version: str = __version__
    status: str = 'ok'
    channel: str = None
    source: str = None
    rate_report: dict = None
    errors: dict = None
    lemma_checks: dict = field(default_factory=dict)
    table_name: str = None
    table: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    wall_clock_seconds: float = None

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    def add_lemma(self, name, trials, passed, worst_slack, tolerance, skipped=0):
        self.lemma_checks[name] = {
            'trials': trials, 'passed': passed, 'failed': trials - passed,
            'hypothesis_skipped': skipped, 'worst_slack': worst_slack, 'tolerance': tolerance,
        }
        if passed < trials:
            self.status = 'failed'


def _flatten(prefix, value, out):
    if isinstance(value, dict):
        for key in sorted(value):
            _flatten(f"{prefix}.{key}" if prefix else str(key), value[key], out)
    elif isinstance(value, list) and value and all(isinstance(v, dict) for v in value):
        for i, v in enumerate(value):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, value))
    return out


def emit(report, fmt='structured'):
    """Renders a report; identical inputs give byte-identical output."""
    if fmt == 'structured':
        return json.dumps(report.to_dict(), indent=2, sort_keys=True) + '\n'
    if fmt == 'text':
        data = report.to_dict()
        table = data.pop('table')
        lines = [f"{key}: {value}" for key, value in _flatten('', data, [])]
        if table:
            lines.append(f"{report.table_name or 'table'}:")
            lines.extend('  ' + ', '.join(f"{k}={row[k]}" for k in sorted(row)) for row in table)
        return '\n'.join(lines) + '\n'
    if fmt == 'csv':
        if report.table:
            frame = pd.DataFrame(report.table)
            frame = frame[sorted(frame.columns)]
        else:
            frame = pd.DataFrame(_flatten('', report.to_dict(), []), columns=['field', 'value'])
        return frame.to_csv(index=False)
    raise ValueError(f"Unknown report format '{fmt}' (choose from {FORMATS})")


def parse_structured(text):
    return RunReport.from_dict(json.loads(text))


def write_report(report, fmt='structured', path=None, stream=None):
    text = emit(report, fmt)
    if path:
        with open(path, 'w') as f:
            f.write(text)
        logger.info(f"Wrote {fmt} report to {path}")
    elif stream is not None:
        stream.write(text)
    return text
