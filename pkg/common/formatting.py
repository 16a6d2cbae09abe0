"""
Artifact writers: CSV tables and JSON reports with round-trip float formatting.
"""

import csv
import json
import logging
import os

import numpy as np

logger = logging.getLogger(__name__)


def fmt_float(value) -> str:
    """17 significant digits, enough to round-trip any float64."""
    if value is None:
        return ''
    return format(float(value), '.17g')


def fmt_cell(value) -> str:
    if isinstance(value, (float, np.floating)):
        return fmt_float(value)
    if value is None:
        return ''
    return str(value)


def _json_default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, 'to_dict'):
        return obj.to_dict()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps_json(payload) -> str:
    return json.dumps(payload, indent=2, default=_json_default)


def write_json(path, payload):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as fh:
        fh.write(dumps_json(payload))
        fh.write('\n')
    logger.debug(f"Wrote JSON report {path}")


def write_csv(path, header, rows):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt_cell(v) for v in row])
    logger.debug(f"Wrote CSV table {path}")


def append_csv_row(path, header, row):
    """Append one row, writing the header first if the file is new."""
    is_new = not os.path.exists(path) or os.path.getsize(path) == 0
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'a', newline='', encoding='utf-8') as fh:
        writer = csv.writer(fh, lineterminator='\n')
        if is_new:
            writer.writerow(header)
        writer.writerow([fmt_cell(v) for v in row])


def read_csv_rows(path):
    if not os.path.exists(path):
        return []
    with open(path, newline='', encoding='utf-8') as fh:
        return list(csv.DictReader(fh))
