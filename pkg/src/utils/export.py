import json
import math
import os
from typing import Dict, List, Optional, Sequence

import pandas as pd

from config.config_handler import ConfigHandler
from utils import logging


def _prepare(filepath: str):
    directory = os.path.dirname(filepath)
    if directory:
        os.makedirs(directory, exist_ok=True)


def float_format(precision: Optional[int] = None) -> str:
    precision = precision or ConfigHandler().get('cli', 'precision')
    return f"%.{precision}g"


def export_table(rows: List[Dict], columns: Sequence[str], filepath: str,
                 footer: Sequence[str] = (), precision: Optional[int] = None):
    """Write rows as CSV with a fixed header, then '# key=value' footer lines."""
    _prepare(filepath)
    df = pd.DataFrame(rows, columns=list(columns))
    fmt = float_format(precision)
    with open(filepath, mode="w", newline="") as f:
        df.to_csv(f, index=False, float_format=fmt, lineterminator="\n")
        for line in footer:
            f.write(f"# {line}\n")
    logging.log_info(f"Wrote {len(df)} rows to {filepath}")


def _json_value(value, fmt: Optional[str] = None):
    # JSON has no inf or nan; they are written as null
    if isinstance(value, dict):
        return {k: _json_value(v, fmt) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_value(v, fmt) for v in value]
    if isinstance(value, float):
        if not math.isfinite(value):
            return None
        return float(fmt % value) if fmt else value
    return value


def export_records(rows: List[Dict], filepath: str, footer: Optional[Dict] = None,
                   precision: Optional[int] = None):
    """JSON counterpart of export_table; floats are rounded through the CSV format, inf and nan become null."""
    payload = {"rows": _json_value(rows, float_format(precision))}
    if footer:
        payload["footer"] = footer
    export_report(payload, filepath)


def export_report(report: Dict, filepath: str):
    _prepare(filepath)
    with open(filepath, mode="w") as f:
        json.dump(_json_value(report), f, indent=2, sort_keys=True, allow_nan=False)
        f.write("\n")
    logging.log_info(f"Report written to {filepath}")
