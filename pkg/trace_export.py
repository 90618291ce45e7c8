"""
Export layer for traces, clause-energy tables and solve reports.
CSV goes through pandas DataFrames; JSON keeps floats as shortest round-trip decimals.
"""

import io
import json
import logging
import math
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import pandas as pd

from modules.errors import TraceExportError
from modules.integrator import Trace, TraceRow
from modules.kernel import SystemParams
from modules.system_two import ClauseEnergyRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
# energy has no value for System II traces on formulas that are not 3-uniform
MISSING = 'null'
TABLE_COLUMNS = ['signs', 'corner', 'energy', 'energy_over_pi_a', 'nae_satisfied']


class TraceFormat(Enum):
    CSV = "csv"
    JSON = "json"


def _write_text(text: str, path: Optional[PathLike]) -> Optional[Path]:
    """Write to a file, or to stdout when path is None or '-'"""
    if path is None or str(path) == '-':
        sys.stdout.write(text)
        sys.stdout.flush()
        return None
    target = Path(path)
    try:
        if target.parent and not target.parent.exists():
            target.parent.mkdir(parents=True, exist_ok=True)
        target.write_text(text, encoding='utf-8')
    except OSError as e:
        logger.error(f"Failed to write {target}: {e}")
        raise TraceExportError(f"Cannot write {target}: {e}") from e
    logger.info(f"Wrote {target}")
    return target


def _frame_to_csv(frame: pd.DataFrame) -> str:
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator='\n', na_rep=MISSING)
    return buffer.getvalue()


def trace_to_csv(trace: Trace) -> str:
    """Header step,t,energy,sat_count,nae_count,alpha_1..N,x_1..N then one line per row"""
    return _frame_to_csv(trace.to_frame())


def _json_row(row: TraceRow) -> Dict[str, Any]:
    data = row.to_dict()
    if not math.isfinite(data['energy']):
        data['energy'] = None
    return data


def trace_to_json(trace: Trace) -> str:
    """Metadata, N and one object per row; a missing energy is written as null"""
    payload = {
        'metadata': trace.metadata,
        'num_vars': trace.num_vars,
        'rows': [_json_row(row) for row in trace.rows],
    }
    return json.dumps(payload, indent=2, allow_nan=False)


def trace_from_json(text: str) -> Trace:
    """Rebuild a Trace written by trace_to_json"""
    try:
        payload = json.loads(text)
        trace = Trace(num_vars=payload['num_vars'], metadata=payload['metadata'])
        for row in payload['rows']:
            kernels = row.get('kernels')
            trace.append(TraceRow(
                step=row['step'],
                t=row['t'],
                energy=math.nan if row['energy'] is None else row['energy'],
                alpha=tuple(row['alpha']),
                x=tuple(row['x']),
                sat_count=row['sat_count'],
                nae_count=row['nae_count'],
                kernels=tuple(kernels) if kernels is not None else None,
            ))
    except (KeyError, TypeError, ValueError) as e:
        raise TraceExportError(f"Malformed trace JSON: {e}") from e
    return trace


def emit_trace(trace: Trace, fmt: Union[str, TraceFormat], path: Optional[PathLike]) -> Optional[Path]:
    """
    Serialize a trace as CSV or JSON.

    Raises:
        TraceExportError: on I/O failure
    """
    fmt = TraceFormat(fmt)
    text = trace_to_csv(trace) if fmt is TraceFormat.CSV else trace_to_json(trace)
    return _write_text(text, path)


def table_frame(rows: List[ClauseEnergyRow]) -> pd.DataFrame:
    records = [
        {
            'signs': row.signs_string(),
            'corner': row.corner.to_string(),
            'energy': row.energy,
            'energy_over_pi_a': str(row.energy_over_pi_a),
            'nae_satisfied': row.nae_satisfied,
        }
        for row in rows
    ]
    return pd.DataFrame.from_records(records, columns=TABLE_COLUMNS)


def emit_table(rows: List[ClauseEnergyRow], path: Optional[PathLike]) -> Optional[Path]:
    """Clause-energy table as CSV; energy_over_pi_a is an exact rational string"""
    return _write_text(_frame_to_csv(table_frame(rows)), path)


def emit_report(report: Dict[str, Any], path: Optional[PathLike]) -> Optional[Path]:
    return _write_text(json.dumps(report, indent=2, allow_nan=False) + '\n', path)


def load_report(path: PathLike) -> Dict[str, Any]:
    """
    Read a report JSON file.

    Raises:
        TraceExportError: unreadable or malformed file
    """
    try:
        return json.loads(Path(path).read_text(encoding='utf-8'))
    except OSError as e:
        raise TraceExportError(f"Cannot read report {path}: {e}") from e
    except ValueError as e:
        raise TraceExportError(f"Malformed report {path}: {e}") from e


def params_header(params: SystemParams) -> str:
    """Single-line parameter echo for table output"""
    return ', '.join(f"{key}={value}" for key, value in params.to_dict().items())
