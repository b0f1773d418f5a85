"""Rate fitting and table output (CSV or JSON, optional plot script)."""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path

import numpy as np

from ..table import ResultTable


def fit_rate(table: ResultTable, x_col: str, y_col: str):
    """Least-squares line through ``(log x, log y)``: ``(slope, intercept, r_squared)``."""
    x, y = table.column(x_col), table.column(y_col)
    if len(x) < 3:
        raise ValueError("need at least 3 rows to fit a rate")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("rate fits need strictly positive values")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    total = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if total == 0 else 1.0 - float(np.sum(resid**2)) / float(total)
    return float(slope), float(intercept), r2


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def to_json(table: ResultTable) -> str:
    doc = {"columns": table.columns, "rows": table.rows, "meta": _jsonable(table.meta)}
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def plot_script(table: ResultTable, data_path: Path) -> str:
    """Generic point-plot commands: first column against each of the others."""
    lines = [f"# {table.meta.get('experiment', 'table')}", "set datafile separator ','",
             "set key autotitle columnhead"]
    if len(table.columns) > 1:
        plots = ", ".join(f"'{data_path.name}' using 1:{k + 1} with points"
                          for k in range(1, len(table.columns)))
        lines.append(f"plot {plots}")
    return "\n".join(lines) + "\n"


def emit(table: ResultTable, fmt: str, path, plot: bool = False) -> Path:
    """Write ``table`` as ``csv`` or ``json`` to ``path``; optionally a sibling ``.plot`` file."""
    if fmt not in ("csv", "json"):
        raise ValueError("format must be csv or json")
    path = Path(path)
    text = to_csv(table) if fmt == "csv" else to_json(table)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    if plot:
        with open(path.with_suffix(".plot"), "w", encoding="utf-8", newline="") as fh:
            fh.write(plot_script(table, path))
    return path


def parse(path) -> ResultTable:
    """Read a table written by :func:`emit` (format from the file suffix or content)."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        return ResultTable(doc["columns"], doc["rows"], doc.get("meta", {}))
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    return ResultTable(header, [[float(v) for v in row] for row in reader if row])
