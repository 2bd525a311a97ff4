"""File formats for experiment outputs.

All floating-point values are written with 17 significant digits so a
round trip through disk reproduces the doubles bit for bit.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from ..errors import ContractError
from ..optimize import Trajectory

__all__ = [
    "fmt_float",
    "write_csv",
    "read_csv",
    "write_json_record",
    "read_json_record",
    "write_gnuplot_dat",
    "trajectory_to_csv",
    "trajectory_from_csv",
    "gap_series_to_csv",
]

TRAJECTORY_COLUMNS = ("t", "loss", "dist_from_init", "grad_norm", "lambda_min_K")
GAP_COLUMNS = ("t", "gap", "loss_nonlinear", "loss_linearized")


def fmt_float(x: float) -> str:
    """Render a float with enough digits to reproduce it exactly."""
    return "%.17g" % float(x)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    x = float(value)
    # Unsampled entries are stored as NaN in memory but written blank.
    if math.isnan(x):
        return ""
    return fmt_float(x)


def write_csv(path: str | Path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path: str | Path) -> tuple[list[str], list[list[float]]]:
    """Read a numeric CSV back; blank cells come back as NaN."""
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [
            [math.nan if cell == "" else float(cell) for cell in row]
            for row in reader
        ]
    return header, rows


def _jsonable(value):
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return value


def write_json_record(path: str | Path, record: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(record), indent=2, sort_keys=True) + "\n")
    return path


def read_json_record(path: str | Path) -> dict:
    return json.loads(Path(path).read_text())


def write_gnuplot_dat(path: str | Path, column_names, blocks) -> Path:
    """Write a gnuplot data file.

    ``blocks`` is a list of (title, rows); blocks are separated by two
    blank lines so gnuplot's ``index`` keyword selects among them.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = ["# " + " ".join(column_names)]
    for b, (title, rows) in enumerate(blocks):
        if b:
            lines.append("")
            lines.append("")
        lines.append(f"# index {b}: {title}")
        for row in rows:
            lines.append(" ".join(_cell(v) or "nan" for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def trajectory_to_csv(path: str | Path, trajectory: Trajectory) -> Path:
    rows = zip(
        trajectory.t,
        trajectory.loss,
        trajectory.dist_from_init,
        trajectory.grad_norm,
        trajectory.lambda_min_K,
    )
    return write_csv(path, TRAJECTORY_COLUMNS, rows)


def trajectory_from_csv(path: str | Path) -> Trajectory:
    header, rows = read_csv(path)
    if tuple(header) != TRAJECTORY_COLUMNS:
        raise ContractError(f"{path} is not a trajectory CSV: header {header}")
    cols = np.array(rows, dtype=np.float64).reshape(len(rows), len(TRAJECTORY_COLUMNS))
    return Trajectory(
        t=cols[:, 0].astype(np.int64),
        loss=cols[:, 1],
        dist_from_init=cols[:, 2],
        grad_norm=cols[:, 3],
        lambda_min_K=cols[:, 4],
        final_w=None,
        converged=False,
        stop_reason="loaded",
    )


def gap_series_to_csv(path: str | Path, report) -> Path:
    rows = zip(report.t, report.gap, report.loss_nonlinear, report.loss_linearized)
    return write_csv(path, GAP_COLUMNS, rows)
