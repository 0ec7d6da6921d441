"""CSV and JSON serialization of experiment results."""
from __future__ import annotations

import csv
import json
import math
from os import PathLike
from pathlib import Path
from typing import Any, Union

import numpy as np

from .exper import SERIES_COLUMNS, RateFit, SweepResult, SweepRow, TimeSeries

SERIES_HEADER = ("t",) + SERIES_COLUMNS
SWEEP_HEADER = ("c", "inv_c_squared", "T_target", "valid")

PathLike_ = Union[str, PathLike]


def fmt(x: float) -> str:
    """12 significant digits."""
    return f"{float(x):.12g}"


def write_series_csv(series: TimeSeries, path: PathLike_) -> Path:
    missing = [c for c in SERIES_COLUMNS if c not in series.columns]
    if missing:
        raise ValueError(f"series lacks columns {missing}")
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SERIES_HEADER)
        cols = [series.t] + [series.columns[c] for c in SERIES_COLUMNS]
        for row in zip(*cols):
            w.writerow([fmt(x) for x in row])
    return path


def read_series_csv(path: PathLike_) -> TimeSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SERIES_HEADER:
            raise ValueError(f"{path}: unexpected series header {header}")
        data = np.array([[float(x) for x in row] for row in reader], dtype=float).reshape(-1, len(header))
    return TimeSeries(data[:, 0], {name: data[:, n + 1] for n, name in enumerate(SERIES_COLUMNS)})


def write_sweep_csv(result: SweepResult, path: PathLike_) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for r in result.rows:
            w.writerow([fmt(r.c), fmt(r.inv_c_squared), fmt(r.t_target), "true" if r.valid else "false"])
    return path


def read_sweep_csv(path: PathLike_, target: float = math.nan) -> SweepResult:
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != SWEEP_HEADER:
            raise ValueError(f"{path}: unexpected sweep header {header}")
        for c, inv, t, valid in reader:
            if valid not in ("true", "false"):
                raise ValueError(f"{path}: bad valid flag {valid!r}")
            rows.append(SweepRow(float(c), float(inv), float(t), valid == "true"))
    return SweepResult(rows, None, target)


def fit_block(fit: RateFit | None) -> dict | None:
    if fit is None:
        return None
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "fitted_K": fit.fitted_k,
    }


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_metadata(meta: dict, path: PathLike_) -> Path:
    """Deterministic JSON: sorted keys, fixed indentation, no timestamps."""
    path = Path(path)
    text = json.dumps(_jsonable(meta), sort_keys=True, indent=2, allow_nan=False)
    path.write_text(text + "\n", encoding="utf-8")
    return path
