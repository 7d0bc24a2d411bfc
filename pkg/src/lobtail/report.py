"""Deterministic CSV/JSON emitters for the batch pipeline.

All floats are written with shortest round-trip repr so that re-runs under a
fixed seed produce byte-identical trees; NaN becomes an empty CSV cell and a
JSON null.  Files are UTF-8 with LF line endings, '.' decimal separator and
no thousands separators.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import FitResult
from .diagnostics import CurvePoints, DescriptiveStats, HourlyMedianMatrix
from .ingest import PreparedSample

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "fmt",
    "write_csv",
    "write_json",
    "write_series_csv",
    "write_curve_csv",
    "write_prepared_sample",
    "write_heatmap_csv",
    "fit_to_dict",
]


def fmt(value) -> str:
    """Shortest round-trip decimal text; empty for NaN/None."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    f = float(value)
    if math.isnan(f):
        return ""
    return repr(f)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if not isinstance(v, str) else v for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _jsonable(obj):
    if isinstance(obj, Mapping):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return None if math.isnan(f) else f
    return obj


def write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    body = json.dumps(_jsonable(payload), indent=2, sort_keys=True)
    path.write_text(body + "\n", encoding="utf-8", newline="\n")


def write_series_csv(path: Path, timestamps: np.ndarray, values: np.ndarray) -> None:
    write_csv(path, ["t_s", "volume"], zip(timestamps, values))


def write_curve_csv(path: Path, curve: CurvePoints) -> None:
    if curve.lo is not None and curve.hi is not None:
        write_csv(path, ["x", "y", "lo", "hi"], zip(curve.xs, curve.ys, curve.lo, curve.hi))
    else:
        write_csv(path, ["x", "y"], zip(curve.xs, curve.ys))


def write_prepared_sample(csv_path: Path, sample: PreparedSample) -> None:
    write_csv(csv_path, ["index", "value"], enumerate(sample.data))
    write_json(csv_path.with_suffix(".meta.json"), sample.meta_dict())


def write_heatmap_csv(path: Path, hm: HourlyMedianMatrix) -> None:
    header = ["hour"] + [d.isoformat() for d in hm.days]
    rows = [[str(int(h))] + list(hm.matrix[r]) for r, h in enumerate(hm.hours)]
    write_csv(path, header, rows)


def descriptive_to_dict(stats: DescriptiveStats) -> dict:
    return {
        "max": stats.max,
        "min": stats.min,
        "median": stats.median,
        "mean": stats.mean,
        "std": stats.std,
        "kurtosis": stats.kurtosis,
        "skew": stats.skew,
    }


def fit_to_dict(fit: FitResult) -> dict:
    out = {
        "family": fit.family.value,
        "method": fit.method.value,
        "params": fit.params_dict(),
        "sample_size": fit.sample_size,
        "converged": fit.converged,
        "ks_statistic": fit.ks_statistic,
        "ks_pvalue": fit.ks_pvalue,
        "notes": list(fit.notes),
    }
    if fit.covariance is not None:
        out["covariance"] = fit.covariance.tolist()
    return out
