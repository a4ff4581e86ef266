"""CSV signal files, flat tables and versioned JSON reports."""

import csv
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .wavelet import SignalArray

SCHEMA_VERSION = "1.0"
FLOAT_FMT = "{:.17g}"


def meta_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def write_signals_csv(signals: SignalArray, path, meta: dict | None = None) -> Path:
    """One column per sensor, one row per sample, full binary64 precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(signals.sensor_labels)
        for row in signals.data.T:
            writer.writerow([FLOAT_FMT.format(v) for v in row])
    sidecar = {"sample_rate_hz": signals.sample_rate_hz, "T": signals.T, "p": signals.p,
               "units": "deg/s", "sensor_labels": list(signals.sensor_labels)}
    sidecar.update(meta or {})
    meta_path(path).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return path


def read_signals_csv(path, sample_rate_hz: float | None = None) -> SignalArray:
    """Read a header-plus-rows CSV written by :func:`write_signals_csv` or by hand.

    The sample rate comes from the argument, else from a ``.meta.json``
    sidecar, else defaults to 1 Hz.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"input file {path} does not exist")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: file is empty") from None
        labels = [h.strip() for h in header]
        if not labels or any(not h for h in labels):
            raise InputError(f"{path}: header row must name every column")
        p = len(labels)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != p:
                raise InputError(f"{path}: line {lineno} has {len(row)} fields, expected {p}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                for col, cell in enumerate(row):
                    try:
                        float(cell)
                    except ValueError:
                        raise InputError(
                            f"{path}: line {lineno}, column {col + 1} ({labels[col]}): non-numeric value {cell!r}"
                        ) from None
    if len(rows) < 2:
        raise InputError(f"{path}: need at least 2 data rows, got {len(rows)}")
    data = np.array(rows).T
    if sample_rate_hz is None:
        side = meta_path(path)
        sample_rate_hz = 1.0
        if side.is_file():
            sample_rate_hz = float(json.loads(side.read_text()).get("sample_rate_hz", 1.0))
    bad = ~np.isfinite(data)
    if bad.any():
        i, t = np.argwhere(bad)[0]
        raise InputError(f"{path}: line {t + 2}, column {i + 1} ({labels[i]}): non-finite value")
    return SignalArray(data, sample_rate_hz, labels)


def write_matrix_csv(path, matrix, labels=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if labels is not None:
            writer.writerow(labels)
        for row in matrix:
            writer.writerow([FLOAT_FMT.format(v) for v in row])
    return path


def write_table(path, header, rows) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([FLOAT_FMT.format(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(obj) -> str:
    return json.dumps(obj, default=_jsonable, sort_keys=True, separators=(",", ":"))


def body_digest(report: dict) -> str:
    """SHA-256 of everything in a report except the ``run`` block (timings, versions)."""
    body = {k: v for k, v in report.items() if k not in ("run", "body_sha256")}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def write_report(path, report: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report = dict(report)
    report.setdefault("schema_version", SCHEMA_VERSION)
    report["body_sha256"] = body_digest(report)
    path.write_text(json.dumps(report, default=_jsonable, indent=2, sort_keys=True) + "\n")
    return path
