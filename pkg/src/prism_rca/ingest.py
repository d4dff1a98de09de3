"""Read and write failure cases in the case-directory layout.

A case directory holds::

    data.csv    header "time,<component>_<metric>,...", integer-second rows
    meta.json   {"inject_time": int, "root_cause": str | [str],
                 "fault_type": str, "overrides": {metric: kind}}

Only ``inject_time`` is required. Unknown meta keys are kept on the case
(``FailureCase.extra``) and written back, but otherwise ignored. Empty or
non-numeric cells are missing values. A corpus root additionally holds a
``manifest.json`` written by the simulator.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import re
from pathlib import Path
from typing import Any

import numpy as np

from .model import FailureCase, PropertyId, PropertyKind, PropertySeries, classify_property, vocabulary_kind

logger = logging.getLogger(__name__)

DATA_FILE = "data.csv"
META_FILE = "meta.json"
MANIFEST_FILE = "manifest.json"

_KNOWN_META = ("inject_time", "root_cause", "fault_type", "overrides")
# decimal point only; no digit grouping, no locale forms
_NUMBER = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?(?:inf|infinity|nan)", re.IGNORECASE)


class IngestError(ValueError):
    pass


class MissingFile(IngestError):
    pass


class MalformedHeader(IngestError):
    pass


class InjectTimeOutOfRange(IngestError):
    pass


class NoParsableRows(IngestError):
    pass


class IoFailure(IngestError):
    pass


def parse_number(token: str) -> float:
    """Parse a decimal number; anything else is a missing value (NaN)."""
    token = token.strip()
    if not _NUMBER.fullmatch(token):
        return math.nan
    return float(token)


def parse_time(token: str) -> int | None:
    value = parse_number(token)
    if not math.isfinite(value) or value != int(value):
        return None
    return int(value)


def split_column(column: str) -> tuple[str, str]:
    """``"shipping_service_latency"`` -> ``("shipping_service", "latency")``."""
    component, sep, metric = column.rpartition("_")
    if not sep or not component or not metric:
        raise ValueError(column)
    return component, metric


def _read_meta(path: Path) -> dict[str, Any]:
    meta_path = path / META_FILE
    if not meta_path.is_file():
        raise MissingFile(f"{meta_path}: missing")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise IngestError(f"{meta_path}: invalid JSON ({exc})") from exc
    if not isinstance(meta, dict):
        raise IngestError(f"{meta_path}: expected a JSON object")
    inject = meta.get("inject_time")
    if isinstance(inject, bool) or not isinstance(inject, int):
        raise IngestError(f"{meta_path}: 'inject_time' must be an integer")
    return meta


def _ground_truth(meta: dict[str, Any], where: Path) -> frozenset[str] | None:
    root = meta.get("root_cause")
    if root is None:
        return None
    if isinstance(root, str):
        return frozenset([root])
    if isinstance(root, list) and all(isinstance(r, str) for r in root) and root:
        return frozenset(root)
    raise IngestError(f"{where / META_FILE}: 'root_cause' must be a string or a non-empty list of strings")


def load_case(path: str | Path) -> FailureCase:
    path = Path(path)
    data_path = path / DATA_FILE
    if not data_path.is_file():
        raise MissingFile(f"{data_path}: missing")
    meta = _read_meta(path)
    overrides = meta.get("overrides") or {}
    if not isinstance(overrides, dict):
        raise IngestError(f"{path / META_FILE}: 'overrides' must be an object")

    with data_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0].strip() != "time":
            raise MalformedHeader(f"{data_path}: first column must be 'time'")
        columns = [c.strip() for c in header[1:]]
        if not columns:
            raise MalformedHeader(f"{data_path}: no property columns")
        ids = []
        for col in columns:
            try:
                component, metric = split_column(col)
            except ValueError:
                raise MalformedHeader(f"{data_path}: column {col!r} is not '<component>_<metric>'") from None
            try:
                kind = classify_property(metric, overrides)
            except ValueError as exc:
                raise IngestError(f"{path / META_FILE}: {exc}") from exc
            ids.append(PropertyId(component, metric, kind))
        if len(set(columns)) != len(columns):
            raise MalformedHeader(f"{data_path}: duplicate column names")

        times: list[int] = []
        rows: list[list[float]] = []
        width = len(columns)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            t = parse_time(row[0])
            if t is None:
                logger.warning("%s:%d: unparseable time %r; row dropped", data_path, lineno, row[0])
                continue
            cells = row[1 : width + 1]
            values = [parse_number(c) for c in cells] + [math.nan] * (width - len(cells))
            times.append(t)
            rows.append(values)

    if not rows:
        raise NoParsableRows(f"{data_path}: no rows with a parsable time")
    ts = np.asarray(times, dtype=np.int64)
    table = np.asarray(rows, dtype=np.float64)
    if np.any(np.diff(ts) < 0):
        logger.warning("%s: rows not in time order; sorting", data_path)
        order = np.argsort(ts, kind="stable")
        ts, table = ts[order], table[order]

    inject = meta["inject_time"]
    if not ts[0] < inject <= ts[-1]:
        raise InjectTimeOutOfRange(
            f"{path / META_FILE}: inject_time {inject} outside time range ({ts[0]}, {ts[-1]}]"
        )

    case = FailureCase(
        case_id=path.name,
        series=tuple(PropertySeries(pid, ts, table[:, j]) for j, pid in enumerate(ids)),
        inject_time=inject,
        ground_truth=_ground_truth(meta, path),
        fault_type=meta.get("fault_type"),
        extra={k: v for k, v in meta.items() if k not in _KNOWN_META},
    )
    case.check_sufficiency()
    return case


def _format(value: float) -> str:
    return "" if math.isnan(value) else format(value, ".17g")


def _overrides_for(case: FailureCase) -> dict[str, str]:
    chosen: dict[str, PropertyKind] = {}
    for s in case.series:
        metric, kind = s.id.metric, s.id.kind
        if metric in chosen and chosen[metric] is not kind:
            raise IoFailure(f"case {case.case_id}: metric {metric!r} has conflicting kinds across components")
        chosen[metric] = kind
    return {m: k.value for m, k in sorted(chosen.items()) if vocabulary_kind(m) is not k}


def write_case(case: FailureCase, path: str | Path) -> Path:
    """Write ``case`` under ``path``; values keep 17 significant digits."""
    path = Path(path)
    if not case.series:
        raise IoFailure(f"case {case.case_id}: no properties to write")

    first = case.series[0].timestamps
    if all(np.array_equal(s.timestamps, first) for s in case.series):
        times = first
        columns = [s.values for s in case.series]
    else:
        times = np.unique(np.concatenate([s.timestamps for s in case.series]))
        columns = []
        for s in case.series:
            if len(np.unique(s.timestamps)) != len(s.timestamps):
                raise IoFailure(f"{s.id.column}: repeated timestamps cannot be aligned to a shared time column")
            col = np.full(len(times), math.nan)
            col[np.searchsorted(times, s.timestamps)] = s.values
            columns.append(col)

    meta: dict[str, Any] = {"inject_time": int(case.inject_time)}
    if case.ground_truth is not None:
        meta["root_cause"] = sorted(case.ground_truth)
    if case.fault_type is not None:
        meta["fault_type"] = case.fault_type
    overrides = _overrides_for(case)
    if overrides:
        meta["overrides"] = overrides
    meta.update({k: v for k, v in case.extra.items() if k not in meta})

    try:
        path.mkdir(parents=True, exist_ok=True)
        with (path / DATA_FILE).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["time"] + [s.id.column for s in case.series])
            for i, t in enumerate(times):
                writer.writerow([str(int(t))] + [_format(col[i]) for col in columns])
        (path / META_FILE).write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"{path}: {exc}") from exc
    return path


def canonical_hash(obj: Any) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def write_manifest(root: str | Path, manifest: dict[str, Any]) -> Path:
    out = Path(root) / MANIFEST_FILE
    try:
        out.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"{out}: {exc}") from exc
    return out


def read_manifest(root: str | Path) -> dict[str, Any]:
    path = Path(root) / MANIFEST_FILE
    if not path.is_file():
        raise MissingFile(f"{path}: missing")
    return json.loads(path.read_text(encoding="utf-8"))


def case_dirs(root: str | Path) -> list[Path]:
    """Case directories directly under ``root`` (or ``root`` itself), sorted."""
    root = Path(root)
    if (root / DATA_FILE).is_file():
        return [root]
    return sorted(p for p in root.iterdir() if p.is_dir() and (p / DATA_FILE).is_file())
