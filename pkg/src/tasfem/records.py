"""Reading and writing benchmark record files.

Two formats share one field set:

* JSON lines (canonical): an optional header object carrying
  ``schema_version`` and ``metadata``, then one record object per line.
* CSV: optional ``# schema_version=`` and ``# metadata=`` comment lines, a
  header row starting with the standard columns, then one row per record.

Fields outside the standard set are kept in ``BenchmarkRecord.extra``.
"""

from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import os
import platform
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from .exceptions import RecordParseError, RecordValidationError, SchemaVersionError
from .tascore import BenchmarkRecord

SCHEMA_VERSION = 1
SUPPORTED_SCHEMA_VERSIONS = (1,)
FIELDS = ("label", "family", "degree", "dim", "h", "n_dofs", "l2_error", "time_seconds", "n_procs")
INT_FIELDS = ("degree", "dim", "n_dofs", "n_procs")
FLOAT_FIELDS = ("h", "l2_error", "time_seconds")
FORMATS = ("json-lines", "csv")


@dataclass
class RecordFile:
    records: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    schema_version: int = SCHEMA_VERSION
    rejected: list = field(default_factory=list)


def default_metadata() -> dict:
    from . import __version__

    return {
        "machine": f"{platform.platform()} ({platform.machine()}, python {platform.python_version()})",
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "toolkit_version": __version__,
    }


def infer_format(path) -> str:
    suffix = Path(path).suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".json", ".ndjson"):
        return "json-lines"
    raise ValueError(f"cannot infer record format from {path!s}; pass format explicitly")


def _coerce(raw: dict):
    """Typed fields and extras from one raw mapping, plus problems found."""
    problems = []
    values = {}
    for name in FIELDS:
        if name not in raw or raw[name] in (None, ""):
            if name == "n_procs":
                values[name] = 1
                continue
            problems.append(f"missing field {name!r}")
            continue
        v = raw[name]
        try:
            if name in INT_FIELDS:
                if isinstance(v, str):
                    v = v.strip()
                    v = int(v) if v.lstrip("+-").isdigit() else _int_from_float(float(v))
                elif isinstance(v, float):
                    v = _int_from_float(v)
                elif isinstance(v, bool) or not isinstance(v, int):
                    raise ValueError
            elif name in FLOAT_FIELDS:
                if isinstance(v, bool):
                    raise ValueError
                v = float(v)
            else:
                v = str(v)
        except (TypeError, ValueError):
            problems.append(f"{name} has invalid value {raw[name]!r}")
            continue
        values[name] = v
    extra = {k: v for k, v in raw.items() if k not in FIELDS}
    if not problems:
        problems = BenchmarkRecord.problems(values)
    return values, extra, problems


def _int_from_float(x):
    if not float(x).is_integer():
        raise ValueError
    return int(x)


def _build(rows, rejected_out):
    records = []
    for line, raw in rows:
        values, extra, problems = _coerce(raw)
        if problems:
            rejected_out.extend((line, p) for p in problems)
            continue
        records.append(BenchmarkRecord(**values, extra=extra))
    return records


def _check_version(version, line):
    if isinstance(version, str) and version.strip().isdigit():
        version = int(version)
    if version not in SUPPORTED_SCHEMA_VERSIONS:
        raise SchemaVersionError(
            f"unsupported schema_version {version!r} (line {line}); supported: {SUPPORTED_SCHEMA_VERSIONS}"
        )
    return version


def _read_jsonl(text):
    version, metadata, rows = SCHEMA_VERSION, {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordParseError(f"invalid JSON: {exc.msg}", lineno, exc.colno) from None
        if not isinstance(obj, dict):
            raise RecordParseError("each line must hold a JSON object", lineno, 1)
        if "schema_version" in obj and "label" not in obj:
            version = _check_version(obj["schema_version"], lineno)
            metadata = dict(obj.get("metadata") or {})
            continue
        rows.append((lineno, obj))
    return version, metadata, rows


def _decode_extra(cell):
    try:
        return json.loads(cell)
    except (json.JSONDecodeError, ValueError):
        return cell


def _encode_extra(value):
    # plain strings stay readable; anything that would decode differently is JSON-quoted
    if isinstance(value, str):
        if value == "" or value != value.strip() or any(ord(c) < 32 for c in value):
            return json.dumps(value)
        try:
            json.loads(value)
        except (json.JSONDecodeError, ValueError):
            return value
        return json.dumps(value)
    return json.dumps(value)


def _read_csv(text):
    version, metadata = SCHEMA_VERSION, {}
    lines = text.splitlines(keepends=True)
    start = 0
    while start < len(lines) and lines[start].startswith("#"):
        body = lines[start][1:].strip()
        key, _, value = body.partition("=")
        key = key.strip()
        if key == "schema_version":
            version = _check_version(value.strip(), start + 1)
        elif key == "metadata":
            try:
                metadata = json.loads(value)
            except json.JSONDecodeError as exc:
                raise RecordParseError(f"invalid metadata JSON: {exc.msg}", start + 1, exc.colno) from None
        start += 1
    rows = []
    reader = csv.reader(io.StringIO("".join(lines[start:])))
    header = None
    for row in reader:
        lineno = start + reader.line_num
        if header is None:
            if not row:
                continue
            header = [h.strip() for h in row]
            if len(set(header)) != len(header):
                raise RecordParseError("duplicate column names in header", lineno)
            continue
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise RecordParseError(
                f"expected {len(header)} fields, found {len(row)}", lineno, len(",".join(row[: len(header)])) + 1
            )
        raw = {}
        for name, cell in zip(header, row):
            if name in FIELDS:
                raw[name] = cell
            elif cell != "":
                raw[name] = _decode_extra(cell)
        rows.append((lineno, raw))
    return version, metadata, rows


def read_records(path, format=None, strict=True) -> RecordFile:
    """Parse and validate a record file.

    Invalid rows are collected as ``(line, message)`` diagnostics; with
    ``strict`` they raise RecordValidationError, otherwise they are returned
    in ``RecordFile.rejected``.
    """
    fmt = format or infer_format(path)
    text = Path(path).read_text(encoding="utf-8")
    if fmt == "json-lines":
        version, metadata, rows = _read_jsonl(text)
    elif fmt == "csv":
        version, metadata, rows = _read_csv(text)
    else:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    rejected = []
    records = _build(rows, rejected)
    if rejected and strict:
        raise RecordValidationError(rejected)
    return RecordFile(records, metadata, version, rejected)


def _record_dict(r: BenchmarkRecord) -> dict:
    d = {name: getattr(r, name) for name in FIELDS}
    d.update(r.extra)
    return d


def _fmt_number(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dumps_jsonl(rf: RecordFile) -> str:
    out = [json.dumps({"schema_version": rf.schema_version, "metadata": rf.metadata}, sort_keys=True)]
    out += [json.dumps(_record_dict(r)) for r in rf.records]
    return "\n".join(out) + "\n"


def dumps_csv(rf: RecordFile) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={rf.schema_version}\n")
    buf.write(f"# metadata={json.dumps(rf.metadata, sort_keys=True)}\n")
    extras = sorted({k for r in rf.records for k in r.extra})
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(FIELDS) + extras)
    for r in rf.records:
        row = [_fmt_number(getattr(r, name)) for name in FIELDS]
        row += [_encode_extra(r.extra[k]) if k in r.extra else "" for k in extras]
        writer.writerow(row)
    return buf.getvalue()


def write_records(rf: RecordFile, path, format=None) -> None:
    """Write atomically: the target is replaced only once fully written."""
    fmt = format or infer_format(path)
    if fmt == "json-lines":
        text = dumps_jsonl(rf)
    elif fmt == "csv":
        text = dumps_csv(rf)
    else:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
