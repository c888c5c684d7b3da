"""Reading and writing canonical record files, and the analysis filter.

Two interchangeable formats are supported:

* ``csv`` - UTF-8, comma separated, first row holds the field names (any
  order, each exactly once).  Codes are integers, booleans ``0``/``1``,
  dates ``YYYY-MM-DD``, damage zones joined by ``;``.  An empty cell is an
  absent value.
* ``jsonl`` - one JSON object per line keyed by field name.  Absent values
  are ``null``; booleans are JSON booleans; damage zones a list of names.
"""

from __future__ import annotations

import csv
import datetime as dt
import io
import json
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

from .data_model import (
    DAMAGE_ZONES,
    FIELD_NAMES,
    FIELD_SPECS,
    SPECS_BY_NAME,
    CrashRecord,
    FieldSpec,
    validate,
)

FORMATS = ("csv", "jsonl")


class IngestError(Exception):
    """Abort-class failure: unreadable file or malformed header."""


@dataclass(frozen=True)
class Diagnostic:
    row: int
    cause: str
    source: str = ""

    def __str__(self) -> str:
        where = f"{self.source}:" if self.source else ""
        return f"{where}row {self.row}: {self.cause}"


@dataclass
class ParseResult:
    records: list[CrashRecord] = field(default_factory=list)
    diagnostics: list[Diagnostic] = field(default_factory=list)


@dataclass(frozen=True)
class RecordFile:
    path: Path
    format: str = "csv"

    @classmethod
    def of(cls, path: str | Path, format: str | None = None) -> "RecordFile":
        path = Path(path)
        if format is None:
            format = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
        if format not in FORMATS:
            raise IngestError(f"unknown record format {format!r}")
        return cls(path, format)


class _CellError(ValueError):
    pass


def _decode_cell(spec: FieldSpec, text: str) -> Any:
    text = text.strip()
    if text == "":
        return None
    if spec.kind in ("code", "count"):
        try:
            return int(text)
        except ValueError:
            raise _CellError("not a code" if spec.kind == "code" else "not a count") from None
    if spec.kind == "bool":
        if text not in ("0", "1"):
            raise _CellError("not a boolean (0/1)")
        return text == "1"
    if spec.kind == "date":
        try:
            return dt.date.fromisoformat(text)
        except ValueError:
            raise _CellError("not an ISO date") from None
    if spec.kind == "zones":
        return frozenset(z.strip() for z in text.split(";") if z.strip())
    return text


def _decode_json(spec: FieldSpec, value: Any) -> Any:
    if value is None:
        return None
    if spec.kind in ("code", "count"):
        if isinstance(value, bool) or not isinstance(value, int):
            raise _CellError("not a code" if spec.kind == "code" else "not a count")
        return value
    if spec.kind == "bool":
        if not isinstance(value, bool):
            raise _CellError("not a boolean")
        return value
    if spec.kind == "date":
        try:
            return dt.date.fromisoformat(value)
        except (TypeError, ValueError):
            raise _CellError("not an ISO date") from None
    if spec.kind == "zones":
        if not isinstance(value, list) or not all(isinstance(z, str) for z in value):
            raise _CellError("not a list of zone names")
        return frozenset(value)
    if not isinstance(value, str):
        raise _CellError("not a string")
    return value


def _build(values: dict[str, Any]) -> CrashRecord:
    if values.get("damage_locations") is None:
        values["damage_locations"] = frozenset()
    lighting = values.get("lighting")
    spec = SPECS_BY_NAME["lighting"]
    if isinstance(lighting, int) and lighting in spec.codes:
        values["lighting"] = spec.codes.canonical(lighting)
    return CrashRecord(**values)


def _check_header(names: Sequence[str]) -> None:
    seen = Counter(names)
    dupes = sorted(n for n, c in seen.items() if c > 1)
    unknown = sorted(set(names) - set(FIELD_NAMES))
    missing = [n for n in FIELD_NAMES if n not in seen]
    problems = []
    if dupes:
        problems.append("duplicate column(s): " + ", ".join(dupes))
    if unknown:
        problems.append("unknown column(s): " + ", ".join(unknown))
    if missing:
        problems.append("missing column(s): " + ", ".join(missing))
    if problems:
        raise IngestError("malformed header: " + "; ".join(problems))


def _rows_csv(text: str) -> Iterable[tuple[int, dict[str, Any] | str]]:
    if not text.strip():
        return  # an empty file holds no records
    reader = csv.reader(io.StringIO(text, newline=""))
    header = next(reader)
    header = [h.strip() for h in header]
    if header and header[0].startswith("﻿"):
        header[0] = header[0][1:]
    _check_header(header)
    for row_no, row in enumerate(reader, start=1):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            yield row_no, f"expected {len(header)} cells, found {len(row)}"
            continue
        values: dict[str, Any] = {}
        problems = []
        for name, cell in zip(header, row):
            try:
                values[name] = _decode_cell(SPECS_BY_NAME[name], cell)
            except _CellError as exc:
                problems.append(f"{name}: {exc}")
        yield row_no, ("; ".join(problems) if problems else values)


def _rows_jsonl(text: str) -> Iterable[tuple[int, dict[str, Any] | str]]:
    for row_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            yield row_no, f"not valid JSON: {exc.msg}"
            continue
        if not isinstance(obj, dict):
            yield row_no, "not a JSON object"
            continue
        unknown = sorted(set(obj) - set(FIELD_NAMES))
        missing = [n for n in FIELD_NAMES if n not in obj and not SPECS_BY_NAME[n].optional
                   and n != "damage_locations"]
        if unknown or missing:
            bits = []
            if unknown:
                bits.append("unknown field(s): " + ", ".join(unknown))
            if missing:
                bits.append("missing field(s): " + ", ".join(missing))
            yield row_no, "; ".join(bits)
            continue
        values: dict[str, Any] = {}
        problems = []
        for name in FIELD_NAMES:
            try:
                values[name] = _decode_json(SPECS_BY_NAME[name], obj.get(name))
            except _CellError as exc:
                problems.append(f"{name}: {exc}")
        yield row_no, ("; ".join(problems) if problems else values)


def parse_records(file: RecordFile | str | Path) -> ParseResult:
    """Parse a record file into validated records plus per-row diagnostics.

    Rows that fail to decode or validate are reported and skipped; a repeated
    ``record_id`` is reported on the later row.  Raises :class:`IngestError`
    if the file cannot be read or (CSV) its header is malformed.
    """
    if not isinstance(file, RecordFile):
        file = RecordFile.of(file)
    try:
        text = file.path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"cannot read {file.path}: {exc}") from exc
    rows = _rows_csv(text) if file.format == "csv" else _rows_jsonl(text)

    result = ParseResult()
    seen: set[str] = set()
    source = file.path.name
    for row_no, outcome in rows:
        if isinstance(outcome, str):
            result.diagnostics.append(Diagnostic(row_no, outcome, source))
            continue
        try:
            record = _build(outcome)
        except TypeError as exc:
            result.diagnostics.append(Diagnostic(row_no, str(exc), source))
            continue
        check = validate(record)
        if not check.ok:
            cause = "; ".join(str(v) for v in check.violations)
            result.diagnostics.append(Diagnostic(row_no, cause, source))
            continue
        if record.record_id in seen:
            result.diagnostics.append(
                Diagnostic(row_no, f"duplicate record_id {record.record_id!r}", source))
            continue
        seen.add(record.record_id)
        result.records.append(record)
    return result


def parse_many(files: Sequence[RecordFile | str | Path], workers: int = 1) -> ParseResult:
    """Parse several files; output is merged in (file order, row order)."""
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(parse_records, files))
    else:
        parts = [parse_records(f) for f in files]
    merged = ParseResult()
    seen: set[str] = set()
    for part in parts:
        for record in part.records:
            if record.record_id in seen:
                merged.diagnostics.append(
                    Diagnostic(0, f"duplicate record_id {record.record_id!r} across files"))
                continue
            seen.add(record.record_id)
            merged.records.append(record)
        merged.diagnostics.extend(part.diagnostics)
    return merged


def _encode_cell(spec: FieldSpec, value: Any) -> str:
    if value is None:
        return ""
    if spec.kind == "bool":
        return "1" if value else "0"
    if spec.kind == "date":
        return value.isoformat()
    if spec.kind == "zones":
        order = list(DAMAGE_ZONES)
        return ";".join(sorted(value, key=order.index))
    return str(value)


def _encode_json(spec: FieldSpec, value: Any) -> Any:
    if value is None:
        return None
    if spec.kind == "date":
        return value.isoformat()
    if spec.kind == "zones":
        order = list(DAMAGE_ZONES)
        return sorted(value, key=order.index)
    return value


def dumps_records(records: Iterable[CrashRecord], format: str = "csv") -> str:
    if format == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(FIELD_NAMES)
        for record in records:
            writer.writerow(_encode_cell(spec, getattr(record, spec.name))
                            for spec in FIELD_SPECS)
        return buf.getvalue()
    if format == "jsonl":
        lines = []
        for record in records:
            obj = {spec.name: _encode_json(spec, getattr(record, spec.name))
                   for spec in FIELD_SPECS}
            lines.append(json.dumps(obj, ensure_ascii=False))
        return "".join(line + "\n" for line in lines)
    raise IngestError(f"unknown record format {format!r}")


def write_records(records: Iterable[CrashRecord], path: str | Path,
                  format: str | None = None) -> Path:
    target = RecordFile.of(path, format)
    target.path.write_text(dumps_records(records, target.format), encoding="utf-8")
    return target.path


# --- filtering ---------------------------------------------------------------

AUTONOMOUS_ENGAGED = 1
TWO_VEHICLES = 2


@dataclass
class FilterResult:
    retained: list[CrashRecord]
    removed: dict[str, int]

    @property
    def n_removed(self) -> int:
        return sum(self.removed.values())


def filter_for_analysis(records: Iterable[CrashRecord]) -> FilterResult:
    """Keep AV-engaged, two-party crashes.

    A removed record is counted once, under the first criterion it fails
    (driving mode is checked before vehicle count).
    """
    kept = []
    removed = {"mode": 0, "vehicle count": 0}
    for record in records:
        if record.v1_mode != AUTONOMOUS_ENGAGED:
            removed["mode"] += 1
        elif record.involved_vehicles != TWO_VEHICLES:
            removed["vehicle count"] += 1
        else:
            kept.append(record)
    return FilterResult(kept, removed)


PARTY_OF_OBJECT = {
    1: "animal",
    2: "vehicle",
    3: "non-motorized",
    4: "pedestrian",
    5: "object",
    6: "none",
}
PARTY_ORDER = ("vehicle", "non-motorized", "pedestrian", "animal", "object", "none")


def annual_party_distribution(records: Iterable[CrashRecord]) -> dict[int, dict[str, int]]:
    """Count crashes per calendar year by the type of the other party."""
    counts: dict[int, Counter] = {}
    for record in records:
        party = PARTY_OF_OBJECT[record.type_of_object_collided]
        counts.setdefault(record.report_date.year, Counter())[party] += 1
    return {
        year: {p: counts[year][p] for p in PARTY_ORDER if counts[year][p]}
        for year in sorted(counts)
    }


def party_shares(distribution: dict[int, dict[str, int]], parties: Sequence[str],
                 ) -> dict[int, float]:
    """Fraction of each year's crashes whose other party is in ``parties``."""
    out = {}
    for year, row in distribution.items():
        total = sum(row.values())
        out[year] = sum(row.get(p, 0) for p in parties) / total if total else 0.0
    return out
