"""File interchange: count vectors (CSV/JSONL), template sets, raw logs.

All writers go through an atomic temp-file rename so no output file is
ever left partially written.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import DEFAULT_ERROR_KEYWORDS, CountVector, Template, TemplateSet
from .errors import FormatError, LengthMismatch
from .templater import LogRecord

_TEXT_LOG_RE = re.compile(r"^(?P<ts>\S+)\s+(?P<msg>.*)$")


def atomic_write_text(path: str | Path, text: str) -> None:
    """Write a file via temp-file rename in the destination directory."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or Path("."), prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def count_vectors_to_csv(vectors: Iterable[CountVector]) -> str:
    rows = list(vectors)
    if not rows:
        raise FormatError("no count vectors to write")
    dim = len(rows[0])
    header = "t," + ",".join(f"c{i}" for i in range(1, dim + 1))
    lines = [header]
    for v in rows:
        if len(v) != dim:
            raise LengthMismatch("mixed vector lengths in CSV output")
        lines.append(f"{v.t}," + ",".join(repr(x) for x in v.values.tolist()))
    return "\n".join(lines) + "\n"


def count_vectors_to_jsonl(vectors: Iterable[CountVector]) -> str:
    lines = [
        json.dumps({"t": v.t, "counts": v.values.tolist()}) for v in vectors
    ]
    if not lines:
        raise FormatError("no count vectors to write")
    return "\n".join(lines) + "\n"


def write_count_vectors(
    vectors: Iterable[CountVector], path: str | Path, fmt: str = "jsonl"
) -> None:
    if fmt == "csv":
        atomic_write_text(path, count_vectors_to_csv(vectors))
    elif fmt == "jsonl":
        atomic_write_text(path, count_vectors_to_jsonl(vectors))
    else:
        raise FormatError(f"unknown count vector format {fmt!r}")


def _vector_from_counts(
    t: int, counts: list[float], template_set: TemplateSet | None, integer: bool
) -> CountVector:
    if template_set is not None and len(counts) != template_set.vector_length:
        raise LengthMismatch(
            f"vector length {len(counts)} != template set length "
            f"{template_set.vector_length}"
        )
    arr = np.asarray(counts, dtype=np.float64)
    if integer and not np.all(arr == np.round(arr)):
        raise FormatError(
            "raw integer counts required, found fractional values "
            "(normalized vectors are not valid here)"
        )
    return CountVector(arr, t=t)


def parse_count_vectors(
    text: str,
    fmt: str | None = None,
    template_set: TemplateSet | None = None,
    integer: bool = False,
) -> list[CountVector]:
    """Parse CSV (header ``t,c1,...``) or JSONL ``{"t":..,"counts":[..]}``.

    The format is sniffed from the first non-blank character when not
    given. ``integer=True`` rejects fractional values, guarding operations
    that are only meaningful on raw counts.
    """
    stripped = text.lstrip()
    if not stripped:
        raise FormatError("empty count vector input")
    if fmt is None:
        fmt = "jsonl" if stripped[0] == "{" else "csv"
    vectors: list[CountVector] = []
    try:
        if fmt == "csv":
            lines = [ln for ln in text.splitlines() if ln.strip()]
            header = [h.strip() for h in lines[0].split(",")]
            if header[0] != "t" or len(header) < 2:
                raise FormatError(f"bad CSV header {lines[0]!r}")
            for ln in lines[1:]:
                cells = ln.split(",")
                if len(cells) != len(header):
                    raise FormatError(f"row width {len(cells)} != header width")
                vectors.append(
                    _vector_from_counts(
                        int(cells[0]), [float(c) for c in cells[1:]],
                        template_set, integer,
                    )
                )
        elif fmt == "jsonl":
            for ln in text.splitlines():
                if not ln.strip():
                    continue
                record = json.loads(ln)
                vectors.append(
                    _vector_from_counts(
                        int(record.get("t", 0)), record["counts"],
                        template_set, integer,
                    )
                )
        else:
            raise FormatError(f"unknown count vector format {fmt!r}")
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise FormatError(f"malformed count vector input: {exc}") from exc
    if not vectors:
        raise FormatError("count vector input contains no records")
    return vectors


def read_count_vectors(
    path: str | Path,
    fmt: str | None = None,
    template_set: TemplateSet | None = None,
    integer: bool = False,
) -> list[CountVector]:
    path = Path(path)
    if fmt is None and path.suffix.lower() == ".csv":
        fmt = "csv"
    return parse_count_vectors(path.read_text(), fmt, template_set, integer)


def template_set_to_json(ts: TemplateSet) -> str:
    payload = {
        "templates": [{"id": t.id, "pattern": t.pattern} for t in ts.templates],
        "error_keywords": list(ts.error_keywords),
    }
    return json.dumps(payload, indent=2) + "\n"


def template_set_from_json(text: str) -> TemplateSet:
    try:
        payload = json.loads(text)
        templates = tuple(
            Template(int(t["id"]), str(t["pattern"])) for t in payload["templates"]
        )
        keywords = tuple(payload.get("error_keywords", []))
    except (ValueError, KeyError, TypeError) as exc:
        raise FormatError(f"malformed template set JSON: {exc}") from exc
    return TemplateSet(templates, keywords or DEFAULT_ERROR_KEYWORDS)


def write_template_set(ts: TemplateSet, path: str | Path) -> None:
    atomic_write_text(path, template_set_to_json(ts))


def read_template_set(path: str | Path) -> TemplateSet:
    return template_set_from_json(Path(path).read_text())


def parse_timestamp(value) -> int:
    """Normalize a timestamp to epoch milliseconds.

    Numeric values are taken as epoch milliseconds directly (the JSONL
    contract). String tokens from text logs use a digit heuristic: ten
    digits are epoch seconds, thirteen are milliseconds; anything else must
    parse as RFC3339.
    """
    if isinstance(value, bool):
        raise FormatError(f"bad timestamp {value!r}")
    if isinstance(value, (int, float)):
        return int(value)
    if isinstance(value, str):
        text = value.strip()
        if re.fullmatch(r"\d{13}", text):
            return int(text)
        if re.fullmatch(r"\d{10}", text):
            return int(text) * 1000
        try:
            stamp = datetime.fromisoformat(text.replace("Z", "+00:00"))
        except ValueError as exc:
            raise FormatError(f"unparseable timestamp {value!r}") from exc
        if stamp.tzinfo is None:
            stamp = stamp.replace(tzinfo=timezone.utc)
        return int(stamp.timestamp() * 1000)
    raise FormatError(f"bad timestamp {value!r}")


def parse_log_records(text: str, fmt: str | None = None, ts_pattern: str | None = None) -> list[LogRecord]:
    """Parse raw logs: JSONL ``{"ts":.., "msg":..}`` or plain text lines.

    Plain text lines are split by ``ts_pattern`` (default: leading
    whitespace-delimited token is the timestamp, the rest the message).
    """
    stripped = text.lstrip()
    if not stripped:
        return []
    if fmt is None:
        fmt = "jsonl" if stripped[0] == "{" else "text"
    records: list[LogRecord] = []
    if fmt == "jsonl":
        for ln in text.splitlines():
            if not ln.strip():
                continue
            try:
                payload = json.loads(ln)
                records.append(LogRecord(parse_timestamp(payload["ts"]), str(payload["msg"])))
            except (ValueError, KeyError, TypeError) as exc:
                raise FormatError(f"malformed log JSONL: {exc}") from exc
    elif fmt == "text":
        pattern = re.compile(ts_pattern) if ts_pattern else _TEXT_LOG_RE
        for ln in text.splitlines():
            if not ln.strip():
                continue
            match = pattern.match(ln)
            if not match:
                raise FormatError(f"log line does not match timestamp pattern: {ln!r}")
            records.append(
                LogRecord(parse_timestamp(match.group("ts")), match.group("msg"))
            )
    else:
        raise FormatError(f"unknown log format {fmt!r}")
    return records


def read_log_records(
    path: str | Path, fmt: str | None = None, ts_pattern: str | None = None
) -> list[LogRecord]:
    path = Path(path)
    if fmt is None and path.suffix.lower() in (".jsonl", ".ndjson"):
        fmt = "jsonl"
    return parse_log_records(path.read_text(), fmt, ts_pattern)
