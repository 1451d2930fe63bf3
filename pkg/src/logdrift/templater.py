"""Log preprocessing, template mining, matching, and windowed counting.

The miner is a transparent two-level grouping: lines are partitioned by
token count, then clustered by token-wise agreement against the cluster's
current pattern; disagreeing positions become the ``<*>`` wildcard. It is
deliberately simple, since downstream drift math only needs a total,
stable line-to-slot assignment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from .core import DEFAULT_ERROR_KEYWORDS, CountVector, Template, TemplateSet
from .errors import EmptyCorpus, UnsortedInput

WILDCARD = "<*>"
TS_TOKEN = "<TS>"

# ISO-8601 datetimes, bare clock times, and 10/13-digit epoch integers.
DEFAULT_TIMESTAMP_PATTERNS = (
    r"\d{4}-\d{2}-\d{2}[T ]\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:?\d{2})?",
    r"\b\d{2}:\d{2}:\d{2}(?:\.\d+)?\b",
    r"\b\d{13}\b",
    r"\b\d{10}\b",
)


@dataclass(frozen=True)
class LogRecord:
    """One raw or preprocessed log line with its epoch timestamp."""

    timestamp_ms: int
    message: str

    def __post_init__(self):
        if self.timestamp_ms < 0:
            raise ValueError("timestamp must be nonnegative epoch milliseconds")


@dataclass(frozen=True)
class WindowSpec:
    """Fixed-width tumbling window definition."""

    width_seconds: float = 10.0

    def __post_init__(self):
        if self.width_seconds <= 0:
            raise ValueError("window width must be positive")


def preprocess(
    raw: str,
    *,
    prefix_patterns: Sequence[str] = (),
    timestamp_patterns: Sequence[str] = DEFAULT_TIMESTAMP_PATTERNS,
) -> str | None:
    """Clean one message; returns None when the record should be dropped.

    Timestamp-like substrings are masked to ``<TS>``, then any configured
    prefix patterns are stripped from the start of the message.
    """
    text = raw.strip()
    if not text:
        return None
    for pat in timestamp_patterns:
        text = re.sub(pat, TS_TOKEN, text)
    for pat in prefix_patterns:
        text = re.sub(pat, "", text, count=1)
    text = text.strip()
    return text or None


class _Cluster:
    __slots__ = ("tokens", "count")

    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.count = 1


def mine_templates(
    lines: Iterable[str],
    similarity_threshold: float = 0.5,
    *,
    error_keywords: Sequence[str] = DEFAULT_ERROR_KEYWORDS,
) -> TemplateSet:
    """Mine wildcard templates from preprocessed training lines.

    Lines with equal token counts whose agreement ratio against a cluster's
    pattern reaches ``similarity_threshold`` join that cluster; positions
    that disagree are replaced by ``<*>``. Every training line matches at
    least one returned template. Wildcard positions never revert, so
    membership is stable as clusters evolve.
    """
    if not 0 < similarity_threshold <= 1:
        raise ValueError("similarity_threshold must be in (0, 1]")
    clusters: list[_Cluster] = []
    by_length: dict[int, list[_Cluster]] = {}
    seen_any = False
    for line in lines:
        tokens = line.split()
        if not tokens:
            continue
        seen_any = True
        candidates = by_length.setdefault(len(tokens), [])
        for cluster in candidates:
            agree = sum(a == b for a, b in zip(cluster.tokens, tokens))
            if agree / len(tokens) >= similarity_threshold:
                cluster.tokens = [
                    a if a == b else WILDCARD for a, b in zip(cluster.tokens, tokens)
                ]
                cluster.count += 1
                break
        else:
            cluster = _Cluster(list(tokens))
            clusters.append(cluster)
            candidates.append(cluster)
    if not seen_any:
        raise EmptyCorpus("template mining requires a non-empty training corpus")
    templates = tuple(
        Template(i + 1, " ".join(c.tokens)) for i, c in enumerate(clusters)
    )
    return TemplateSet(templates, tuple(error_keywords))


def match_template(line: str, ts: TemplateSet) -> int:
    """Assign a preprocessed line to a slot index in 1..K+2.

    The lowest-id template whose pattern matches the full line wins, where
    ``<*>`` matches any single token. Unmatched lines go to K+1 when any
    error keyword occurs case-insensitively as a substring, else K+2.
    """
    tokens = line.split()
    n = len(tokens)
    for template, pattern_tokens in zip(ts.templates, ts._token_lists):
        if len(pattern_tokens) != n:
            continue
        if all(p == WILDCARD or p == t for p, t in zip(pattern_tokens, tokens)):
            return template.id
    lowered = line.lower()
    if any(keyword in lowered for keyword in ts.error_keywords):
        return ts.size + 1
    return ts.size + 2


def window_counts(
    records: Iterable[LogRecord],
    ts: TemplateSet,
    spec: WindowSpec | None = None,
) -> Iterator[CountVector]:
    """Aggregate time-ordered records into per-window count vectors.

    Windows are consecutive half-open intervals of the configured width,
    anchored at the first record's timestamp. Empty interior windows are
    skipped (no vector is emitted); emitted vectors carry the 0-based
    interval index so wall-clock alignment is preserved.
    """
    spec = spec or WindowSpec()
    width_ms = spec.width_seconds * 1000.0
    dim = ts.vector_length
    anchor: int | None = None
    previous: int | None = None
    window_index: int | None = None
    counts: np.ndarray | None = None
    for record in records:
        if previous is not None and record.timestamp_ms < previous:
            raise UnsortedInput(
                f"timestamp regressed from {previous} to {record.timestamp_ms}"
            )
        previous = record.timestamp_ms
        if anchor is None:
            anchor = record.timestamp_ms
        k = int((record.timestamp_ms - anchor) // width_ms)
        if window_index is None:
            window_index, counts = k, np.zeros(dim)
        elif k != window_index:
            yield CountVector(counts, t=window_index)
            window_index, counts = k, np.zeros(dim)
        counts[match_template(record.message, ts) - 1] += 1.0
    if counts is not None:
        yield CountVector(counts, t=window_index)
