"""Event data model, log parsing, serialization, and time windowing.

An event log is a time-sorted sequence of two kinds of events on a shared
node registry:

* ``TWEET``: a node posts a message carrying one of four sentiment labels.
* ``FOLLOW``: a node starts following another node (the follower will
  receive the followee's messages from that time on).

The on-disk format is line oriented UTF-8 text::

    <time> TWEET <node> <POS|NEG|NEU|UNR>
    <time> FOLLOW <follower-node> <followee-node>

Fields are whitespace separated, times are decimal seconds since an
arbitrary epoch, and ``#``-prefixed lines are comments.  Lines may arrive
in any time order; parsing sorts them stably by (time, line number).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

__all__ = [
    "SentimentLabel",
    "EventKind",
    "Event",
    "NodeRegistry",
    "EventLog",
    "LogParseError",
    "parse_log",
    "serialize_log",
    "window",
]


class SentimentLabel(IntEnum):
    POSITIVE = 0
    NEGATIVE = 1
    NEUTRAL = 2
    UNRELATED = 3


class EventKind(IntEnum):
    TWEET = 0
    FOLLOW = 1


LABEL_TOKENS = {
    "POS": SentimentLabel.POSITIVE,
    "NEG": SentimentLabel.NEGATIVE,
    "NEU": SentimentLabel.NEUTRAL,
    "UNR": SentimentLabel.UNRELATED,
}
TOKEN_OF_LABEL = {v: k for k, v in LABEL_TOKENS.items()}

# Sentinel for "no label" / "no target" in the column arrays.
NO_FIELD = -1


class LogParseError(ValueError):
    """Raised when an event-log line cannot be parsed or validated."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Event:
    """One event, with the actor (and target) as dense node indices."""

    time: float
    kind: EventKind
    actor: int
    label: SentimentLabel | None = None
    target: int | None = None

    def is_tweet(self) -> bool:
        return self.kind == EventKind.TWEET

    def is_follow(self) -> bool:
        return self.kind == EventKind.FOLLOW


class NodeRegistry:
    """Interns opaque node tokens to dense indices in [0, n)."""

    def __init__(self) -> None:
        self.ids: list[str] = []
        self._index: dict[str, int] = {}

    def intern(self, token: str) -> int:
        idx = self._index.get(token)
        if idx is None:
            idx = len(self.ids)
            self._index[token] = idx
            self.ids.append(token)
        return idx

    def index_of(self, token: str) -> int:
        return self._index[token]

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class EventLog:
    """Validated, time-sorted event sequence over a shared node registry.

    Events are stored column-wise for fast windowing and replay; iteration
    yields :class:`Event` objects.  ``labels`` is ``NO_FIELD`` for FOLLOW
    rows and ``targets`` is ``NO_FIELD`` for TWEET rows.
    """

    times: np.ndarray
    kinds: np.ndarray
    actors: np.ndarray
    labels: np.ndarray
    targets: np.ndarray
    registry: NodeRegistry
    duplicate_follows: int = 0

    @classmethod
    def empty(cls, registry: NodeRegistry | None = None) -> "EventLog":
        return cls(
            times=np.empty(0, dtype=np.float64),
            kinds=np.empty(0, dtype=np.uint8),
            actors=np.empty(0, dtype=np.int64),
            labels=np.full(0, NO_FIELD, dtype=np.int64),
            targets=np.full(0, NO_FIELD, dtype=np.int64),
            registry=registry if registry is not None else NodeRegistry(),
        )

    @property
    def n_events(self) -> int:
        return len(self.times)

    @property
    def n_nodes(self) -> int:
        return len(self.registry)

    def __len__(self) -> int:
        return self.n_events

    def __iter__(self) -> Iterator[Event]:
        for i in range(self.n_events):
            yield self.event(i)

    def event(self, i: int) -> Event:
        if self.kinds[i] == EventKind.TWEET:
            return Event(
                time=float(self.times[i]),
                kind=EventKind.TWEET,
                actor=int(self.actors[i]),
                label=SentimentLabel(int(self.labels[i])),
            )
        return Event(
            time=float(self.times[i]),
            kind=EventKind.FOLLOW,
            actor=int(self.actors[i]),
            target=int(self.targets[i]),
        )

    def label_counts(self) -> dict[str, int]:
        out = {}
        for lab in SentimentLabel:
            out[TOKEN_OF_LABEL[lab]] = int(np.sum(self.labels == int(lab)))
        return out

    def kind_counts(self) -> dict[str, int]:
        return {
            "TWEET": int(np.sum(self.kinds == int(EventKind.TWEET))),
            "FOLLOW": int(np.sum(self.kinds == int(EventKind.FOLLOW))),
        }

    def _slice(self, lo: int, hi: int) -> "EventLog":
        return EventLog(
            times=self.times[lo:hi],
            kinds=self.kinds[lo:hi],
            actors=self.actors[lo:hi],
            labels=self.labels[lo:hi],
            targets=self.targets[lo:hi],
            registry=self.registry,
            duplicate_follows=self.duplicate_follows,
        )

    def replace_labels(self, labels: np.ndarray) -> "EventLog":
        """Copy of the log with TWEET labels replaced (FOLLOW rows untouched)."""
        labels = np.asarray(labels, dtype=np.int64)
        if labels.shape != self.labels.shape:
            raise ValueError("label array shape mismatch")
        out = np.where(self.kinds == int(EventKind.TWEET), labels, NO_FIELD)
        return EventLog(
            times=self.times,
            kinds=self.kinds,
            actors=self.actors,
            labels=out,
            targets=self.targets,
            registry=self.registry,
            duplicate_follows=self.duplicate_follows,
        )


def _coerce_lines(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            yield from io.TextIOWrapper(fh, encoding="utf-8")
        return
    if isinstance(source, bytes):
        yield from source.decode("utf-8").splitlines()
        return
    if hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        yield from data.splitlines()
        return
    yield from source


def parse_log(source: Union[str, Path, bytes, io.IOBase, Iterable[str]]) -> EventLog:
    """Parse and validate an event log from a file path, stream, or lines.

    Lines are accepted in arbitrary time order and stably sorted by
    (time, line number).  FOLLOW lines that duplicate an already-present
    edge are dropped and counted in ``EventLog.duplicate_follows``.

    Raises :class:`LogParseError` on a malformed line, an unknown label
    token, a non-finite time, or a FOLLOW self-loop.
    """
    registry = NodeRegistry()
    records = []  # (time, line_no, kind, actor, label_or_target)
    for line_no, raw in enumerate(_coerce_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise LogParseError(
                f"expected 4 fields, got {len(parts)}: {line!r}", line_no
            )
        time_tok, kind_tok, a_tok, b_tok = parts
        try:
            t = float(time_tok)
        except ValueError:
            raise LogParseError(f"bad time {time_tok!r}", line_no) from None
        if not math.isfinite(t):
            raise LogParseError(f"non-finite time {time_tok!r}", line_no)
        if kind_tok == "TWEET":
            label = LABEL_TOKENS.get(b_tok)
            if label is None:
                raise LogParseError(f"unknown label token {b_tok!r}", line_no)
            actor = registry.intern(a_tok)
            records.append((t, line_no, int(EventKind.TWEET), actor, int(label)))
        elif kind_tok == "FOLLOW":
            if a_tok == b_tok:
                raise LogParseError(f"FOLLOW self-loop on {a_tok!r}", line_no)
            actor = registry.intern(a_tok)
            target = registry.intern(b_tok)
            records.append((t, line_no, int(EventKind.FOLLOW), actor, target))
        else:
            raise LogParseError(f"unknown event kind {kind_tok!r}", line_no)

    records.sort(key=lambda r: r[0])  # stable: ties keep line order

    n = len(records)
    times = np.empty(n, dtype=np.float64)
    kinds = np.empty(n, dtype=np.uint8)
    actors = np.empty(n, dtype=np.int64)
    labels = np.full(n, NO_FIELD, dtype=np.int64)
    targets = np.full(n, NO_FIELD, dtype=np.int64)

    seen_edges: set[tuple[int, int]] = set()
    duplicates = 0
    k = 0
    for t, _line_no, kind, actor, aux in records:
        if kind == int(EventKind.FOLLOW):
            edge = (actor, aux)
            if edge in seen_edges:
                duplicates += 1
                continue
            seen_edges.add(edge)
            targets[k] = aux
        else:
            labels[k] = aux
        times[k] = t
        kinds[k] = kind
        actors[k] = actor
        k += 1

    return EventLog(
        times=times[:k],
        kinds=kinds[:k],
        actors=actors[:k],
        labels=labels[:k],
        targets=targets[:k],
        registry=registry,
        duplicate_follows=duplicates,
    )


def serialize_log(log: EventLog) -> str:
    """Render a log back to its external text format (round-trip safe)."""
    ids = log.registry.ids
    lines = []
    for i in range(log.n_events):
        t = repr(float(log.times[i]))
        if log.kinds[i] == int(EventKind.TWEET):
            tok = TOKEN_OF_LABEL[SentimentLabel(int(log.labels[i]))]
            lines.append(f"{t} TWEET {ids[log.actors[i]]} {tok}")
        else:
            lines.append(f"{t} FOLLOW {ids[log.actors[i]]} {ids[log.targets[i]]}")
    return "\n".join(lines) + ("\n" if lines else "")


def write_log(log: EventLog, path: Union[str, Path], header: str = "") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        fh.write(serialize_log(log))


def window(log: EventLog, t_start: float, t_end: float) -> tuple[EventLog, EventLog]:
    """Split a log into (history, analysis) around an analysis window.

    ``history`` holds events with time < t_start, ``analysis`` those with
    t_start <= time <= t_end.  Both share the input's node registry.
    """
    if t_start > t_end:
        raise ValueError(f"t_start {t_start} exceeds t_end {t_end}")
    lo = int(np.searchsorted(log.times, t_start, side="left"))
    hi = int(np.searchsorted(log.times, t_end, side="right"))
    return log._slice(0, lo), log._slice(lo, hi)
