"""Append-only event log: the single durable record of a deployment.

One JSON object per line, gapless 1-based sequence numbers, a single
writer serialized by a lock. Appends are flushed line-at-a-time, so a
crash can lose at most the event being written; a torn trailing line is
dropped with a warning on load, while corruption anywhere else is fatal.
"""
from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterator, Mapping

logger = logging.getLogger(__name__)


class EventKind(str, Enum):
    POST_INGESTED = "POST_INGESTED"
    MENTION_ADDED = "MENTION_ADDED"
    ROLLUP_DONE = "ROLLUP_DONE"
    FLAGGED = "FLAGGED"
    CLAIM_DECIDED = "CLAIM_DECIDED"
    TWEET_REVIEWED = "TWEET_REVIEWED"
    CONFIG_CHANGED = "CONFIG_CHANGED"


class CorruptLogError(RuntimeError):
    pass


@dataclass(frozen=True)
class EventRecord:
    seq: int
    at: datetime
    kind: EventKind
    payload: dict

    def to_dict(self) -> dict:
        return {
            "seq": self.seq,
            "at": self.at.isoformat().replace("+00:00", "Z"),
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "EventRecord":
        at = raw["at"]
        if at.endswith("Z"):
            at = at[:-1] + "+00:00"
        return cls(
            seq=int(raw["seq"]),
            at=datetime.fromisoformat(at),
            kind=EventKind(raw["kind"]),
            payload=raw["payload"],
        )


class EventLog:
    """Single-file JSONL event log with a gapless sequence."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._next_seq = 1
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = None
        last = None
        if self.path.exists():
            for record in self.replay():
                last = record
        self._next_seq = (last.seq + 1) if last else 1

    def append(self, kind: EventKind, payload: dict, at: datetime | None = None) -> EventRecord:
        with self._lock:
            record = EventRecord(
                seq=self._next_seq,
                at=(at or datetime.now(timezone.utc)),
                kind=kind,
                payload=payload,
            )
            if self._handle is None:
                self._handle = open(self.path, "a", encoding="utf-8")
            self._handle.write(json.dumps(record.to_dict(), separators=(",", ":")) + "\n")
            self._handle.flush()
            self._next_seq += 1
            return record

    def replay(self, after_seq: int = 0) -> Iterator[EventRecord]:
        """Yield events with seq > after_seq, verifying the sequence."""
        if not self.path.exists():
            return
        with open(self.path, "r", encoding="utf-8") as handle:
            lines = handle.readlines()
        expected = 1
        for i, line in enumerate(lines):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                raw = json.loads(stripped)
                record = EventRecord.from_dict(raw)
            except (ValueError, KeyError) as exc:
                if i == len(lines) - 1:
                    logger.warning("dropping torn trailing event line: %s", exc)
                    return
                raise CorruptLogError(f"corrupt event at line {i + 1}: {exc}") from exc
            if record.seq != expected:
                raise CorruptLogError(
                    f"sequence gap at line {i + 1}: expected {expected}, got {record.seq}"
                )
            expected += 1
            if record.seq > after_seq:
                yield record

    @property
    def next_seq(self) -> int:
        return self._next_seq

    def close(self) -> None:
        with self._lock:
            if self._handle is not None:
                self._handle.close()
                self._handle = None
