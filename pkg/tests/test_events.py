"""Event log: gapless sequence, durability, torn-line tolerance."""
from __future__ import annotations

import json
import threading
from datetime import datetime, timezone

import pytest

from trendwatch.events import CorruptLogError, EventKind, EventLog, EventRecord


def test_append_assigns_gapless_sequence(tmp_path):
    log = EventLog(tmp_path / "log.jsonl")
    records = [log.append(EventKind.POST_INGESTED, {"i": i}) for i in range(5)]
    assert [r.seq for r in records] == [1, 2, 3, 4, 5]


def test_record_roundtrip_keeps_utc_timestamp():
    at = datetime(2020, 4, 5, 6, 7, 8, tzinfo=timezone.utc)
    record = EventRecord(seq=3, at=at, kind=EventKind.FLAGGED, payload={"x": 1})
    raw = record.to_dict()
    assert raw["at"].endswith("Z")
    assert EventRecord.from_dict(raw) == record


def test_replay_returns_everything_in_order(tmp_path):
    path = tmp_path / "log.jsonl"
    log = EventLog(path)
    for i in range(4):
        log.append(EventKind.MENTION_ADDED, {"i": i})
    log.close()
    replayed = list(EventLog(path).replay())
    assert [r.payload["i"] for r in replayed] == [0, 1, 2, 3]
    assert [r.seq for r in replayed] == [1, 2, 3, 4]


def test_replay_after_seq_filters(tmp_path):
    log = EventLog(tmp_path / "log.jsonl")
    for i in range(6):
        log.append(EventKind.POST_INGESTED, {"i": i})
    assert [r.seq for r in log.replay(after_seq=4)] == [5, 6]


def test_reopen_continues_the_sequence(tmp_path):
    path = tmp_path / "log.jsonl"
    log = EventLog(path)
    log.append(EventKind.CONFIG_CHANGED, {})
    log.append(EventKind.POST_INGESTED, {})
    log.close()
    log2 = EventLog(path)
    record = log2.append(EventKind.POST_INGESTED, {})
    assert record.seq == 3


def test_torn_trailing_line_is_dropped(tmp_path):
    path = tmp_path / "log.jsonl"
    log = EventLog(path)
    log.append(EventKind.CONFIG_CHANGED, {"a": 1})
    log.append(EventKind.POST_INGESTED, {"b": 2})
    log.close()
    with open(path, "a", encoding="utf-8") as handle:
        handle.write('{"seq": 3, "at": "2020-04-01T00:00:00Z", "kind": "FLAGG')
    reopened = EventLog(path)
    assert [r.seq for r in reopened.replay()] == [1, 2]
    assert reopened.append(EventKind.FLAGGED, {}).seq == 3


def test_mid_file_corruption_is_fatal(tmp_path):
    path = tmp_path / "log.jsonl"
    log = EventLog(path)
    log.append(EventKind.CONFIG_CHANGED, {})
    log.append(EventKind.POST_INGESTED, {})
    log.close()
    lines = path.read_text().splitlines()
    lines[0] = lines[0][:20]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(CorruptLogError):
        list(EventLog(path).replay())


def test_sequence_gap_is_fatal(tmp_path):
    path = tmp_path / "log.jsonl"
    log = EventLog(path)
    log.append(EventKind.CONFIG_CHANGED, {})
    log.close()
    record = EventRecord(
        seq=5, at=datetime.now(timezone.utc), kind=EventKind.FLAGGED, payload={}
    )
    with open(path, "a", encoding="utf-8") as handle:
        handle.write(json.dumps(record.to_dict()) + "\n")
    with pytest.raises(CorruptLogError):
        list(EventLog(path).replay())


def test_concurrent_appends_stay_gapless(tmp_path):
    path = tmp_path / "log.jsonl"
    log = EventLog(path)

    def writer(tag: int) -> None:
        for i in range(50):
            log.append(EventKind.POST_INGESTED, {"tag": tag, "i": i})

    threads = [threading.Thread(target=writer, args=(t,)) for t in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    log.close()
    replayed = list(EventLog(path).replay())
    assert len(replayed) == 200
    assert [r.seq for r in replayed] == list(range(1, 201))
