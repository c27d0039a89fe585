"""Corpus ingest: JSON Lines posts -> keyword-matched Post stream.

Malformed lines are skipped (counted, logged), an unreadable source is
fatal. Duplicate post ids keep the first occurrence. Output order is a
subsequence of input order even when parsing runs on worker threads.
"""
from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .text import token_texts

logger = logging.getLogger(__name__)

# Track keywords the corpus was collected with; whole-token matches only.
DEFAULT_KEYWORDS = frozenset({"cure", "prevention", "virus", "covid-19"})


class MalformedPostError(ValueError):
    """Raised when a corpus line cannot be parsed into a Post."""


@dataclass(frozen=True)
class Post:
    post_id: str
    text: str
    created_at: datetime
    author_id: str = ""

    @property
    def day(self) -> "datetime.date":
        return self.created_at.astimezone(timezone.utc).date()


def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC 3339 timestamp; naive values are taken as UTC."""
    if not isinstance(value, str) or not value:
        raise MalformedPostError(f"bad timestamp: {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        parsed = datetime.fromisoformat(text)
    except ValueError as exc:
        raise MalformedPostError(f"bad timestamp: {value!r}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed


def parse_post(line: str) -> Post:
    try:
        raw = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedPostError(f"not JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedPostError("post line is not an object")
    post_id = raw.get("post_id", raw.get("id"))
    text = raw.get("text")
    if not post_id or not isinstance(post_id, str):
        raise MalformedPostError("missing post id")
    if not text or not isinstance(text, str):
        raise MalformedPostError("missing or empty text")
    created = parse_rfc3339(raw.get("created_at", ""))
    author = raw.get("author_id") or ""
    return Post(post_id=post_id, text=text, created_at=created, author_id=str(author))


class KeywordFilter:
    """Whole-token, case-insensitive keyword match ("cure" never matches
    inside "curecumin")."""

    def __init__(self, keywords: Iterable[str] = DEFAULT_KEYWORDS):
        self.keywords = frozenset(k.casefold() for k in keywords)
        if not self.keywords:
            raise ValueError("keyword set must not be empty")

    def matches(self, text: str) -> bool:
        return any(tok in self.keywords for tok in token_texts(text))


@dataclass
class IngestResult:
    posts: list[Post]
    report: dict[str, int] = field(default_factory=dict)


def _parse_batch(batch: list[str], kw: KeywordFilter) -> list[tuple[str, object]]:
    out: list[tuple[str, object]] = []
    for line in batch:
        if not line.strip():
            out.append(("blank", None))
            continue
        try:
            post = parse_post(line)
        except MalformedPostError as exc:
            out.append(("malformed", str(exc)))
            continue
        out.append(("post", post) if kw.matches(post.text) else ("unmatched", None))
    return out


def ingest_lines(
    lines: Iterable[str],
    keyword_filter: KeywordFilter | None = None,
    *,
    workers: int = 1,
    batch_size: int = 2000,
) -> IngestResult:
    """Parse and filter a JSONL stream.

    With workers > 1 the stream is parsed in fixed-size batches on a
    thread pool; batch outputs are merged back in input order so the
    result is identical to a sequential run.
    """
    kw = keyword_filter or KeywordFilter()
    counts = {"read": 0, "emitted": 0, "skipped": 0, "duplicate": 0, "unmatched": 0}
    seen: set[str] = set()
    posts: list[Post] = []

    def consume(tagged: list[tuple[str, object]], base_line: int) -> None:
        for offset, (tag, payload) in enumerate(tagged):
            if tag == "blank":
                continue
            counts["read"] += 1
            if tag == "malformed":
                counts["skipped"] += 1
                logger.warning("skipping line %d: %s", base_line + offset + 1, payload)
            elif tag == "unmatched":
                counts["unmatched"] += 1
            else:
                post = payload  # type: Post
                if post.post_id in seen:
                    counts["duplicate"] += 1
                    continue
                seen.add(post.post_id)
                posts.append(post)
                counts["emitted"] += 1

    if workers <= 1:
        line_no = 0
        for line in lines:
            consume(_parse_batch([line], kw), line_no)
            line_no += 1
    else:
        batches: list[list[str]] = []
        buf: list[str] = []
        for line in lines:
            buf.append(line)
            if len(buf) >= batch_size:
                batches.append(buf)
                buf = []
        if buf:
            batches.append(buf)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            base = 0
            for batch, tagged in zip(batches, pool.map(lambda b: _parse_batch(b, kw), batches)):
                consume(tagged, base)
                base += len(batch)
    return IngestResult(posts=posts, report=counts)


def ingest_file(
    path: str | Path,
    keyword_filter: KeywordFilter | None = None,
    *,
    workers: int = 1,
) -> IngestResult:
    with open(path, "r", encoding="utf-8") as handle:
        return ingest_lines(handle, keyword_filter, workers=workers)


def iter_jsonl(path: str | Path) -> Iterator[dict]:
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                yield json.loads(line)
