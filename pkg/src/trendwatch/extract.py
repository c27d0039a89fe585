"""Claim extraction: find claimed-treatment spans in post text.

Two extractors share one interface: a deterministic cue-pattern baseline
(versioned plain-text pattern file) and an HTTP client for an external
extractor service. Spans always slice the original text exactly.
"""
from __future__ import annotations

import logging
import re
import string
import threading
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Protocol

import requests

from .ingest import Post
from .text import Sentence, Token, sentences, tokenize

logger = logging.getLogger(__name__)

MAX_CLAIM_TOKENS = 5

# Trimmed from noun-phrase edges; never allowed to carry a claim alone.
STOPWORDS = frozenset(
    """a an the this that these those it its his her their my your our some any
    is are was were be been being am do does did done have has had
    can could may might must shall should will would won't wont
    don't dont doesn't doesnt didn't didnt can't cant cannot not no
    and or but if then than so very really just also still only even
    of for to in on at by with from as about into over after before
    i you he she we they them us said says say
    """.split()
)

_EDGE_PUNCT = string.punctuation + "‘’“”–—…"


def normalize_claim_key(surface: str) -> str:
    """Canonical claim key: casefold, collapse whitespace, strip edge
    punctuation (including a leading '#'). Idempotent."""
    key = surface.casefold()
    key = re.sub(r"\s+", " ", key)
    return key.strip(" " + _EDGE_PUNCT)


@dataclass(frozen=True)
class ClaimSpan:
    post_id: str
    surface: str
    start: int
    end: int
    normalized: str

    def __post_init__(self) -> None:
        if self.start < 0 or self.end <= self.start:
            raise ValueError(f"bad span offsets [{self.start}, {self.end})")


class Extractor(Protocol):
    name: str

    def find_spans(self, text: str) -> list[tuple[int, int]]:
        """Character [start, end) ranges of claimed treatments in text."""


# --- pattern baseline ----------------------------------------------------

@dataclass(frozen=True)
class _Pattern:
    elements: tuple[str, ...]  # literal tokens, "covid*" globs, "*" wildcards
    np_first: bool  # {np} before the cue or after it

    @property
    def cue(self) -> tuple[str, ...]:
        return self.elements


def _parse_pattern(line: str) -> _Pattern:
    parts = line.split()
    if len(parts) < 2 or parts.count("{np}") != 1 or parts[0] != "{np}" and parts[-1] != "{np}":
        raise ValueError(f"pattern needs one {{np}} at either end plus a cue: {line!r}")
    if parts[0] == "{np}":
        return _Pattern(tuple(parts[1:]), np_first=True)
    return _Pattern(tuple(parts[:-1]), np_first=False)


def _element_matches(element: str, token: str) -> bool:
    if element == "*":
        return True
    if element.endswith("*"):
        return token.startswith(element[:-1])
    return token == element


def _trim_stopwords(tokens: list[Token]) -> list[Token]:
    lo, hi = 0, len(tokens)
    while lo < hi and tokens[lo].folded in STOPWORDS:
        lo += 1
    while hi > lo and tokens[hi - 1].folded in STOPWORDS:
        hi -= 1
    return tokens[lo:hi]


def load_patterns(path: str | Path | None = None) -> list[_Pattern]:
    if path is None:
        text = resources.files("trendwatch.config").joinpath("claim_patterns.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    patterns = []
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            patterns.append(_parse_pattern(line.casefold()))
    if not patterns:
        raise ValueError("pattern file contains no patterns")
    return patterns


class PatternExtractor:
    """First matching cue pattern per sentence captures the adjacent noun
    phrase (up to 5 tokens, stop words trimmed at the edges)."""

    name = "pattern"

    def __init__(self, patterns: Iterable[_Pattern] | None = None):
        self.patterns = list(patterns) if patterns is not None else load_patterns()

    def find_spans(self, text: str) -> list[tuple[int, int]]:
        spans = []
        for sentence in sentences(text):
            span = self._match_sentence(sentence)
            if span is not None:
                spans.append(span)
        return spans

    def _match_sentence(self, sentence: Sentence) -> tuple[int, int] | None:
        folded = [t.folded for t in sentence.tokens]
        for pattern in self.patterns:
            cue = pattern.cue
            width = len(cue)
            for i in range(0, len(folded) - width + 1):
                if not all(_element_matches(e, folded[i + j]) for j, e in enumerate(cue)):
                    continue
                if pattern.np_first:
                    candidates = list(sentence.tokens[max(0, i - MAX_CLAIM_TOKENS): i])
                else:
                    candidates = list(sentence.tokens[i + width: i + width + MAX_CLAIM_TOKENS])
                phrase = _trim_stopwords(candidates)
                if phrase:
                    return phrase[0].start, phrase[-1].end
        return None


def pattern_baseline_extract(text: str, extractor: PatternExtractor | None = None) -> list[ClaimSpan]:
    """Run the baseline over bare text; spans carry an empty post_id."""
    return _build_spans("", text, (extractor or _default_extractor()).find_spans(text))


_DEFAULT: PatternExtractor | None = None


def _default_extractor() -> PatternExtractor:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = PatternExtractor()
    return _DEFAULT


# --- extraction entry point ----------------------------------------------

def _build_spans(post_id: str, text: str, ranges: Iterable[tuple[int, int]]) -> list[ClaimSpan]:
    out: list[ClaimSpan] = []
    seen: set[str] = set()
    for start, end in ranges:
        if not (0 <= start < end <= len(text)):
            raise ValueError(f"span [{start}, {end}) outside text of length {len(text)}")
        surface = text[start:end]
        if len(tokenize(surface)) > MAX_CLAIM_TOKENS:
            logger.warning("dropping overlong span %r from post %s", surface, post_id or "<none>")
            continue
        key = normalize_claim_key(surface)
        if not key or key in seen:
            continue
        seen.add(key)
        out.append(ClaimSpan(post_id=post_id, surface=surface, start=start, end=end, normalized=key))
    return out


def extract(post: Post, extractor: Extractor) -> list[ClaimSpan]:
    """Claim spans for one post, deduplicated by normalized key."""
    if not post.text:
        raise ValueError("post text must be non-empty")
    return _build_spans(post.post_id, post.text, extractor.find_spans(post.text))


# --- external extractor client -------------------------------------------

class ExtractorUnavailable(RuntimeError):
    """External extractor kept failing after retries."""


class HttpExtractor:
    """Client for an external extraction service.

    POST {base_url}/extract with {"text": ...}; the response must be
    {"spans": [{"start": int, "end": int}, ...]}. Requests are retried
    with backoff and the number of in-flight requests is bounded.
    """

    name = "http"

    def __init__(
        self,
        base_url: str,
        *,
        timeout: float = 10.0,
        retries: int = 3,
        backoff: float = 0.2,
        max_inflight: int = 8,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self._gate = threading.BoundedSemaphore(max_inflight)
        self._session = session or requests.Session()

    def find_spans(self, text: str) -> list[tuple[int, int]]:
        last_error: Exception | None = None
        for attempt in range(self.retries):
            try:
                with self._gate:
                    response = self._session.post(
                        f"{self.base_url}/extract", json={"text": text}, timeout=self.timeout
                    )
                response.raise_for_status()
                return self._parse(response.json())
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
                if isinstance(exc, ValueError) and not isinstance(exc, requests.RequestException):
                    raise  # malformed payloads are not retryable
                logger.warning("extractor attempt %d failed: %s", attempt + 1, exc)
                time.sleep(self.backoff * (2 ** attempt))
        raise ExtractorUnavailable(f"extractor at {self.base_url} failed: {last_error}")

    @staticmethod
    def _parse(payload: object) -> list[tuple[int, int]]:
        if not isinstance(payload, dict) or not isinstance(payload.get("spans"), list):
            raise ValueError(f"malformed extractor response: {payload!r}")
        spans = []
        for item in payload["spans"]:
            if (
                not isinstance(item, dict)
                or not isinstance(item.get("start"), int)
                or not isinstance(item.get("end"), int)
            ):
                raise ValueError(f"malformed span: {item!r}")
            spans.append((item["start"], item["end"]))
        return spans
