"""Stance of a post toward one of its claim spans.

The rule baseline works on the sentence containing the span, in fixed
priority order: question sentence -> NO_STANCE; negation token within 6
tokens of the span -> REFUTING; assertive cue within 6 tokens ->
SUPPORTING; otherwise NO_STANCE. REFUTING always beats SUPPORTING.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Protocol

from .extract import ClaimSpan
from .ingest import Post
from .text import Sentence, sentences

WINDOW = 6


class StanceLabel(str, Enum):
    SUPPORTING = "SUPPORTING"
    REFUTING = "REFUTING"
    NO_STANCE = "NO_STANCE"


@dataclass(frozen=True)
class StancedMention:
    claim: ClaimSpan
    stance: StanceLabel
    confidence: float = 1.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence outside [0, 1]: {self.confidence}")


class StanceClassifier(Protocol):
    name: str

    def classify(self, text: str, start: int, end: int) -> tuple[StanceLabel, float]:
        """Stance toward the claim at text[start:end], with confidence."""


def load_lexicon(path: str | Path | None = None) -> dict[str, list[tuple[str, ...]]]:
    """Parse the lexicon file: [negation] / [assertive] sections, one term
    per line, multi-token terms allowed."""
    if path is None:
        raw = resources.files("trendwatch.config").joinpath("stance_lexicon.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    sections: dict[str, list[tuple[str, ...]]] = {"negation": [], "assertive": []}
    current: list[tuple[str, ...]] | None = None
    for line in raw.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].casefold()
            if name not in sections:
                raise ValueError(f"unknown lexicon section {name!r}")
            current = sections[name]
            continue
        if current is None:
            raise ValueError("lexicon term before any section header")
        current.append(tuple(line.casefold().split()))
    if not sections["negation"] or not sections["assertive"]:
        raise ValueError("lexicon needs at least one negation and one assertive term")
    return sections


class LexiconStanceClassifier:
    name = "lexicon"

    def __init__(self, lexicon: dict[str, list[tuple[str, ...]]] | None = None):
        lex = lexicon or load_lexicon()
        self.negation = list(lex["negation"])
        self.assertive = list(lex["assertive"])

    def classify(self, text: str, start: int, end: int) -> tuple[StanceLabel, float]:
        sentence = _containing_sentence(text, start)
        if sentence is None:
            return StanceLabel.NO_STANCE, 1.0
        if sentence.is_question():
            return StanceLabel.NO_STANCE, 1.0
        folded = [t.folded for t in sentence.tokens]
        span_idx = [
            i for i, t in enumerate(sentence.tokens) if t.start < end and t.end > start
        ]
        if not span_idx:
            return StanceLabel.NO_STANCE, 1.0
        lo, hi = span_idx[0], span_idx[-1]
        if _any_term_near(self.negation, folded, lo, hi):
            return StanceLabel.REFUTING, 1.0
        if _any_term_near(self.assertive, folded, lo, hi):
            return StanceLabel.SUPPORTING, 1.0
        return StanceLabel.NO_STANCE, 1.0


def _containing_sentence(text: str, position: int) -> Sentence | None:
    for sentence in sentences(text):
        if sentence.start <= position < sentence.end:
            return sentence
    return None


def _any_term_near(terms: list[tuple[str, ...]], folded: list[str], lo: int, hi: int) -> bool:
    for term in terms:
        width = len(term)
        for i in range(0, len(folded) - width + 1):
            if folded[i: i + width] != list(term):
                continue
            term_hi = i + width - 1
            if i >= lo and term_hi <= hi:  # inside the span itself does not count
                continue
            gap = max(lo - term_hi, i - hi, 0)
            if gap <= WINDOW:
                return True
    return False


def classify_stance(post: Post, claim: ClaimSpan, classifier: StanceClassifier) -> StancedMention:
    if claim.post_id and claim.post_id != post.post_id:
        raise ValueError(f"claim belongs to post {claim.post_id}, not {post.post_id}")
    if post.text[claim.start: claim.end] != claim.surface:
        raise ValueError("claim span does not slice this post's text")
    label, confidence = classifier.classify(post.text, claim.start, claim.end)
    return StancedMention(claim=claim, stance=label, confidence=confidence)
