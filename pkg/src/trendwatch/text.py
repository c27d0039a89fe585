"""Lexical helpers shared by ingest, extraction, stance, and clustering.

Tokenization is offset-preserving: every token records the character range
it was sliced from, so downstream spans can point back into the original
post text exactly.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

# Word-ish tokens: optional #/@ prefix, internal hyphens/apostrophes kept
# so "covid-19", "won't" and "#ivermectin" stay single tokens.
_TOKEN_RE = re.compile(r"[#@]?\w+(?:['’-]\w+)*")

# A sentence is a run of non-terminator characters plus any trailing
# terminators, so "a cure?" keeps its question mark.
_SENTENCE_RE = re.compile(r"[^.!?\n]+[.!?]*")


@dataclass(frozen=True)
class Token:
    text: str
    start: int
    end: int

    @property
    def folded(self) -> str:
        return self.text.casefold()


@dataclass(frozen=True)
class Sentence:
    text: str
    start: int
    end: int
    tokens: tuple[Token, ...]

    def is_question(self) -> bool:
        return self.text.rstrip().endswith("?")


def tokenize(text: str) -> list[Token]:
    return [Token(m.group(0), m.start(), m.end()) for m in _TOKEN_RE.finditer(text)]


def token_texts(text: str) -> list[str]:
    """Case-folded token strings, for matching rather than slicing."""
    return [m.group(0).casefold() for m in _TOKEN_RE.finditer(text)]


def sentences(text: str) -> list[Sentence]:
    out = []
    for m in _SENTENCE_RE.finditer(text):
        toks = tuple(
            Token(t.group(0), m.start() + t.start(), m.start() + t.end())
            for t in _TOKEN_RE.finditer(m.group(0))
        )
        if toks:
            out.append(Sentence(m.group(0), m.start(), m.end(), toks))
    return out
