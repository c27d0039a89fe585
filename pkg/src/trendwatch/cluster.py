"""Aggregate supporting mentions into claim clusters.

Normalized claim keys are grouped by single-link connectivity: two keys
join the same cluster when the Jaccard similarity of their token sets
meets the threshold, and links are transitive. The approved-treatment
filter drops keys whose token set equals an approved alias exactly, so
"remdesivir tea" survives an alias "remdesivir".
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from datetime import date
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .stance import StanceLabel, StancedMention
from .text import token_texts


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    """Set overlap in [0, 1]; two empty sets share nothing (0.0)."""
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def key_tokens(key: str) -> frozenset[str]:
    return frozenset(token_texts(key))


def cluster_id_for(canonical: str) -> str:
    return "c" + hashlib.sha1(canonical.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class ClaimCluster:
    cluster_id: str
    canonical: str
    members: frozenset[str]
    posts: tuple[tuple[str, date], ...]  # (post_id, day), sorted
    first_seen: date

    @property
    def count(self) -> int:
        return len(self.posts)

    def day_counts(self) -> dict[date, int]:
        counts: dict[date, int] = {}
        for _, day in self.posts:
            counts[day] = counts.get(day, 0) + 1
        return counts


class _UnionFind:
    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, i: int, j: int) -> None:
        ri, rj = self.find(i), self.find(j)
        if ri != rj:
            self.parent[max(ri, rj)] = min(ri, rj)


def partition_keys(keys: Sequence[str], threshold: float) -> list[frozenset[str]]:
    """Single-link partition of unique keys at the given Jaccard threshold.

    Order-insensitive: the same key set yields the same partition for any
    input permutation.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    unique = sorted(set(keys))
    tokens = [key_tokens(k) for k in unique]
    uf = _UnionFind(len(unique))
    for i in range(len(unique)):
        for j in range(i + 1, len(unique)):
            if jaccard(tokens[i], tokens[j]) >= threshold:
                uf.union(i, j)
    groups: dict[int, set[str]] = {}
    for i, key in enumerate(unique):
        groups.setdefault(uf.find(i), set()).add(key)
    return [frozenset(g) for g in groups.values()]


def choose_canonical(
    members: Iterable[str],
    counts: Mapping[str, int],
    first_seen: Mapping[str, date] | None = None,
) -> str:
    """Highest mention count wins; ties go to the earliest first_seen,
    then the lexicographically smallest key."""
    fallback = date.max

    def rank(key: str):
        seen = first_seen.get(key, fallback) if first_seen else fallback
        return (-counts.get(key, 0), seen, key)

    return min(members, key=rank)


def cluster_claims(
    keys: Iterable[str],
    threshold: float = 0.5,
    first_seen: Mapping[str, date] | None = None,
) -> list[ClaimCluster]:
    """Cluster a multiset of normalized keys (no post attribution)."""
    key_list = list(keys)
    counts: dict[str, int] = {}
    for key in key_list:
        counts[key] = counts.get(key, 0) + 1
    clusters = []
    for members in partition_keys(key_list, threshold):
        canonical = choose_canonical(members, counts, first_seen)
        seen = min(first_seen[m] for m in members) if first_seen else date.min
        clusters.append(
            ClaimCluster(
                cluster_id=cluster_id_for(canonical),
                canonical=canonical,
                members=members,
                posts=(),
                first_seen=seen,
            )
        )
    clusters.sort(key=lambda c: c.canonical)
    return clusters


def build_clusters(
    mentions: Iterable[tuple[str, str, date]],
    threshold: float = 0.5,
) -> list[ClaimCluster]:
    """Cluster (key, post_id, day) mention records.

    A post lands in every cluster one of its keys belongs to, once per
    cluster. Cluster posts are sorted by (day, post_id).
    """
    counts: dict[str, int] = {}
    first_seen: dict[str, date] = {}
    by_key: dict[str, set[tuple[str, date]]] = {}
    for key, post_id, day in mentions:
        counts[key] = counts.get(key, 0) + 1
        if key not in first_seen or day < first_seen[key]:
            first_seen[key] = day
        by_key.setdefault(key, set()).add((post_id, day))
    clusters = []
    for members in partition_keys(list(counts), threshold):
        canonical = choose_canonical(members, counts, first_seen)
        posts: set[tuple[str, date]] = set()
        for member in members:
            posts.update(by_key[member])
        clusters.append(
            ClaimCluster(
                cluster_id=cluster_id_for(canonical),
                canonical=canonical,
                members=members,
                posts=tuple(sorted(posts, key=lambda p: (p[1], p[0]))),
                first_seen=min(first_seen[m] for m in members),
            )
        )
    clusters.sort(key=lambda c: c.canonical)
    return clusters


# --- filters --------------------------------------------------------------

def filter_supporting(mentions: Iterable[StancedMention]) -> list[StancedMention]:
    return [m for m in mentions if m.stance is StanceLabel.SUPPORTING]


class ApprovedList:
    """Approved treatments; matching is exact on normalized token sets."""

    def __init__(self, version: str, aliases: Iterable[str]):
        self.version = version
        self.aliases = tuple(aliases)
        self._token_sets = {key_tokens(a.casefold()) for a in self.aliases} - {frozenset()}

    @classmethod
    def from_file(cls, path: str | Path | None = None) -> "ApprovedList":
        if path is None:
            raw = resources.files("trendwatch.config").joinpath("approved_treatments.json").read_text("utf-8")
        else:
            raw = Path(path).read_text("utf-8")
        data = json.loads(raw)
        aliases: list[str] = []
        for source in data["sources"]:
            aliases.extend(source["treatments"])
        return cls(version=data["version"], aliases=aliases)

    def matches(self, key: str) -> bool:
        return key_tokens(key) in self._token_sets


def filter_approved(mentions: Iterable[StancedMention], approved: ApprovedList) -> list[StancedMention]:
    """Drop mentions whose normalized key is an approved treatment."""
    return [m for m in mentions if not approved.matches(m.claim.normalized)]
