"""Two-stage human review of flagged claim clusters.

Stage 1: a moderator categorizes a flagged cluster; UNAPPROVED spawns a
stage-2 queue holding a seeded sample of the cluster's supporting posts.
Stage 2: each sampled post gets a Likert policy-violation score or a
duplicate mark. All writes are compare-and-set: a second decision on a
settled slot raises ConflictError instead of overwriting.

Crowd-annotation helpers (majority vote, worker quality gate) live here
too; they operate on plain label sets and have no queue state.
"""
from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass, field
from datetime import date
from enum import Enum
from typing import Callable, Collection, Iterable, Mapping, Sequence

from .stance import StanceLabel

LIKERT_MIN, LIKERT_MAX = 1, 5


class ReviewError(ValueError):
    pass


class UnknownClaimError(ReviewError):
    pass


class UnknownTweetError(ReviewError):
    pass


class ConflictError(ReviewError):
    """Compare-and-set failed: the slot was already decided."""


class DecisionCategory(str, Enum):
    UNAPPROVED = "UNAPPROVED"
    APPROVED = "APPROVED"
    UNSURE = "UNSURE"
    NOT_A_TREATMENT = "NOT_A_TREATMENT"
    GENERAL_HEALTH_ADVICE = "GENERAL_HEALTH_ADVICE"
    REPEAT = "REPEAT"


@dataclass(frozen=True)
class ClaimDecision:
    cluster_id: str
    annotator_id: str
    category: DecisionCategory
    debunk_date: date | None = None
    debunk_url: str | None = None
    elapsed_seconds: float | None = None

    def __post_init__(self) -> None:
        if not self.annotator_id:
            raise ReviewError("annotator_id must be non-empty")
        if self.category is not DecisionCategory.UNAPPROVED and (
            self.debunk_date is not None or self.debunk_url is not None
        ):
            raise ReviewError("debunk fields are only valid for UNAPPROVED decisions")
        if self.elapsed_seconds is not None and self.elapsed_seconds < 0:
            raise ReviewError("elapsed_seconds must be >= 0")

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "annotator_id": self.annotator_id,
            "category": self.category.value,
            "debunk_date": self.debunk_date.isoformat() if self.debunk_date else None,
            "debunk_url": self.debunk_url,
            "elapsed_seconds": self.elapsed_seconds,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ClaimDecision":
        return cls(
            cluster_id=raw["cluster_id"],
            annotator_id=raw["annotator_id"],
            category=DecisionCategory(raw["category"]),
            debunk_date=date.fromisoformat(raw["debunk_date"]) if raw.get("debunk_date") else None,
            debunk_url=raw.get("debunk_url"),
            elapsed_seconds=raw.get("elapsed_seconds"),
        )


@dataclass(frozen=True)
class TweetReview:
    cluster_id: str
    post_id: str
    annotator_id: str
    is_duplicate: bool = False
    likert: int | None = None
    elapsed_seconds: float | None = None

    def __post_init__(self) -> None:
        if not self.annotator_id:
            raise ReviewError("annotator_id must be non-empty")
        if self.is_duplicate:
            if self.likert is not None:
                raise ReviewError("a duplicate mark cannot carry a likert score")
        else:
            if self.likert is None or not LIKERT_MIN <= self.likert <= LIKERT_MAX:
                raise ReviewError(f"likert must be in [{LIKERT_MIN}, {LIKERT_MAX}]")
        if self.elapsed_seconds is not None and self.elapsed_seconds < 0:
            raise ReviewError("elapsed_seconds must be >= 0")

    @property
    def is_violation(self) -> bool:
        return not self.is_duplicate and self.likert in (4, 5)

    def to_dict(self) -> dict:
        return {
            "cluster_id": self.cluster_id,
            "post_id": self.post_id,
            "annotator_id": self.annotator_id,
            "is_duplicate": self.is_duplicate,
            "likert": self.likert,
            "elapsed_seconds": self.elapsed_seconds,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "TweetReview":
        return cls(
            cluster_id=raw["cluster_id"],
            post_id=raw["post_id"],
            annotator_id=raw["annotator_id"],
            is_duplicate=bool(raw.get("is_duplicate", False)),
            likert=raw.get("likert"),
            elapsed_seconds=raw.get("elapsed_seconds"),
        )


@dataclass
class Stage1Entry:
    cluster_id: str
    flag_date: date
    required: int = 1
    decisions: list[ClaimDecision] = field(default_factory=list)

    @property
    def pending(self) -> bool:
        return len(self.decisions) < self.required


@dataclass
class Stage2Entry:
    cluster_id: str
    post_id: str
    text: str
    review: TweetReview | None = None

    @property
    def pending(self) -> bool:
        return self.review is None


def _fold_text(text: str) -> str:
    return re.sub(r"\s+", " ", text.casefold()).strip()


def sample_tweets(
    posts: Sequence[tuple[str, str]], n: int, seed: str | int
) -> list[tuple[str, str]]:
    """Seeded sample of up to n (post_id, text) pairs.

    Exact duplicates (case-folded, whitespace-collapsed text) are removed
    first, keeping the earliest post, so the sample never shows the same
    wording twice. Deterministic for a given input order and seed.
    """
    if n < 0:
        raise ReviewError("sample size must be >= 0")
    seen: set[str] = set()
    distinct: list[tuple[str, str]] = []
    for post_id, text in posts:
        folded = _fold_text(text)
        if folded in seen:
            continue
        seen.add(folded)
        distinct.append((post_id, text))
    if len(distinct) <= n:
        return distinct
    return random.Random(str(seed)).sample(distinct, n)


def required_annotations(index: int, dual_fraction: float) -> int:
    """2 when this entry index crosses the dual-annotation quota, else 1."""
    if dual_fraction <= 0:
        return 1
    quota_before = math.floor(index * dual_fraction)
    quota_after = math.floor((index + 1) * dual_fraction)
    return 2 if quota_after > quota_before else 1


@dataclass
class ReviewBoard:
    """Queue state for both review stages. Single-threaded by design; the
    store serializes access."""

    sample_n: int = 10
    seed: int | str = 0
    dual_fraction: float = 1 / 3
    entries: dict[str, Stage1Entry] = field(default_factory=dict)
    stage2: dict[str, dict[str, Stage2Entry]] = field(default_factory=dict)
    external_reviews: list[TweetReview] = field(default_factory=list)
    entry_counter: int = 0

    # -- stage 1 ---------------------------------------------------------

    def enqueue_flagged(
        self, cluster_ids: Iterable[str], flag_date: date, known_clusters: Collection[str]
    ) -> list[Stage1Entry]:
        """Create pending stage-1 entries in flag order.

        Unknown cluster ids raise. Clusters that already have an entry
        (pending or decided) are skipped, which makes re-flagging and
        pipeline resumes idempotent.
        """
        created = []
        for cid in cluster_ids:
            if cid not in known_clusters:
                raise UnknownClaimError(f"flagged cluster {cid!r} does not exist")
            if cid in self.entries:
                continue
            entry = Stage1Entry(
                cluster_id=cid,
                flag_date=flag_date,
                required=required_annotations(self.entry_counter, self.dual_fraction),
            )
            self.entries[cid] = entry
            self.entry_counter += 1
            created.append(entry)
        return created

    def record_claim_decision(
        self,
        decision: ClaimDecision,
        sample_source: Callable[[str], Sequence[tuple[str, str]]],
    ) -> list[Stage2Entry]:
        """Compare-and-set a stage-1 decision; returns spawned stage-2
        entries (non-empty only for the first UNAPPROVED decision)."""
        entry = self.entries.get(decision.cluster_id)
        if entry is None:
            raise UnknownClaimError(f"no stage-1 entry for cluster {decision.cluster_id!r}")
        if not entry.pending:
            raise ConflictError(f"cluster {decision.cluster_id!r} is already decided")
        if any(d.annotator_id == decision.annotator_id for d in entry.decisions):
            raise ConflictError(
                f"annotator {decision.annotator_id!r} already decided {decision.cluster_id!r}"
            )
        entry.decisions.append(decision)
        return self._maybe_spawn_stage2(decision, sample_source)

    def import_claim_decision(
        self,
        decision: ClaimDecision,
        sample_source: Callable[[str], Sequence[tuple[str, str]]],
        known_clusters: Collection[str],
        flag_date: date,
    ) -> list[Stage2Entry]:
        """Accept an externally collected decision. Creates the stage-1
        entry on the fly when the cluster was never flagged here."""
        if decision.cluster_id not in known_clusters:
            raise UnknownClaimError(f"cluster {decision.cluster_id!r} does not exist")
        if decision.cluster_id not in self.entries:
            self.entries[decision.cluster_id] = Stage1Entry(
                cluster_id=decision.cluster_id, flag_date=flag_date, required=1
            )
            self.entry_counter += 1
        entry = self.entries[decision.cluster_id]
        if any(d.annotator_id == decision.annotator_id for d in entry.decisions):
            raise ConflictError(
                f"annotator {decision.annotator_id!r} already decided {decision.cluster_id!r}"
            )
        if not entry.pending:
            entry.required = len(entry.decisions) + 1  # imports may stack extra opinions
        entry.decisions.append(decision)
        return self._maybe_spawn_stage2(decision, sample_source)

    def _maybe_spawn_stage2(
        self,
        decision: ClaimDecision,
        sample_source: Callable[[str], Sequence[tuple[str, str]]],
    ) -> list[Stage2Entry]:
        cid = decision.cluster_id
        if decision.category is not DecisionCategory.UNAPPROVED or cid in self.stage2:
            return []
        sampled = sample_tweets(sample_source(cid), self.sample_n, f"{self.seed}:{cid}")
        queue = {
            post_id: Stage2Entry(cluster_id=cid, post_id=post_id, text=text)
            for post_id, text in sampled
        }
        self.stage2[cid] = queue
        return list(queue.values())

    # -- stage 2 ---------------------------------------------------------

    def record_tweet_review(self, review: TweetReview) -> Stage2Entry:
        queue = self.stage2.get(review.cluster_id)
        if queue is None:
            raise UnknownClaimError(f"no stage-2 queue for cluster {review.cluster_id!r}")
        entry = queue.get(review.post_id)
        if entry is None:
            raise UnknownTweetError(
                f"post {review.post_id!r} is not in the sample for {review.cluster_id!r}"
            )
        if entry.review is not None:
            raise ConflictError(f"post {review.post_id!r} is already reviewed")
        entry.review = review
        return entry

    def import_tweet_review(self, review: TweetReview) -> bool:
        """Store an external review; returns True when it filled a queue
        slot, False when kept as an out-of-queue review.

        A second annotator scoring an already-reviewed sampled post is
        not a conflict: the extra opinion is kept for agreement metrics.
        The same annotator contradicting themselves is."""
        queue = self.stage2.get(review.cluster_id)
        if queue is not None and review.post_id in queue:
            entry = queue[review.post_id]
            if entry.review is None:
                entry.review = review
                return True
            if entry.review == review:
                return True
            if entry.review.annotator_id == review.annotator_id:
                raise ConflictError(f"post {review.post_id!r} is already reviewed differently")
        for existing in self.external_reviews:
            if existing == review:
                return False
            if (
                existing.post_id == review.post_id
                and existing.annotator_id == review.annotator_id
            ):
                raise ConflictError(
                    f"annotator {review.annotator_id!r} already reviewed {review.post_id!r}"
                )
        self.external_reviews.append(review)
        return False

    # -- queries -----------------------------------------------------------

    def pending_claims(self) -> list[Stage1Entry]:
        return [e for e in self.entries.values() if e.pending]

    def all_decisions(self) -> list[ClaimDecision]:
        return [d for e in self.entries.values() for d in e.decisions]

    def all_reviews(self) -> list[TweetReview]:
        queue_reviews = [
            e.review
            for queue in self.stage2.values()
            for e in queue.values()
            if e.review is not None
        ]
        return queue_reviews + list(self.external_reviews)

    def unapproved_clusters(self) -> set[str]:
        return {
            e.cluster_id
            for e in self.entries.values()
            if any(d.category is DecisionCategory.UNAPPROVED for d in e.decisions)
        }

    # -- snapshots -----------------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "sample_n": self.sample_n,
            "seed": self.seed,
            "dual_fraction": self.dual_fraction,
            "entry_counter": self.entry_counter,
            "entries": [
                {
                    "cluster_id": e.cluster_id,
                    "flag_date": e.flag_date.isoformat(),
                    "required": e.required,
                    "decisions": [d.to_dict() for d in e.decisions],
                }
                for e in self.entries.values()
            ],
            "stage2": [
                {
                    "cluster_id": cid,
                    "items": [
                        {
                            "post_id": item.post_id,
                            "text": item.text,
                            "review": item.review.to_dict() if item.review else None,
                        }
                        for item in queue.values()
                    ],
                }
                for cid, queue in self.stage2.items()
            ],
            "external_reviews": [r.to_dict() for r in self.external_reviews],
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "ReviewBoard":
        board = cls(
            sample_n=int(raw["sample_n"]),
            seed=raw["seed"],
            dual_fraction=float(raw["dual_fraction"]),
            entry_counter=int(raw["entry_counter"]),
        )
        for e in raw["entries"]:
            board.entries[e["cluster_id"]] = Stage1Entry(
                cluster_id=e["cluster_id"],
                flag_date=date.fromisoformat(e["flag_date"]),
                required=int(e["required"]),
                decisions=[ClaimDecision.from_dict(d) for d in e["decisions"]],
            )
        for bucket in raw["stage2"]:
            queue = {}
            for item in bucket["items"]:
                queue[item["post_id"]] = Stage2Entry(
                    cluster_id=bucket["cluster_id"],
                    post_id=item["post_id"],
                    text=item["text"],
                    review=TweetReview.from_dict(item["review"]) if item["review"] else None,
                )
            board.stage2[bucket["cluster_id"]] = queue
        board.external_reviews = [TweetReview.from_dict(r) for r in raw["external_reviews"]]
        return board


# --- crowd annotation helpers ---------------------------------------------

@dataclass(frozen=True)
class AnnotationSet:
    """All worker labels for one item."""

    item_id: str
    labels: Mapping[str, StanceLabel]


def aggregate_crowd_labels(labels: Iterable[StanceLabel]) -> StanceLabel:
    """Strict majority (> half) wins; anything else is NO_STANCE."""
    votes = list(labels)
    if not votes:
        raise ReviewError("cannot aggregate an empty label set")
    counts: dict[StanceLabel, int] = {}
    for label in votes:
        counts[label] = counts.get(label, 0) + 1
    best = max(counts, key=lambda lab: counts[lab])
    if counts[best] * 2 > len(votes):
        return best
    return StanceLabel.NO_STANCE


@dataclass(frozen=True)
class QualityReport:
    match_rates: Mapping[str, float | None]
    excluded: frozenset[str]


def worker_quality_gate(
    annotation_sets: Iterable[AnnotationSet], threshold: float = 0.75
) -> QualityReport:
    """Exclude workers whose agreement with SUPPORTING majorities falls
    strictly below the threshold.

    Only items whose aggregated label is SUPPORTING count. A worker with
    no such items has no rate (None) and is retained; a rate exactly at
    the threshold is retained.
    """
    totals: dict[str, int] = {}
    matches: dict[str, int] = {}
    workers: set[str] = set()
    for annotation in annotation_sets:
        workers.update(annotation.labels)
        majority = aggregate_crowd_labels(annotation.labels.values())
        if majority is not StanceLabel.SUPPORTING:
            continue
        for worker, label in annotation.labels.items():
            totals[worker] = totals.get(worker, 0) + 1
            if label is StanceLabel.SUPPORTING:
                matches[worker] = matches.get(worker, 0) + 1
    rates: dict[str, float | None] = {}
    excluded = set()
    for worker in sorted(workers):
        if totals.get(worker, 0) == 0:
            rates[worker] = None
            continue
        rate = matches.get(worker, 0) / totals[worker]
        rates[worker] = rate
        if rate < threshold:
            excluded.add(worker)
    return QualityReport(match_rates=rates, excluded=frozenset(excluded))
