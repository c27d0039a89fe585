"""Durable application state: one event log plus in-memory projections.

Every mutation goes through the same path the replay uses (apply the
payload, then append the event), so a store rebuilt from its log is
indistinguishable from the store that wrote it. Clusters are never
persisted: they are re-derived from the recorded mentions under the
run config, which keeps cluster membership a pure function of the log.
"""
from __future__ import annotations

import copy
import hashlib
import json
import statistics
import threading
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .cluster import ApprovedList, ClaimCluster, build_clusters
from .events import EventKind, EventLog
from .ingest import DEFAULT_KEYWORDS, Post, parse_rfc3339
from .metrics import (
    DEFAULT_CLAIM_SECONDS,
    DEFAULT_TWEET_SECONDS,
    MetricsError,
    cohen_kappa,
    compute_delta,
    cumulative_trend_series,
    extrapolate_likert,
    krippendorff_alpha_ordinal,
    pct_unapproved_topk,
)
from .review import ClaimDecision, ConflictError, ReviewBoard, Stage2Entry, TweetReview
from .stance import StanceLabel
from .trends import RollupResult, TrendRecord, TrendState, daily_rollup, records_to_csv

TOP_K_REPORTED = (5, 50, 100)


class StoreError(RuntimeError):
    pass


class ConfigMismatchError(StoreError):
    """The store already carries a different run config."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a run's outputs depend on, persisted with the run."""

    alpha: float = 1.15e-6
    jaccard_threshold: float = 0.5
    warmup_days: int = 31
    sample_n: int = 10
    seed: int | str = 0
    keywords: frozenset[str] = DEFAULT_KEYWORDS
    approved_list_version: str = "cdc-nyt-2022"
    extractor: str = "pattern"
    stance: str = "lexicon"
    dual_fraction: float = 1 / 3
    top_k_memory: int = 100

    def __post_init__(self) -> None:
        object.__setattr__(self, "keywords", frozenset(k.casefold() for k in self.keywords))
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha outside (0, 1): {self.alpha}")
        if not 0.0 < self.jaccard_threshold <= 1.0:
            raise ValueError(f"jaccard threshold outside (0, 1]: {self.jaccard_threshold}")
        if self.warmup_days < 0 or self.sample_n < 0 or self.top_k_memory < 1:
            raise ValueError("warmup_days/sample_n/top_k_memory out of range")
        if not 0.0 <= self.dual_fraction <= 1.0:
            raise ValueError(f"dual fraction outside [0, 1]: {self.dual_fraction}")
        if not self.keywords:
            raise ValueError("keyword set must not be empty")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "jaccard_threshold": self.jaccard_threshold,
            "warmup_days": self.warmup_days,
            "sample_n": self.sample_n,
            "seed": self.seed,
            "keywords": sorted(self.keywords),
            "approved_list_version": self.approved_list_version,
            "extractor": self.extractor,
            "stance": self.stance,
            "dual_fraction": self.dual_fraction,
            "top_k_memory": self.top_k_memory,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "RunConfig":
        return cls(
            alpha=float(raw["alpha"]),
            jaccard_threshold=float(raw["jaccard_threshold"]),
            warmup_days=int(raw["warmup_days"]),
            sample_n=int(raw["sample_n"]),
            seed=raw["seed"],
            keywords=frozenset(raw["keywords"]),
            approved_list_version=raw["approved_list_version"],
            extractor=raw.get("extractor", "pattern"),
            stance=raw.get("stance", "lexicon"),
            dual_fraction=float(raw["dual_fraction"]),
            top_k_memory=int(raw["top_k_memory"]),
        )


@dataclass(frozen=True)
class Mention:
    """One claim span found in one post, with its stance."""

    post_id: str
    key: str
    surface: str
    start: int
    end: int
    stance: StanceLabel
    day: date

    def to_dict(self) -> dict:
        return {
            "post_id": self.post_id,
            "key": self.key,
            "surface": self.surface,
            "start": self.start,
            "end": self.end,
            "stance": self.stance.value,
            "day": self.day.isoformat(),
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "Mention":
        return cls(
            post_id=raw["post_id"],
            key=raw["key"],
            surface=raw["surface"],
            start=int(raw["start"]),
            end=int(raw["end"]),
            stance=StanceLabel(raw["stance"]),
            day=date.fromisoformat(raw["day"]),
        )


def _post_payload(post: Post) -> dict:
    return {
        "post_id": post.post_id,
        "text": post.text,
        "created_at": post.created_at.isoformat().replace("+00:00", "Z"),
        "author_id": post.author_id,
    }


class Store:
    """Event-sourced projections over a single log file.

    Writes are serialized by a re-entrant lock: apply the payload to the
    projections first (board methods validate before they mutate, so a
    rejected write leaves no trace), then append the event. A crash in
    the gap loses at most that one uncommitted event, which is the
    documented durability bound.
    """

    def __init__(self, path: str | Path, *, snapshot_every: int = 0):
        self.path = Path(path)
        self.log = EventLog(self.path)
        self._lock = threading.RLock()
        self.snapshot_every = snapshot_every
        self._since_snapshot = 0

        self.config: RunConfig | None = None
        self.posts: dict[str, Post] = {}
        self.mentions: list[Mention] = []
        self._mention_index: set[tuple[str, str]] = set()
        self.records: dict[date, list[TrendRecord]] = {}
        self.trend_state = TrendState()
        self.board = ReviewBoard()
        self._clusters: list[ClaimCluster] | None = None
        self._approved: ApprovedList | None = None

        for record in self.log.replay():
            self._apply(record.kind, record.payload)

    # -- event plumbing ---------------------------------------------------

    def _append(self, kind: EventKind, payload: dict) -> None:
        self.log.append(kind, payload)
        self._since_snapshot += 1
        if self.snapshot_every and self._since_snapshot >= self.snapshot_every:
            self.write_snapshot()

    def _apply(self, kind: EventKind, payload: dict):
        if self.config is None and kind is not EventKind.CONFIG_CHANGED:
            raise StoreError(f"event {kind.value} before any config")
        if kind is EventKind.CONFIG_CHANGED:
            return self._apply_config(payload)
        if kind is EventKind.POST_INGESTED:
            return self._apply_post(payload)
        if kind is EventKind.MENTION_ADDED:
            return self._apply_mention(payload)
        if kind is EventKind.ROLLUP_DONE:
            return self._apply_rollup(payload)
        if kind is EventKind.FLAGGED:
            return self._apply_flagged(payload)
        if kind is EventKind.CLAIM_DECIDED:
            return self._apply_decision(payload)
        if kind is EventKind.TWEET_REVIEWED:
            return self._apply_review(payload)
        raise StoreError(f"unhandled event kind {kind!r}")

    def _require_config(self) -> RunConfig:
        if self.config is None:
            raise StoreError("store has no run config yet")
        return self.config

    # -- config -------------------------------------------------------------

    def set_config(self, config: RunConfig) -> None:
        with self._lock:
            if self.config is not None:
                if config == self.config:
                    return
                raise ConfigMismatchError(
                    "store was built under a different config; start a fresh store to change it"
                )
            payload = {"config": config.to_dict()}
            self._apply_config(payload)
            self._append(EventKind.CONFIG_CHANGED, payload)

    def _apply_config(self, payload: dict) -> None:
        config = RunConfig.from_dict(payload["config"])
        if self.config is not None:
            if config == self.config:
                return
            raise ConfigMismatchError("event log carries two different configs")
        self.config = config
        self.trend_state = TrendState(
            alpha=config.alpha,
            warmup_days=config.warmup_days,
            top_k_memory=config.top_k_memory,
        )
        self.board = ReviewBoard(
            sample_n=config.sample_n,
            seed=config.seed,
            dual_fraction=config.dual_fraction,
        )

    # -- posts and mentions --------------------------------------------------

    def add_posts(self, posts: Iterable[Post]) -> int:
        """Record posts, skipping ids already present (idempotent resume)."""
        with self._lock:
            self._require_config()
            added = 0
            for post in posts:
                if post.post_id in self.posts:
                    continue
                payload = _post_payload(post)
                self._apply_post(payload)
                self._append(EventKind.POST_INGESTED, payload)
                added += 1
            return added

    def _apply_post(self, payload: dict) -> None:
        post = Post(
            post_id=payload["post_id"],
            text=payload["text"],
            created_at=parse_rfc3339(payload["created_at"]),
            author_id=payload.get("author_id", ""),
        )
        self.posts[post.post_id] = post

    def add_mentions(self, mentions: Iterable[Mention]) -> int:
        """Record mentions, one per (post, claim key), any stance."""
        with self._lock:
            self._require_config()
            added = 0
            for mention in mentions:
                post = self.posts.get(mention.post_id)
                if post is None:
                    raise StoreError(f"mention references unknown post {mention.post_id!r}")
                if mention.day != post.day:
                    raise StoreError(
                        f"mention day {mention.day} disagrees with post {mention.post_id!r}"
                    )
                if (mention.post_id, mention.key) in self._mention_index:
                    continue
                payload = mention.to_dict()
                self._apply_mention(payload)
                self._append(EventKind.MENTION_ADDED, payload)
                added += 1
            return added

    def _apply_mention(self, payload: dict) -> None:
        mention = Mention.from_dict(payload)
        self.mentions.append(mention)
        self._mention_index.add((mention.post_id, mention.key))
        self._clusters = None

    # -- clusters -------------------------------------------------------------

    def _approved_list(self) -> ApprovedList:
        if self._approved is None:
            approved = ApprovedList.from_file()
            wanted = self._require_config().approved_list_version
            if approved.version != wanted:
                raise ConfigMismatchError(
                    f"approved list {approved.version!r} but config wants {wanted!r}"
                )
            self._approved = approved
        return self._approved

    def clusters(self) -> list[ClaimCluster]:
        """Claim clusters over SUPPORTING, non-approved mentions."""
        with self._lock:
            if self.config is None:
                return []
            if self._clusters is None:
                approved = self._approved_list()
                triples = [
                    (m.key, m.post_id, m.day)
                    for m in self.mentions
                    if m.stance is StanceLabel.SUPPORTING and not approved.matches(m.key)
                ]
                self._clusters = build_clusters(triples, threshold=self.config.jaccard_threshold)
            return self._clusters

    def cluster_by_id(self, cluster_id: str) -> ClaimCluster | None:
        for cluster in self.clusters():
            if cluster.cluster_id == cluster_id:
                return cluster
        return None

    def _known_cluster_ids(self) -> set[str]:
        return {c.cluster_id for c in self.clusters()}

    def _sample_source(self, cluster_id: str) -> Sequence[tuple[str, str]]:
        cluster = self.cluster_by_id(cluster_id)
        if cluster is None:
            return []
        return [(pid, self.posts[pid].text) for pid, _ in cluster.posts]

    # -- rollups ---------------------------------------------------------------

    def day_inputs(self, day: date) -> tuple[dict[str, int], dict[str, str]]:
        """Per-cluster mention counts for one day, plus canonical names."""
        counts: dict[str, int] = {}
        names: dict[str, str] = {}
        for cluster in self.clusters():
            names[cluster.cluster_id] = cluster.canonical
            c = cluster.day_counts().get(day, 0)
            if c:
                counts[cluster.cluster_id] = c
        return counts, names

    def rollup_day(
        self,
        day: date,
        counts: Mapping[str, int] | None = None,
        canonicals: Mapping[str, str] | None = None,
    ) -> RollupResult:
        """Roll one day forward and commit the result to the log."""
        with self._lock:
            self._require_config()
            if counts is None:
                counts, canonicals = self.day_inputs(day)
            # Compute on a scratch copy; the real state advances through
            # the same apply path replay uses.
            preview = copy.deepcopy(self.trend_state)
            result = daily_rollup(preview, day, counts, canonicals)
            payload = {
                "date": day.isoformat(),
                "counts": {cid: int(v) for cid, v in sorted(counts.items())},
                "warmup": result.warmup,
                "flagged": list(result.flagged),
                "records": [r.to_dict() for r in result.records],
            }
            self._apply_rollup(payload)
            self._append(EventKind.ROLLUP_DONE, payload)
            if result.flagged:
                flag_payload = {"date": day.isoformat(), "cluster_ids": list(result.flagged)}
                self._apply_flagged(flag_payload)
                self._append(EventKind.FLAGGED, flag_payload)
            return result

    def _apply_rollup(self, payload: dict) -> None:
        day = date.fromisoformat(payload["date"])
        if self.trend_state.last_day is not None and day <= self.trend_state.last_day:
            raise StoreError(f"rollup for {day} arrived out of order")
        records = [TrendRecord.from_dict(r) for r in payload["records"]]
        self.records[day] = records
        self.trend_state.absorb(day, payload["counts"], records, payload["flagged"])

    def _apply_flagged(self, payload: dict) -> None:
        day = date.fromisoformat(payload["date"])
        self.board.enqueue_flagged(payload["cluster_ids"], day, self._known_cluster_ids())

    # -- review ------------------------------------------------------------------

    def decide_claim(
        self,
        decision: ClaimDecision,
        *,
        imported: bool = False,
        flag_date: date | None = None,
    ) -> list[Stage2Entry]:
        with self._lock:
            self._require_config()
            payload: dict = {"decision": decision.to_dict(), "imported": imported}
            if imported:
                resolved = flag_date or self._flag_date_for(decision.cluster_id)
                if resolved is None:
                    raise StoreError(
                        f"no flag date known for imported decision on {decision.cluster_id!r}"
                    )
                payload["flag_date"] = resolved.isoformat()
            spawned = self._apply_decision(payload)
            self._append(EventKind.CLAIM_DECIDED, payload)
            return spawned

    def _flag_date_for(self, cluster_id: str) -> date | None:
        entry = self.board.entries.get(cluster_id)
        if entry is not None:
            return entry.flag_date
        if cluster_id in self.trend_state.first_trending:
            return self.trend_state.first_trending[cluster_id]
        return self.trend_state.last_day

    def _apply_decision(self, payload: dict) -> list[Stage2Entry]:
        decision = ClaimDecision.from_dict(payload["decision"])
        if payload.get("imported"):
            return self.board.import_claim_decision(
                decision,
                self._sample_source,
                self._known_cluster_ids(),
                date.fromisoformat(payload["flag_date"]),
            )
        return self.board.record_claim_decision(decision, self._sample_source)

    def record_review(self, review: TweetReview, *, imported: bool = False) -> None:
        with self._lock:
            self._require_config()
            payload = {"review": review.to_dict(), "imported": imported}
            self._apply_review(payload)
            self._append(EventKind.TWEET_REVIEWED, payload)

    def _apply_review(self, payload: dict) -> None:
        review = TweetReview.from_dict(payload["review"])
        if payload.get("imported"):
            self.board.import_tweet_review(review)
        else:
            self.board.record_tweet_review(review)

    # -- review transfer ------------------------------------------------------------

    def export_reviews(self) -> dict:
        """Decisions and reviews in the same schema the import accepts."""
        with self._lock:
            return {
                "decisions": [d.to_dict() for d in self.board.all_decisions()],
                "reviews": [r.to_dict() for r in self.board.all_reviews()],
            }

    def import_reviews(self, data: Mapping) -> dict[str, int]:
        """Load externally collected decisions/reviews. Exact duplicates
        and conflicting re-decisions are skipped (no event appended), so
        re-importing the same file is a no-op."""

        def fingerprint(payload: dict) -> str:
            return json.dumps(payload, sort_keys=True)

        with self._lock:
            seen_decisions = {fingerprint(d.to_dict()) for d in self.board.all_decisions()}
            seen_reviews = {fingerprint(r.to_dict()) for r in self.board.all_reviews()}
            counts = {"decisions": 0, "reviews": 0, "skipped": 0}
            for raw in data.get("decisions", []):
                decision = ClaimDecision.from_dict(raw)
                key = fingerprint(decision.to_dict())
                if key in seen_decisions:
                    counts["skipped"] += 1
                    continue
                try:
                    self.decide_claim(decision, imported=True)
                    counts["decisions"] += 1
                    seen_decisions.add(key)
                except ConflictError:
                    counts["skipped"] += 1
            for raw in data.get("reviews", []):
                review = TweetReview.from_dict(raw)
                key = fingerprint(review.to_dict())
                if key in seen_reviews:
                    counts["skipped"] += 1
                    continue
                try:
                    self.record_review(review, imported=True)
                    counts["reviews"] += 1
                    seen_reviews.add(key)
                except ConflictError:
                    counts["skipped"] += 1
            return counts

    # -- queries -------------------------------------------------------------------

    def trends_for(self, day: date, top: int | None = None) -> list[TrendRecord]:
        records = self.records.get(day, [])
        return records[:top] if top else list(records)

    def latest_day(self) -> date | None:
        return max(self.records) if self.records else None

    def all_records(self) -> list[TrendRecord]:
        out: list[TrendRecord] = []
        for day in sorted(self.records):
            out.extend(self.records[day])
        return out

    def trend_csv(self, day: date | None = None) -> str:
        records = self.trends_for(day) if day else self.all_records()
        return records_to_csv(records)

    def ranking(self) -> list[str]:
        """Clusters ordered by their best (smallest) p over all days."""
        best: dict[str, tuple[float, str]] = {}
        for record in self.all_records():
            key = (record.p_value, record.canonical)
            if record.cluster_id not in best or key < best[record.cluster_id]:
                best[record.cluster_id] = key
        return sorted(best, key=lambda cid: best[cid])

    def export_events(self) -> list[dict]:
        with self._lock:
            return [record.to_dict() for record in self.log.replay()]

    # -- metrics --------------------------------------------------------------------

    def metrics_report(self) -> dict:
        """Assemble the full metrics report from current projections."""
        with self._lock:
            decisions = self.board.all_decisions()
            reviews = self.board.all_reviews()
            unapproved = self.board.unapproved_clusters()
            flag_dates = dict(self.trend_state.first_trending)

            ranking = self.ranking()
            top_k = {}
            if ranking:
                for k in TOP_K_REPORTED:
                    share = pct_unapproved_topk(ranking, unapproved, k)
                    top_k[str(k)] = {
                        "pct": share.pct,
                        "considered": share.considered,
                        "truncated": share.truncated,
                    }

            deltas: dict[str, float] = {}
            for entry in self.board.entries.values():
                for decision in entry.decisions:
                    if decision.debunk_date is None:
                        continue
                    deltas[entry.cluster_id] = compute_delta(
                        entry.flag_date, decision.debunk_date
                    )
                    break

            claim_hours = sum(
                (d.elapsed_seconds if d.elapsed_seconds is not None else DEFAULT_CLAIM_SECONDS)
                for d in decisions
            ) / 3600.0
            tweet_hours = sum(
                (r.elapsed_seconds if r.elapsed_seconds is not None else DEFAULT_TWEET_SECONDS)
                for r in reviews
            ) / 3600.0
            total_hours = claim_hours + tweet_hours
            violations = sum(1 for r in reviews if r.is_violation)
            vph = violations / total_hours if total_hours > 0 else None

            samples: dict[str, list[int]] = {}
            sizes: dict[str, int] = {}
            for cid, queue in self.board.stage2.items():
                scores = [
                    e.review.likert
                    for e in queue.values()
                    if e.review is not None and e.review.likert is not None
                ]
                if scores:
                    cluster = self.cluster_by_id(cid)
                    samples[cid] = scores
                    sizes[cid] = max(cluster.count if cluster else len(scores), len(scores))
            likert_distribution = (
                {str(k): v for k, v in extrapolate_likert(samples, sizes).items()}
                if samples
                else {}
            )

            dual = [e for e in self.board.entries.values() if len(e.decisions) >= 2]
            kappa = None
            if dual:
                kappa = cohen_kappa(
                    [e.decisions[0].category.value for e in dual],
                    [e.decisions[1].category.value for e in dual],
                )
            alpha = self._ordinal_alpha(reviews)

            return {
                "config": self.config.to_dict() if self.config else None,
                "counts": {
                    "posts": len(self.posts),
                    "mentions": len(self.mentions),
                    "clusters": len(self.clusters()),
                    "days": len(self.records),
                    "flagged": len(flag_dates),
                    "decisions": len(decisions),
                    "reviews": len(reviews),
                    "violations": violations,
                },
                "delta_days": deltas,
                "median_delta": statistics.median(deltas.values()) if deltas else None,
                "pct_unapproved_topk": top_k,
                "violations_per_hour": vph,
                "annotation_hours": total_hours,
                "likert_distribution": likert_distribution,
                "agreement": {"cohen_kappa": kappa, "krippendorff_alpha": alpha},
                "cumulative_trends": [
                    p.to_dict() for p in cumulative_trend_series(flag_dates, unapproved)
                ],
            }

    @staticmethod
    def _ordinal_alpha(reviews: Sequence[TweetReview]) -> float | None:
        by_post: dict[str, dict[str, int]] = {}
        raters: set[str] = set()
        for review in reviews:
            if review.likert is None:
                continue
            by_post.setdefault(review.post_id, {})[review.annotator_id] = review.likert
            raters.add(review.annotator_id)
        if not by_post or len(raters) < 2:
            return None
        rater_order = sorted(raters)
        matrix = [
            [by_post[pid].get(rater) for rater in rater_order] for pid in sorted(by_post)
        ]
        try:
            return krippendorff_alpha_ordinal(matrix)
        except MetricsError:
            return None

    # -- snapshots ---------------------------------------------------------------------

    def state_digest(self) -> str:
        """Stable hash of every projection; equal digests mean equal state."""
        with self._lock:
            blob = json.dumps(
                {
                    "config": self.config.to_dict() if self.config else None,
                    "posts": {pid: _post_payload(p) for pid, p in sorted(self.posts.items())},
                    "mentions": [m.to_dict() for m in self.mentions],
                    "records": {
                        day.isoformat(): [r.to_dict() for r in recs]
                        for day, recs in sorted(self.records.items())
                    },
                    "trend_state": self.trend_state.to_dict(),
                    "board": self.board.to_dict(),
                },
                sort_keys=True,
                separators=(",", ":"),
            )
            return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def write_snapshot(self) -> Path:
        """Write a point-in-time JSON snapshot next to the log (diagnostic
        and backup aid; the log stays the source of truth)."""
        with self._lock:
            snapshot = {
                "through_seq": self.log.next_seq - 1,
                "digest": self.state_digest(),
                "config": self.config.to_dict() if self.config else None,
                "trend_state": self.trend_state.to_dict(),
                "board": self.board.to_dict(),
                "records": {
                    day.isoformat(): [r.to_dict() for r in recs]
                    for day, recs in sorted(self.records.items())
                },
            }
            target = self.path.with_name(self.path.name + ".snapshot.json")
            tmp = target.with_suffix(".tmp")
            tmp.write_text(json.dumps(snapshot, indent=1) + "\n", encoding="utf-8")
            tmp.replace(target)
            self._since_snapshot = 0
            return target

    def close(self) -> None:
        self.log.close()
