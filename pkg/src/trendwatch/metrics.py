"""Evaluation metrics for detection timing, moderation yield, annotation
cost, agreement, and extraction quality.

Every function is pure; report assembly from a live store happens in the
store module. Agreement coefficients are computed from first principles
(observed vs expected agreement / disagreement), not via a stats library,
so they can be cross-checked independently.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from datetime import date, datetime, timezone
from typing import Collection, Iterable, Mapping, NamedTuple, Sequence

# Fallback per-item annotation costs (seconds) when a dataset carries no
# recorded timings.
DEFAULT_CLAIM_SECONDS = 89.7
DEFAULT_TWEET_SECONDS = 16.1

LIKERT_SCORES = (1, 2, 3, 4, 5)


class MetricsError(ValueError):
    pass


def _as_utc_date(value: date | datetime) -> date:
    if isinstance(value, datetime):
        if value.tzinfo is None:
            value = value.replace(tzinfo=timezone.utc)
        return value.astimezone(timezone.utc).date()
    return value


def compute_delta(detected: date | datetime, debunked: date | datetime, *, hours: bool = False) -> float:
    """Days (default) or hours from detection to debunk publication.

    Positive means the system flagged the claim before the debunk
    appeared. Day granularity is whole UTC calendar days.
    """
    if hours:
        def as_dt(v):
            if isinstance(v, datetime):
                return v if v.tzinfo else v.replace(tzinfo=timezone.utc)
            return datetime(v.year, v.month, v.day, tzinfo=timezone.utc)
        return (as_dt(debunked) - as_dt(detected)).total_seconds() / 3600.0
    return float((_as_utc_date(debunked) - _as_utc_date(detected)).days)


class TopKShare(NamedTuple):
    pct: float
    considered: int
    truncated: bool


def pct_unapproved_topk(ranked_ids: Sequence[str], unapproved: Collection[str], k: int) -> TopKShare:
    """Share (0..100) of the top-k ranked clusters that were judged
    unapproved. Undecided clusters count as not unapproved. When fewer
    than k clusters exist the share is over what is available and the
    result is marked truncated."""
    if k <= 0:
        raise MetricsError("k must be positive")
    if not ranked_ids:
        raise MetricsError("ranking is empty")
    top = list(ranked_ids[:k])
    hits = sum(1 for cid in top if cid in unapproved)
    return TopKShare(pct=100.0 * hits / len(top), considered=len(top), truncated=len(top) < k)


def violations_per_hour(
    violation_count: int,
    claim_count: int,
    tweet_count: int,
    claim_hours_each: float = DEFAULT_CLAIM_SECONDS / 3600.0,
    tweet_hours_each: float = DEFAULT_TWEET_SECONDS / 3600.0,
) -> float:
    """Violations found per annotation hour spent across both stages."""
    if violation_count < 0 or claim_count < 0 or tweet_count < 0:
        raise MetricsError("counts must be non-negative")
    if claim_hours_each < 0 or tweet_hours_each < 0:
        raise MetricsError("rates must be non-negative")
    hours = claim_count * claim_hours_each + tweet_count * tweet_hours_each
    if hours <= 0:
        raise MetricsError("total annotation hours must be positive")
    return violation_count / hours


def extrapolate_likert(
    samples: Mapping[str, Sequence[int]], cluster_sizes: Mapping[str, int]
) -> dict[int, float]:
    """Corpus-level Likert distribution from per-cluster samples.

    Each cluster's empirical sample distribution is weighted by the full
    cluster size, then the mixture is normalized. Result maps every score
    1..5 to a fraction; fractions sum to 1."""
    if not samples:
        raise MetricsError("no likert samples")
    weighted = {score: 0.0 for score in LIKERT_SCORES}
    total_weight = 0.0
    for cid, scores in samples.items():
        if not scores:
            raise MetricsError(f"cluster {cid!r} has an empty sample")
        if cid not in cluster_sizes:
            raise MetricsError(f"cluster {cid!r} has no size")
        size = cluster_sizes[cid]
        if size < len(scores):
            raise MetricsError(f"cluster {cid!r} size {size} below sample count {len(scores)}")
        counts = Counter(scores)
        if set(counts) - set(LIKERT_SCORES):
            raise MetricsError(f"cluster {cid!r} has scores outside 1..5")
        for score, count in counts.items():
            weighted[score] += size * count / len(scores)
        total_weight += size
    if total_weight <= 0:
        raise MetricsError("total cluster weight is zero")
    return {score: weighted[score] / total_weight for score in LIKERT_SCORES}


def cohen_kappa(rater_a: Sequence, rater_b: Sequence) -> float:
    """Chance-corrected agreement between two raters over paired items."""
    if len(rater_a) != len(rater_b):
        raise MetricsError("raters must label the same items")
    n = len(rater_a)
    if n == 0:
        raise MetricsError("no paired labels")
    observed = sum(1 for x, y in zip(rater_a, rater_b) if x == y) / n
    counts_a = Counter(rater_a)
    counts_b = Counter(rater_b)
    expected = sum(
        (counts_a[cat] / n) * (counts_b.get(cat, 0) / n) for cat in counts_a
    )
    if expected >= 1.0:
        # both raters used a single identical category everywhere
        return 1.0
    return (observed - expected) / (1.0 - expected)


def krippendorff_alpha_ordinal(matrix: Iterable[Iterable[int | None]]) -> float:
    """Krippendorff's alpha with the ordinal metric.

    Rows are items, columns raters, None marks a missing rating. Items
    with fewer than two ratings drop out (pairwise deletion). Computed
    via the coincidence matrix; the ordinal distance between categories
    c < k is (sum of marginals from c to k minus the endpoints' average)
    squared."""
    units: list[list[int]] = []
    for row in matrix:
        ratings = [r for r in row if r is not None]
        if len(ratings) >= 2:
            units.append(ratings)
    if not units:
        raise MetricsError("no items with two or more ratings")

    coincidence: dict[tuple[int, int], float] = {}
    marginals: dict[int, float] = {}
    for ratings in units:
        m = len(ratings)
        weight = 1.0 / (m - 1)
        for i, c in enumerate(ratings):
            for j, k in enumerate(ratings):
                if i == j:
                    continue
                coincidence[(c, k)] = coincidence.get((c, k), 0.0) + weight
                marginals[c] = marginals.get(c, 0.0) + weight
    n_total = sum(marginals.values())
    values = sorted(marginals)

    def ordinal_distance_sq(c: int, k: int) -> float:
        if c == k:
            return 0.0
        lo, hi = min(c, k), max(c, k)
        between = sum(marginals.get(v, 0.0) for v in values if lo <= v <= hi)
        return (between - (marginals[lo] + marginals[hi]) / 2.0) ** 2

    observed = sum(
        weight * ordinal_distance_sq(c, k) for (c, k), weight in coincidence.items()
    )
    expected = sum(
        marginals[c] * marginals[k] * ordinal_distance_sq(c, k)
        for c in values
        for k in values
    ) / (n_total - 1.0)
    if expected == 0.0:
        return 1.0  # every rating identical: perfect agreement
    return 1.0 - observed / expected


class TokenF1(NamedTuple):
    precision: float
    recall: float
    f1: float


def token_f1(predicted: Iterable[str], gold: Iterable[str]) -> TokenF1:
    """Multiset token overlap. Empty vs empty is perfect; empty vs
    non-empty scores zero."""
    pred = Counter(predicted)
    ref = Counter(gold)
    n_pred = sum(pred.values())
    n_ref = sum(ref.values())
    if n_pred == 0 and n_ref == 0:
        return TokenF1(1.0, 1.0, 1.0)
    if n_pred == 0 or n_ref == 0:
        return TokenF1(0.0, 0.0, 0.0)
    overlap = sum(min(count, ref[token]) for token, count in pred.items())
    precision = overlap / n_pred
    recall = overlap / n_ref
    if overlap == 0:
        return TokenF1(precision, recall, 0.0)
    return TokenF1(precision, recall, 2 * precision * recall / (precision + recall))


@dataclass(frozen=True)
class SeriesPoint:
    day: date
    potential: int
    actual: int

    def to_dict(self) -> dict:
        return {"date": self.day.isoformat(), "potential": self.potential, "actual": self.actual}


def cumulative_trend_series(
    flag_dates: Mapping[str, date], unapproved: Collection[str]
) -> list[SeriesPoint]:
    """Running totals of flagged clusters (potential) and flagged clusters
    later judged unapproved (actual), stepping on flag dates."""
    if not flag_dates:
        return []
    days = sorted(set(flag_dates.values()))
    series = []
    for day in days:
        potential = sum(1 for d in flag_dates.values() if d <= day)
        actual = sum(1 for cid, d in flag_dates.items() if d <= day and cid in unapproved)
        series.append(SeriesPoint(day=day, potential=potential, actual=actual))
    return series
