"""Daily trend statistics over claim clusters.

For a cluster T on day D the 2x2 contingency table is

        a = posts mentioning T on D        b = posts mentioning T before D
        c = other posts on D               d = other posts before D

and trendiness is the one-tailed Fisher's exact test: the probability,
with margins fixed, of seeing a mentions or more on day D. Small p means
the day's mention share is an outlier against the cluster's history.

All probabilities are computed in log-space from a cached log-factorial
table. The table keeps a hi/lo compensation term per entry so a point
probability stays accurate to ~1e-12 relative even at corpus scale; the
tail is accumulated with the successive-ratio recurrence in rescaled
linear space, which avoids per-term log/exp error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import date
from typing import Iterable, Mapping

MIN_P = 1e-320  # keeps z = -log10(p) finite


class TableDomainError(ValueError):
    """Raised for contingency tables outside the test's domain."""


@dataclass(frozen=True)
class ContingencyTable:
    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        for name, value in (("a", self.a), ("b", self.b), ("c", self.c), ("d", self.d)):
            if not isinstance(value, int) or value < 0:
                raise TableDomainError(f"cell {name} must be a non-negative integer, got {value!r}")
        if self.n == 0:
            raise TableDomainError("empty table (N = 0)")

    @property
    def row_total(self) -> int:
        """C(T): posts mentioning the cluster, day included."""
        return self.a + self.b

    @property
    def col_total(self) -> int:
        """C(D): posts on the day."""
        return self.a + self.c

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d


def _two_sum(x: float, y: float) -> tuple[float, float]:
    s = x + y
    t = s - x
    err = (x - (s - t)) + (y - t)
    return s, err


class LogFactorialTable:
    """Cached log(k!) values, extended on demand.

    Entries are held as hi/lo float pairs (hi + lo == log k! to roughly
    double-double precision) so that sums and differences of many entries
    can be combined exactly with math.fsum before a single final rounding.
    """

    def __init__(self, initial: int = 128):
        self._hi = [0.0, 0.0]
        self._lo = [0.0, 0.0]
        self.ensure(initial)

    def ensure(self, n: int) -> None:
        if n < len(self._hi) - 1:
            return
        hi = self._hi[-1]
        lo = self._lo[-1]
        for k in range(len(self._hi), n + 1):
            s, err = _two_sum(hi, math.log(k))
            lo += err
            hi, lo = _two_sum(s, lo)
            self._hi.append(hi)
            self._lo.append(lo)

    def log_factorial(self, k: int) -> float:
        self.ensure(k)
        return self._hi[k] + self._lo[k]

    def parts(self, k: int) -> tuple[float, float]:
        self.ensure(k)
        return self._hi[k], self._lo[k]


_TABLE = LogFactorialTable()


def log_hypergeometric_probability(table: ContingencyTable) -> float:
    """log P(a) for fixed margins: the central hypergeometric point mass.

    P(a) = C(T)! C(notT)! C(D)! C(notD)! / (N! a! b! c! d!)
    """
    _TABLE.ensure(table.n)
    terms = []
    for k in (table.row_total, table.c + table.d, table.col_total, table.b + table.d):
        hi, lo = _TABLE.parts(k)
        terms.append(hi)
        terms.append(lo)
    for k in (table.n, table.a, table.b, table.c, table.d):
        hi, lo = _TABLE.parts(k)
        terms.append(-hi)
        terms.append(-lo)
    return math.fsum(terms)


def hypergeometric_probability(table: ContingencyTable) -> float:
    p = math.exp(log_hypergeometric_probability(table))
    return min(p, 1.0)


def _support_bounds(row_total: int, col_total: int, n: int) -> tuple[int, int]:
    return max(0, row_total + col_total - n), min(row_total, col_total)


def fisher_one_tailed(table: ContingencyTable) -> float:
    """Upper-tail probability: sum of P(k) for k from a to min(C(T), C(D)).

    The first term comes from the log-factorial table; later terms use
    P(k+1)/P(k) = (C(T)-k)(C(D)-k) / ((k+1)(d_k+1)) accumulated in linear
    space with periodic rescaling, so no precision is lost to per-term
    exp/log round-trips. Result is clamped to (0, 1].
    """
    ct, cd, n = table.row_total, table.col_total, table.n
    k_min, k_max = _support_bounds(ct, cd, n)
    a = table.a
    if a == k_min:
        return 1.0  # tail covers the whole support
    log_first = log_hypergeometric_probability(table)
    term = 1.0
    total = 1.0
    log_scale = 0.0
    for k in range(a, k_max):
        term *= ((ct - k) * (cd - k)) / ((k + 1) * (n - ct - cd + k + 1))
        total += term
        if total > 1e280:
            log_scale += math.log(total)
            term /= total
            total = 1.0
    log_p = log_first + log_scale + math.log(total)
    if log_p >= 0.0:
        return 1.0
    return max(math.exp(log_p), MIN_P)


def support_probabilities(row_total: int, col_total: int, n: int) -> list[float]:
    """Point probabilities over the full support of a for fixed margins.

    Anchored at the distribution mode (never underflows) and extended
    outward with the successive-ratio recurrence; far-tail terms may
    underflow to 0.0, which is harmless for normalization checks.
    """
    if n <= 0 or not 0 <= row_total <= n or not 0 <= col_total <= n:
        raise TableDomainError(f"bad margins ({row_total}, {col_total}, {n})")
    k_min, k_max = _support_bounds(row_total, col_total, n)
    mode = (row_total + 1) * (col_total + 1) // (n + 2)
    mode = min(max(mode, k_min), k_max)
    anchor = ContingencyTable(
        a=mode, b=row_total - mode, c=col_total - mode, d=n - row_total - col_total + mode
    )
    p_mode = math.exp(log_hypergeometric_probability(anchor))
    probs = [0.0] * (k_max - k_min + 1)
    probs[mode - k_min] = p_mode
    p = p_mode
    for k in range(mode, k_max):  # upward
        p *= ((row_total - k) * (col_total - k)) / ((k + 1) * (n - row_total - col_total + k + 1))
        probs[k + 1 - k_min] = p
    p = p_mode
    for k in range(mode, k_min, -1):  # downward
        p *= (k * (n - row_total - col_total + k)) / ((row_total - k + 1) * (col_total - k + 1))
        probs[k - 1 - k_min] = p
    return probs


def trendiness(p: float) -> float:
    return -math.log10(max(p, MIN_P))


@dataclass
class TrendRecord:
    day: date
    cluster_id: str
    canonical: str
    table: ContingencyTable
    p_value: float
    z: float
    rank: int = 0
    novel: bool = False

    def to_dict(self) -> dict:
        return {
            "date": self.day.isoformat(),
            "rank": self.rank,
            "cluster_id": self.cluster_id,
            "canonical": self.canonical,
            "a": self.table.a,
            "cluster_total": self.table.row_total,
            "day_total": self.table.col_total,
            "corpus_total": self.table.n,
            "p": self.p_value,
            "z": self.z,
            "novel": self.novel,
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "TrendRecord":
        a = int(raw["a"])
        table = ContingencyTable(
            a=a,
            b=int(raw["cluster_total"]) - a,
            c=int(raw["day_total"]) - a,
            d=int(raw["corpus_total"]) - int(raw["cluster_total"]) - int(raw["day_total"]) + a,
        )
        return cls(
            day=date.fromisoformat(raw["date"]),
            cluster_id=raw["cluster_id"],
            canonical=raw["canonical"],
            table=table,
            p_value=float(raw["p"]),
            z=float(raw["z"]),
            rank=int(raw["rank"]),
            novel=bool(raw["novel"]),
        )


@dataclass
class RollupResult:
    day: date
    records: list[TrendRecord]
    flagged: list[str]
    warmup: bool = False


@dataclass
class TrendState:
    """Mutable cross-day bookkeeping for the rollup loop."""

    alpha: float = 1.15e-6
    warmup_days: int = 31
    top_k_memory: int = 100
    cumulative: dict[str, int] = field(default_factory=dict)
    cumulative_total: int = 0
    days_seen: int = 0
    last_day: date | None = None
    top_history: set[str] = field(default_factory=set)
    first_trending: dict[str, date] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "warmup_days": self.warmup_days,
            "top_k_memory": self.top_k_memory,
            "cumulative": dict(sorted(self.cumulative.items())),
            "cumulative_total": self.cumulative_total,
            "days_seen": self.days_seen,
            "last_day": self.last_day.isoformat() if self.last_day else None,
            "top_history": sorted(self.top_history),
            "first_trending": {k: v.isoformat() for k, v in sorted(self.first_trending.items())},
        }

    @classmethod
    def from_dict(cls, raw: Mapping) -> "TrendState":
        state = cls(
            alpha=float(raw["alpha"]),
            warmup_days=int(raw["warmup_days"]),
            top_k_memory=int(raw["top_k_memory"]),
        )
        state.cumulative = {k: int(v) for k, v in raw["cumulative"].items()}
        state.cumulative_total = int(raw["cumulative_total"])
        state.days_seen = int(raw["days_seen"])
        state.last_day = date.fromisoformat(raw["last_day"]) if raw["last_day"] else None
        state.top_history = set(raw["top_history"])
        state.first_trending = {k: date.fromisoformat(v) for k, v in raw["first_trending"].items()}
        return state

    def absorb(
        self,
        day: date,
        counts: Mapping[str, int],
        records: list["TrendRecord"],
        flagged: Iterable[str],
    ) -> None:
        """Fold one completed day into the bookkeeping: novelty memory,
        first-trending dates, cumulative counts. Shared by the live rollup
        and event-log replay so both advance state identically."""
        self.top_history.update(r.cluster_id for r in records[: self.top_k_memory])
        for cid in flagged:
            self.first_trending.setdefault(cid, day)
        for cid, c in counts.items():
            self.cumulative[cid] = self.cumulative.get(cid, 0) + int(c)
        self.cumulative_total += sum(int(c) for c in counts.values())
        self.days_seen += 1
        self.last_day = day


def detect_novel(records: Iterable[TrendRecord], state: TrendState, alpha: float) -> list[str]:
    """Cluster ids to flag: p strictly below alpha and never previously in
    a day's top-100. Consults history as of before the records' day."""
    return [
        r.cluster_id
        for r in records
        if r.p_value < alpha and r.cluster_id not in state.top_history
    ]


def daily_rollup(
    state: TrendState,
    day: date,
    day_counts: Mapping[str, int],
    canonicals: Mapping[str, str] | None = None,
) -> RollupResult:
    """Roll one day of per-cluster mention counts into ranked trend records.

    Days must arrive in strictly increasing order. The first
    state.warmup_days distinct days only accumulate counts. Ranking is by
    (p ascending, a descending, canonical ascending); the day's top-100
    enter the novelty memory after flags are decided against the memory
    as of before the day.
    """
    if state.last_day is not None and day <= state.last_day:
        raise ValueError(f"rollup days must be strictly increasing ({day} after {state.last_day})")
    names = canonicals or {}
    counts = {cid: int(c) for cid, c in day_counts.items() if int(c) != 0}
    if any(c < 0 for c in counts.values()):
        raise ValueError("negative day count")
    day_total = sum(counts.values())

    if state.days_seen < state.warmup_days:
        state.absorb(day, counts, [], [])
        return RollupResult(day=day, records=[], flagged=[], warmup=True)

    n = state.cumulative_total + day_total
    records = []
    for cid, a in counts.items():
        before = state.cumulative.get(cid, 0)
        table = ContingencyTable(a=a, b=before, c=day_total - a, d=state.cumulative_total - before)
        p = fisher_one_tailed(table)
        records.append(
            TrendRecord(
                day=day,
                cluster_id=cid,
                canonical=names.get(cid, cid),
                table=table,
                p_value=p,
                z=trendiness(p),
            )
        )
        assert table.n == n
    records.sort(key=lambda r: (r.p_value, -r.table.a, r.canonical))
    for rank, record in enumerate(records, start=1):
        record.rank = rank
    flagged = detect_novel(records, state, state.alpha)
    flagged_set = set(flagged)
    for record in records:
        record.novel = record.cluster_id in flagged_set
    state.absorb(day, counts, records, flagged)
    return RollupResult(day=day, records=records, flagged=flagged)


CSV_HEADER = "date,rank,canonical,a,cluster_total,day_total,corpus_total,p,z,novel"


def records_to_csv(records: Iterable[TrendRecord]) -> str:
    """Render records as CSV, deterministically (shortest-roundtrip floats)."""
    lines = [CSV_HEADER]
    for r in records:
        canonical = r.canonical
        if any(ch in canonical for ch in ",\"\n"):
            canonical = '"' + canonical.replace('"', '""') + '"'
        lines.append(
            f"{r.day.isoformat()},{r.rank},{canonical},{r.table.a},{r.table.row_total},"
            f"{r.table.col_total},{r.table.n},{r.p_value!r},{r.z!r},{str(r.novel).lower()}"
        )
    return "\n".join(lines) + "\n"


def records_to_json(records: Iterable[TrendRecord]) -> list[dict]:
    return [r.to_dict() for r in records]
