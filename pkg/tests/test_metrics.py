"""Metric fixtures are hand-derived; agreement coefficients additionally
get independent oracles (sklearn for kappa, a nominal-metric
reimplementation for the two-category alpha equivalence)."""
import random
from datetime import date, datetime, timezone

import pytest
from sklearn.metrics import cohen_kappa_score

from trendwatch.metrics import (
    MetricsError,
    cohen_kappa,
    compute_delta,
    cumulative_trend_series,
    extrapolate_likert,
    krippendorff_alpha_ordinal,
    pct_unapproved_topk,
    token_f1,
    violations_per_hour,
)


# --- delta ------------------------------------------------------------------

def test_delta_days_fixture():
    assert compute_delta(date(2020, 4, 5), date(2020, 4, 10)) == 5.0


def test_delta_negative_when_debunk_first():
    assert compute_delta(date(2020, 4, 10), date(2020, 4, 5)) == -5.0


def test_delta_uses_utc_calendar_days():
    detected = datetime(2020, 4, 5, 23, 0, tzinfo=timezone.utc)
    debunked = datetime(2020, 4, 6, 1, 0, tzinfo=timezone.utc)
    assert compute_delta(detected, debunked) == 1.0
    assert compute_delta(detected, debunked, hours=True) == pytest.approx(2.0)


# --- top-k -----------------------------------------------------------------

def test_topk_fixture_three_of_five():
    ranked = ["a", "b", "c", "d", "e", "f"]
    share = pct_unapproved_topk(ranked, {"a", "c", "e", "f"}, 5)
    assert share.pct == pytest.approx(60.0)
    assert share.considered == 5
    assert not share.truncated


def test_topk_truncated_warns():
    share = pct_unapproved_topk(["a", "b"], {"a"}, 5)
    assert share.pct == pytest.approx(50.0)
    assert share.truncated


def test_topk_undecided_counts_as_not_unapproved():
    assert pct_unapproved_topk(["a", "b"], set(), 2).pct == 0.0


def test_topk_domain_errors():
    with pytest.raises(MetricsError):
        pct_unapproved_topk([], {"a"}, 5)
    with pytest.raises(MetricsError):
        pct_unapproved_topk(["a"], {"a"}, 0)


# --- violations per hour ------------------------------------------------------

def test_violations_per_hour_fixture():
    # 40 violations over 10*0.02 + 100*0.005 = 0.7 hours
    value = violations_per_hour(40, 10, 100, 0.02, 0.005)
    assert value == pytest.approx(57.142857142857, rel=1e-9)


def test_violations_per_hour_zero_hours_is_domain_error():
    with pytest.raises(MetricsError):
        violations_per_hour(1, 0, 0)
    with pytest.raises(MetricsError):
        violations_per_hour(1, 10, 0, 0.0, 0.0)


# --- likert extrapolation -------------------------------------------------------

def test_extrapolate_likert_fixture():
    scores = [5, 5, 4, 4, 4, 3, 3, 2, 1, 1]
    dist = extrapolate_likert({"c": scores}, {"c": 100})
    assert dist == pytest.approx({5: 0.2, 4: 0.3, 3: 0.2, 2: 0.1, 1: 0.2})
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-9)


def test_extrapolate_likert_weights_by_cluster_size():
    dist = extrapolate_likert({"big": [5], "small": [1]}, {"big": 90, "small": 10})
    assert dist[5] == pytest.approx(0.9)
    assert dist[1] == pytest.approx(0.1)
    assert dist[3] == 0.0


def test_extrapolate_likert_domain_errors():
    with pytest.raises(MetricsError):
        extrapolate_likert({}, {})
    with pytest.raises(MetricsError):
        extrapolate_likert({"c": []}, {"c": 5})
    with pytest.raises(MetricsError):
        extrapolate_likert({"c": [1, 2, 3]}, {"c": 2})  # size below sample
    with pytest.raises(MetricsError):
        extrapolate_likert({"c": [0]}, {"c": 5})


# --- kappa ---------------------------------------------------------------------

def test_kappa_independent_raters_fixture():
    # observed 0.5 equals chance 0.5
    assert cohen_kappa(["x", "x", "y", "y"], ["x", "y", "x", "y"]) == pytest.approx(0.0)


def test_kappa_disjoint_single_categories():
    assert cohen_kappa(["x", "x"], ["y", "y"]) <= 0.0


def test_kappa_perfect_agreement():
    assert cohen_kappa(["a", "b", "c"], ["a", "b", "c"]) == pytest.approx(1.0)
    assert cohen_kappa(["a", "a"], ["a", "a"]) == 1.0  # degenerate single category


def test_kappa_matches_sklearn_on_random_data():
    rng = random.Random(99)
    for _ in range(60):
        n = rng.randint(2, 40)
        cats = ["u", "v", "w"][: rng.randint(2, 3)]
        a = [rng.choice(cats) for _ in range(n)]
        b = [rng.choice(cats) for _ in range(n)]
        if len(set(a)) == 1 and a == b:
            continue  # sklearn returns nan for the degenerate case
        expected = cohen_kappa_score(a, b)
        assert cohen_kappa(a, b) == pytest.approx(expected, abs=1e-12)


def test_kappa_domain_errors():
    with pytest.raises(MetricsError):
        cohen_kappa([], [])
    with pytest.raises(MetricsError):
        cohen_kappa(["a"], ["a", "b"])


# --- krippendorff ----------------------------------------------------------------

def nominal_alpha(matrix):
    """Independent oracle: nominal-metric alpha via coincidence counts."""
    units = [[r for r in row if r is not None] for row in matrix]
    units = [u for u in units if len(u) >= 2]
    marginals = {}
    agree = 0.0
    n = 0.0
    for u in units:
        m = len(u)
        for i, c in enumerate(u):
            marginals[c] = marginals.get(c, 0) + 1
            n += 1
            for j, k in enumerate(u):
                if i != j and c == k:
                    agree += 1.0 / (m - 1)
    d_o = n - agree
    d_e = (n * n - sum(v * v for v in marginals.values())) / (n - 1)
    if d_e == 0:
        return 1.0
    return 1.0 - d_o / d_e


def test_alpha_perfect_agreement_is_one():
    assert krippendorff_alpha_ordinal([[3, 3, 3], [1, 1, None]]) == 1.0


def test_alpha_inverted_extremes_fixture():
    # two items, two raters, ratings (1,5) and (5,1):
    # n1=n5=2, o(1,5)=o(5,1)=2, d2(1,5)=(4-2)^2=4
    # D_o = 16, D_e = 2*2*4*2/3 = 32/3, alpha = 1 - 16/(32/3) = -0.5
    assert krippendorff_alpha_ordinal([[1, 5], [5, 1]]) == pytest.approx(-0.5)


def test_alpha_pairwise_deletion():
    # items rated by one rater drop out; the single co-rated item decides
    matrix = [[4, None, None], [None, 2, None], [3, 3, None]]
    assert krippendorff_alpha_ordinal(matrix) == 1.0


def test_alpha_no_corated_items_errors():
    with pytest.raises(MetricsError):
        krippendorff_alpha_ordinal([[1, None], [None, 5]])


def test_alpha_matches_nominal_oracle_on_binary_data():
    # with two categories every non-zero distance is the same constant, so
    # ordinal alpha must equal nominal alpha
    rng = random.Random(5)
    for _ in range(40):
        rows = []
        for _ in range(rng.randint(2, 12)):
            row = [rng.choice([1, 2, None]) for _ in range(4)]
            rows.append(row)
        units = [[r for r in row if r is not None] for row in rows]
        if not any(len(u) >= 2 for u in units):
            continue
        values = {r for u in units if len(u) >= 2 for r in u}
        if len(values) < 2:
            continue  # both computations hit the degenerate 1.0 branch anyway
        assert krippendorff_alpha_ordinal(rows) == pytest.approx(nominal_alpha(rows), abs=1e-12)


def test_alpha_never_exceeds_one():
    rng = random.Random(11)
    for _ in range(30):
        rows = [[rng.choice([1, 2, 3, 4, 5, None]) for _ in range(5)] for _ in range(8)]
        try:
            assert krippendorff_alpha_ordinal(rows) <= 1.0 + 1e-12
        except MetricsError:
            pass


# --- token F1 -----------------------------------------------------------------

def test_token_f1_fixture():
    result = token_f1(["vitamin", "c"], ["vitamin"])
    assert result.precision == pytest.approx(0.5)
    assert result.recall == pytest.approx(1.0)
    assert result.f1 == pytest.approx(2 / 3, rel=1e-12)


def test_token_f1_edge_cases():
    assert token_f1([], []) == (1.0, 1.0, 1.0)
    assert token_f1([], ["x"]) == (0.0, 0.0, 0.0)
    assert token_f1(["x"], []) == (0.0, 0.0, 0.0)
    assert token_f1(["x"], ["y"]).f1 == 0.0


def test_token_f1_multiset_counts():
    result = token_f1(["c", "c", "vitamin"], ["c", "vitamin"])
    assert result.precision == pytest.approx(2 / 3)
    assert result.recall == pytest.approx(1.0)


# --- cumulative series ------------------------------------------------------------

def test_cumulative_series_steps_at_flag_dates():
    flags = {"a": date(2020, 4, 3), "b": date(2020, 4, 5)}
    series = cumulative_trend_series(flags, unapproved={"a"})
    assert [(p.day.isoformat(), p.potential, p.actual) for p in series] == [
        ("2020-04-03", 1, 1),
        ("2020-04-05", 2, 1),
    ]


def test_cumulative_series_monotone():
    rng = random.Random(3)
    flags = {f"c{i}": date(2020, 4, 1 + rng.randint(0, 20)) for i in range(30)}
    unapproved = {cid for cid in flags if rng.random() < 0.4}
    series = cumulative_trend_series(flags, unapproved)
    for earlier, later in zip(series, series[1:]):
        assert later.potential >= earlier.potential
        assert later.actual >= earlier.actual
        assert later.potential >= later.actual


def test_cumulative_series_empty():
    assert cumulative_trend_series({}, set()) == []
