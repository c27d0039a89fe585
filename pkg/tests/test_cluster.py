import random
from datetime import date

import pytest
from hypothesis import given
from hypothesis import strategies as st

from trendwatch.cluster import (
    ApprovedList,
    ClaimCluster,
    build_clusters,
    choose_canonical,
    cluster_claims,
    cluster_id_for,
    filter_approved,
    filter_supporting,
    jaccard,
    key_tokens,
    partition_keys,
)
from trendwatch.extract import ClaimSpan
from trendwatch.stance import StanceLabel, StancedMention


def mention(key, stance=StanceLabel.SUPPORTING):
    claim = ClaimSpan(post_id="p", surface=key, start=0, end=max(1, len(key)), normalized=key)
    return StancedMention(claim=claim, stance=stance)


# --- jaccard ---------------------------------------------------------------

def test_jaccard_frozen_values():
    assert jaccard(key_tokens("vitamin c"), key_tokens("vitamin d")) == pytest.approx(1 / 3)
    assert jaccard(frozenset(), frozenset()) == 0.0
    assert jaccard(key_tokens("zinc"), key_tokens("zinc")) == 1.0


@given(st.frozensets(st.text(min_size=1, max_size=4), max_size=8),
       st.frozensets(st.text(min_size=1, max_size=4), max_size=8))
def test_jaccard_bounds_and_symmetry(a, b):
    value = jaccard(a, b)
    assert 0.0 <= value <= 1.0
    assert value == jaccard(b, a)


# --- partitioning ------------------------------------------------------------

def test_single_link_merges_overlapping_phrases():
    parts = partition_keys(["hot lemon water", "lemon water"], 0.5)
    assert parts == [frozenset({"hot lemon water", "lemon water"})]


def test_unrelated_keys_stay_apart():
    parts = partition_keys(["zinc", "garlic"], 0.5)
    assert sorted(len(p) for p in parts) == [1, 1]


def test_transitive_linking():
    # a-b and b-c meet the 0.6 threshold, a-c (0.5) does not; single link
    # still joins all three through b
    a, b, c = "lemon water", "hot lemon water", "hot lemon water drink"
    assert jaccard(key_tokens(a), key_tokens(b)) >= 0.6
    assert jaccard(key_tokens(b), key_tokens(c)) >= 0.6
    assert jaccard(key_tokens(a), key_tokens(c)) < 0.6
    assert partition_keys([a, b, c], 0.6) == [frozenset({a, b, c})]


def test_permutation_invariance_explicit():
    keys = ["hot lemon water", "lemon water", "zinc", "garlic soup", "garlic"]
    rng = random.Random(7)
    reference = sorted(sorted(p) for p in partition_keys(keys, 0.5))
    for _ in range(20):
        shuffled = keys[:]
        rng.shuffle(shuffled)
        assert sorted(sorted(p) for p in partition_keys(shuffled, 0.5)) == reference


def test_threshold_validation():
    with pytest.raises(ValueError):
        partition_keys(["a"], 0.0)
    with pytest.raises(ValueError):
        partition_keys(["a"], 1.5)


# --- canonical choice --------------------------------------------------------

def test_canonical_prefers_count_then_first_seen_then_lex():
    members = ["lemon water", "hot lemon water"]
    assert choose_canonical(members, {"lemon water": 5, "hot lemon water": 2}) == "lemon water"
    seen = {"lemon water": date(2020, 4, 2), "hot lemon water": date(2020, 4, 1)}
    assert choose_canonical(members, {"lemon water": 3, "hot lemon water": 3}, seen) == "hot lemon water"
    assert choose_canonical(members, {"lemon water": 3, "hot lemon water": 3}) == "hot lemon water"


def test_cluster_claims_multiset():
    clusters = cluster_claims(["lemon water", "lemon water", "hot lemon water", "zinc"], 0.5)
    by_canonical = {c.canonical: c for c in clusters}
    assert set(by_canonical) == {"lemon water", "zinc"}
    assert by_canonical["lemon water"].members == frozenset({"lemon water", "hot lemon water"})
    assert by_canonical["lemon water"].cluster_id == cluster_id_for("lemon water")


def test_build_clusters_attributes_posts_once_per_cluster():
    day1, day2 = date(2020, 4, 1), date(2020, 4, 2)
    mentions = [
        ("lemon water", "p1", day1),
        ("hot lemon water", "p1", day1),  # same post, same eventual cluster
        ("lemon water", "p2", day2),
        ("zinc", "p2", day2),
    ]
    clusters = {c.canonical: c for c in build_clusters(mentions, 0.5)}
    lemon = clusters["lemon water"]
    assert lemon.posts == (("p1", day1), ("p2", day2))
    assert lemon.count == 2
    assert lemon.first_seen == day1
    assert lemon.day_counts() == {day1: 1, day2: 1}
    assert clusters["zinc"].posts == (("p2", day2),)


def test_cluster_ids_are_stable_and_url_safe():
    cid = cluster_id_for("hot lemon water")
    assert cid == cluster_id_for("hot lemon water")
    assert cid.isalnum() and len(cid) == 13


# --- filters -----------------------------------------------------------------

def test_filter_supporting():
    kept = filter_supporting(
        [mention("a"), mention("b", StanceLabel.REFUTING), mention("c", StanceLabel.NO_STANCE)]
    )
    assert [m.claim.normalized for m in kept] == ["a"]


def test_approved_list_whole_alias_match():
    approved = ApprovedList.from_file()
    assert approved.version
    assert approved.matches("remdesivir")
    assert approved.matches("face mask")
    assert approved.matches("mask")
    assert not approved.matches("remdesivir tea")
    assert not approved.matches("masks are useless")
    kept = filter_approved([mention("remdesivir"), mention("remdesivir tea")], approved)
    assert [m.claim.normalized for m in kept] == ["remdesivir tea"]


def test_approved_list_matches_are_case_and_order_insensitive():
    approved = ApprovedList("v", ["Face Mask"])
    assert approved.matches("face mask")
    assert approved.matches("MASK FACE")
    assert not approved.matches("face")


# --- randomized properties ----------------------------------------------------

@given(st.lists(st.sampled_from(["zinc", "hot zinc", "zinc tea", "garlic", "garlic soup", "vitamin c"]),
                min_size=1, max_size=12),
       st.sampled_from([0.3, 0.5, 0.8]))
def test_partition_is_a_partition(keys, threshold):
    parts = partition_keys(keys, threshold)
    union = set()
    for part in parts:
        assert part, "no empty groups"
        assert not (part & union), "groups are disjoint"
        union |= part
    assert union == set(keys)


def test_cluster_claims_deterministic_over_runs():
    keys = ["hot lemon water", "lemon water", "zinc", "garlic soup", "garlic", "vitamin c"] * 3
    first = cluster_claims(keys, 0.5)
    second = cluster_claims(list(keys), 0.5)
    assert [(c.cluster_id, c.canonical, c.members) for c in first] == [
        (c.cluster_id, c.canonical, c.members) for c in second
    ]
