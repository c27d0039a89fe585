"""Command-line interface run in-process on small corpora."""
from __future__ import annotations

import json
from datetime import date, timedelta

import pytest

from trendwatch.cli import main
from trendwatch.store import Store

DAY0 = date(2020, 4, 1)

RUN_ARGS = ["--alpha", "0.05", "--warmup-days", "2", "--sample-n", "3", "--seed", "7"]


def write_corpus(path) -> None:
    """Same shape as the store scenario, but as raw text posts: two quiet
    keys for three days and a day-2 burst of eight moon dust claims."""
    rows = []
    serial = 0
    for offset in range(3):
        day = DAY0 + timedelta(days=offset)
        for key in ("Magic Tea", "Bleach Bath"):
            serial += 1
            rows.append(
                {
                    "post_id": f"p{serial:03d}",
                    "text": f"{key} cures COVID-19, report {serial}.",
                    "created_at": f"{day.isoformat()}T12:{serial:02d}:00Z",
                    "author_id": f"u{serial % 5}",
                }
            )
    for i in range(8):
        serial += 1
        rows.append(
            {
                "post_id": f"p{serial:03d}",
                "text": f"Moon Dust cures COVID-19, report {serial}.",
                "created_at": f"2020-04-03T13:{i:02d}:00Z",
                "author_id": f"u{serial % 5}",
            }
        )
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row) + "\n")


@pytest.fixture()
def ran(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    write_corpus(corpus)
    store_path = tmp_path / "log.jsonl"
    assert main(["run", str(corpus), "--store", str(store_path)] + RUN_ARGS) == 0
    report = json.loads(capsys.readouterr().out)
    return store_path, report


def test_run_reports_and_flags(ran):
    store_path, report = ran
    assert report["posts_added"] == 14
    assert report["mentions_added"] == 14
    assert report["clusters"] == 3
    assert report["days_rolled"] == 3
    assert list(report["flagged"]) == ["2020-04-03"]
    store = Store(store_path)
    (cid,) = report["flagged"]["2020-04-03"]
    assert store.cluster_by_id(cid).canonical == "moon dust"


def test_trends_csv_is_deterministic(ran, tmp_path, capsys):
    store_path, _report = ran
    outs = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert main(["trends", "--store", str(store_path), "--format", "csv", "--out", str(out)]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    text = outs[0].decode()
    assert text.splitlines()[0].startswith("date,")
    assert len(text.splitlines()) == 4  # header + three day-2 records


def test_trends_json_to_stdout(ran, capsys):
    store_path, _report = ran
    assert main(["trends", "--store", str(store_path), "--top", "1"]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["date"] == "2020-04-03"
    assert [r["canonical"] for r in body["records"]] == ["moon dust"]


def test_trends_on_empty_store(tmp_path, capsys):
    assert main(["trends", "--store", str(tmp_path / "log.jsonl")]) == 0
    assert json.loads(capsys.readouterr().out) == {"date": None, "records": []}


def test_review_import_export_roundtrip(ran, tmp_path, capsys):
    store_path, report = ran
    (cid,) = report["flagged"]["2020-04-03"]
    payload = {
        "decisions": [
            {
                "cluster_id": cid,
                "annotator_id": "mod1",
                "category": "UNAPPROVED",
                "debunk_date": "2020-04-10",
                "elapsed_seconds": 30.0,
            }
        ],
        "reviews": [],
    }
    import_file = tmp_path / "batch.json"
    import_file.write_text(json.dumps(payload), encoding="utf-8")

    assert main(["review", "import", "--store", str(store_path), str(import_file)]) == 0
    assert json.loads(capsys.readouterr().out) == {"decisions": 1, "reviews": 0, "skipped": 0}

    out = tmp_path / "export.json"
    assert main(["review", "export", "--store", str(store_path), "--out", str(out)]) == 0
    exported = json.loads(out.read_text(encoding="utf-8"))
    assert [d["cluster_id"] for d in exported["decisions"]] == [cid]
    assert exported["reviews"] == []

    # re-importing the exported file changes nothing
    assert main(["review", "import", "--store", str(store_path), str(out)]) == 0
    assert json.loads(capsys.readouterr().out) == {"decisions": 0, "reviews": 0, "skipped": 1}


def test_metrics_with_series_csv(ran, tmp_path, capsys):
    store_path, report = ran
    (cid,) = report["flagged"]["2020-04-03"]
    store = Store(store_path)
    from trendwatch.review import ClaimDecision, DecisionCategory

    store.decide_claim(
        ClaimDecision(cluster_id=cid, annotator_id="mod1", category=DecisionCategory.UNAPPROVED)
    )
    store.close()

    series = tmp_path / "series.csv"
    assert main(["metrics", "--store", str(store_path), "--series-out", str(series)]) == 0
    body = json.loads(capsys.readouterr().out)
    assert body["counts"]["decisions"] == 1
    lines = series.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "date,potential,actual"
    assert lines[1] == "2020-04-03,1,1"


def test_ingest_writes_matched_posts(tmp_path, capsys):
    corpus = tmp_path / "corpus.jsonl"
    rows = [
        {"post_id": "a", "text": "Magic Tea cures COVID-19.", "created_at": "2020-04-01T10:00:00Z"},
        {"post_id": "b", "text": "nice weather today", "created_at": "2020-04-01T11:00:00Z"},
    ]
    with open(corpus, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row) + "\n")
    out = tmp_path / "matched.jsonl"
    assert main(["ingest", str(corpus), "--out", str(out)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["read"] == 2
    assert report["emitted"] == 1
    kept = [json.loads(line) for line in out.read_text(encoding="utf-8").splitlines()]
    assert [p["post_id"] for p in kept] == ["a"]


def test_store_path_from_environment(ran, monkeypatch, capsys):
    store_path, _report = ran
    monkeypatch.setenv("TW_STORE", str(store_path))
    assert main(["trends"]) == 0
    assert json.loads(capsys.readouterr().out)["date"] == "2020-04-03"


def test_missing_store_is_an_error(monkeypatch):
    monkeypatch.delenv("TW_STORE", raising=False)
    with pytest.raises(SystemExit):
        main(["trends"])
