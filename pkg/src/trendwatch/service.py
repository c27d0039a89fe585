"""HTTP face of the store: the API the moderator console talks to.

A single shared bearer token (from TW_TOKEN unless passed explicitly)
guards every endpoint; with no token configured the service runs open
and says so in the log, which is acceptable only for local fixtures.
Reads hit the projections directly; every mutation goes through the
store and therefore appends exactly one event.
"""
from __future__ import annotations

import json
import logging
import os
from datetime import date
from importlib import resources
from typing import Any, Mapping

from fastapi import Body, Depends, FastAPI, HTTPException, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .review import (
    ClaimDecision,
    ConflictError,
    DecisionCategory,
    TweetReview,
    UnknownClaimError,
    UnknownTweetError,
)
from .store import Store, StoreError

logger = logging.getLogger(__name__)


def load_guidelines() -> dict:
    raw = resources.files("trendwatch.config").joinpath("guidelines.json").read_text("utf-8")
    return json.loads(raw)


def _parse_day(value: str | None) -> date | None:
    if value is None:
        return None
    try:
        return date.fromisoformat(value)
    except ValueError:
        raise HTTPException(status_code=422, detail=f"bad date {value!r}")


def _entry_view(store: Store, entry) -> dict:
    cluster = store.cluster_by_id(entry.cluster_id)
    flag_records = store.trends_for(entry.flag_date)
    record = next((r for r in flag_records if r.cluster_id == entry.cluster_id), None)
    examples = []
    if cluster is not None:
        for post_id, _day in cluster.posts[:3]:
            examples.append({"post_id": post_id, "text": store.posts[post_id].text})
    return {
        "cluster_id": entry.cluster_id,
        "canonical": cluster.canonical if cluster else entry.cluster_id,
        "flag_date": entry.flag_date.isoformat(),
        "first_seen": cluster.first_seen.isoformat() if cluster else None,
        "post_count": cluster.count if cluster else 0,
        "p": record.p_value if record else None,
        "z": record.z if record else None,
        "rank": record.rank if record else None,
        "required": entry.required,
        "decisions_so_far": len(entry.decisions),
        "examples": examples,
    }


def create_app(store: Store, *, token: str | None = None) -> FastAPI:
    if token is None:
        token = os.environ.get("TW_TOKEN") or None
    if token is None:
        logger.warning("TW_TOKEN not set: serving without authentication")

    app = FastAPI(title="trendwatch", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def authorized(request: Request) -> None:
        if token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {token}":
            raise HTTPException(status_code=401, detail="missing or wrong bearer token")

    guard = Depends(authorized)

    @app.get("/healthz", dependencies=[guard])
    def healthz() -> dict:
        return {"ok": True, "events": store.log.next_seq - 1}

    @app.get("/guidelines", dependencies=[guard])
    def guidelines() -> dict:
        return load_guidelines()

    @app.get("/trends", dependencies=[guard])
    def trends(
        date_: str | None = Query(default=None, alias="date"),
        top: int | None = Query(default=None, ge=1),
        limit: int = Query(default=100, ge=1, le=1000),
        offset: int = Query(default=0, ge=0),
    ) -> dict:
        day = _parse_day(date_) or store.latest_day()
        if day is None:
            return {"date": None, "total": 0, "records": []}
        records = store.trends_for(day, top)
        page = records[offset : offset + limit]
        return {
            "date": day.isoformat(),
            "total": len(records),
            "records": [r.to_dict() for r in page],
        }

    @app.get("/claims/pending", dependencies=[guard])
    def pending_claims(
        limit: int = Query(default=100, ge=1, le=1000),
        offset: int = Query(default=0, ge=0),
    ) -> dict:
        entries = store.board.pending_claims()
        page = entries[offset : offset + limit]
        return {"total": len(entries), "claims": [_entry_view(store, e) for e in page]}

    @app.post("/claims/{cluster_id}/decision", dependencies=[guard])
    def decide(cluster_id: str, body: dict = Body(...)) -> dict:
        decision = _decision_from_body(cluster_id, body)
        try:
            spawned = store.decide_claim(decision)
        except UnknownClaimError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {
            "cluster_id": cluster_id,
            "category": decision.category.value,
            "spawned": [e.post_id for e in spawned],
        }

    @app.get("/claims/{cluster_id}/tweets/sample", dependencies=[guard])
    def tweet_sample(
        cluster_id: str,
        limit: int = Query(default=100, ge=1, le=1000),
        offset: int = Query(default=0, ge=0),
    ) -> dict:
        queue = store.board.stage2.get(cluster_id)
        if queue is None:
            raise HTTPException(
                status_code=404, detail=f"no stage-2 sample for {cluster_id!r}"
            )
        items = list(queue.values())[offset : offset + limit]
        return {
            "cluster_id": cluster_id,
            "total": len(queue),
            "tweets": [
                {
                    "post_id": e.post_id,
                    "text": e.text,
                    "reviewed": e.review is not None,
                    "likert": e.review.likert if e.review else None,
                    "is_duplicate": e.review.is_duplicate if e.review else False,
                }
                for e in items
            ],
        }

    @app.post("/tweets/{post_id}/review", dependencies=[guard])
    def review_tweet(post_id: str, body: dict = Body(...)) -> dict:
        review = _review_from_body(post_id, body)
        try:
            store.record_review(review)
        except (UnknownClaimError, UnknownTweetError) as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except ConflictError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {
            "post_id": post_id,
            "cluster_id": review.cluster_id,
            "is_violation": review.is_violation,
        }

    @app.get("/metrics/report", dependencies=[guard])
    def metrics_report() -> dict:
        return store.metrics_report()

    @app.get("/export/events", dependencies=[guard])
    def export_events(after_seq: int = Query(default=0, ge=0)) -> dict:
        events = [r.to_dict() for r in store.log.replay(after_seq=after_seq)]
        return {"total": len(events), "events": events}

    @app.exception_handler(StoreError)
    async def store_error(_request: Request, exc: StoreError):
        return JSONResponse(status_code=409, content={"detail": str(exc)})

    return app


def _decision_from_body(cluster_id: str, body: Mapping[str, Any]) -> ClaimDecision:
    try:
        category = DecisionCategory(body["category"])
        debunk = body.get("debunk_date")
        return ClaimDecision(
            cluster_id=cluster_id,
            annotator_id=str(body.get("annotator_id", "")),
            category=category,
            debunk_date=date.fromisoformat(debunk) if debunk else None,
            debunk_url=body.get("debunk_url") or None,
            elapsed_seconds=(
                float(body["elapsed_seconds"]) if body.get("elapsed_seconds") is not None else None
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"bad decision: {exc}")


def _review_from_body(post_id: str, body: Mapping[str, Any]) -> TweetReview:
    try:
        return TweetReview(
            cluster_id=str(body["cluster_id"]),
            post_id=post_id,
            annotator_id=str(body.get("annotator_id", "")),
            is_duplicate=bool(body.get("is_duplicate", False)),
            likert=int(body["likert"]) if body.get("likert") is not None else None,
            elapsed_seconds=(
                float(body["elapsed_seconds"]) if body.get("elapsed_seconds") is not None else None
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise HTTPException(status_code=422, detail=f"bad review: {exc}")
