"""Human review of generated claims over HTTP.

State lives in an append-only JSON-lines decision log; the in-memory view
is a pure fold over that log, so replaying it (or any prefix) reproduces
the materialized state exactly. Decisions are serialized through a single
writer lock and are idempotent — repeating an item's current decision is a
no-op.

Status transitions: pending→accepted, pending→rejected, accepted↔rejected
(re-review); nothing ever returns to pending.

Endpoints (JSON over HTTP):

* ``GET  /items``                — stable id-ascending listing with cursor
  pagination and status/class/rule_id/queue filters.
* ``POST /items/{id}/decision``  — record accepted/rejected (+ reason).
* ``GET  /progress``             — counts, r_accept over reviewed items,
  projected r_accept over the full manifest.
* ``GET  /leaderboard/preview``  — potency over currently-accepted
  instances and its acceptance-adjusted value, when prediction sources
  were supplied.

An optional seeded review-subset mode marks a stratified fraction of the
manifest as the review queue; r_accept measured on the queue then serves
as an estimate for the whole submission.
"""

# NOTE: no `from __future__ import annotations` here — the HTTP handlers'
# pydantic body model is defined inside create_app, and postponed (string)
# annotations cannot be resolved for function-local classes.

import json
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Optional

from .corpus import LabeledPrediction, WikiSnapshot
from .errors import FeverForgeError
from .rule_engine import GeneratedInstance
from .scorer import fever_score
from .tournament import stratified_sample

VALID_DECISIONS = ("accepted", "rejected")


class ReviewError(FeverForgeError):
    """Invalid review state or decision."""


@dataclass
class ReviewItem:
    """Current review state of one generated claim."""

    instance_id: str
    claim: str
    source_claim: str
    rule_id: str
    transformation_class: str
    label: str
    status: str = "pending"
    rejection_reason: Optional[str] = None
    in_queue: bool = True

    def as_dict(self) -> dict:
        return {
            "instance_id": self.instance_id,
            "claim": self.claim,
            "source_claim": self.source_claim,
            "rule_id": self.rule_id,
            "class": self.transformation_class,
            "label": self.label,
            "status": self.status,
            "rejection_reason": self.rejection_reason,
            "in_queue": self.in_queue,
        }


class ReviewStore:
    """Materialized review state backed by an append-only decision log."""

    def __init__(self, generated: list[GeneratedInstance],
                 log_path: str | Path,
                 review_fraction: Optional[float] = None,
                 seed: int = 0):
        if not generated:
            raise ReviewError("cannot review an empty manifest")
        self._lock = threading.Lock()
        self._log_path = Path(log_path)
        self._generated = {g.id: g for g in generated}
        queue_ids = self._queue_ids(generated, review_fraction, seed)
        self.review_fraction = review_fraction
        self._items: dict[str, ReviewItem] = {}
        for gen in sorted(generated, key=lambda g: g.id):
            self._items[gen.id] = ReviewItem(
                instance_id=gen.id,
                claim=gen.instance.claim,
                source_claim=gen.source_claim,
                rule_id=gen.rule_id,
                transformation_class=gen.transformation_class.value,
                label=gen.instance.label.value,
                in_queue=gen.id in queue_ids,
            )
        if self._log_path.exists():
            self._replay()

    @staticmethod
    def _queue_ids(generated: list[GeneratedInstance],
                   review_fraction: Optional[float], seed: int) -> set[str]:
        if review_fraction is None or review_fraction >= 1.0:
            return {g.id for g in generated}
        if not 0.0 < review_fraction < 1.0:
            raise ReviewError("review fraction must be in (0, 1]")
        count = max(1, round(review_fraction * len(generated)))
        subset = stratified_sample(generated, count, seed)
        return {g.id for g in subset}

    def _replay(self) -> None:
        with open(self._log_path, "r", encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                if not raw.strip():
                    continue
                try:
                    record = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise ReviewError(
                        f"{self._log_path}:{lineno}: corrupt decision log "
                        f"({exc.msg})") from exc
                self._apply(record["instance_id"], record["decision"],
                            record.get("reason"))

    def _apply(self, instance_id: str, decision: str,
               reason: Optional[str]) -> ReviewItem:
        if decision not in VALID_DECISIONS:
            raise ReviewError(f"invalid decision {decision!r}; expected one "
                              f"of {list(VALID_DECISIONS)}")
        item = self._items.get(instance_id)
        if item is None:
            raise ReviewError(f"unknown instance id {instance_id!r}")
        item.status = decision
        item.rejection_reason = reason if decision == "rejected" else None
        return item

    # -- public API --------------------------------------------------------

    @property
    def log_path(self) -> Path:
        return self._log_path

    def items(self, status: Optional[str] = None,
              transformation_class: Optional[str] = None,
              rule_id: Optional[str] = None,
              queue_only: bool = False) -> list[ReviewItem]:
        """Filtered items in instance_id-ascending order."""
        out = []
        for item in self._items.values():  # insertion-ordered by id
            if status is not None and item.status != status:
                continue
            if (transformation_class is not None
                    and item.transformation_class != transformation_class):
                continue
            if rule_id is not None and item.rule_id != rule_id:
                continue
            if queue_only and not item.in_queue:
                continue
            out.append(item)
        return out

    def get(self, instance_id: str) -> ReviewItem:
        item = self._items.get(instance_id)
        if item is None:
            raise ReviewError(f"unknown instance id {instance_id!r}")
        return item

    def generated(self, instance_id: str) -> GeneratedInstance:
        return self._generated[instance_id]

    def decide(self, instance_id: str, decision: str,
               reason: Optional[str] = None) -> ReviewItem:
        """Record a decision: log append, then state update (atomic under
        the writer lock). Repeating the current decision is a no-op."""
        with self._lock:
            item = self.get(instance_id)
            if decision not in VALID_DECISIONS:
                raise ReviewError(
                    f"invalid decision {decision!r}; expected one of "
                    f"{list(VALID_DECISIONS)}")
            effective_reason = reason if decision == "rejected" else None
            if (item.status == decision
                    and (reason is None
                         or item.rejection_reason == effective_reason)):
                return item
            record = {"instance_id": instance_id, "decision": decision,
                      "reason": effective_reason}
            self._log_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self._log_path, "a", encoding="utf-8") as handle:
                handle.write(json.dumps(record, ensure_ascii=False,
                                        sort_keys=True,
                                        separators=(",", ":")) + "\n")
            return self._apply(instance_id, decision, effective_reason)

    def counts(self) -> dict[str, int]:
        counts = {"pending": 0, "accepted": 0, "rejected": 0}
        for item in self._items.values():
            counts[item.status] += 1
        counts["total"] = len(self._items)
        return counts

    def progress(self) -> dict:
        """Counts plus r_accept over reviewed items and the projection over
        the whole manifest."""
        counts = self.counts()
        reviewed = counts["accepted"] + counts["rejected"]
        r_accept = counts["accepted"] / reviewed if reviewed else None
        projected = counts["accepted"] / counts["total"]
        queue_size = sum(1 for item in self._items.values() if item.in_queue)
        return {
            **counts,
            "reviewed": reviewed,
            "r_accept": r_accept,
            "projected_r_accept": projected,
            "queue_size": queue_size,
            "r_accept_is_estimate": queue_size < counts["total"],
        }

    def accepted_ids(self) -> list[str]:
        return [item.instance_id for item in self._items.values()
                if item.status == "accepted"]


def read_decision_log(path: str | Path) -> dict[str, bool]:
    """Fold a decision log into the latest acceptance flag per instance."""
    acceptance: dict[str, bool] = {}
    log_path = Path(path)
    with open(log_path, "r", encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                record = json.loads(raw)
            except json.JSONDecodeError as exc:
                raise ReviewError(f"{log_path}:{lineno}: corrupt decision "
                                  f"log ({exc.msg})") from exc
            decision = record.get("decision")
            if decision not in VALID_DECISIONS:
                raise ReviewError(f"{log_path}:{lineno}: invalid decision "
                                  f"{decision!r}")
            acceptance[str(record["instance_id"])] = decision == "accepted"
    return acceptance


# ---------------------------------------------------------------------------
# HTTP app


def create_app(store: ReviewStore,
               breaker_id: str,
               prediction_sources: Optional[dict[str, dict]] = None,
               snapshot: Optional[WikiSnapshot] = None,
               max_evidence: Optional[int] = 5):
    """Build the review API application.

    `prediction_sources` maps system name → {instance_id → Prediction};
    when supplied, /leaderboard/preview reports potency over the currently
    accepted instances and its acceptance-adjusted value.
    """
    from fastapi import FastAPI, HTTPException, Query
    from fastapi.middleware.cors import CORSMiddleware
    from pydantic import BaseModel

    class DecisionBody(BaseModel):
        decision: Literal["accepted", "rejected"]
        reason: Optional[str] = None

    app = FastAPI(title="claim review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def _item_payload(item: ReviewItem, include_evidence: bool) -> dict:
        payload = item.as_dict()
        gen = store.generated(item.instance_id)
        payload["evidence"] = [
            [sid.as_pair() for sid in combo.sorted_sentences()]
            for combo in gen.instance.evidence]
        if include_evidence and snapshot is not None:
            resolved = {}
            for combo in gen.instance.evidence:
                for sid in combo.sorted_sentences():
                    key = f"{sid.page}:{sid.line}"
                    if key not in resolved and snapshot.has(sid.page, sid.line):
                        resolved[key] = snapshot.lookup(sid.page, sid.line)
            payload["evidence_text"] = resolved
        return payload

    @app.get("/items")
    def list_items(status: Optional[str] = Query(default=None),
                   cls: Optional[str] = Query(default=None, alias="class"),
                   rule_id: Optional[str] = Query(default=None),
                   queue: bool = Query(default=False),
                   cursor: Optional[str] = Query(default=None),
                   limit: int = Query(default=50, ge=1, le=500),
                   include_evidence: bool = Query(default=False)):
        if status is not None and status not in ("pending", "accepted",
                                                 "rejected"):
            raise HTTPException(status_code=400,
                                detail=f"invalid status filter {status!r}")
        filtered = store.items(status=status, transformation_class=cls,
                               rule_id=rule_id, queue_only=queue)
        if cursor is not None:
            try:
                store.get(cursor)
            except ReviewError:
                raise HTTPException(status_code=400,
                                    detail=f"invalid cursor {cursor!r}")
            filtered = [item for item in filtered
                        if item.instance_id > cursor]
        page = filtered[:limit]
        next_cursor = (page[-1].instance_id
                       if len(filtered) > limit else None)
        return {
            "items": [_item_payload(item, include_evidence) for item in page],
            "next_cursor": next_cursor,
            "total": len(filtered),
        }

    @app.post("/items/{instance_id}/decision")
    def decide(instance_id: str, body: DecisionBody):
        try:
            item = store.decide(instance_id, body.decision, body.reason)
        except ReviewError as exc:
            if "unknown instance id" in str(exc):
                raise HTTPException(status_code=404, detail=str(exc))
            raise HTTPException(status_code=400, detail=str(exc))
        return {"item": _item_payload(item, include_evidence=False),
                "counts": store.counts()}

    @app.get("/progress")
    def progress():
        return store.progress()

    @app.get("/leaderboard/preview")
    def leaderboard_preview():
        prog = store.progress()
        r_accept = prog["r_accept"]
        payload = {
            "breaker_id": breaker_id,
            "r_accept": r_accept,
            "projected_r_accept": prog["projected_r_accept"],
            "reviewed": prog["reviewed"],
            "pending": prog["pending"],
            "potency": None,
            "adjusted_potency": None,
            "systems": [],
        }
        if not prediction_sources:
            return payload
        accepted = store.accepted_ids()
        system_scores = []
        error_sum = 0.0
        for name in sorted(prediction_sources):
            by_id = prediction_sources[name]
            missing = [iid for iid in accepted if iid not in by_id]
            if missing:
                raise HTTPException(
                    status_code=409,
                    detail=f"system {name!r} lacks predictions for "
                           f"{len(missing)} accepted instance(s)")
            if accepted:
                preds = [LabeledPrediction(
                            gold=store.generated(iid).instance,
                            pred=by_id[iid])
                         for iid in accepted]
                score = fever_score(preds, max_evidence).fever_score
            else:
                score = None
            system_scores.append({"system_id": name, "fever_score": score})
            if score is not None:
                error_sum += 1.0 - score
        payload["systems"] = system_scores
        potency = (error_sum / len(prediction_sources)) if accepted else 0.0
        payload["potency"] = potency
        if r_accept is not None:
            payload["adjusted_potency"] = r_accept * potency
        return payload

    return app
