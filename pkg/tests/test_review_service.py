"""Review store, decision log, and the HTTP review API."""

from __future__ import annotations

import json
from urllib.parse import quote

import pytest
from fastapi.testclient import TestClient

from fever_forge.corpus import Label, Prediction
from fever_forge.review import (
    ReviewError,
    ReviewStore,
    create_app,
    read_decision_log,
)
from fever_forge.rule_engine import (
    GeneratedInstance,
    TransformationClass,
    generate_adversarial_dataset,
)

from conftest import make_instance, sid

PRES = TransformationClass.ENTAILMENT_PRESERVING
SNEG = TransformationClass.SIMPLE_NEGATION


def make_gen(i: int, label: Label = Label.SUPPORTED,
             cls: TransformationClass = SNEG,
             rule_id: str = "r") -> GeneratedInstance:
    combos = [] if label is Label.NOT_ENOUGH_INFO else [[("P", i)]]
    inst = make_instance(f"s{i}#{rule_id}", label, combos,
                         claim=f"Generated claim {i}.")
    return GeneratedInstance(instance=inst, source_id=f"s{i}",
                             source_claim=f"Source claim {i}.",
                             rule_id=rule_id, transformation_class=cls)


@pytest.fixture
def gens():
    return [
        make_gen(0, Label.SUPPORTED, SNEG, "r1"),
        make_gen(1, Label.REFUTED, SNEG, "r1"),
        make_gen(2, Label.SUPPORTED, PRES, "r2"),
        make_gen(3, Label.REFUTED, PRES, "r2"),
        make_gen(4, Label.NOT_ENOUGH_INFO, SNEG, "r1"),
        make_gen(5, Label.NOT_ENOUGH_INFO, PRES, "r2"),
    ]


@pytest.fixture
def store(gens, tmp_path):
    return ReviewStore(gens, tmp_path / "log.jsonl")


def correct_pred(gen: GeneratedInstance) -> Prediction:
    evidence = (tuple(gen.instance.evidence[0].sorted_sentences())
                if gen.instance.evidence else ())
    return Prediction(gen.id, gen.instance.label, evidence)


def wrong_pred(gen: GeneratedInstance) -> Prediction:
    flipped = (Label.REFUTED if gen.instance.label is Label.SUPPORTED
               else Label.SUPPORTED)
    return Prediction(gen.id, flipped)


class TestReviewStore:
    def test_empty_manifest_rejected(self, tmp_path):
        with pytest.raises(ReviewError, match="empty"):
            ReviewStore([], tmp_path / "log.jsonl")

    def test_items_start_pending_in_id_order(self, store):
        items = store.items()
        assert [i.status for i in items] == ["pending"] * 6
        ids = [i.instance_id for i in items]
        assert ids == sorted(ids)
        assert all(i.in_queue for i in items)

    def test_item_carries_generation_metadata(self, store):
        item = store.get("s2#r2")
        assert item.claim == "Generated claim 2."
        assert item.source_claim == "Source claim 2."
        assert item.rule_id == "r2"
        assert item.transformation_class == "preserving"
        assert item.label == "SUPPORTED"

    def test_decide_transitions(self, store):
        assert store.decide("s0#r1", "accepted").status == "accepted"
        item = store.decide("s0#r1", "rejected", reason="ungrammatical")
        assert item.status == "rejected"
        assert item.rejection_reason == "ungrammatical"
        item = store.decide("s0#r1", "accepted")
        assert item.status == "accepted"
        assert item.rejection_reason is None

    def test_unknown_id_raises(self, store):
        with pytest.raises(ReviewError, match="unknown instance id"):
            store.decide("ghost#r", "accepted")
        with pytest.raises(ReviewError, match="unknown instance id"):
            store.get("ghost#r")

    def test_invalid_decision_raises(self, store):
        with pytest.raises(ReviewError, match="invalid decision"):
            store.decide("s0#r1", "maybe")

    def test_repeat_decision_appends_no_log_line(self, store):
        store.decide("s0#r1", "accepted")
        store.decide("s1#r1", "rejected", reason="dull")
        lines_before = store.log_path.read_text().count("\n")
        store.decide("s0#r1", "accepted")
        store.decide("s1#r1", "rejected", reason="dull")
        assert store.log_path.read_text().count("\n") == lines_before

    def test_new_rejection_reason_is_logged(self, store):
        store.decide("s1#r1", "rejected", reason="dull")
        lines_before = store.log_path.read_text().count("\n")
        item = store.decide("s1#r1", "rejected", reason="ungrammatical")
        assert item.rejection_reason == "ungrammatical"
        assert store.log_path.read_text().count("\n") == lines_before + 1

    def test_replay_reproduces_state(self, gens, store):
        store.decide("s0#r1", "accepted")
        store.decide("s1#r1", "rejected", reason="dull")
        store.decide("s1#r1", "accepted")
        store.decide("s3#r2", "rejected", reason="odd phrasing")
        replayed = ReviewStore(gens, store.log_path)
        for item in store.items():
            twin = replayed.get(item.instance_id)
            assert (twin.status, twin.rejection_reason) == \
                (item.status, item.rejection_reason)

    def test_corrupt_log_names_path_and_line(self, gens, tmp_path):
        log = tmp_path / "log.jsonl"
        log.write_text('{"instance_id":"s0#r1","decision":"accepted"}\n'
                       "{broken\n")
        with pytest.raises(ReviewError, match=r"log\.jsonl:2"):
            ReviewStore(gens, log)

    def test_log_for_unknown_id_rejected_on_replay(self, gens, tmp_path):
        log = tmp_path / "log.jsonl"
        log.write_text('{"instance_id":"ghost","decision":"accepted"}\n')
        with pytest.raises(ReviewError, match="unknown instance id"):
            ReviewStore(gens, log)

    def test_counts_and_progress(self, store):
        prog = store.progress()
        assert prog["r_accept"] is None
        assert prog["projected_r_accept"] == 0.0
        assert prog["reviewed"] == 0
        assert prog["r_accept_is_estimate"] is False

        store.decide("s0#r1", "accepted")
        store.decide("s1#r1", "accepted")
        store.decide("s2#r2", "accepted")
        store.decide("s3#r2", "rejected")
        counts = store.counts()
        assert counts == {"pending": 2, "accepted": 3, "rejected": 1,
                          "total": 6}
        prog = store.progress()
        assert prog["reviewed"] == 4
        assert prog["r_accept"] == pytest.approx(0.75)
        assert prog["projected_r_accept"] == pytest.approx(0.5)
        assert prog["queue_size"] == 6

    def test_accepted_ids_in_id_order(self, store):
        store.decide("s3#r2", "accepted")
        store.decide("s0#r1", "accepted")
        assert store.accepted_ids() == ["s0#r1", "s3#r2"]

    def test_item_filters(self, store):
        store.decide("s0#r1", "accepted")
        assert [i.instance_id for i in store.items(status="accepted")] == \
            ["s0#r1"]
        assert {i.rule_id for i in store.items(rule_id="r2")} == {"r2"}
        pres = store.items(transformation_class="preserving")
        assert {i.instance_id for i in pres} == {"s2#r2", "s3#r2", "s5#r2"}


class TestReviewFraction:
    def test_subset_queue_marks_estimates(self, tmp_path):
        gens = [make_gen(i, Label.SUPPORTED if i % 2 else Label.REFUTED)
                for i in range(20)]
        store = ReviewStore(gens, tmp_path / "log.jsonl",
                            review_fraction=0.5, seed=1)
        prog = store.progress()
        assert prog["queue_size"] == 10
        assert prog["r_accept_is_estimate"] is True
        queue = store.items(queue_only=True)
        assert len(queue) == 10
        # Proportional across the two label strata.
        labels = [i.label for i in queue]
        assert labels.count("SUPPORTED") == 5
        assert labels.count("REFUTED") == 5

    def test_queue_selection_is_seeded(self, tmp_path):
        gens = [make_gen(i) for i in range(20)]
        pick = lambda seed: {i.instance_id for i in ReviewStore(
            gens, tmp_path / f"log{seed}.jsonl", review_fraction=0.4,
            seed=seed).items(queue_only=True)}
        assert pick(1) == pick(1)
        assert pick(1) != pick(2)

    def test_full_fraction_reviews_everything(self, gens, tmp_path):
        store = ReviewStore(gens, tmp_path / "log.jsonl", review_fraction=1.0)
        assert store.progress()["queue_size"] == 6
        assert store.progress()["r_accept_is_estimate"] is False

    def test_invalid_fraction_rejected(self, gens, tmp_path):
        with pytest.raises(ReviewError, match="fraction"):
            ReviewStore(gens, tmp_path / "log.jsonl", review_fraction=-0.1)
        with pytest.raises(ReviewError, match="fraction"):
            ReviewStore(gens, tmp_path / "log.jsonl", review_fraction=0.0)


class TestReadDecisionLog:
    def test_last_decision_wins(self, tmp_path):
        log = tmp_path / "log.jsonl"
        log.write_text(
            '{"instance_id":"a","decision":"accepted"}\n'
            '{"instance_id":"b","decision":"rejected"}\n'
            '{"instance_id":"a","decision":"rejected"}\n')
        assert read_decision_log(log) == {"a": False, "b": False}

    def test_invalid_decision_named_with_line(self, tmp_path):
        log = tmp_path / "log.jsonl"
        log.write_text('{"instance_id":"a","decision":"shrug"}\n')
        with pytest.raises(ReviewError, match=r"log\.jsonl:1"):
            read_decision_log(log)

    def test_corrupt_json_rejected(self, tmp_path):
        log = tmp_path / "log.jsonl"
        log.write_text("not json\n")
        with pytest.raises(ReviewError, match="corrupt"):
            read_decision_log(log)


def decision_url(instance_id: str) -> str:
    # Instance ids contain '#', which a URL parser reads as a fragment
    # delimiter, so clients must percent-encode the path segment.
    return f"/items/{quote(instance_id, safe='')}/decision"


@pytest.fixture
def client(store):
    app = create_app(store, breaker_id="breaker-1")
    return TestClient(app)


class TestItemsEndpoint:
    def test_lists_everything_in_id_order(self, client):
        body = client.get("/items").json()
        assert body["total"] == 6
        assert body["next_cursor"] is None
        ids = [item["instance_id"] for item in body["items"]]
        assert ids == sorted(ids)
        first = body["items"][0]
        assert first["status"] == "pending"
        assert first["evidence"] == [[["P", 0]]]
        assert "evidence_text" not in first

    def test_cursor_pagination_walks_the_listing(self, client):
        seen = []
        cursor = None
        pages = 0
        while True:
            params = {"limit": 2}
            if cursor is not None:
                params["cursor"] = cursor
            body = client.get("/items", params=params).json()
            assert len(body["items"]) <= 2
            seen.extend(item["instance_id"] for item in body["items"])
            pages += 1
            cursor = body["next_cursor"]
            if cursor is None:
                break
        assert pages == 3
        assert seen == sorted(seen)
        assert len(set(seen)) == 6

    def test_invalid_cursor_is_400(self, client):
        resp = client.get("/items", params={"cursor": "nope"})
        assert resp.status_code == 400
        assert "cursor" in resp.json()["detail"]

    def test_invalid_status_is_400(self, client):
        assert client.get("/items", params={"status": "limbo"}).status_code \
            == 400

    def test_out_of_range_limit_is_422(self, client):
        assert client.get("/items", params={"limit": 0}).status_code == 422

    def test_filters_compose(self, client):
        body = client.get("/items", params={
            "class": "preserving", "rule_id": "r2"}).json()
        assert {i["instance_id"] for i in body["items"]} == \
            {"s2#r2", "s3#r2", "s5#r2"}
        client.post(decision_url("s2#r2"), json={"decision": "accepted"})
        body = client.get("/items", params={
            "class": "preserving", "status": "accepted"}).json()
        assert [i["instance_id"] for i in body["items"]] == ["s2#r2"]

    def test_include_evidence_resolves_snapshot_text(self, demo_dataset,
                                                     demo_wiki, ruleset,
                                                     tmp_path):
        _, generated = generate_adversarial_dataset(ruleset, demo_dataset)
        store = ReviewStore(generated, tmp_path / "log.jsonl")
        app = create_app(store, "demo-breaker", snapshot=demo_wiki)
        body = TestClient(app).get("/items", params={
            "limit": 1, "include_evidence": True}).json()
        (item,) = body["items"]
        assert item["evidence_text"]
        for key, text in item["evidence_text"].items():
            page, line = key.rsplit(":", 1)
            assert demo_wiki.lookup(page, int(line)) == text


class TestDecisionEndpoint:
    def test_accept_then_flip_to_reject(self, client):
        resp = client.post(decision_url("s0#r1"),
                           json={"decision": "accepted"})
        assert resp.status_code == 200
        assert resp.json()["item"]["status"] == "accepted"
        assert resp.json()["counts"]["accepted"] == 1

        resp = client.post(decision_url("s0#r1"),
                           json={"decision": "rejected",
                                 "reason": "ungrammatical"})
        assert resp.json()["item"]["status"] == "rejected"
        assert resp.json()["item"]["rejection_reason"] == "ungrammatical"
        assert resp.json()["counts"] == {"pending": 5, "accepted": 0,
                                         "rejected": 1, "total": 6}

    def test_unknown_id_is_404(self, client):
        resp = client.post(decision_url("ghost#r"),
                           json={"decision": "accepted"})
        assert resp.status_code == 404

    def test_invalid_body_is_422(self, client):
        resp = client.post(decision_url("s0#r1"), json={"decision": "maybe"})
        assert resp.status_code == 422
        assert client.post(decision_url("s0#r1"), json={}).status_code == 422

    def test_decisions_survive_restart(self, gens, store, client):
        client.post(decision_url("s0#r1"), json={"decision": "accepted"})
        client.post(decision_url("s1#r1"), json={"decision": "rejected"})
        replayed = ReviewStore(gens, store.log_path)
        assert replayed.get("s0#r1").status == "accepted"
        assert replayed.get("s1#r1").status == "rejected"


class TestProgressEndpoint:
    def test_progress_tracks_decisions(self, client):
        assert client.get("/progress").json()["r_accept"] is None
        client.post(decision_url("s0#r1"), json={"decision": "accepted"})
        client.post(decision_url("s1#r1"), json={"decision": "rejected"})
        body = client.get("/progress").json()
        assert body["reviewed"] == 2
        assert body["r_accept"] == pytest.approx(0.5)
        assert body["projected_r_accept"] == pytest.approx(1 / 6)


class TestLeaderboardPreview:
    def test_without_prediction_sources(self, client):
        body = client.get("/leaderboard/preview").json()
        assert body["breaker_id"] == "breaker-1"
        assert body["potency"] is None
        assert body["adjusted_potency"] is None
        assert body["systems"] == []

    @pytest.fixture
    def sourced_client(self, gens, tmp_path):
        # alpha: fools s2 and s3 only; beta: fooled by everything.
        alpha = {g.id: (wrong_pred(g) if g.source_id in ("s2", "s3")
                        else correct_pred(g)) for g in gens}
        beta = {g.id: wrong_pred(g) for g in gens}
        store = ReviewStore(gens, tmp_path / "log.jsonl")
        app = create_app(store, "breaker-1",
                         prediction_sources={"alpha": alpha, "beta": beta})
        return TestClient(app)

    def test_nothing_reviewed_yet(self, sourced_client):
        body = sourced_client.get("/leaderboard/preview").json()
        assert body["potency"] == 0.0
        assert body["adjusted_potency"] is None
        assert [s["fever_score"] for s in body["systems"]] == [None, None]

    def test_adjusted_is_acceptance_times_potency(self, sourced_client):
        for iid in ("s0#r1", "s1#r1", "s2#r2", "s3#r2"):
            sourced_client.post(decision_url(iid),
                                json={"decision": "accepted"})
        sourced_client.post(decision_url("s4#r1"),
                            json={"decision": "rejected"})
        body = sourced_client.get("/leaderboard/preview").json()
        # alpha scores 2/4 on the accepted set, beta 0/4.
        systems = {s["system_id"]: s["fever_score"] for s in body["systems"]}
        assert systems == {"alpha": pytest.approx(0.5),
                           "beta": pytest.approx(0.0)}
        assert body["r_accept"] == pytest.approx(0.8)
        assert body["potency"] == pytest.approx((0.5 + 1.0) / 2)
        assert body["adjusted_potency"] == pytest.approx(0.8 * 0.75)

    def test_missing_prediction_for_accepted_is_409(self, gens, tmp_path):
        alpha = {g.id: correct_pred(g) for g in gens}
        del alpha["s3#r2"]
        store = ReviewStore(gens, tmp_path / "log.jsonl")
        app = create_app(store, "b", prediction_sources={"alpha": alpha})
        client = TestClient(app)
        client.post(decision_url("s3#r2"), json={"decision": "accepted"})
        resp = client.get("/leaderboard/preview")
        assert resp.status_code == 409
        assert "alpha" in resp.json()["detail"]
