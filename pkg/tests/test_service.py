import pytest
from fastapi.testclient import TestClient

from tegmine.annotation.service import (
    AnnotationService,
    LockError,
    Qualification,
    ServiceConfig,
    SubmissionError,
    WorkerProfile,
    build_queue,
    create_app,
)
from tegmine.annotation.store import RecordLog
from tegmine.discovery import InfCand, ScoreTriple
from tegmine.evaluation import load_labeled_tsv
from tegmine.paths import FilterConfig, Relation, tokenize
from tegmine.teg import Extension, TypedRelation

CFG = FilterConfig()


class FakeClock:
    def __init__(self, now=1000.0):
        self.now = now

    def __call__(self):
        return self.now

    def advance(self, dt):
        self.now += dt


def rel(path: str) -> Relation:
    return Relation(tokenize(path, CFG))


def typed(path, pairs, types=("location", "location")) -> TypedRelation:
    r = rel(path)
    return TypedRelation(
        r.id, types, Extension(frozenset(pairs)), (frozenset([types[0]]), frozenset([types[1]]))
    )


PAIRS = [("russia", "crimea"), ("usa", "cuba"), ("indonesia", "algeria")]

PREMISE_PATH = "nsubj--annex--dobj"
HYP_PATHS = [
    "nsubj--take--dobj--control--prep--of--pobj",
    "nsubj--take--dobj",
    "nsubjpass--border--prep--by--pobj",
]
OTHER_PREMISE_PATH = "nsubj--visit--dobj"
OTHER_HYP_PATH = "nsubj--meet--prep--with--pobj"


def fig_queue():
    """One premise with three hypotheses plus a second, unrelated premise."""
    paths = {}
    premise = typed(PREMISE_PATH, PAIRS)
    paths[premise.base] = rel(PREMISE_PATH)
    cands = []
    for hp in HYP_PATHS:
        h = typed(hp, PAIRS[:2])
        paths[h.base] = rel(hp)
        cands.append(InfCand(premise, h, ScoreTriple(2000.0, 20.0, 0.9), premise.tsg))
    other = typed(OTHER_PREMISE_PATH, PAIRS)
    paths[other.base] = rel(OTHER_PREMISE_PATH)
    oh = typed(OTHER_HYP_PATH, PAIRS[:2])
    paths[oh.base] = rel(OTHER_HYP_PATH)
    cands.append(InfCand(other, oh, ScoreTriple(2000.0, 20.0, 0.9), other.tsg))
    return build_queue(cands, paths, letters=("B", "A"))


def make_service(required_votes=5, timeout=600.0, qualification=None, clock=None):
    queue = fig_queue()
    cfg = ServiceConfig(
        required_votes=required_votes,
        lock_timeout=timeout,
        qualification=qualification or Qualification(),
    )
    return AnnotationService(queue, RecordLog(), cfg, clock=clock or FakeClock())


def answer_all(service, worker, label="yes", flagged=False):
    a = service.assign_batch(worker)
    assert a is not None
    service.submit(worker, [{"cand": cid, "label": label} for cid in a.cand_ids], premise_flagged=flagged)
    return a


# ------------------------------------------------------------- assignment


def test_batch_groups_all_hypotheses_of_one_premise():
    service = make_service()
    a = service.assign_batch("w1")
    assert a is not None
    assert len(a.cand_ids) in (1, 3)  # whichever premise sorts first
    payload = service.batch_payload(a)
    assert payload["batch_id"] == a.batch_id
    assert len(payload["questions"]) == len(a.cand_ids)
    assert payload["premise"]["sentence"]
    for q in payload["questions"]:
        assert q["question"].startswith("Is it certain that ")
    # every question shares the premise of the batch
    keys = {service.queue[cid].premise_key for cid in a.cand_ids}
    assert len(keys) == 1


def test_repeat_fetch_returns_same_open_batch():
    service = make_service()
    a1 = service.assign_batch("w1")
    a2 = service.assign_batch("w1")
    assert a1 is a2


def test_two_workers_hold_disjoint_locks_on_same_cand():
    service = make_service(required_votes=5)
    a1 = service.assign_batch("w1")
    a2 = service.assign_batch("w2")
    assert a1.worker != a2.worker
    assert set(a1.cand_ids) == set(a2.cand_ids)  # both may annotate the same cands


def test_oversubscription_stops_at_quota():
    service = make_service(required_votes=2)
    service.assign_batch("w1")
    service.assign_batch("w2")
    a3 = service.assign_batch("w3")
    # first premise fully locked; w3 is sent to the other premise
    if a3 is not None:
        first = {service.queue[c].premise_key for c in service.assign_batch("w1").cand_ids}
        third = {service.queue[c].premise_key for c in a3.cand_ids}
        assert first != third


def test_expired_locks_recirculate():
    clock = FakeClock()
    service = make_service(required_votes=1, timeout=60.0, clock=clock)
    a1 = service.assign_batch("w1")
    clock.advance(61.0)
    a2 = service.assign_batch("w2")
    assert set(a2.cand_ids) == set(a1.cand_ids)  # w1's abandoned batch came back
    with pytest.raises(LockError):
        service.submit("w1", [{"cand": c, "label": "yes"} for c in a1.cand_ids])


def test_worker_never_reassigned_an_annotated_cand():
    service = make_service(required_votes=5)
    seen = set()
    while True:
        a = service.assign_batch("w1")
        if a is None:
            break
        assert not (set(a.cand_ids) & seen)
        seen.update(a.cand_ids)
        service.submit("w1", [{"cand": c, "label": "no"} for c in a.cand_ids])
    assert seen == set(service.queue)


def test_empty_queue_yields_empty_batch():
    service = AnnotationService([], RecordLog(), ServiceConfig(), clock=FakeClock())
    assert service.assign_batch("w1") is None
    assert service.batch_payload(None) == {"batch_id": None, "premise": None, "questions": []}


# ------------------------------------------------------------- submission


def test_submit_records_answers_and_releases_batch():
    service = make_service()
    a = service.assign_batch("w1")
    n = service.submit(
        "w1", [{"cand": c, "label": "yes"} for c in a.cand_ids], batch_id=a.batch_id
    )
    assert n == len(a.cand_ids)
    records = service.log.records()
    assert {r.cand for r in records} == set(a.cand_ids)
    assert all(r.worker == "w1" and r.label == "yes" and not r.premise_flagged for r in records)
    b = service.assign_batch("w1")  # moves on to the other premise
    assert b is None or not (set(b.cand_ids) & set(a.cand_ids))


def test_submit_without_assignment_conflicts():
    service = make_service()
    with pytest.raises(LockError):
        service.submit("w1", [{"cand": "nope", "label": "yes"}])


def test_submit_wrong_batch_id_conflicts():
    service = make_service()
    a = service.assign_batch("w1")
    with pytest.raises(LockError):
        service.submit("w1", [{"cand": c, "label": "yes"} for c in a.cand_ids], batch_id="b999")


def test_incomplete_or_invalid_submissions_rejected():
    service = make_service()
    a = service.assign_batch("w1")
    with pytest.raises(SubmissionError):
        service.submit("w1", [{"cand": a.cand_ids[0], "label": "yes"}])  # missing answers
    with pytest.raises(SubmissionError):
        service.submit("w1", [{"cand": c, "label": "maybe"} for c in a.cand_ids])
    with pytest.raises(LockError):
        service.submit("w1", [{"cand": "unknown", "label": "yes"}] * len(a.cand_ids))
    # the batch survives failed submissions
    assert service.assign_batch("w1") is a


def test_premise_flag_stores_incomprehensible_records():
    service = make_service()
    a = answer_all(service, "w1", flagged=True)
    records = service.log.records()
    assert len(records) == len(a.cand_ids)
    assert all(r.label == "incomprehensible" and r.premise_flagged for r in records)


# ------------------------------------------------------------- lifecycle


VERBS12 = sorted(
    ["adopt", "annex", "attack", "buy", "capture", "chase", "defend", "follow", "invade", "join", "lead", "visit"]
)


def wide_queue():
    """Twelve single-hypothesis premises, enough for dissent without distrust."""
    paths = {}
    cands = []
    for verb in VERBS12:
        p = typed(f"nsubj--{verb}--dobj", PAIRS)
        h = typed(OTHER_HYP_PATH, PAIRS[:2])
        paths[p.base] = rel(f"nsubj--{verb}--dobj")
        paths[h.base] = rel(OTHER_HYP_PATH)
        cands.append(InfCand(p, h, ScoreTriple(2000.0, 20.0, 0.9), p.tsg))
    return build_queue(cands, paths)


def test_full_annotation_cycle_to_export(tmp_path):
    clock = FakeClock()
    service = AnnotationService(
        wide_queue(), RecordLog(), ServiceConfig(required_votes=5), clock=clock
    )
    # worker wi dissents only on the i-th premise (by verb order), keeping
    # everyone's trust at 11/12
    dissent = {verb: f"w{i + 1}" for i, verb in enumerate(VERBS12[:5])}
    for w in ("w1", "w2", "w3", "w4", "w5"):
        while True:
            a = service.assign_batch(w)
            if a is None:
                break
            verb = service.queue[a.cand_ids[0]].premise_path.split("--")[1]
            label = "no" if dissent.get(verb) == w else "yes"
            service.submit(w, [{"cand": c, "label": label} for c in a.cand_ids])
            clock.advance(1.0)

    progress = service.progress()
    assert progress["candidates"] == 12
    assert progress["gold"] == 12
    assert progress["needs_more"] == 0
    assert progress["records"] == 60
    assert progress["excluded_workers"] == []

    report = service.stats()
    assert report.validated == 12
    assert report.yes_fraction == 1.0  # every majority was yes
    assert report.unanimous_fraction == pytest.approx(7 / 12)
    assert report.one_disagreement_fraction == pytest.approx(5 / 12)
    assert report.individual_gold_fraction == pytest.approx(55 / 60)

    out = tmp_path / "export.tsv"
    service.export_tsv(out)
    rows = load_labeled_tsv(out)
    assert len(rows) == 12
    assert all(r.gold for r in rows)
    assert sum(r.disagreements for r in rows) == 5
    assert all(r.premise_sentence and r.hypothesis_sentence for r in rows)
    assert {r.premise_path for r in rows} == {f"nsubj--{v}--dobj" for v in VERBS12}


def test_assignment_replay_never_breaks_lock_invariants():
    """Replay a scripted mix of fetches, abandons and submissions; at no point
    may a worker hold two batches, see a cand twice, or oversubscribe a cand."""
    clock = FakeClock()
    service = make_service(required_votes=3, timeout=30.0, clock=clock)
    import random

    rng = random.Random(99)
    served: dict[str, list[tuple[float, set]]] = {}
    annotated: dict[str, set] = {}
    for step in range(200):
        w = f"w{rng.randrange(6)}"
        a = service.assign_batch(w)
        if a is None:
            clock.advance(5.0)
            continue
        served.setdefault(w, []).append((clock.now, set(a.cand_ids)))
        assert not (set(a.cand_ids) & annotated.get(w, set()))
        action = rng.random()
        if action < 0.5:
            service.submit(w, [{"cand": c, "label": rng.choice(["yes", "no"])} for c in a.cand_ids])
            annotated.setdefault(w, set()).update(a.cand_ids)
        elif action < 0.7:
            clock.advance(31.0)  # abandon; lock expires
        else:
            clock.advance(3.0)  # dawdle, batch stays open
    # no cand ever collected more answers than its quota
    from collections import Counter

    per_cand = Counter(r.cand for r in service.log.records())
    assert all(n <= 3 for n in per_cand.values())


# ------------------------------------------------------------- HTTP layer


def qualified_only():
    return Qualification(
        min_jobs=100,
        min_acceptance=0.95,
        require_test=True,
        allow_unknown=False,
        profiles={
            "good": WorkerProfile("good", 500, 0.99, True),
            "rookie": WorkerProfile("rookie", 3, 0.99, True),
        },
    )


def test_http_batch_submit_progress_export_stats():
    clock = FakeClock()
    service = make_service(required_votes=1, clock=clock)
    client = TestClient(create_app(service))

    got = client.get("/batch", params={"worker": "w1"})
    assert got.status_code == 200
    batch = got.json()
    assert batch["batch_id"]
    assert batch["premise"]["placeholders"]
    assert [q["cand"] for q in batch["questions"]]

    bad = client.post(
        "/submit",
        json={
            "worker": "w1",
            "batch_id": batch["batch_id"],
            "answers": [{"cand": q["cand"], "label": "maybe"} for q in batch["questions"]],
        },
    )
    assert bad.status_code == 400

    ok = client.post(
        "/submit",
        json={
            "worker": "w1",
            "batch_id": batch["batch_id"],
            "answers": [{"cand": q["cand"], "label": "yes"} for q in batch["questions"]],
        },
    )
    assert ok.status_code == 200
    assert ok.json()["accepted"] == len(batch["questions"])

    again = client.post(
        "/submit",
        json={
            "worker": "w1",
            "batch_id": batch["batch_id"],
            "answers": [{"cand": q["cand"], "label": "yes"} for q in batch["questions"]],
        },
    )
    assert again.status_code == 409  # lock already released

    # drain the rest of the queue
    while True:
        nxt = client.get("/batch", params={"worker": "w1"}).json()
        if nxt["batch_id"] is None:
            break
        client.post(
            "/submit",
            json={
                "worker": "w1",
                "answers": [{"cand": q["cand"], "label": "no"} for q in nxt["questions"]],
            },
        )

    progress = client.get("/progress").json()
    assert progress["candidates"] == 4
    assert progress["records"] == 4

    export = client.get("/export.tsv")
    assert export.status_code == 200
    header = export.text.splitlines()[0].split("\t")
    assert "premise_path" in header and "gold" in header
    assert len(export.text.splitlines()) == 5  # header + 4 gold rows

    stats = client.get("/stats").json()
    assert stats["validated"] == 4
    assert "Validated candidates" in stats["text"]


def test_http_missing_worker_and_expired_lock_codes():
    clock = FakeClock()
    service = make_service(required_votes=1, timeout=10.0, clock=clock)
    client = TestClient(create_app(service))
    assert client.get("/batch").status_code == 400
    batch = client.get("/batch", params={"worker": "w1"}).json()
    clock.advance(11.0)
    gone = client.post(
        "/submit",
        json={
            "worker": "w1",
            "answers": [{"cand": q["cand"], "label": "yes"} for q in batch["questions"]],
        },
    )
    assert gone.status_code == 409


def test_http_qualification_enforced():
    service = make_service(qualification=qualified_only())
    client = TestClient(create_app(service))
    assert client.get("/batch", params={"worker": "stranger"}).status_code == 403
    assert client.get("/batch", params={"worker": "rookie"}).status_code == 403  # too few jobs
    assert client.get("/batch", params={"worker": "good"}).status_code == 200


def test_qualification_from_files(tmp_path):
    cfg = tmp_path / "qual.cfg"
    cfg.write_text("min_jobs = 50\nmin_acceptance = 0.9\nrequire_test = 1\nallow_unknown = 0\n")
    profiles = tmp_path / "workers.tsv"
    profiles.write_text("alice\t200\t0.97\t1\nbob\t200\t0.97\t0\n")
    q = Qualification.from_files(cfg, profiles)
    q.check("alice")
    with pytest.raises(PermissionError):
        q.check("bob")  # no test pass
    with pytest.raises(PermissionError):
        q.check("carol")  # unknown not allowed


def test_static_ui_served_when_dir_present(tmp_path):
    (tmp_path / "index.html").write_text("<html><body>annotate</body></html>")
    queue = fig_queue()
    cfg = ServiceConfig(static_dir=tmp_path)
    service = AnnotationService(queue, RecordLog(), cfg, clock=FakeClock())
    client = TestClient(create_app(service))
    page = client.get("/")
    assert page.status_code == 200
    assert "annotate" in page.text
    # API routes still win over the static mount
    assert client.get("/progress").status_code == 200


# --- rebuilding a queue from a discovery export ------------------------------


def test_queue_from_tsv_with_store_restores_examples(tmp_path):
    from tegmine.annotation.service import queue_from_tsv
    from tegmine.discovery import write_candidates_tsv
    from tegmine.teg import TegStore

    premise = typed(PREMISE_PATH, PAIRS)
    hyp = typed(HYP_PATHS[1], PAIRS[:2])
    store = TegStore(
        relations={premise.base: premise.extension, hyp.base: hyp.extension},
        paths={premise.base: rel(PREMISE_PATH), hyp.base: rel(HYP_PATHS[1])},
        typed=[premise, hyp],
        entities={e for p in PAIRS for e in p},
    )
    cand = InfCand(premise, hyp, ScoreTriple(2000.0, 20.0, 0.9), premise.tsg)
    tsv = tmp_path / "cands.tsv"
    write_candidates_tsv([cand], store, tsv)

    direct = build_queue([cand], store.paths)
    rebuilt = queue_from_tsv(tsv, store=store)
    assert [e.cand_id for e in rebuilt] == [e.cand_id for e in direct]
    assert rebuilt[0].premise.example_entities == direct[0].premise.example_entities
    assert rebuilt[0].premise.example_entities[0]  # store lookup kept the extension

    bare = queue_from_tsv(tsv)  # no store: same ids, no examples
    assert bare[0].cand_id == direct[0].cand_id
    assert bare[0].premise.example_entities == ((), ())


def test_queue_from_tsv_rejects_missing_columns(tmp_path):
    from tegmine.annotation.service import queue_from_tsv
    from tegmine.evaluation import DataFormatError

    bad = tmp_path / "bad.tsv"
    bad.write_text("premise_path\thypothesis_path\na\tb\n", encoding="utf-8")
    with pytest.raises(DataFormatError, match="missing columns"):
        queue_from_tsv(bad)
