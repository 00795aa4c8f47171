"""HTTP service that hands verbalized candidate batches to annotators.

A batch is one premise plus all of its still-pending hypotheses.  Handed-out
candidates are held under per-(candidate, worker) locks so a worker is never
assigned the same candidate twice and a candidate is never oversubscribed
past its remaining quota; locks expire after a timeout so abandoned batches
recirculate.
"""

from __future__ import annotations

import itertools
import logging
import threading
from dataclasses import dataclass, field
from hashlib import blake2b
from pathlib import Path
from typing import Iterable, Mapping

from tegmine.annotation.aggregate import (
    DEFAULT_REQUIRED_VOTES,
    DEFAULT_TRUST_THRESHOLD,
    aggregate,
    stats_report,
)
from tegmine.annotation.store import LABELS, AnnotationRecord, DuplicateRecordError, RecordLog
from tegmine.annotation.verbalizer import Morphology, Verbalization, question, verbalize
from tegmine.config import load_kv_file
from tegmine.discovery import InfCand, ScoreTriple, typed_key
from tegmine.evaluation import DataFormatError, LabeledCand, labeled_tsv_text, write_labeled_tsv
from tegmine.paths import FilterConfig, MalformedPathError, Relation, tokenize
from tegmine.teg import Extension, TegStore, TypedRelation

log = logging.getLogger(__name__)


class QualificationError(PermissionError):
    pass


class LockError(RuntimeError):
    """Submission for a candidate the worker holds no live lock on."""


class SubmissionError(ValueError):
    pass


@dataclass(frozen=True)
class WorkerProfile:
    worker: str
    jobs: int
    acceptance: float
    passed_test: bool


@dataclass(frozen=True)
class Qualification:
    """Gate configuration: thresholds plus known worker profiles."""

    min_jobs: int = 0
    min_acceptance: float = 0.0
    require_test: bool = False
    allow_unknown: bool = True
    profiles: Mapping[str, WorkerProfile] = field(default_factory=dict)

    def check(self, worker: str) -> None:
        profile = self.profiles.get(worker)
        if profile is None:
            if not self.allow_unknown:
                raise QualificationError(f"unknown worker {worker!r}")
            return
        if profile.jobs < self.min_jobs:
            raise QualificationError(f"{worker}: {profile.jobs} prior jobs < {self.min_jobs}")
        if profile.acceptance < self.min_acceptance:
            raise QualificationError(
                f"{worker}: acceptance {profile.acceptance:.2f} < {self.min_acceptance:.2f}"
            )
        if self.require_test and not profile.passed_test:
            raise QualificationError(f"{worker}: qualification test not passed")

    @classmethod
    def from_files(cls, config_path: str | Path, profiles_path: str | Path | None = None) -> "Qualification":
        kv = load_kv_file(config_path)
        profiles: dict[str, WorkerProfile] = {}
        if profiles_path is not None:
            for line in Path(profiles_path).read_text(encoding="utf-8").splitlines():
                if not line.strip() or line.startswith("#"):
                    continue
                w, jobs, acc, passed = line.split("\t")
                profiles[w] = WorkerProfile(w, int(jobs), float(acc), passed.strip() == "1")
        return cls(
            min_jobs=int(kv.get("min_jobs", "0")),
            min_acceptance=float(kv.get("min_acceptance", "0")),
            require_test=kv.get("require_test", "0") == "1",
            allow_unknown=kv.get("allow_unknown", "1") == "1",
            profiles=profiles,
        )


@dataclass(frozen=True)
class QueueEntry:
    """One candidate, verbalized and ready to serve."""

    cand_id: str
    premise_key: str
    premise_path: str
    premise_types: tuple[str, str]
    hypothesis_path: str
    hypothesis_types: tuple[str, str]
    premise: Verbalization
    hypothesis: Verbalization


def build_queue(
    cands: Iterable,
    paths: Mapping[str, Relation],
    morph: Morphology | None = None,
    letters: tuple[str, str] = ("A", "B"),
) -> list[QueueEntry]:
    """Verbalize candidates up front; runtime then deals only in strings."""
    morph = morph or Morphology.load()
    entries = []
    for cand in cands:
        pk, hk = typed_key(cand.premise), typed_key(cand.hypothesis)
        cid = blake2b(f"{pk}=>{hk}".encode(), digest_size=12).hexdigest()
        premise_v, (hyp_v,) = verbalize(cand, paths, morph, letters)
        entries.append(
            QueueEntry(
                cand_id=cid,
                premise_key=pk,
                premise_path=paths[cand.premise.base].path,
                premise_types=cand.premise.slot_types,
                hypothesis_path=paths[cand.hypothesis.base].path,
                hypothesis_types=cand.hypothesis.slot_types,
                premise=premise_v,
                hypothesis=hyp_v,
            )
        )
    return entries


def queue_from_tsv(
    tsv_path: str | Path,
    store: TegStore | None = None,
    morph: Morphology | None = None,
    letters: tuple[str, str] = ("A", "B"),
    cfg: FilterConfig | None = None,
) -> list[QueueEntry]:
    """Rebuild a queue from a discovery export TSV.

    With the originating store, candidates get their real extensions back
    (so batches show example entities); without it they serve with empty
    extensions and no examples.
    """
    cfg = cfg or FilterConfig()
    lines = Path(tsv_path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataFormatError(f"{tsv_path}: empty file")
    header = lines[0].split("\t")
    needed = (
        "premise_path",
        "premise_types",
        "hypothesis_path",
        "hypothesis_types",
        "relv",
        "sigma",
        "esr",
    )
    missing = [c for c in needed if c not in header]
    if missing:
        raise DataFormatError(f"{tsv_path}: missing columns {missing}")
    col = {name: header.index(name) for name in needed}

    paths: dict[str, Relation] = dict(store.paths) if store else {}
    by_path_id: dict[str, Relation] = {}
    typed_by_key = {(t.base, t.slot_types): t for t in store.typed} if store else {}

    def parse(path_str: str) -> Relation:
        if path_str not in by_path_id:
            try:
                rel = Relation(tokenize(path_str, cfg))
            except MalformedPathError as exc:
                raise DataFormatError(f"{tsv_path}: bad path {path_str!r}: {exc}") from exc
            by_path_id[path_str] = rel
            paths.setdefault(rel.id, rel)
        return by_path_id[path_str]

    def typed(path_str: str, raw_types: str) -> TypedRelation:
        parts = tuple(raw_types.split(","))
        if len(parts) != 2 or not all(parts):
            raise DataFormatError(f"{tsv_path}: bad types {raw_types!r}")
        rel = parse(path_str)
        hit = typed_by_key.get((rel.id, parts))
        if hit is not None:
            return hit
        return TypedRelation(
            base=rel.id,
            slot_types=parts,
            extension=Extension(frozenset()),
            tsg=(frozenset({parts[0]}), frozenset({parts[1]})),
        )

    cands = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) < len(header):
            raise DataFormatError(f"{tsv_path}:{lineno}: expected {len(header)} columns")
        p = typed(parts[col["premise_path"]], parts[col["premise_types"]])
        h = typed(parts[col["hypothesis_path"]], parts[col["hypothesis_types"]])
        try:
            scores = ScoreTriple(
                relv=float(parts[col["relv"]]),
                sigma=float(parts[col["sigma"]]),
                esr=float(parts[col["esr"]]),
            )
        except ValueError as exc:
            raise DataFormatError(f"{tsv_path}:{lineno}: bad score: {exc}") from exc
        jtsg = (p.tsg[0] & h.tsg[0], p.tsg[1] & h.tsg[1])
        cands.append(InfCand(premise=p, hypothesis=h, scores=scores, joint_tsg=jtsg))
    return build_queue(cands, paths, morph, letters)


@dataclass
class ServiceConfig:
    required_votes: int = DEFAULT_REQUIRED_VOTES
    trust_threshold: float = DEFAULT_TRUST_THRESHOLD
    lock_timeout: float = 600.0  # seconds
    qualification: Qualification = field(default_factory=Qualification)
    static_dir: str | Path | None = None


@dataclass(frozen=True)
class Assignment:
    batch_id: str
    worker: str
    cand_ids: tuple[str, ...]
    expires: float


class AnnotationService:
    """Assignment, submission and aggregation over a fixed candidate queue."""

    def __init__(
        self,
        queue: list[QueueEntry],
        record_log: RecordLog | None = None,
        config: ServiceConfig | None = None,
        clock=None,
    ):
        import time as _time

        self.queue = {e.cand_id: e for e in queue}
        if len(self.queue) != len(queue):
            raise ValueError("duplicate candidate ids in queue")
        self.by_premise: dict[str, list[str]] = {}
        for e in queue:
            self.by_premise.setdefault(e.premise_key, []).append(e.cand_id)
        self.log = record_log if record_log is not None else RecordLog()
        self.config = config or ServiceConfig()
        self.clock = clock or _time.time
        self._assignments: dict[str, Assignment] = {}  # batch_id → assignment
        self._locks: dict[tuple[str, str], str] = {}  # (cand, worker) → batch_id
        self._batch_counter = itertools.count(1)
        self._mutex = threading.Lock()

    # -- assignment -------------------------------------------------------

    def _expired(self, assignment: Assignment) -> bool:
        return self.clock() >= assignment.expires

    def _reap_locks(self) -> None:
        dead = [bid for bid, a in self._assignments.items() if self._expired(a)]
        for bid in dead:
            a = self._assignments.pop(bid)
            for cid in a.cand_ids:
                self._locks.pop((cid, a.worker), None)

    def _vote_count(self, cand_id: str) -> int:
        return sum(1 for r in self.log.records() if r.cand == cand_id and r.label in ("yes", "no"))

    def _active_locks(self, cand_id: str, but_worker: str) -> int:
        return sum(1 for (cid, w) in self._locks if cid == cand_id and w != but_worker)

    def _pending_for(self, worker: str, cand_id: str) -> bool:
        if self.log.has(worker, cand_id):
            return False
        have = self._vote_count(cand_id) + self._active_locks(cand_id, worker)
        return have < self.config.required_votes

    def assign_batch(self, worker: str) -> Assignment | None:
        """Lock and return all pending hypotheses of one premise, or None."""
        if not worker:
            raise SubmissionError("worker id required")
        self.config.qualification.check(worker)
        with self._mutex:
            self._reap_locks()
            for a in self._assignments.values():
                if a.worker == worker:  # repeated fetch re-serves the open batch
                    return a
            for pk in sorted(self.by_premise):
                pending = [cid for cid in self.by_premise[pk] if self._pending_for(worker, cid)]
                if not pending:
                    continue
                bid = f"b{next(self._batch_counter)}"
                assignment = Assignment(
                    batch_id=bid,
                    worker=worker,
                    cand_ids=tuple(pending),
                    expires=self.clock() + self.config.lock_timeout,
                )
                self._assignments[bid] = assignment
                for cid in pending:
                    self._locks[(cid, worker)] = bid
                return assignment
            return None

    def batch_payload(self, assignment: Assignment | None) -> dict:
        if assignment is None:
            return {"batch_id": None, "premise": None, "questions": []}
        first = self.queue[assignment.cand_ids[0]]
        pv = first.premise
        return {
            "batch_id": assignment.batch_id,
            "worker": assignment.worker,
            "expires": assignment.expires,
            "premise": {
                "sentence": pv.sentence,
                "placeholders": list(pv.placeholders),
                "examples": [list(names) for names in pv.example_entities],
                "fallback": pv.fallback,
            },
            "questions": [
                {
                    "cand": cid,
                    "sentence": self.queue[cid].hypothesis.sentence,
                    "question": question(self.queue[cid].hypothesis),
                    "fallback": self.queue[cid].hypothesis.fallback,
                }
                for cid in assignment.cand_ids
            ],
        }

    # -- submission -------------------------------------------------------

    def submit(
        self,
        worker: str,
        answers: list[dict],
        premise_flagged: bool = False,
        batch_id: str | None = None,
    ) -> int:
        """Record one batch's answers; returns the number of records written."""
        self.config.qualification.check(worker)
        with self._mutex:
            self._reap_locks()
            open_batches = [a for a in self._assignments.values() if a.worker == worker]
            if not open_batches:
                raise LockError(f"{worker} holds no live batch (expired or never assigned)")
            assignment = open_batches[0]
            if batch_id is not None and batch_id != assignment.batch_id:
                raise LockError(f"batch {batch_id} is not open for {worker}")
            locked = set(assignment.cand_ids)
            now = self.clock()
            if premise_flagged:
                records = [
                    AnnotationRecord(worker, cid, "incomprehensible", True, now)
                    for cid in assignment.cand_ids
                ]
            else:
                got = {}
                for ans in answers:
                    cid, label = ans.get("cand"), ans.get("label")
                    if cid not in locked:
                        raise LockError(f"no live lock for cand {cid!r}")
                    if label not in LABELS:
                        raise SubmissionError(f"bad label {label!r} for cand {cid}")
                    if cid in got:
                        raise SubmissionError(f"cand {cid} answered twice")
                    got[cid] = label
                missing = locked - got.keys()
                if missing:
                    raise SubmissionError(f"unanswered candidates: {sorted(missing)}")
                records = [
                    AnnotationRecord(worker, cid, got[cid], False, now)
                    for cid in assignment.cand_ids
                ]
            for r in records:  # duplicate (worker, cand) surfaces as an error
                self.log.append(r)
            self._assignments.pop(assignment.batch_id)
            for cid in assignment.cand_ids:
                self._locks.pop((cid, worker), None)
            return len(records)

    # -- reporting --------------------------------------------------------

    def aggregate(self):
        return aggregate(
            self.log.records(),
            required_votes=self.config.required_votes,
            trust_threshold=self.config.trust_threshold,
        )

    def progress(self) -> dict:
        result = self.aggregate()
        done = set(result.gold) | set(result.premise_excluded)
        return {
            "candidates": len(self.queue),
            "gold": len(result.gold),
            "premise_excluded": len(result.premise_excluded),
            "needs_more": len(set(self.queue) - done),
            "records": len(self.log),
            "workers": len(result.worker_stats),
            "excluded_workers": sorted(result.excluded_workers),
        }

    def export_rows(self) -> list[LabeledCand]:
        result = self.aggregate()
        rows = []
        for cid in sorted(result.gold):
            g = result.gold[cid]
            e = self.queue.get(cid)
            if e is None:
                log.warning("gold label for unknown cand %s skipped in export", cid)
                continue
            rows.append(
                LabeledCand(
                    premise_path=e.premise_path,
                    premise_types=e.premise_types,
                    hypothesis_path=e.hypothesis_path,
                    hypothesis_types=e.hypothesis_types,
                    gold=g.gold,
                    disagreements=g.disagreements,
                    cand_id=cid,
                    premise_sentence=e.premise.sentence,
                    hypothesis_sentence=e.hypothesis.sentence,
                )
            )
        return rows

    def export_tsv(self, path: str | Path) -> None:
        write_labeled_tsv(self.export_rows(), path)

    def stats(self):
        return stats_report(self.aggregate().gold, self.config.required_votes)


def create_app(service: AnnotationService):
    """FastAPI wiring; JSON field names are pinned in docs/api.md."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import PlainTextResponse

    app = FastAPI(title="annotation service")

    @app.get("/batch")
    def get_batch(worker: str = ""):
        try:
            assignment = service.assign_batch(worker)
        except QualificationError as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except SubmissionError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return service.batch_payload(assignment)

    @app.post("/submit")
    def post_submit(payload: dict):
        worker = payload.get("worker", "")
        answers = payload.get("answers", [])
        flagged = bool(payload.get("premise_flagged", False))
        if not worker:
            raise HTTPException(status_code=400, detail="worker id required")
        try:
            n = service.submit(
                worker, answers, premise_flagged=flagged, batch_id=payload.get("batch_id")
            )
        except QualificationError as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except (LockError, DuplicateRecordError) as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except SubmissionError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"accepted": n}

    @app.get("/progress")
    def get_progress():
        return service.progress()

    @app.get("/export.tsv", response_class=PlainTextResponse)
    def get_export():
        return labeled_tsv_text(service.export_rows())

    @app.get("/stats")
    def get_stats():
        report = service.stats()
        return {
            "validated": report.validated,
            "yes_fraction": report.yes_fraction,
            "unanimous_fraction": report.unanimous_fraction,
            "one_disagreement_fraction": report.one_disagreement_fraction,
            "two_disagreement_fraction": report.two_disagreement_fraction,
            "individual_gold_fraction": report.individual_gold_fraction,
            "text": report.to_text(),
        }

    static_dir = service.config.static_dir
    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
