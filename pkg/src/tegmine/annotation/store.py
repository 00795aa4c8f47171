"""Append-only annotation record log with snapshot recovery.

One JSON object per line; at most one record per (worker, cand).  Appends are
serialized by a lock so concurrent request handlers never interleave writes;
readers always work on a copied snapshot.
"""

from __future__ import annotations

import json
import threading
from dataclasses import asdict, dataclass
from pathlib import Path

LABELS = ("yes", "no", "incomprehensible")


class RecordError(ValueError):
    pass


class DuplicateRecordError(RecordError):
    """A (worker, cand) pair was submitted twice."""


@dataclass(frozen=True)
class AnnotationRecord:
    worker: str
    cand: str
    label: str
    premise_flagged: bool
    time: float

    def __post_init__(self):
        if self.label not in LABELS:
            raise RecordError(f"label must be one of {LABELS}, got {self.label!r}")
        if not self.worker or not self.cand:
            raise RecordError("worker and cand ids must be non-empty")


def _decode(obj: dict) -> AnnotationRecord:
    try:
        return AnnotationRecord(
            worker=obj["worker"],
            cand=obj["cand"],
            label=obj["label"],
            premise_flagged=bool(obj["premise_flagged"]),
            time=float(obj["time"]),
        )
    except KeyError as exc:
        raise RecordError(f"record missing field {exc}") from exc


class RecordLog:
    """In-memory record set, optionally mirrored to a JSONL file on disk.

    ``snapshot_every`` > 0 additionally rewrites a full ``<log>.snapshot.json``
    after every N appends; if the log file is lost, ``open`` falls back to the
    snapshot.
    """

    def __init__(self, path: str | Path | None = None, snapshot_every: int = 0):
        self.path = Path(path) if path is not None else None
        self.snapshot_every = snapshot_every
        self._records: list[AnnotationRecord] = []
        self._seen: set[tuple[str, str]] = set()
        self._lock = threading.Lock()

    @property
    def snapshot_path(self) -> Path | None:
        if self.path is None:
            return None
        return self.path.with_suffix(self.path.suffix + ".snapshot.json")

    @classmethod
    def open(cls, path: str | Path, snapshot_every: int = 0) -> "RecordLog":
        log = cls(path, snapshot_every=snapshot_every)
        source = log.path if log.path.exists() else None
        if source is None and log.snapshot_path.exists():
            payload = json.loads(log.snapshot_path.read_text(encoding="utf-8"))
            for obj in payload["records"]:
                log._admit(_decode(obj))
            return log
        if source is not None:
            for lineno, line in enumerate(source.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    log._admit(_decode(json.loads(line)))
                except json.JSONDecodeError as exc:
                    raise RecordError(f"{source}:{lineno}: bad JSON ({exc})") from exc
        return log

    def _admit(self, record: AnnotationRecord) -> None:
        key = (record.worker, record.cand)
        if key in self._seen:
            raise DuplicateRecordError(f"duplicate record for worker={record.worker} cand={record.cand}")
        self._seen.add(key)
        self._records.append(record)

    def append(self, record: AnnotationRecord) -> None:
        with self._lock:
            self._admit(record)
            if self.path is not None:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps(asdict(record), sort_keys=True) + "\n")
                if self.snapshot_every and len(self._records) % self.snapshot_every == 0:
                    self._write_snapshot()

    def extend(self, records) -> None:
        for r in records:
            self.append(r)

    def _write_snapshot(self) -> None:
        payload = {"count": len(self._records), "records": [asdict(r) for r in self._records]}
        tmp = self.snapshot_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")
        tmp.replace(self.snapshot_path)

    def write_snapshot(self) -> None:
        if self.path is None:
            raise RecordError("in-memory log has no snapshot path")
        with self._lock:
            self._write_snapshot()

    def records(self) -> list[AnnotationRecord]:
        with self._lock:
            return list(self._records)

    def has(self, worker: str, cand: str) -> bool:
        with self._lock:
            return (worker, cand) in self._seen

    def by_worker(self, worker: str) -> list[AnnotationRecord]:
        with self._lock:
            return [r for r in self._records if r.worker == worker]

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)
