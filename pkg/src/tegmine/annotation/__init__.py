"""Human annotation of inference candidates: verbalization, collection, aggregation."""

from tegmine.annotation.aggregate import (
    AggregateResult,
    GoldLabel,
    WorkerStats,
    aggregate,
    stats_report,
)
from tegmine.annotation.store import AnnotationRecord, DuplicateRecordError, RecordLog
from tegmine.annotation.verbalizer import (
    Morphology,
    Verbalization,
    question,
    render_relation,
    verbalize,
)

__all__ = [
    "AggregateResult",
    "AnnotationRecord",
    "DuplicateRecordError",
    "GoldLabel",
    "Morphology",
    "RecordLog",
    "Verbalization",
    "WorkerStats",
    "aggregate",
    "question",
    "render_relation",
    "stats_report",
    "verbalize",
]
