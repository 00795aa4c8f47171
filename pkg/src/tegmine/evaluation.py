"""Labeled-candidate loading, stratified splitting, threshold tuning, reports.

Every scorer is evaluated on top of the lemma baseline: the prediction is
``lemma OR score >= θ``, with θ tuned for F1 on the dev split only.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass
from pathlib import Path

log = logging.getLogger(__name__)

POSITIVE_LABELS = {"entailment", "yes", "y", "1", "true"}
NEGATIVE_LABELS = {"non-entailment", "no", "n", "0", "false"}


class DataFormatError(ValueError):
    pass


@dataclass(frozen=True)
class LabeledCand:
    premise_path: str
    premise_types: tuple[str, str]
    hypothesis_path: str
    hypothesis_types: tuple[str, str]
    gold: bool
    disagreements: int
    cand_id: str = ""
    premise_sentence: str = ""
    hypothesis_sentence: str = ""
    examples: tuple[str, ...] = ()

    def __post_init__(self):
        if self.disagreements not in (0, 1, 2):
            raise DataFormatError(f"disagreements must be 0, 1 or 2, got {self.disagreements}")

    @property
    def sort_key(self):
        return (
            self.premise_path,
            self.premise_types,
            self.hypothesis_path,
            self.hypothesis_types,
            self.cand_id,
        )


DEFAULT_COLUMNS = {
    "premise_path": "premise_path",
    "premise_types": "premise_types",
    "hypothesis_path": "hypothesis_path",
    "hypothesis_types": "hypothesis_types",
    "gold": "gold",
    "disagreements": "disagreements",
    "cand_id": "cand_id",
    "premise_sentence": "premise_sentence",
    "hypothesis_sentence": "hypothesis_sentence",
}

REQUIRED_FIELDS = (
    "premise_path",
    "premise_types",
    "hypothesis_path",
    "hypothesis_types",
    "gold",
    "disagreements",
)


def _parse_types(raw: str) -> tuple[str, str]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) != 2 or not all(parts):
        raise DataFormatError(f"expected two comma-separated slot types, got {raw!r}")
    return parts[0], parts[1]


def parse_gold(raw: str) -> bool:
    label = raw.strip().lower()
    if label in POSITIVE_LABELS:
        return True
    if label in NEGATIVE_LABELS:
        return False
    raise DataFormatError(f"unrecognized gold label {raw!r}")


def load_labeled_tsv(path: str | Path, columns: dict[str, str] | None = None) -> list[LabeledCand]:
    """Read labeled candidates from a TSV with a header row.

    ``columns`` maps our field names to the file's column names, so files
    from other pipelines load without rewriting; unmapped optional fields
    default to empty.
    """
    columns = {**DEFAULT_COLUMNS, **(columns or {})}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise DataFormatError(f"{path}: empty file")
    header = lines[0].rstrip("\n").split("\t")
    index = {name: i for i, name in enumerate(header)}
    for fieldname in REQUIRED_FIELDS:
        if columns[fieldname] not in index:
            raise DataFormatError(
                f"{path}: missing required column {columns[fieldname]!r} (have {header})"
            )

    def get(row, fieldname, default=None):
        col = columns.get(fieldname)
        if col is None or col not in index:
            return default
        i = index[col]
        return row[i] if i < len(row) else default

    out = []
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        row = line.rstrip("\n").split("\t")
        try:
            out.append(
                LabeledCand(
                    premise_path=get(row, "premise_path"),
                    premise_types=_parse_types(get(row, "premise_types")),
                    hypothesis_path=get(row, "hypothesis_path"),
                    hypothesis_types=_parse_types(get(row, "hypothesis_types")),
                    gold=parse_gold(get(row, "gold")),
                    disagreements=int(get(row, "disagreements")),
                    cand_id=get(row, "cand_id", "") or "",
                    premise_sentence=get(row, "premise_sentence", "") or "",
                    hypothesis_sentence=get(row, "hypothesis_sentence", "") or "",
                )
            )
        except (DataFormatError, TypeError, ValueError) as exc:
            raise DataFormatError(f"{path}:{lineno}: {exc}") from exc
    return out


def labeled_tsv_text(cands: list[LabeledCand]) -> str:
    cols = [
        "cand_id",
        "premise_path",
        "premise_types",
        "hypothesis_path",
        "hypothesis_types",
        "gold",
        "disagreements",
        "premise_sentence",
        "hypothesis_sentence",
    ]
    lines = ["\t".join(cols)]
    for c in cands:
        lines.append(
            "\t".join(
                (
                    c.cand_id,
                    c.premise_path,
                    ",".join(c.premise_types),
                    c.hypothesis_path,
                    ",".join(c.hypothesis_types),
                    "entailment" if c.gold else "non-entailment",
                    str(c.disagreements),
                    c.premise_sentence,
                    c.hypothesis_sentence,
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_labeled_tsv(cands: list[LabeledCand], path: str | Path) -> None:
    Path(path).write_text(labeled_tsv_text(cands), encoding="utf-8")


def split_dev_test(
    data: list[LabeledCand], seed: int
) -> tuple[list[LabeledCand], list[LabeledCand]]:
    """25:75 split stratified on (gold, disagreements), seeded shuffle.

    Each stratum contributes its nearest-integer quarter to dev, so the
    ratio holds to within one item per stratum.
    """
    strata: dict[tuple[bool, int], list[LabeledCand]] = {}
    for cand in data:
        strata.setdefault((cand.gold, cand.disagreements), []).append(cand)
    rng = random.Random(seed)
    dev, test = [], []
    for key in sorted(strata):
        bucket = sorted(strata[key], key=lambda c: c.sort_key)
        if len(bucket) < 4:
            log.warning("stratum %s has only %d items; split is approximate", key, len(bucket))
        rng.shuffle(bucket)
        n_dev = (len(bucket) + 2) // 4
        dev.extend(bucket[:n_dev])
        test.extend(bucket[n_dev:])
    dev.sort(key=lambda c: c.sort_key)
    test.sort(key=lambda c: c.sort_key)
    return dev, test


def precision_recall_f1(pred: list[bool], gold: list[bool]) -> tuple[float, float, float]:
    tp = sum(1 for p, g in zip(pred, gold) if p and g)
    pp = sum(pred)
    gp = sum(gold)
    precision = tp / pp if pp else 0.0
    recall = tp / gp if gp else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _compose(lemma: list[bool] | None, scores: list[float], theta: float) -> list[bool]:
    if lemma is None:
        lemma = [False] * len(scores)
    return [flag or score >= theta for flag, score in zip(lemma, scores)]


def tune_threshold(
    scores: list[float], gold: list[bool], lemma: list[bool] | None = None
) -> float:
    """θ* maximizing F1 of (lemma OR score ≥ θ); ties go to the smallest θ.

    Candidate thresholds are ±∞ and the midpoints between adjacent
    distinct scores, which covers every achievable prediction vector.
    """
    if not scores:
        raise ValueError("cannot tune on empty data")
    distinct = sorted(set(scores))
    if len(distinct) == 1:
        # Degenerate scorer: accept-everything (θ = the constant) still
        # competes against reject-everything (θ = +∞, lemma only).
        log.warning("all scores equal (%s); threshold degenerate", distinct[0])
        candidates = [distinct[0], math.inf]
    else:
        candidates = [-math.inf]
        candidates.extend((a + b) / 2 for a, b in zip(distinct, distinct[1:]))
        candidates.append(math.inf)
    best_theta, best_f1 = None, -1.0
    for theta in candidates:
        _, _, f1 = precision_recall_f1(_compose(lemma, scores, theta), gold)
        if f1 > best_f1:
            best_theta, best_f1 = theta, f1
    return best_theta


def evaluate(
    scores: list[float],
    gold: list[bool],
    theta: float,
    lemma: list[bool] | None = None,
) -> tuple[float, float, float]:
    """P/R/F1 of the lemma-OR-threshold composition on one split."""
    return precision_recall_f1(_compose(lemma, scores, theta), gold)


@dataclass
class ReportRow:
    scorer: str
    theta: float
    dev: tuple[float, float, float]
    test: tuple[float, float, float]


REPORT_HEADER = "scorer\ttheta\tdevP\tdevR\tdevF1\ttestP\ttestR\ttestF1"


def write_report(rows: list[ReportRow], path: str | Path) -> None:
    lines = [REPORT_HEADER]
    for r in rows:
        lines.append(
            "%s\t%.6g\t%.3f\t%.3f\t%.3f\t%.3f\t%.3f\t%.3f"
            % (r.scorer, r.theta, *r.dev, *r.test)
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def released_data_paths(data_dir: str | Path) -> tuple[Path, Path]:
    """Locations of the published dev/test files under a local data directory."""
    d = Path(data_dir)
    return d / "dev.tsv", d / "test.tsv"


def load_released(
    data_dir: str | Path, columns: dict[str, str] | None = None
) -> tuple[list[LabeledCand], list[LabeledCand]]:
    """Load the published labeled splits from ``data_dir``.

    Expects dev.tsv and test.tsv with at least the REQUIRED_FIELDS columns
    (renameable via ``columns``).  Raises FileNotFoundError with guidance
    when the files are absent.
    """
    dev_path, test_path = released_data_paths(data_dir)
    for p in (dev_path, test_path):
        if not p.exists():
            raise FileNotFoundError(
                f"{p} not found: place the published labeled dev/test TSV files "
                f"under {data_dir} (see README, 'Released data')"
            )
    return load_labeled_tsv(dev_path, columns), load_labeled_tsv(test_path, columns)
