"""Majority aggregation with iterative worker-trust filtering.

Workers whose votes agree with the per-candidate majority less than 80% of
the time are dropped, majorities are recomputed without them, and so on to a
fixpoint (drop-only, hence order-independent and terminating in at most one
iteration per worker).  A candidate's gold label is the strict majority of
its first five trusted yes/no votes; candidates short of five land in
``needs_more``, and candidates whose premise a majority flagged as
incomprehensible are excluded outright.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

from tegmine.annotation.store import AnnotationRecord

DEFAULT_REQUIRED_VOTES = 5
DEFAULT_TRUST_THRESHOLD = 0.8
#: Exclusion needs evidence: a lone dissenting vote is not "frequent low
#: agreement", so workers are only trust-filtered once they have this many
#: countable submissions.
DEFAULT_MIN_TRUST_SUBMISSIONS = 2


@dataclass(frozen=True)
class WorkerStats:
    submissions: int  # yes/no votes on candidates that currently have a majority
    agreements: int

    @property
    def trust(self) -> float:
        if self.submissions == 0:
            return 1.0
        return self.agreements / self.submissions


@dataclass(frozen=True)
class GoldLabel:
    cand: str
    gold: bool  # True = yes
    disagreements: int
    trusted_votes: int  # all trusted yes/no votes, may exceed the five counted


@dataclass
class AggregateResult:
    gold: dict[str, GoldLabel] = field(default_factory=dict)
    worker_stats: dict[str, WorkerStats] = field(default_factory=dict)
    excluded_workers: frozenset[str] = frozenset()
    needs_more: frozenset[str] = frozenset()
    premise_excluded: frozenset[str] = frozenset()
    iterations: int = 0


def _majorities(votes_by_cand: dict[str, list[AnnotationRecord]]) -> dict[str, str]:
    """Strict yes/no majority per candidate; ties yield no entry."""
    out = {}
    for cand, votes in votes_by_cand.items():
        counts = Counter(v.label for v in votes)
        if counts["yes"] > counts["no"]:
            out[cand] = "yes"
        elif counts["no"] > counts["yes"]:
            out[cand] = "no"
    return out


def _worker_stats(
    votes_by_cand: dict[str, list[AnnotationRecord]], majority: dict[str, str]
) -> dict[str, WorkerStats]:
    subs: Counter = Counter()
    agree: Counter = Counter()
    workers = set()
    for cand, votes in votes_by_cand.items():
        for v in votes:
            workers.add(v.worker)
            if cand not in majority:
                continue  # tied candidates say nothing about anybody's trust
            subs[v.worker] += 1
            if v.label == majority[cand]:
                agree[v.worker] += 1
    return {w: WorkerStats(subs[w], agree[w]) for w in workers}


def aggregate(
    records: list[AnnotationRecord],
    required_votes: int = DEFAULT_REQUIRED_VOTES,
    trust_threshold: float = DEFAULT_TRUST_THRESHOLD,
    min_trust_submissions: int = DEFAULT_MIN_TRUST_SUBMISSIONS,
) -> AggregateResult:
    excluded: set[str] = set()
    iterations = 0
    stats: dict[str, WorkerStats] = {}
    while True:
        iterations += 1
        votes_by_cand: dict[str, list[AnnotationRecord]] = defaultdict(list)
        for r in records:
            if r.worker in excluded or r.label == "incomprehensible":
                continue
            votes_by_cand[r.cand].append(r)
        majority = _majorities(votes_by_cand)
        stats = _worker_stats(votes_by_cand, majority)
        dropped = {
            w
            for w, s in stats.items()
            if s.submissions >= min_trust_submissions and s.trust < trust_threshold
        }
        if dropped <= excluded:
            break
        excluded |= dropped

    # Premise flags: a candidate is thrown out when a strict majority of the
    # trusted workers who saw it flagged its premise as incomprehensible.
    flags: dict[str, list[bool]] = defaultdict(list)
    for r in records:
        if r.worker not in excluded:
            flags[r.cand].append(r.premise_flagged)
    premise_excluded = frozenset(
        cand for cand, fl in flags.items() if sum(fl) * 2 > len(fl)
    )

    gold: dict[str, GoldLabel] = {}
    needs_more: set[str] = set()
    votes_by_cand = defaultdict(list)
    for r in records:
        if r.worker not in excluded and r.label != "incomprehensible":
            votes_by_cand[r.cand].append(r)
    for cand, votes in votes_by_cand.items():
        if cand in premise_excluded:
            continue
        if len(votes) < required_votes:
            needs_more.add(cand)
            continue
        # Gold reflects the first `required_votes` trusted votes (arrival
        # order by timestamp, worker id breaking ties), so every emitted
        # label rests on the same number of judgments.
        counted = sorted(votes, key=lambda v: (v.time, v.worker))[:required_votes]
        counts = Counter(v.label for v in counted)
        if counts["yes"] == counts["no"]:
            needs_more.add(cand)  # even quota split, e.g. 2-2 at four votes
            continue
        winner = "yes" if counts["yes"] > counts["no"] else "no"
        gold[cand] = GoldLabel(
            cand=cand,
            gold=winner == "yes",
            disagreements=required_votes - counts[winner],
            trusted_votes=len(votes),
        )
    for cand in flags:
        if cand not in gold and cand not in needs_more and cand not in premise_excluded:
            needs_more.add(cand)  # only incomprehensible votes so far

    return AggregateResult(
        gold=gold,
        worker_stats=stats,
        excluded_workers=frozenset(excluded),
        needs_more=frozenset(needs_more),
        premise_excluded=premise_excluded,
        iterations=iterations,
    )


@dataclass(frozen=True)
class StatsReport:
    validated: int
    yes_fraction: float
    unanimous_fraction: float
    one_disagreement_fraction: float
    two_disagreement_fraction: float
    individual_gold_fraction: float
    required_votes: int = DEFAULT_REQUIRED_VOTES

    def to_text(self) -> str:
        rows = [
            ("Validated candidates", str(self.validated)),
            (
                "Balance yes/no",
                f"{round(self.yes_fraction * 100)}% / {round((1 - self.yes_fraction) * 100)}%",
            ),
            ("Pairs with unanimous gold label", f"{self.unanimous_fraction * 100:.1f}%"),
            ("Pairs with 1 disagreeing annotation", f"{self.one_disagreement_fraction * 100:.1f}%"),
            ("Pairs with 2 disagreeing annotations", f"{self.two_disagreement_fraction * 100:.1f}%"),
            ("Individual label = gold label", f"{self.individual_gold_fraction * 100:.1f}%"),
        ]
        return "\n".join(f"{k}\t{v}" for k, v in rows)


def stats_report(gold: dict[str, GoldLabel], required_votes: int = DEFAULT_REQUIRED_VOTES) -> StatsReport:
    n = len(gold)
    if n == 0:
        return StatsReport(0, 0.0, 0.0, 0.0, 0.0, 0.0, required_votes)
    by_disagreement = Counter(g.disagreements for g in gold.values())
    total_votes = required_votes * n
    agreeing = sum(required_votes - g.disagreements for g in gold.values())
    return StatsReport(
        validated=n,
        yes_fraction=sum(1 for g in gold.values() if g.gold) / n,
        unanimous_fraction=by_disagreement[0] / n,
        one_disagreement_fraction=by_disagreement[1] / n,
        two_disagreement_fraction=by_disagreement[2] / n,
        individual_gold_fraction=agreeing / total_votes,
        required_votes=required_votes,
    )
