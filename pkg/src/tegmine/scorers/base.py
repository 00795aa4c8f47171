"""Scorer interface and generic combinators.

A scorer maps a candidate (premise/hypothesis paths plus slot types) to a
real number; binary scorers emit {0, 1}.  When a scorer cannot judge a
candidate it returns its ``abstain`` value — by convention the scorer's
theoretical minimum, so abstentions never pass a tuned threshold.
"""

from __future__ import annotations


def cand_key(cand) -> tuple[str, tuple[str, str], str, tuple[str, str]]:
    return (
        cand.premise_path,
        tuple(cand.premise_types),
        cand.hypothesis_path,
        tuple(cand.hypothesis_types),
    )


class Scorer:
    name = "scorer"
    is_binary = False
    abstain = 0.0

    def score(self, cand) -> float:
        raise NotImplementedError

    def scores(self, cands) -> list[float]:
        return [self.score(c) for c in cands]


class ConstantScorer(Scorer):
    """Always answers the same; with 1.0 this is the always-yes baseline."""

    is_binary = True

    def __init__(self, value: float = 1.0, name: str = "always-yes"):
        self.value = float(value)
        self.name = name

    def score(self, cand) -> float:
        return self.value


class SumScorer(Scorer):
    """Adds two scorers; abstentions contribute the missing side's abstain."""

    def __init__(self, first: Scorer, second: Scorer):
        self.first = first
        self.second = second
        self.name = f"{first.name}+{second.name}"
        self.abstain = first.abstain + second.abstain

    def score(self, cand) -> float:
        return self.first.score(cand) + self.second.score(cand)


class SherlockScorer(Scorer):
    """Product of the three discovery statistics (relevance · σ · esr).

    Reads the ScoreTriple off the candidate when present, otherwise falls
    back to a lookup table built from a discovery export; candidates
    missing from both abstain with 0.
    """

    name = "esr-product"

    def __init__(self, table: dict | None = None):
        self.table = table or {}

    def score(self, cand) -> float:
        scores = getattr(cand, "scores", None)
        if scores is not None:
            return scores.relv * scores.sigma * scores.esr
        return self.table.get(cand_key(cand), self.abstain)

    @classmethod
    def from_tsv(cls, path) -> "SherlockScorer":
        from pathlib import Path

        lines = Path(path).read_text(encoding="utf-8").splitlines()
        header = lines[0].split("\t")
        idx = {name: i for i, name in enumerate(header)}
        table = {}
        for line in lines[1:]:
            if not line.strip():
                continue
            row = line.split("\t")
            key = (
                row[idx["premise_path"]],
                tuple(row[idx["premise_types"]].split(",")),
                row[idx["hypothesis_path"]],
                tuple(row[idx["hypothesis_types"]].split(",")),
            )
            table[key] = float(row[idx["product"]])
        return cls(table)
