"""The lemma baseline: content-word containment + predicate + voice check."""

from __future__ import annotations

from ..paths import (
    FilterConfig,
    MalformedPathError,
    Relation,
    StopList,
    content_words,
    default_stoplist,
    predicate_and_voice,
    subject_slot,
    tokenize,
)
from .base import Scorer


def lemma_baseline(premise: Relation, hypothesis: Relation, stop: StopList) -> int:
    """1 iff the premise trivially contains the hypothesis.

    Three conditions: the premise covers all the hypothesis' content words,
    the predicates are identical, and voice agrees with argument alignment
    (same voice + same subject slot, or flipped voice + flipped slot).
    """
    p_words = content_words(premise, stop)
    h_words = content_words(hypothesis, stop)
    if (h_words - p_words).total() > 0:
        return 0
    p_pred, p_voice = predicate_and_voice(premise)
    h_pred, h_voice = predicate_and_voice(hypothesis)
    if p_pred != h_pred:
        return 0
    aligned = subject_slot(premise) == subject_slot(hypothesis)
    if (p_voice == h_voice) != aligned:
        return 0
    return 1


class LemmaScorer(Scorer):
    name = "lemma"
    is_binary = True

    def __init__(self, stop: StopList | None = None, cfg: FilterConfig | None = None):
        self.stop = stop or default_stoplist()
        self.cfg = cfg or FilterConfig()
        self._cache: dict[str, Relation | None] = {}

    def _rel(self, path: str) -> Relation | None:
        if path not in self._cache:
            try:
                self._cache[path] = Relation(tokenize(path, self.cfg))
            except MalformedPathError:
                self._cache[path] = None
        return self._cache[path]

    def score(self, cand) -> float:
        p = self._rel(cand.premise_path)
        h = self._rel(cand.hypothesis_path)
        if p is None or h is None:
            return 0.0
        try:
            return float(lemma_baseline(p, h, self.stop))
        except ValueError:  # no subject terminal on one side
            return 0.0

    def flags(self, cands) -> list[bool]:
        return [bool(self.score(c)) for c in cands]
