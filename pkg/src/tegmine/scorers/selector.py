"""Chooses between typed and untyped relation embeddings per type signature.

The dev split decides, three levels deep: exact signature match first,
then a vote of the two individual slot types, then the untyped model as
the last resort.  The fitted choice table is a plain key-value file so a
later run can rescore without the dev data.
"""

from __future__ import annotations

import logging
from pathlib import Path

from ..config import dump_kv, load_kv_file
from ..evaluation import evaluate, tune_threshold
from .base import Scorer

log = logging.getLogger(__name__)

TYPED = "typed"
UNTYPED = "untyped"


def _tsg_key(types) -> str:
    return "%s,%s" % (types[0], types[1])


class SelectorScorer(Scorer):
    """Dispatches each candidate to the dev-preferred embedding model.

    The emitted score is the chosen scorer's score minus that scorer's own
    tuned threshold, so zero marks the fitted decision boundary and the
    two models' scales stay comparable.
    """

    name = "tsg-selector"
    abstain = -2.0

    def __init__(
        self,
        typed_scorer: Scorer,
        untyped_scorer: Scorer,
        by_tsg: dict[str, str],
        by_type: dict[str, str],
        thetas: dict[str, float],
        default: str = UNTYPED,
    ):
        self.typed_scorer = typed_scorer
        self.untyped_scorer = untyped_scorer
        self.by_tsg = by_tsg
        self.by_type = by_type
        self.thetas = thetas
        self.default = default

    def choose(self, cand) -> str:
        key = _tsg_key(cand.hypothesis_types)
        if key in self.by_tsg:
            return self.by_tsg[key]
        votes = [self.by_type[t] for t in cand.hypothesis_types if t in self.by_type]
        if votes:
            return TYPED if votes.count(TYPED) > votes.count(UNTYPED) else (
                UNTYPED if votes.count(UNTYPED) > votes.count(TYPED) else self.default
            )
        return self.default

    def score(self, cand) -> float:
        choice = self.choose(cand)
        scorer = self.typed_scorer if choice == TYPED else self.untyped_scorer
        return scorer.score(cand) - self.thetas[choice]

    def save(self, path: str | Path) -> None:
        pairs = {
            "default": self.default,
            "theta_typed": repr(self.thetas[TYPED]),
            "theta_untyped": repr(self.thetas[UNTYPED]),
        }
        for key, choice in sorted(self.by_tsg.items()):
            pairs["tsg:%s" % key] = choice
        for key, choice in sorted(self.by_type.items()):
            pairs["type:%s" % key] = choice
        Path(path).write_text(dump_kv(pairs), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path, typed_scorer: Scorer, untyped_scorer: Scorer) -> "SelectorScorer":
        raw = load_kv_file(path)
        by_tsg = {k[4:]: v for k, v in raw.items() if k.startswith("tsg:")}
        by_type = {k[5:]: v for k, v in raw.items() if k.startswith("type:")}
        thetas = {TYPED: float(raw["theta_typed"]), UNTYPED: float(raw["theta_untyped"])}
        return cls(typed_scorer, untyped_scorer, by_tsg, by_type, thetas, raw["default"])


def _group_f1(cands, flags, scores, theta, gold):
    pred = [f or s >= theta for f, s in zip(flags, scores)]
    tp = sum(1 for p, g in zip(pred, gold) if p and g)
    pp, gp = sum(pred), sum(gold)
    p = tp / pp if pp else 0.0
    r = tp / gp if gp else 0.0
    return 2 * p * r / (p + r) if p + r else 0.0


def fit_tsg_selector(
    dev_cands,
    gold: list[bool],
    typed_scorer: Scorer,
    untyped_scorer: Scorer,
    lemma_flags: list[bool] | None = None,
) -> SelectorScorer:
    """Fit per-tsg and per-type choices on dev at each model's own θ*.

    Ties prefer the untyped model (the more general one).  If the fitted
    selector underperforms both components on dev, it degrades to the
    better single model so it can never be the worst of the three.
    """
    lemma_flags = lemma_flags or [False] * len(dev_cands)
    typed_scores = typed_scorer.scores(dev_cands)
    untyped_scores = untyped_scorer.scores(dev_cands)
    thetas = {
        TYPED: tune_threshold(typed_scores, gold, lemma_flags),
        UNTYPED: tune_threshold(untyped_scores, gold, lemma_flags),
    }

    groups: dict[str, list[int]] = {}
    for i, cand in enumerate(dev_cands):
        groups.setdefault(_tsg_key(cand.hypothesis_types), []).append(i)

    by_tsg: dict[str, str] = {}
    type_wins: dict[str, list[int]] = {}
    for key, ix in sorted(groups.items()):
        g = [gold[i] for i in ix]
        fl = [lemma_flags[i] for i in ix]
        f1_t = _group_f1(ix, fl, [typed_scores[i] for i in ix], thetas[TYPED], g)
        f1_u = _group_f1(ix, fl, [untyped_scores[i] for i in ix], thetas[UNTYPED], g)
        by_tsg[key] = TYPED if f1_t > f1_u else UNTYPED
        for t in key.split(","):
            wins = type_wins.setdefault(t, [0, 0])
            if f1_t > f1_u:
                wins[0] += 1
            elif f1_u > f1_t:
                wins[1] += 1

    by_type = {
        t: (TYPED if w[0] > w[1] else UNTYPED)
        for t, w in sorted(type_wins.items())
        if w[0] != w[1]
    }

    selector = SelectorScorer(typed_scorer, untyped_scorer, by_tsg, by_type, thetas)

    # guard: never fit a selector that loses to both of its parts on dev
    sel_f1 = evaluate(selector.scores(dev_cands), gold, 0.0, lemma_flags)[2]
    f1_typed = evaluate(typed_scores, gold, thetas[TYPED], lemma_flags)[2]
    f1_untyped = evaluate(untyped_scores, gold, thetas[UNTYPED], lemma_flags)[2]
    if sel_f1 < min(f1_typed, f1_untyped):
        best = TYPED if f1_typed >= f1_untyped else UNTYPED
        log.warning("selector dev F1 %.3f below both parts; degrading to %s", sel_f1, best)
        selector = SelectorScorer(typed_scorer, untyped_scorer, {}, {}, thetas, default=best)
    return selector
