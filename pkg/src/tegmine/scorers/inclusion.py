"""Distributional-inclusion measures over entity-pair feature vectors."""

from __future__ import annotations

from collections import Counter

from ..teg import TegStore
from .base import Scorer
from .vectors import typed_token

Features = dict[str, float]


def weeds_prec(fa: Features, fb: Features) -> float | None:
    """Share of the premise's feature mass that falls in the hypothesis'
    support; None (abstain) on a zero premise vector."""
    total = sum(fa.values())
    if total <= 0:
        return None
    included = sum(w for f, w in fa.items() if f in fb and fb[f] > 0)
    return included / total


def clarke_inclusion(u: Features, v: Features) -> float:
    total = sum(u.values())
    if total <= 0:
        raise ValueError("zero vector")
    overlap = sum(min(w, v.get(f, 0.0)) for f, w in u.items())
    return overlap / total


def inv_cl(fa: Features, fb: Features) -> float | None:
    """sqrt(CL(fA,fB)·(1−CL(fB,fA))): inclusion of A in B, exclusion of B
    from A; None on a zero vector."""
    if sum(fa.values()) <= 0 or sum(fb.values()) <= 0:
        return None
    forward = clarke_inclusion(fa, fb)
    backward = clarke_inclusion(fb, fa)
    return (forward * (1.0 - backward)) ** 0.5


def pair_features(store: TegStore, typed: bool) -> dict[str, Features]:
    """Cooccurrence features per relation: one count per extension pair."""
    out: dict[str, Features] = {}
    if typed:
        for t in store.typed:
            key = typed_token(store.paths[t.base].path, t.slot_types)
            feats = out.setdefault(key, Counter())
            for e1, e2 in t.extension:
                feats["%s|%s" % (e1, e2)] += 1
    else:
        for rid, ext in store.relations.items():
            feats = out.setdefault(store.paths[rid].path, Counter())
            for e1, e2 in ext:
                feats["%s|%s" % (e1, e2)] += 1
    return {k: dict(v) for k, v in out.items()}


class InclusionScorer(Scorer):
    """WeedsPrec or invCL over stored relation features; OOV abstains 0."""

    def __init__(self, features: dict[str, Features], measure: str = "weedsprec", typed: bool = False):
        if measure not in ("weedsprec", "invcl"):
            raise ValueError(f"unknown measure {measure!r}")
        self.features = features
        self.measure = measure
        self.typed = typed
        self.name = measure

    def _key(self, path: str, types) -> str:
        return typed_token(path, types) if self.typed else path

    def score(self, cand) -> float:
        fa = self.features.get(self._key(cand.premise_path, cand.premise_types))
        fb = self.features.get(self._key(cand.hypothesis_path, cand.hypothesis_types))
        if fa is None or fb is None:
            return self.abstain
        fn = weeds_prec if self.measure == "weedsprec" else inv_cl
        value = fn(fa, fb)
        return self.abstain if value is None else value
