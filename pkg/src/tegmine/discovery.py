"""Inference-rule candidate discovery: scoring and the six-way accept gate.

Premise/hypothesis pairs of typed relations are scored with three
statistics over their extensions — relevance (lift), a scaled
likelihood-ratio significance, and an entity-diversity ratio — and kept
when all thresholds pass.  Per hypothesis only the best 100 premises by
score product survive.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path

from .teg import Extension, TegStore, TypedRelation


class UndefinedScoreError(ValueError):
    """A score's preconditions do not hold (empty sets, degenerate P(B))."""


@dataclass(frozen=True)
class ScoreTriple:
    relv: float
    sigma: float
    esr: float

    @property
    def product(self) -> float:
        return self.relv * self.sigma * self.esr


@dataclass(frozen=True)
class DiscoveryConfig:
    theta_relv: float = 1000.0
    theta_sigma: float = 15.0
    theta_esr: float = 0.6
    r_min: int = 5
    max_premises_per_hypothesis: int = 100

    def __post_init__(self):
        for name in ("theta_relv", "theta_sigma", "theta_esr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.r_min < 1 or self.max_premises_per_hypothesis < 1:
            raise ValueError("r_min and max_premises_per_hypothesis must be >= 1")


def relevance(a: Extension, b: Extension, universe: int) -> float:
    """Lift of B given A: |A∩B|·|𝓔|² / (|A|·|B|)."""
    if not len(a) or not len(b):
        raise UndefinedScoreError("relevance needs non-empty extensions")
    inter = len(a.pairs & b.pairs)
    return inter * universe * universe / (len(a) * len(b))


def significance(a: Extension, b: Extension, universe: int) -> float:
    """σ(A,B) = P(B|A) · lrs(A,B) with lrs the two-term likelihood ratio.

    lrs sums over B and its complement; zero-probability terms drop out
    (0·log 0 := 0).  Natural logarithm throughout.
    """
    if not len(a) or not len(b):
        raise UndefinedScoreError("significance needs non-empty extensions")
    total = universe * universe
    p_b = len(b) / total
    if p_b >= 1.0:
        raise UndefinedScoreError("P(B) = 1: complement term undefined")
    p_b_given_a = len(a.pairs & b.pairs) / len(a)
    p_nb_given_a = 1.0 - p_b_given_a
    lrs = 0.0
    if p_b_given_a > 0.0:
        lrs += p_b_given_a * math.log(p_b_given_a / p_b)
    if p_nb_given_a > 0.0:
        lrs += p_nb_given_a * math.log(p_nb_given_a / (1.0 - p_b))
    lrs *= 2.0 * len(a)
    return p_b_given_a * lrs


def entity_support_ratio(a: Extension, b: Extension) -> float:
    """Distinct entities in A∩B over twice the pair count; in (0,1]."""
    inter = a.pairs & b.pairs
    if not inter:
        raise UndefinedScoreError("esr needs a non-empty intersection")
    support = set()
    for e1, e2 in inter:
        support.add(e1)
        support.add(e2)
    return len(support) / (2 * len(inter))


def joint_tsg(a: TypedRelation, b: TypedRelation) -> tuple[frozenset[str], frozenset[str]]:
    return (a.tsg[0] & b.tsg[0], a.tsg[1] & b.tsg[1])


def typed_key(t: TypedRelation) -> str:
    """Stable identifier for a typed relation (base id + slot types)."""
    return "%s:%s:%s" % (t.base, t.slot_types[0], t.slot_types[1])


@dataclass(frozen=True)
class InfCand:
    premise: TypedRelation
    hypothesis: TypedRelation
    scores: ScoreTriple
    joint_tsg: tuple[frozenset[str], frozenset[str]]


def accept_rule(
    premise: TypedRelation,
    hypothesis: TypedRelation,
    universe: int,
    cfg: DiscoveryConfig | None = None,
) -> tuple[InfCand | None, str]:
    """Check the six acceptance criteria in order; first failure wins."""
    cfg = cfg or DiscoveryConfig()
    a, b = premise.extension, hypothesis.extension
    jt = joint_tsg(premise, hypothesis)
    if not jt[0] or not jt[1]:
        return None, "criterion 1: joint type signature has an empty slot"
    inter = Extension(a.pairs & b.pairs)
    if len(inter) < cfg.r_min:
        return None, f"criterion 2: |A∩B| = {len(inter)} < {cfg.r_min}"
    if len(inter.project(1)) < cfg.r_min or len(inter.project(2)) < cfg.r_min:
        return None, "criterion 3: an intersection projection is below r_min"
    try:
        relv = relevance(a, b, universe)
        sigma = significance(a, b, universe)
        esr = entity_support_ratio(a, b)
    except UndefinedScoreError as exc:
        return None, f"undefined score: {exc}"
    if relv < cfg.theta_relv:
        return None, f"criterion 4: relevance {relv:.4g} < {cfg.theta_relv:.4g}"
    if sigma < cfg.theta_sigma:
        return None, f"criterion 5: significance {sigma:.4g} < {cfg.theta_sigma:.4g}"
    if esr < cfg.theta_esr:
        return None, f"criterion 6: entity support {esr:.4g} < {cfg.theta_esr:.4g}"
    return InfCand(premise, hypothesis, ScoreTriple(relv, sigma, esr), jt), ""


def rank_and_trim(cands: list[InfCand], cfg: DiscoveryConfig | None = None) -> list[InfCand]:
    """Per hypothesis: drop type-only variants of it, keep the top premises.

    A premise sharing the hypothesis' base relation differs from it only in
    slot types, so it carries no new lexical content.  Ranking is by score
    product, ties broken by premise key for determinism.
    """
    cfg = cfg or DiscoveryConfig()
    by_hyp: dict[str, list[InfCand]] = defaultdict(list)
    for cand in cands:
        by_hyp[typed_key(cand.hypothesis)].append(cand)
    kept = []
    for hyp_key in sorted(by_hyp):
        group = [c for c in by_hyp[hyp_key] if c.premise.base != c.hypothesis.base]
        group.sort(key=lambda c: (-c.scores.product, typed_key(c.premise)))
        kept.extend(group[: cfg.max_premises_per_hypothesis])
    return kept


def discover(store: TegStore, cfg: DiscoveryConfig | None = None) -> list[InfCand]:
    """Score every overlapping ordered pair of typed relations, then trim.

    Pairs with disjoint extensions can never pass criterion 2, so
    enumeration runs over an inverted index from entity pair to the typed
    relations containing it.
    """
    cfg = cfg or DiscoveryConfig()
    universe = store.entity_count
    typed = sorted(store.typed, key=typed_key)
    by_pair: dict[tuple[str, str], list[int]] = defaultdict(list)
    for i, t in enumerate(typed):
        for pair in t.extension:
            by_pair[pair].append(i)
    cands = []
    for h, hyp in enumerate(typed):
        partners = sorted({i for pair in hyp.extension for i in by_pair[pair]} - {h})
        for p in partners:
            cand, _ = accept_rule(typed[p], hyp, universe, cfg)
            if cand is not None:
                cands.append(cand)
    return rank_and_trim(cands, cfg)


TSV_HEADER = (
    "premise_path\tpremise_types\thypothesis_path\thypothesis_types\trelv\tsigma\tesr\tproduct"
)


def write_candidates_tsv(cands: list[InfCand], store: TegStore, path: str | Path) -> None:
    lines = [TSV_HEADER]
    for c in cands:
        lines.append(
            "\t".join(
                (
                    store.paths[c.premise.base].path,
                    ",".join(c.premise.slot_types),
                    store.paths[c.hypothesis.base].path,
                    ",".join(c.hypothesis.slot_types),
                    "%.10g" % c.scores.relv,
                    "%.10g" % c.scores.sigma,
                    "%.10g" % c.scores.esr,
                    "%.10g" % c.scores.product,
                )
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
