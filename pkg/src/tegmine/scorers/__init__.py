"""Candidate scorers: baselines behind one real-valued interface."""

from .base import ConstantScorer, Scorer, SherlockScorer, SumScorer, cand_key
from .lemma import LemmaScorer, lemma_baseline

__all__ = [
    "Scorer",
    "ConstantScorer",
    "SumScorer",
    "SherlockScorer",
    "cand_key",
    "LemmaScorer",
    "lemma_baseline",
]
