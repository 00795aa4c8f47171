"""Exact-lookup rule collections converted to normalized TSV pair files."""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

from ..paths import StopList
from .base import Scorer

log = logging.getLogger(__name__)

_WS = re.compile(r"\s+")
_PLACEHOLDERS = {"x": "[a]", "y": "[b]", "[x]": "[a]", "[y]": "[b]", "[a]": "[a]", "[b]": "[b]"}


def norm_generic(text: str) -> str:
    return _WS.sub(" ", text.strip().lower())


def norm_placeholders(text: str) -> str:
    words = [_PLACEHOLDERS.get(w, w) for w in norm_generic(text).split(" ")]
    return " ".join(words)


def norm_phrase(text: str, stop: StopList) -> str:
    """Phrase normalizer: placeholder canonicalization + stop-word stripping."""
    words = [w for w in norm_placeholders(text).split(" ") if w not in stop or w in ("[a]", "[b]")]
    return " ".join(words)


class RuleBaseError(RuntimeError):
    pass


@dataclass(frozen=True)
class RuleBase:
    name: str
    entries: frozenset[tuple[str, str]]

    def __contains__(self, pair: tuple[str, str]) -> bool:
        return pair in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def from_tsv(cls, path: str | Path, name: str | None = None) -> "RuleBase":
        """Load premise/hypothesis key pairs; extra columns (original type or
        POS constraints) are ignored to boost recall."""
        p = Path(path)
        if not p.exists():
            raise RuleBaseError(f"rule file not found: {p}")
        entries = set()
        skipped = 0
        for line in p.read_text(encoding="utf-8").splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) < 2 or not parts[0].strip() or not parts[1].strip():
                skipped += 1
                continue
            entries.add((norm_placeholders(parts[0]), norm_placeholders(parts[1])))
        if skipped:
            log.warning("%s: skipped %d unparseable entries", p, skipped)
        return cls(name or p.stem, frozenset(entries))


def union_rulebases(bases: list[RuleBase], name: str = "all-rules") -> RuleBase:
    entries = frozenset().union(*(b.entries for b in bases)) if bases else frozenset()
    return RuleBase(name, entries)


class RuleBaseScorer(Scorer):
    """Binary membership of the normalized (premise, hypothesis) key pair."""

    is_binary = True

    def __init__(self, rb: RuleBase, key_fn=None):
        self.rb = rb
        self.name = rb.name
        self.key_fn = key_fn or (lambda c: (norm_placeholders(c.premise_path), norm_placeholders(c.hypothesis_path)))

    def score(self, cand) -> float:
        return 1.0 if self.key_fn(cand) in self.rb else 0.0
