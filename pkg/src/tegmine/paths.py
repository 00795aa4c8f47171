"""Relations as lemmatized dependency paths.

A path is an alternating sequence of edge labels and lemmas, starting and
ending with an edge label (the two argument attachment points).  Paths are
stored in slot order: the first terminal binds argument slot 1, the last
terminal binds slot 2.  The reversed path is a different relation.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .config import load_kv_file, parse_list

EDGE = "edge"
LEMMA = "lemma"

SUBJECT_LABELS = frozenset({"nsubj", "nsubjpass"})

PATH_SEP = "--"


class MalformedPathError(ValueError):
    """Structurally broken path record (not a mere filter rejection)."""


def _data_text(name: str) -> str:
    return resources.files("tegmine").joinpath(f"data/{name}").read_text(encoding="utf-8")


def default_edge_labels() -> frozenset[str]:
    labels = set()
    for line in _data_text("edge_labels.txt").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            labels.add(line)
    return frozenset(labels)


@dataclass(frozen=True)
class PathToken:
    kind: str  # EDGE or LEMMA
    text: str

    def __post_init__(self):
        if self.kind not in (EDGE, LEMMA):
            raise MalformedPathError(f"unknown token kind {self.kind!r}")
        if not self.text:
            raise MalformedPathError("empty token text")


@dataclass(frozen=True)
class FilterConfig:
    """Path filter limits; defaults are the standard acceptance heuristics."""

    max_lemmas: int = 7
    max_labels: int = 8
    argument_labels: frozenset[str] = frozenset(
        {"nsubj", "nsubjpass", "iobj", "dobj", "pobj", "appos", "poss", "rcmod", "infmod", "partmod"}
    )
    banned_labels: frozenset[str] = frozenset({"parataxis", "pcomp", "csubj", "advcl", "ccomp"})
    label_vocabulary: frozenset[str] = field(default_factory=default_edge_labels)

    @classmethod
    def from_file(cls, path: str | Path) -> "FilterConfig":
        raw = load_kv_file(path)
        kwargs = {}
        if "max_lemmas" in raw:
            kwargs["max_lemmas"] = int(raw["max_lemmas"])
        if "max_labels" in raw:
            kwargs["max_labels"] = int(raw["max_labels"])
        if "argument_labels" in raw:
            kwargs["argument_labels"] = frozenset(parse_list(raw["argument_labels"]))
        if "banned_labels" in raw:
            kwargs["banned_labels"] = frozenset(parse_list(raw["banned_labels"]))
        if "label_vocabulary" in raw:
            kwargs["label_vocabulary"] = frozenset(parse_list(raw["label_vocabulary"]))
        return cls(**kwargs)


@dataclass(frozen=True)
class Relation:
    """A validated dependency path with a stable content-derived id."""

    tokens: tuple[PathToken, ...]
    id: str = ""

    def __post_init__(self):
        if not self.id:
            object.__setattr__(self, "id", path_id(self.tokens))

    @property
    def path(self) -> str:
        return PATH_SEP.join(t.text for t in self.tokens)

    def lemmas(self) -> tuple[str, ...]:
        return tuple(t.text for t in self.tokens if t.kind == LEMMA)

    def edge_labels(self) -> tuple[str, ...]:
        return tuple(t.text for t in self.tokens if t.kind == EDGE)

    def __str__(self) -> str:
        return self.path


def path_id(tokens: tuple[PathToken, ...]) -> str:
    text = PATH_SEP.join(t.text for t in tokens)
    return hashlib.blake2b(text.encode("utf-8"), digest_size=12).hexdigest()


def tokenize(path: str, cfg: FilterConfig | None = None) -> tuple[PathToken, ...]:
    """Split a ``--``-joined path string into alternating tokens.

    Token kinds are positional: even positions are edge labels, odd
    positions lemmas.  Raises MalformedPathError on structural problems
    (even token count, unknown edge label, empty token).
    """
    cfg = cfg or FilterConfig()
    parts = path.split(PATH_SEP)
    if len(parts) % 2 == 0:
        raise MalformedPathError(f"path must start and end with an edge label: {path!r}")
    tokens = []
    for i, part in enumerate(parts):
        part = part.strip().lower()
        if not part:
            raise MalformedPathError(f"empty token at position {i} in {path!r}")
        kind = EDGE if i % 2 == 0 else LEMMA
        if kind == EDGE and part not in cfg.label_vocabulary:
            raise MalformedPathError(f"unknown edge label {part!r} in {path!r}")
        tokens.append(PathToken(kind, part))
    return tuple(tokens)


def _check_alternation(tokens: tuple[PathToken, ...]) -> None:
    if not tokens:
        raise MalformedPathError("empty path")
    for i, tok in enumerate(tokens):
        expected = EDGE if i % 2 == 0 else LEMMA
        if tok.kind != expected:
            raise MalformedPathError(f"token {i} has kind {tok.kind}, expected {expected}")
    if tokens[-1].kind != EDGE:
        raise MalformedPathError("path must end with an edge label")


def _letters(text: str) -> int:
    return sum(1 for ch in text if ch.isalpha())


@dataclass(frozen=True)
class ValidationResult:
    accepted: bool
    reasons: tuple[str, ...] = ()

    @property
    def reason(self) -> str:
        """Primary rejection reason: the last (most specific) failed criterion."""
        return self.reasons[-1] if self.reasons else ""

    def __bool__(self) -> bool:
        return self.accepted


def validate_path(tokens: tuple[PathToken, ...], cfg: FilterConfig | None = None) -> ValidationResult:
    """Apply the seven acceptance heuristics; all violations are collected.

    The repetition check (criterion 7) runs over the lemma subsequence and
    the label subsequence separately, because in the interleaved sequence
    same-kind tokens are never adjacent.
    """
    cfg = cfg or FilterConfig()
    _check_alternation(tokens)

    first = tokens[0].text
    last = tokens[-1].text
    lemmas = [t.text for t in tokens if t.kind == LEMMA]
    labels = [t.text for t in tokens if t.kind == EDGE]

    reasons = []
    if first not in SUBJECT_LABELS and last not in SUBJECT_LABELS:
        reasons.append("criterion 1: no nominal subject at either end")
    if first not in cfg.argument_labels and last not in cfg.argument_labels:
        reasons.append("criterion 2: no argument label at either end")
    if len(lemmas) > cfg.max_lemmas or len(labels) > cfg.max_labels:
        reasons.append(f"criterion 3: too long ({len(lemmas)} lemmas, {len(labels)} labels)")
    if not any(_letters(lemma) >= 3 for lemma in lemmas):
        reasons.append("criterion 4: no lemma with at least 3 letters")
    if first == last:
        reasons.append("criterion 5: identical labels at both ends")
    banned = cfg.banned_labels.intersection(labels)
    if banned:
        reasons.append(f"criterion 6: banned label {sorted(banned)[0]}")
    for seq in (lemmas, labels):
        for a, b in zip(seq, seq[1:]):
            if a == b:
                reasons.append(f"criterion 7: immediate repetition of {a!r}")
                break
        else:
            continue
        break
    return ValidationResult(not reasons, tuple(reasons))


def parse_relation(path: str, cfg: FilterConfig | None = None) -> tuple[Relation | None, str]:
    """Tokenize + validate; returns (relation, "") or (None, reason)."""
    cfg = cfg or FilterConfig()
    tokens = tokenize(path, cfg)
    result = validate_path(tokens, cfg)
    if not result:
        return None, result.reason
    return Relation(tokens), ""


class StopList:
    """Set of function words excluded from content-word comparisons."""

    def __init__(self, words):
        self.words = frozenset(w.strip().lower() for w in words if w.strip())

    def __contains__(self, word: str) -> bool:
        return word.lower() in self.words

    def __len__(self) -> int:
        return len(self.words)

    @classmethod
    def from_file(cls, path: str | Path) -> "StopList":
        return cls(Path(path).read_text(encoding="utf-8").splitlines())


_DEFAULT_STOPLIST: StopList | None = None


def default_stoplist() -> StopList:
    global _DEFAULT_STOPLIST
    if _DEFAULT_STOPLIST is None:
        _DEFAULT_STOPLIST = StopList(_data_text("stopwords.txt").splitlines())
    return _DEFAULT_STOPLIST


def content_words(rel: Relation, stop: StopList) -> Counter:
    """Multiset of the relation's lemmas minus stop words."""
    return Counter(lemma for lemma in rel.lemmas() if lemma not in stop)


def subject_slot(rel: Relation) -> int:
    """Which argument slot (1 or 2) carries the nominal subject.

    Slot 1 wins if both terminals are subject labels.
    """
    if rel.tokens[0].text in SUBJECT_LABELS:
        return 1
    if rel.tokens[-1].text in SUBJECT_LABELS:
        return 2
    raise ValueError(f"path has no subject terminal: {rel.path}")


def predicate_and_voice(rel: Relation) -> tuple[str, str]:
    """Head lemma next to the subject terminal, plus active/passive voice."""
    slot = subject_slot(rel)
    if slot == 1:
        label, pred = rel.tokens[0].text, rel.tokens[1].text
    else:
        label, pred = rel.tokens[-1].text, rel.tokens[-2].text
    voice = "passive" if label == "nsubjpass" else "active"
    return pred, voice
