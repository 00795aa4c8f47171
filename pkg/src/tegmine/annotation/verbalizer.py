"""Render typed relations as present-tense English for annotators.

A path like ``nsubj--annex--dobj`` with slot types ``(location, location)``
becomes ``location[B] is annexing location[A]``: the subject slot leads, the
predicate is conjugated (progressive unless the verb is stative or a copula),
and any remaining path lemmas follow verbatim before the second placeholder.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from tegmine.paths import Relation, predicate_and_voice, subject_slot
from tegmine.teg import TOP

VOWELS = "aeiou"
#: Consonants that never double before -ing / -ed (throw, box, play).
NO_DOUBLE = "wxy"


class VerbalizeError(ValueError):
    pass


@dataclass(frozen=True)
class VerbEntry:
    lemma: str
    pos: str
    progressive: str  # "-" when the verb has no progressive form
    past_participle: str
    present_3sg: str
    stative: bool


def ing_form(lemma: str) -> str:
    """Heuristic progressive for verbs missing from the lexicon (zorb -> zorbing)."""
    if lemma.endswith("ie"):
        return lemma[:-2] + "ying"
    if lemma.endswith("e") and not lemma.endswith(("ee", "oe", "ye")):
        return lemma[:-1] + "ing"
    if (
        len(lemma) >= 3
        and lemma[-1] not in VOWELS + NO_DOUBLE
        and lemma[-2] in VOWELS
        and lemma[-3] not in VOWELS
    ):
        return lemma + lemma[-1] + "ing"
    return lemma + "ing"


def ed_form(lemma: str) -> str:
    """Heuristic past participle for unknown verbs (zorb -> zorbed)."""
    if lemma.endswith("e"):
        return lemma + "d"
    if lemma.endswith("y") and len(lemma) > 1 and lemma[-2] not in VOWELS:
        return lemma[:-1] + "ied"
    if (
        len(lemma) >= 3
        and lemma[-1] not in VOWELS + NO_DOUBLE
        and lemma[-2] in VOWELS
        and lemma[-3] not in VOWELS
    ):
        return lemma + lemma[-1] + "ed"
    return lemma + "ed"


class Morphology:
    """Verb conjugation table, packaged defaults plus optional external lexicon."""

    def __init__(self, entries: Mapping[str, VerbEntry]):
        self._entries = dict(entries)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self._entries

    def get(self, lemma: str) -> VerbEntry | None:
        return self._entries.get(lemma)

    @staticmethod
    def parse(text: str, source: str = "<lexicon>") -> dict[str, VerbEntry]:
        entries: dict[str, VerbEntry] = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 6:
                raise VerbalizeError(f"{source}:{lineno}: expected 6 columns, got {len(cols)}")
            lemma, pos, prog, pp, pres3, stative = (c.strip() for c in cols)
            if stative not in ("0", "1"):
                raise VerbalizeError(f"{source}:{lineno}: stative flag must be 0 or 1")
            entries[lemma] = VerbEntry(lemma, pos, prog, pp, pres3, stative == "1")
        return entries

    @classmethod
    def load(cls, extra: str | Path | None = None) -> "Morphology":
        """Packaged table, optionally overlaid with an external lexicon file."""
        text = resources.files("tegmine").joinpath("data/morphology.tsv").read_text(encoding="utf-8")
        entries = cls.parse(text, "morphology.tsv")
        if extra is not None:
            entries.update(cls.parse(Path(extra).read_text(encoding="utf-8"), str(extra)))
        return cls(entries)


@lru_cache(maxsize=1)
def default_morphology() -> Morphology:
    return Morphology.load()


@dataclass(frozen=True)
class Verbalization:
    """One rendered clause with its argument placeholders.

    ``placeholders`` and ``example_entities`` are in path-slot order
    (slot 1 first), not surface order.
    """

    sentence: str
    placeholders: tuple[str, str]
    example_entities: tuple[tuple[str, ...], tuple[str, ...]] = ((), ())
    fallback: bool = False  # predicate missing from the lexicon, -ing heuristic used


def question(v: Verbalization) -> str:
    return f"Is it certain that {v.sentence}?"


def type_display(type_name: str) -> str:
    """Human-readable slot type: the catch-all type reads as plain 'entity'."""
    if type_name == TOP:
        return "entity"
    for sep in ("/", "."):
        if sep in type_name:
            type_name = type_name.rsplit(sep, 1)[1]
    return type_name


def placeholder(type_name: str, letter: str) -> str:
    return f"{type_display(type_name)}[{letter}]"


def _verb_phrase(pred: str, voice: str, morph: Morphology) -> tuple[str, bool]:
    entry = morph.get(pred)
    if voice == "passive":
        if entry is not None:
            return f"is {entry.past_participle}", False
        return f"is {ed_form(pred)}", True
    if entry is None:
        return f"is {ing_form(pred)}", True
    if entry.stative or entry.progressive == "-":
        return entry.present_3sg, False
    return f"is {entry.progressive}", False


def render_relation(
    rel: Relation,
    slot_types: tuple[str, str],
    letters: tuple[str, str] = ("A", "B"),
    morph: Morphology | None = None,
    example_entities: tuple[Sequence[str], Sequence[str]] = ((), ()),
) -> Verbalization:
    """Render one path as a declarative present-tense clause.

    ``letters`` assigns the placeholder letter per path slot, so
    ``letters=("B", "A")`` yields ``location[B] is annexing location[A]``
    for a subject-first path.
    """
    morph = morph or default_morphology()
    subj = subject_slot(rel)  # ValueError on paths without a subject terminal
    pred, voice = predicate_and_voice(rel)
    lemmas = list(rel.lemmas())
    if subj == 2:
        lemmas.reverse()
    if lemmas[0] != pred:  # pragma: no cover - guaranteed by paths module
        raise VerbalizeError(f"predicate mismatch on {rel.path}")
    tail = lemmas[1:]

    slots = (placeholder(slot_types[0], letters[0]), placeholder(slot_types[1], letters[1]))
    subj_ph, obj_ph = (slots[0], slots[1]) if subj == 1 else (slots[1], slots[0])
    vp, fallback = _verb_phrase(pred, voice, morph)
    sentence = " ".join([subj_ph, vp, *tail, obj_ph])
    examples = tuple(tuple(names[:3]) for names in example_entities)
    if len(examples) != 2:
        raise VerbalizeError("example_entities must provide one sequence per slot")
    return Verbalization(sentence, slots, examples, fallback)


def _slot_examples(pairs: Iterable[tuple[str, str]], limit: int = 3) -> tuple[tuple[str, ...], tuple[str, ...]]:
    firsts = sorted({p[0] for p in pairs})
    seconds = sorted({p[1] for p in pairs})
    return tuple(firsts[:limit]), tuple(seconds[:limit])


def verbalize(
    cands,
    paths: Mapping[str, Relation],
    morph: Morphology | None = None,
    letters: tuple[str, str] = ("A", "B"),
) -> tuple[Verbalization, list[Verbalization]]:
    """Verbalize one candidate, or a group sharing a premise, for one batch.

    Returns the premise clause plus one clause per hypothesis.  Example
    entities are drawn from the premise extension (sorted, at most three per
    slot); hypotheses carry no examples of their own.
    """
    group = list(cands) if isinstance(cands, (list, tuple)) else [cands]
    if not group:
        raise VerbalizeError("empty candidate group")
    premise = group[0].premise
    if any(c.premise is not premise and c.premise != premise for c in group[1:]):
        raise VerbalizeError("candidate group mixes premises")
    morph = morph or default_morphology()
    examples = _slot_examples(premise.extension.sorted_pairs())
    premise_v = render_relation(
        paths[premise.base], premise.slot_types, letters, morph, examples
    )
    hyps = [
        render_relation(paths[c.hypothesis.base], c.hypothesis.slot_types, letters, morph)
        for c in group
    ]
    return premise_v, hyps
