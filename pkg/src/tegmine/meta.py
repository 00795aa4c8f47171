"""Mining of meta rules: masking material shared between premise and hypothesis.

Three levels of abstraction over accepted candidate pairs:

* path level — the one maximal lemma chunk common to both paths becomes X
  (``nsubj--X--prep--of--pobj  <=>  nsubj--X--poss``),
* character level — one lemma on each side related by derivational morphology
  (``teacher``/``teach`` gives ``Xer``/``X``; ``rewrite``/``write`` gives
  ``reX``/``X``),
* implicative pattern — ``A agrees to buy B  =>  A buys B`` style embeddings,
  reported as matrix verbs with frequencies.

Only single-mask templates are mined; candidates whose shared material cannot
be covered by one X are skipped.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from tegmine.paths import FilterConfig, MalformedPathError, Relation, tokenize

log = logging.getLogger(__name__)

MASK = "X"
DEFAULT_MIN_FREQ = 10
DEFAULT_PREFIXES = ("re", "over", "co")
FORWARD = "=>"
BOTH = "<=>"
SUBJECT_EDGES = ("nsubj", "nsubjpass")

CandPair = tuple[Relation, Relation]


class MetaMiningError(ValueError):
    pass


@dataclass(frozen=True)
class MetaRule:
    level: str  # path | char | implicative
    premise_template: str
    hypothesis_template: str
    direction: str  # "=>" or "<=>"
    frequency: int
    instantiations: tuple[str, ...]

    def __post_init__(self):
        for template in (self.premise_template, self.hypothesis_template):
            if sum(MASK in tok for tok in template.split("--")) != 1:
                raise MetaMiningError(f"template needs exactly one mask token: {template}")
        if self.frequency < 1:
            raise MetaMiningError("frequency must be positive")

    @property
    def examples(self) -> tuple[str, ...]:
        distinct: list[str] = []
        for x in self.instantiations:
            if x not in distinct:
                distinct.append(x)
            if len(distinct) == 3:
                break
        return tuple(distinct)


# --------------------------------------------------------------- path level


def _lemma_items(rel: Relation) -> tuple[list[str], list[str]]:
    """Lemma texts plus the edge label between consecutive lemmas."""
    toks = [t.text for t in rel.tokens]
    return toks[1::2], toks[2:-1:2]


def _maximal_runs(p: Relation, h: Relation) -> list[tuple[int, int, int]]:
    """All maximal matching lemma chunks (premise start, hyp start, length).

    Chunks must agree on their internal edge labels too, so a chunk matches
    token-for-token and can be spliced back in as a unit.
    """
    pl, pe = _lemma_items(p)
    hl, he = _lemma_items(h)
    n, m = len(pl), len(hl)
    length = [[0] * m for _ in range(n)]
    for i in range(n):
        for j in range(m):
            if pl[i] != hl[j]:
                continue
            if i and j and length[i - 1][j - 1] and pe[i - 1] == he[j - 1]:
                length[i][j] = length[i - 1][j - 1] + 1
            else:
                length[i][j] = 1
    runs = []
    for i in range(n):
        for j in range(m):
            size = length[i][j]
            if not size:
                continue
            extends = (
                i + 1 < n
                and j + 1 < m
                and length[i + 1][j + 1] == size + 1
            )
            if not extends:
                runs.append((i - size + 1, j - size + 1, size))
    return runs


def _mask_lemma_span(rel: Relation, start: int, size: int) -> tuple[str, str]:
    """Template with lemmas start..start+size-1 replaced by X, plus the chunk."""
    toks = [t.text for t in rel.tokens]
    lo, hi = 2 * start + 1, 2 * (start + size - 1) + 1  # token indices of the span
    template = toks[:lo] + [MASK] + toks[hi + 1 :]
    chunk = toks[lo : hi + 1]
    return "--".join(template), "--".join(chunk)


def mask_shared_path(p: Relation, h: Relation) -> tuple[str, str, str] | None:
    """Single-X masking of the unique maximal shared chunk, or None.

    Returns (premise template, hypothesis template, chunk).  Identical paths,
    no shared lemma, or several maximal shared chunks all yield None.
    """
    if p.path == h.path:
        return None
    runs = _maximal_runs(p, h)
    if len(runs) != 1:
        return None
    pi, hi, size = runs[0]
    p_template, chunk = _mask_lemma_span(p, pi, size)
    h_template, h_chunk = _mask_lemma_span(h, hi, size)
    assert chunk == h_chunk  # guaranteed by the edge-aware matcher
    return p_template, h_template, chunk


# --------------------------------------------------------------- char level


def er_join(stem: str) -> str:
    """Agent-noun form of a verb stem: teach->teacher, write->writer, win->winner."""
    if stem.endswith("e"):
        return stem + "r"
    if (
        len(stem) >= 3
        and stem[-1] not in "aeiouwxy"
        and stem[-2] in "aeiou"
        and stem[-3] not in "aeiou"
    ):
        return stem + stem[-1] + "er"
    return stem + "er"


def _derivation(derived: str, plain: str, prefixes: Sequence[str]) -> str | None:
    """Pattern for `derived` in terms of a mask over `plain`, or None.

    Checked in order: bare prefix, agent -er suffix, then prefix plus -er.
    """
    if len(plain) < 3 or derived == plain:
        return None
    for pfx in prefixes:
        for joined in (pfx, pfx + "-"):
            if derived == joined + plain:
                return f"{joined}{MASK}"
    if derived == er_join(plain):
        return f"{MASK}er"
    for pfx in prefixes:
        for joined in (pfx, pfx + "-"):
            if derived == joined + er_join(plain):
                return f"{joined}{MASK}er"
    return None


def _replace_lemma(rel: Relation, index: int, replacement: str) -> str:
    toks = [t.text for t in rel.tokens]
    toks[2 * index + 1] = replacement
    return "--".join(toks)


def mask_derivational(
    p: Relation, h: Relation, prefixes: Sequence[str] = DEFAULT_PREFIXES
) -> tuple[str, str, str] | None:
    """Char-level masking: one premise lemma is a derived form of one
    hypothesis lemma (or vice versa).  Returns templates plus the stem."""
    pl, _ = _lemma_items(p)
    hl, _ = _lemma_items(h)
    for i, lp in enumerate(pl):
        for j, lh in enumerate(hl):
            pattern = _derivation(lp, lh, prefixes)
            if pattern is not None:
                return _replace_lemma(p, i, pattern), _replace_lemma(h, j, MASK), lh
            pattern = _derivation(lh, lp, prefixes)
            if pattern is not None:
                return _replace_lemma(p, i, MASK), _replace_lemma(h, j, pattern), lp
    return None


# --------------------------------------------------------------- implicatives


def _implicative_verb(p_toks: list[str], h_toks: list[str]) -> tuple[str, str, str, str] | None:
    """Matrix verb plus templates when premise = subj--V--xcomp--X--obj and
    hypothesis = subj--X--obj."""
    if (
        len(p_toks) >= 5
        and p_toks[0] in SUBJECT_EDGES
        and p_toks[2] == "xcomp"
        and h_toks[0] == "nsubj"
        and h_toks[1:] == p_toks[3:]
    ):
        verb = p_toks[1]
        chunk = "--".join(p_toks[3:-1])
        premise_t = "--".join(p_toks[:3] + [MASK, p_toks[-1]])
        hyp_t = "--".join([h_toks[0], MASK, h_toks[-1]])
        return verb, premise_t, hyp_t, chunk
    return None


def match_implicative(p: Relation, h: Relation) -> tuple[str, str, str, str] | None:
    p_toks = [t.text for t in p.tokens]
    h_toks = [t.text for t in h.tokens]
    hit = _implicative_verb(p_toks, h_toks)
    if hit is None:  # relations stored with the subject in slot 2
        hit = _implicative_verb(p_toks[::-1], h_toks[::-1])
    return hit


# --------------------------------------------------------------- aggregation


def _aggregate(
    level: str,
    masked: Iterable[tuple[str, str, str]],
    min_freq: int,
) -> list[MetaRule]:
    """Group template pairs, merge mirrored pairs into one <=> rule."""
    groups: dict[tuple[str, str], list[str]] = defaultdict(list)
    for p_template, h_template, chunk in masked:
        groups[(p_template, h_template)].append(chunk)

    rules = []
    consumed: set[tuple[str, str]] = set()
    for pair in sorted(groups):
        if pair in consumed:
            continue
        chunks = groups[pair]
        mirror = (pair[1], pair[0])
        mirrored = groups.get(mirror, [])
        if len(chunks) >= min_freq and len(mirrored) >= min_freq:
            consumed.add(mirror)
            # keep the more frequent orientation (ties go to `pair`, which
            # sorts first); the merged rule counts both directions
            keep = pair if len(chunks) >= len(mirrored) else mirror
            combined = chunks + mirrored
            rules.append(
                MetaRule(
                    level=level,
                    premise_template=keep[0],
                    hypothesis_template=keep[1],
                    direction=BOTH,
                    frequency=len(combined),
                    instantiations=tuple(sorted(combined)),
                )
            )
        elif len(chunks) >= min_freq:
            rules.append(
                MetaRule(
                    level=level,
                    premise_template=pair[0],
                    hypothesis_template=pair[1],
                    direction=FORWARD,
                    frequency=len(chunks),
                    instantiations=tuple(sorted(chunks)),
                )
            )
    rules.sort(key=lambda r: (-r.frequency, r.premise_template, r.hypothesis_template))
    return rules


def mine_path_meta(cands: Sequence[CandPair], min_freq: int = DEFAULT_MIN_FREQ) -> list[MetaRule]:
    masked = (m for p, h in cands if (m := mask_shared_path(p, h)) is not None)
    return _aggregate("path", masked, min_freq)


def mine_char_meta(
    cands: Sequence[CandPair],
    min_freq: int = DEFAULT_MIN_FREQ,
    prefixes: Sequence[str] = DEFAULT_PREFIXES,
) -> list[MetaRule]:
    masked = (m for p, h in cands if (m := mask_derivational(p, h, prefixes)) is not None)
    return _aggregate("char", masked, min_freq)


def mine_implicatives(
    cands: Sequence[CandPair], min_freq: int = 1
) -> list[tuple[str, int]]:
    """Matrix verbs of the V-to-X pattern, most frequent first."""
    counts: dict[str, int] = defaultdict(int)
    for p, h in cands:
        hit = match_implicative(p, h)
        if hit is not None:
            counts[hit[0]] += 1
    ranked = [(v, n) for v, n in counts.items() if n >= min_freq]
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked


def implicative_rules(cands: Sequence[CandPair], min_freq: int = DEFAULT_MIN_FREQ) -> list[MetaRule]:
    masked = []
    for p, h in cands:
        hit = match_implicative(p, h)
        if hit is not None:
            _, premise_t, hyp_t, chunk = hit
            masked.append((premise_t, hyp_t, chunk))
    return _aggregate("implicative", masked, min_freq)


def mine_all(cands: Sequence[CandPair], min_freq: int = DEFAULT_MIN_FREQ) -> list[MetaRule]:
    return (
        mine_path_meta(cands, min_freq)
        + mine_char_meta(cands, min_freq)
        + implicative_rules(cands, min_freq)
    )


# --------------------------------------------------------------- templates


def instantiate(template: str, x: str) -> str:
    """Substitute a chunk back into a template, reapplying suffix morphology."""
    out = []
    for tok in template.split("--"):
        if tok == MASK:
            out.append(x)
        elif MASK in tok:
            prefix, _, suffix = tok.partition(MASK)
            value = er_join(x) if suffix == "er" else x + suffix
            out.append(prefix + value)
        else:
            out.append(tok)
    return "--".join(out)


# --------------------------------------------------------------- input/output

TSV_COLUMNS = ("level", "premise_template", "hypothesis_template", "direction", "freq", "examples")


def load_cand_paths(path: str | Path, cfg: FilterConfig | None = None) -> list[CandPair]:
    """Premise/hypothesis path pairs out of a discovery export TSV."""
    cfg = cfg or FilterConfig()
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise MetaMiningError(f"{path}: empty candidate file")
    header = lines[0].split("\t")
    try:
        pi, hi = header.index("premise_path"), header.index("hypothesis_path")
    except ValueError as exc:
        raise MetaMiningError(f"{path}: missing path columns in header {header}") from exc
    out = []
    cache: dict[str, Relation] = {}

    def parse(raw: str) -> Relation:
        if raw not in cache:
            cache[raw] = Relation(tokenize(raw, cfg))
        return cache[raw]

    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip():
            continue
        cols = line.split("\t")
        try:
            out.append((parse(cols[pi]), parse(cols[hi])))
        except (IndexError, MalformedPathError) as exc:
            raise MetaMiningError(f"{path}:{lineno}: bad candidate row ({exc})") from exc
    return out


def meta_tsv_text(rules: Sequence[MetaRule], min_freq: int) -> str:
    lines = [f"# min_freq = {min_freq}", "\t".join(TSV_COLUMNS)]
    for r in rules:
        lines.append(
            "\t".join(
                (
                    r.level,
                    r.premise_template,
                    r.hypothesis_template,
                    r.direction,
                    str(r.frequency),
                    ",".join(r.examples),
                )
            )
        )
    return "\n".join(lines) + "\n"


def write_meta_tsv(rules: Sequence[MetaRule], path: str | Path, min_freq: int) -> None:
    Path(path).write_text(meta_tsv_text(rules, min_freq), encoding="utf-8")
