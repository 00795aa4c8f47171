"""Typed event graph: relation extensions, typed subrelations, signatures.

Relations map to extensions (sets of ordered entity pairs).  Each relation
is refined into up to k*k typable subrelations by picking the k most
frequent types per argument slot, with the catch-all type ``⊤`` standing in
when type information runs out.
"""

from __future__ import annotations

import logging
import struct
from collections import Counter
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path

from .paths import FilterConfig, MalformedPathError, Relation, parse_relation

log = logging.getLogger(__name__)

TOP = "⊤"

DEFAULT_K = 5
DEFAULT_R_MIN = 5

Pair = tuple[str, str]


class IngestError(RuntimeError):
    pass


class TypeMap:
    """τ: entity id → set of type labels; missing entities are untyped."""

    def __init__(self, mapping: dict[str, frozenset[str]] | None = None):
        self._map: dict[str, frozenset[str]] = dict(mapping or {})

    def types(self, entity: str) -> frozenset[str]:
        return self._map.get(entity, frozenset())

    def __len__(self) -> int:
        return len(self._map)

    def __contains__(self, entity: str) -> bool:
        return entity in self._map

    def items(self):
        return self._map.items()

    @classmethod
    def from_tsv(cls, path: str | Path) -> "TypeMap":
        mapping = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise IngestError(f"{path}:{lineno}: expected entity<TAB>types, got {line!r}")
            entity, types = parts
            if not entity:
                raise IngestError(f"{path}:{lineno}: empty entity id")
            mapping[entity] = frozenset(t.strip() for t in types.split(",") if t.strip())
        return cls(mapping)

    def to_tsv(self, path: str | Path) -> None:
        lines = [
            "%s\t%s" % (entity, ",".join(sorted(types)))
            for entity, types in sorted(self._map.items())
        ]
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


@dataclass(frozen=True)
class Extension:
    """Set of ordered entity pairs backing a relation."""

    pairs: frozenset[Pair]

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)

    def __contains__(self, pair: Pair) -> bool:
        return pair in self.pairs

    def project(self, slot: int) -> frozenset[str]:
        if slot not in (1, 2):
            raise ValueError("slot must be 1 or 2")
        return frozenset(p[slot - 1] for p in self.pairs)

    def sorted_pairs(self) -> list[Pair]:
        return sorted(self.pairs)


@dataclass(frozen=True)
class TypedRelation:
    base: str  # relation id
    slot_types: tuple[str, str]
    extension: Extension
    tsg: tuple[frozenset[str], frozenset[str]]


@dataclass
class TegStore:
    relations: dict[str, Extension] = field(default_factory=dict)
    paths: dict[str, Relation] = field(default_factory=dict)  # id → Relation
    typed: list[TypedRelation] = field(default_factory=list)
    entities: set[str] = field(default_factory=set)

    @property
    def entity_count(self) -> int:
        return len(self.entities)

    def relation_by_path(self, path: str) -> Relation | None:
        for rel in self.paths.values():
            if rel.path == path:
                return rel
        return None


@dataclass
class IngestReport:
    total: int = 0
    accepted: int = 0
    duplicates: int = 0
    malformed: int = 0
    rejected: Counter = field(default_factory=Counter)

    @property
    def rejected_total(self) -> int:
        return sum(self.rejected.values())


def ingest(lines, cfg: FilterConfig | None = None) -> tuple[TegStore, IngestReport]:
    """Build a store from TSV lines ``path<TAB>entity1<TAB>entity2``.

    Filter-rejected paths are tallied per criterion; structurally broken
    lines are skipped with a warning.  More than 50% broken lines aborts
    the run, since that points at a format mismatch rather than noise.
    """
    cfg = cfg or FilterConfig()
    store = TegStore()
    report = IngestReport()
    pairs_by_id: dict[str, set[Pair]] = {}
    rel_cache: dict[str, tuple[Relation | None, str]] = {}

    for lineno, line in enumerate(lines, 1):
        line = line.rstrip("\n")
        if not line.strip() or line.startswith("#"):
            continue
        report.total += 1
        parts = line.split("\t")
        if len(parts) != 3 or not all(parts):
            report.malformed += 1
            log.warning("line %d: malformed record %r", lineno, line)
            continue
        path, e1, e2 = parts
        if path not in rel_cache:
            try:
                rel_cache[path] = parse_relation(path, cfg)
            except MalformedPathError as exc:
                rel_cache[path] = (None, f"structural: {exc}")
        rel, reason = rel_cache[path]
        if rel is None:
            if reason.startswith("structural"):
                report.malformed += 1
                log.warning("line %d: %s", lineno, reason)
            else:
                report.rejected[reason] += 1
            continue
        if rel.id in store.paths and store.paths[rel.id].path != rel.path:
            raise IngestError(
                f"relation id collision: {rel.path!r} vs {store.paths[rel.id].path!r}"
            )
        store.paths[rel.id] = rel
        bucket = pairs_by_id.setdefault(rel.id, set())
        if (e1, e2) in bucket:
            report.duplicates += 1
        else:
            bucket.add((e1, e2))
            report.accepted += 1
        store.entities.update((e1, e2))

    if report.total and report.malformed * 2 > report.total:
        raise IngestError(
            f"{report.malformed}/{report.total} lines malformed; wrong input format?"
        )
    store.relations = {rid: Extension(frozenset(p)) for rid, p in pairs_by_id.items()}
    return store, report


def top_types(ext: Extension, slot: int, k: int, tau: TypeMap) -> list[str]:
    """Greedy list of the ≤k types most frequent in the given slot.

    Frequency counts pairs (an entity occurring in three pairs contributes
    three).  Candidates are chosen without replacement; when they run out
    before k picks, the catch-all ⊤ is emitted once and the list ends.
    Ties break lexicographically.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    counts: Counter = Counter()
    for pair in ext:
        for t in tau.types(pair[slot - 1]):
            counts[t] += 1
    ranked = sorted(counts, key=lambda t: (-counts[t], t))
    chosen = ranked[:k]
    if len(chosen) < k:
        chosen.append(TOP)
    return chosen


def restrict(ext: Extension, s: str, u: str, tau: TypeMap) -> Extension:
    """The subrelation keeping pairs typed (s, u); ⊤ slots keep everything."""
    kept = frozenset(
        (e1, e2)
        for e1, e2 in ext
        if (s == TOP or s in tau.types(e1)) and (u == TOP or u in tau.types(e2))
    )
    return Extension(kept)


def type_signature(ext: Extension, tau: TypeMap) -> tuple[frozenset[str], frozenset[str]]:
    """Per-slot intersection of the member entities' type sets."""
    if not len(ext):
        raise ValueError("extension must be non-empty")
    sig = []
    for slot in (1, 2):
        entity_sets = [tau.types(e) for e in ext.project(slot)]
        sig.append(frozenset.intersection(*entity_sets))
    return sig[0], sig[1]


def typable_subrelations(
    ext: Extension,
    tau: TypeMap,
    base_id: str,
    k: int = DEFAULT_K,
    r_min: int = DEFAULT_R_MIN,
) -> list[TypedRelation]:
    """Up to k*k typed subrelations of size ≥ r_min, in (s, u) order."""
    out = []
    for s, u in product(top_types(ext, 1, k, tau), top_types(ext, 2, k, tau)):
        sub = restrict(ext, s, u, tau)
        if len(sub) >= r_min:
            out.append(TypedRelation((base_id), (s, u), sub, type_signature(sub, tau)))
    return out


def type_all(store: TegStore, tau: TypeMap, k: int = DEFAULT_K, r_min: int = DEFAULT_R_MIN) -> None:
    """Populate store.typed for every relation, deterministically ordered."""
    typed = []
    for rid in sorted(store.relations):
        typed.extend(typable_subrelations(store.relations[rid], tau, rid, k, r_min))
    store.typed = typed


def top_involvement(store: TegStore) -> float:
    """Share of typed subrelations with a ⊤ slot (corpus statistic)."""
    if not store.typed:
        return 0.0
    with_top = sum(1 for t in store.typed if TOP in t.slot_types)
    return with_top / len(store.typed)


# ---------------------------------------------------------------------------
# persistence

_MAGIC = b"TEGS\x01"


def _pack_str(out: list[bytes], text: str) -> None:
    raw = text.encode("utf-8")
    out.append(struct.pack("<I", len(raw)))
    out.append(raw)


class _Reader:
    def __init__(self, blob: bytes):
        self.blob = blob
        self.pos = 0

    def u32(self) -> int:
        (v,) = struct.unpack_from("<I", self.blob, self.pos)
        self.pos += 4
        return v

    def text(self) -> str:
        n = self.u32()
        raw = self.blob[self.pos : self.pos + n]
        self.pos += n
        return raw.decode("utf-8")


def save_store(store: TegStore, path: str | Path) -> None:
    """Write the store to a deterministic binary file."""
    out: list[bytes] = [_MAGIC]
    rel_ids = sorted(store.relations)
    out.append(struct.pack("<I", len(rel_ids)))
    pair_index: dict[str, dict[Pair, int]] = {}
    for rid in rel_ids:
        _pack_str(out, store.paths[rid].path)
        pairs = store.relations[rid].sorted_pairs()
        pair_index[rid] = {p: i for i, p in enumerate(pairs)}
        out.append(struct.pack("<I", len(pairs)))
        for e1, e2 in pairs:
            _pack_str(out, e1)
            _pack_str(out, e2)
    rid_pos = {rid: i for i, rid in enumerate(rel_ids)}
    typed = sorted(store.typed, key=lambda t: (t.base, t.slot_types))
    out.append(struct.pack("<I", len(typed)))
    for t in typed:
        out.append(struct.pack("<I", rid_pos[t.base]))
        _pack_str(out, t.slot_types[0])
        _pack_str(out, t.slot_types[1])
        idx = sorted(pair_index[t.base][p] for p in t.extension)
        out.append(struct.pack("<I", len(idx)))
        out.append(struct.pack("<%dI" % len(idx), *idx) if idx else b"")
        _pack_str(out, ",".join(sorted(t.tsg[0])))
        _pack_str(out, ",".join(sorted(t.tsg[1])))
    Path(path).write_bytes(b"".join(out))


def load_store(path: str | Path, cfg: FilterConfig | None = None) -> TegStore:
    blob = Path(path).read_bytes()
    if blob[: len(_MAGIC)] != _MAGIC:
        raise IngestError(f"{path}: not a TEG store file")
    r = _Reader(blob[len(_MAGIC) :])
    store = TegStore()
    cfg = cfg or FilterConfig()
    rel_ids: list[str] = []
    rel_pairs: list[list[Pair]] = []
    for _ in range(r.u32()):
        rel, reason = parse_relation(r.text(), cfg)
        if rel is None:
            raise IngestError(f"{path}: stored path no longer valid: {reason}")
        pairs = [(r.text(), r.text()) for _ in range(r.u32())]
        store.paths[rel.id] = rel
        store.relations[rel.id] = Extension(frozenset(pairs))
        for e1, e2 in pairs:
            store.entities.update((e1, e2))
        rel_ids.append(rel.id)
        rel_pairs.append(pairs)
    for _ in range(r.u32()):
        pos = r.u32()
        s, u = r.text(), r.text()
        n = r.u32()
        idx = struct.unpack_from("<%dI" % n, r.blob, r.pos) if n else ()
        r.pos += 4 * n
        tsg1, tsg2 = r.text(), r.text()
        ext = Extension(frozenset(rel_pairs[pos][i] for i in idx))
        store.typed.append(
            TypedRelation(
                rel_ids[pos],
                (s, u),
                ext,
                (
                    frozenset(x for x in tsg1.split(",") if x),
                    frozenset(x for x in tsg2.split(",") if x),
                ),
            )
        )
    return store


def export_tsv(store: TegStore, out_dir: str | Path) -> None:
    """Human-readable dump: relations.tsv (triples) and typed.tsv."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rel_lines = []
    for rid in sorted(store.relations):
        path = store.paths[rid].path
        for e1, e2 in store.relations[rid].sorted_pairs():
            rel_lines.append(f"{path}\t{e1}\t{e2}")
    (out_dir / "relations.tsv").write_text("\n".join(rel_lines) + "\n", encoding="utf-8")
    typed_lines = ["path\tslot1_type\tslot2_type\tsize\ttsg1\ttsg2"]
    for t in sorted(store.typed, key=lambda t: (t.base, t.slot_types)):
        typed_lines.append(
            "%s\t%s\t%s\t%d\t%s\t%s"
            % (
                store.paths[t.base].path,
                t.slot_types[0],
                t.slot_types[1],
                len(t.extension),
                ",".join(sorted(t.tsg[0])),
                ",".join(sorted(t.tsg[1])),
            )
        )
    (out_dir / "typed.tsv").write_text("\n".join(typed_lines) + "\n", encoding="utf-8")
