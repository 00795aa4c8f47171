from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tegmine.teg import (
    TOP,
    Extension,
    IngestError,
    TypeMap,
    export_tsv,
    ingest,
    load_store,
    restrict,
    save_store,
    top_involvement,
    top_types,
    typable_subrelations,
    type_all,
    type_signature,
)


def ext(*pairs):
    return Extension(frozenset(pairs))


def tmap(**kwargs):
    return TypeMap({k: frozenset(v) for k, v in kwargs.items()})


def triples(*rows):
    return ["\t".join(r) for r in rows]


def test_ingest_groups_pairs_by_relation():
    store, report = ingest(
        triples(
            ("nsubj--annex--dobj", "e1", "e2"),
            ("nsubj--annex--dobj", "e3", "e4"),
            ("nsubj--annex--dobj", "e5", "e6"),
        )
    )
    assert len(store.relations) == 1
    (extension,) = store.relations.values()
    assert len(extension) == 3
    assert report.accepted == 3
    assert store.entities == {"e1", "e2", "e3", "e4", "e5", "e6"}


def test_ingest_counts_filter_rejections():
    store, report = ingest(triples(("nsubj--say--ccomp--win--dobj", "a", "b")))
    assert not store.relations
    assert report.rejected_total == 1
    (reason,) = report.rejected
    assert reason.startswith("criterion 6")


def test_ingest_deduplicates_triples():
    store, report = ingest(
        triples(("nsubj--annex--dobj", "a", "b"), ("nsubj--annex--dobj", "a", "b"))
    )
    (extension,) = store.relations.values()
    assert len(extension) == 1
    assert report.duplicates == 1


def test_ingest_skips_malformed_lines():
    store, report = ingest(["nsubj--annex--dobj\ta\tb", "only-two\tcolumns", ""])
    assert report.malformed == 1
    assert report.accepted == 1


def test_ingest_aborts_on_mostly_malformed_input():
    lines = ["bad line"] * 3 + ["nsubj--annex--dobj\ta\tb"]
    with pytest.raises(IngestError):
        ingest(lines)


def test_ingest_direction_matters():
    store, _ = ingest(
        triples(("nsubj--annex--dobj", "a", "b"), ("dobj--annex--nsubj", "a", "b"))
    )
    assert len(store.relations) == 2


def test_top_types_single_type_then_top():
    e = ext(("a", "x"), ("b", "y"))
    tau = tmap(a=["loc"], b=["loc"])
    assert top_types(e, 1, 2, tau) == ["loc", TOP]


def test_top_types_tie_breaks_lexicographically():
    e = ext(("a", "x"), ("b", "y"), ("c", "z"))
    tau = tmap(a=["loc", "gov"], b=["loc"], c=["gov"])
    # loc and gov both cover two pairs; gov sorts first
    assert top_types(e, 1, 2, tau) == ["gov", "loc"]


def test_top_types_untyped_gives_top_only():
    e = ext(("a", "x"), ("b", "y"))
    assert top_types(e, 1, 3, TypeMap()) == [TOP]


def test_top_types_counts_pairs_not_entities():
    e = ext(("a", "x"), ("a", "y"), ("a", "z"), ("b", "w"))
    tau = tmap(a=["org"], b=["per"], x=[], y=[], z=[], w=[])
    out = top_types(e, 1, 2, tau)
    assert out == ["org", "per"]


def test_top_types_slot_2():
    e = ext(("a", "x"), ("b", "x"), ("c", "y"))
    tau = tmap(x=["city"], y=["city", "port"])
    assert top_types(e, 2, 1, tau) == ["city"]


def test_restrict_with_top_keeps_everything():
    e = ext(("a", "x"), ("b", "y"))
    tau = tmap(a=["loc"])
    assert restrict(e, TOP, TOP, tau).pairs == e.pairs
    assert restrict(e, "loc", TOP, tau).pairs == {("a", "x")}


def test_type_signature_single_pair():
    tau = tmap(a=["loc", "gov"], b=["per"])
    assert type_signature(ext(("a", "b")), tau) == ({"loc", "gov"}, {"per"})


def test_type_signature_disjoint_slot1():
    tau = tmap(a=["loc"], b=["gov"], x=["per"], y=["per"])
    sig = type_signature(ext(("a", "x"), ("b", "y")), tau)
    assert sig[0] == frozenset()
    assert sig[1] == {"per"}


def _five_loc_pairs():
    pairs = [("a%d" % i, "b%d" % i) for i in range(5)]
    tau = TypeMap({e: frozenset(["loc"]) for p in pairs for e in p})
    return ext(*pairs), tau


def test_typable_subrelations_uniform_typing():
    e, tau = _five_loc_pairs()
    subs = typable_subrelations(e, tau, "rid", k=2, r_min=5)
    keys = {t.slot_types for t in subs}
    assert keys == {("loc", "loc"), ("loc", TOP), (TOP, "loc"), (TOP, TOP)}
    for t in subs:
        assert t.extension.pairs == e.pairs
        assert t.tsg == ({"loc"}, {"loc"})


def test_typable_subrelations_size_gate():
    pairs = [("a%d" % i, "b%d" % i) for i in range(4)]
    tau = TypeMap({e: frozenset(["loc"]) for p in pairs for e in p})
    assert typable_subrelations(ext(*pairs), tau, "rid", k=2, r_min=5) == []


def test_top_subrelation_equals_full_extension():
    e, tau = _five_loc_pairs()
    subs = typable_subrelations(e, tau, "rid", k=2, r_min=1)
    by_key = {t.slot_types: t for t in subs}
    assert by_key[(TOP, TOP)].extension.pairs == e.pairs


def brute_force_subrelations(e, tau, k, r_min):
    """Oracle: enumerate every type pair, then restrict to the top-k lists."""
    top1 = top_types(e, 1, k, tau)
    top2 = top_types(e, 2, k, tau)
    all1 = {t for p in e for t in tau.types(p[0])} | {TOP}
    all2 = {t for p in e for t in tau.types(p[1])} | {TOP}
    survivors = {}
    for s, u in product(sorted(all1), sorted(all2)):
        kept = frozenset(
            (e1, e2)
            for e1, e2 in e
            if (s == TOP or s in tau.types(e1)) and (u == TOP or u in tau.types(e2))
        )
        if len(kept) >= r_min and s in top1 and u in top2:
            survivors[(s, u)] = kept
    return survivors


def test_typable_subrelations_against_brute_force():
    pairs = [("e%d" % (i % 7), "f%d" % (i % 5)) for i in range(12)]
    tau = TypeMap(
        {
            "e0": frozenset(["loc", "gov"]),
            "e1": frozenset(["loc"]),
            "e2": frozenset(["gov"]),
            "e3": frozenset(["loc", "per"]),
            "e4": frozenset(),
            "f0": frozenset(["city"]),
            "f1": frozenset(["city", "port"]),
            "f2": frozenset(["port"]),
        }
    )
    e = ext(*pairs)
    got = {t.slot_types: t.extension.pairs for t in typable_subrelations(e, tau, "r", 2, 2)}
    assert got == brute_force_subrelations(e, tau, 2, 2)


@settings(max_examples=60)
@given(
    st.lists(
        st.tuples(st.integers(0, 8), st.integers(0, 8)),
        min_size=1,
        max_size=20,
        unique=True,
    ),
    st.dictionaries(
        st.integers(0, 8),
        st.frozensets(st.sampled_from(["loc", "gov", "per", "org"]), max_size=3),
        max_size=9,
    ),
    st.integers(1, 4),
)
def test_top_types_properties(pairs, typing, k):
    e = ext(*[("n%d" % a, "n%d" % b) for a, b in pairs])
    tau = TypeMap({"n%d" % n: ts for n, ts in typing.items()})
    for slot in (1, 2):
        out = top_types(e, slot, k, tau)
        assert 1 <= len(out) <= k or (len(out) == k + 1 and False)
        assert len(set(out)) == len(out)
        if TOP in out:
            assert out[-1] == TOP
        assert len(out) <= k


@settings(max_examples=40)
@given(
    st.lists(
        st.tuples(st.integers(0, 6), st.integers(0, 6)),
        min_size=5,
        max_size=15,
        unique=True,
    )
)
def test_subrelations_are_subsets_of_base(pairs):
    e = ext(*[("n%d" % a, "m%d" % b) for a, b in pairs])
    tau = TypeMap({"n%d" % i: frozenset(["t%d" % (i % 3)]) for i in range(7)})
    for t in typable_subrelations(e, tau, "r", 3, 2):
        assert t.extension.pairs <= e.pairs
        assert t.tsg == type_signature(t.extension, tau)


def test_type_all_orders_by_relation_id():
    store, _ = ingest(
        triples(
            *[("nsubj--annex--dobj", "a%d" % i, "b%d" % i) for i in range(5)],
            *[("nsubj--border--dobj", "a%d" % i, "b%d" % i) for i in range(5)],
        )
    )
    tau = TypeMap({e: frozenset(["loc"]) for e in store.entities})
    type_all(store, tau, k=2, r_min=5)
    bases = [t.base for t in store.typed]
    assert bases == sorted(bases)
    assert 0.0 < top_involvement(store) <= 1.0


def test_store_roundtrip_and_determinism(tmp_path):
    store, _ = ingest(
        triples(
            *[("nsubj--annex--dobj", "a%d" % i, "b%d" % i) for i in range(6)],
            *[("dobj--annex--nsubj", "a%d" % i, "c%d" % i) for i in range(5)],
        )
    )
    tau = TypeMap({e: frozenset(["loc", "thing"]) for e in store.entities})
    type_all(store, tau, k=2, r_min=5)

    p1, p2 = tmp_path / "a.teg", tmp_path / "b.teg"
    save_store(store, p1)
    save_store(store, p2)
    assert p1.read_bytes() == p2.read_bytes()

    loaded = load_store(p1)
    assert loaded.relations == store.relations
    assert set(loaded.paths) == set(store.paths)
    assert sorted(
        (t.base, t.slot_types, t.extension.pairs, t.tsg) for t in loaded.typed
    ) == sorted((t.base, t.slot_types, t.extension.pairs, t.tsg) for t in store.typed)
    assert loaded.entities == store.entities


def test_export_tsv(tmp_path):
    store, _ = ingest(triples(("nsubj--annex--dobj", "a", "b")))
    tau = TypeMap({"a": frozenset(["loc"]), "b": frozenset(["loc"])})
    type_all(store, tau, k=1, r_min=1)
    export_tsv(store, tmp_path)
    rel_text = (tmp_path / "relations.tsv").read_text()
    assert rel_text == "nsubj--annex--dobj\ta\tb\n"
    typed_text = (tmp_path / "typed.tsv").read_text()
    assert "slot1_type" in typed_text.splitlines()[0]
    assert any("loc" in ln for ln in typed_text.splitlines()[1:])


def test_typemap_tsv_roundtrip(tmp_path):
    tau = tmap(a=["loc", "gov"], b=[], c=["per"])
    path = tmp_path / "types.tsv"
    tau.to_tsv(path)
    back = TypeMap.from_tsv(path)
    for e in ("a", "b", "c", "missing"):
        assert back.types(e) == tau.types(e)


def test_typemap_rejects_bad_rows(tmp_path):
    path = tmp_path / "types.tsv"
    path.write_text("a\tloc\textra\n")
    with pytest.raises(IngestError):
        TypeMap.from_tsv(path)
