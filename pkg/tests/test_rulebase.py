import pytest

from tegmine.evaluation import LabeledCand
from tegmine.paths import StopList
from tegmine.scorers.rulebase import (
    RuleBase,
    RuleBaseError,
    RuleBaseScorer,
    norm_generic,
    norm_phrase,
    norm_placeholders,
    union_rulebases,
)


def cand(p, h):
    return LabeledCand(p, ("a", "b"), h, ("a", "b"), gold=True, disagreements=0)


def test_norm_generic():
    assert norm_generic("  Is  Capital OF ") == "is capital of"


def test_norm_placeholders():
    assert norm_placeholders("X beats Y") == "[a] beats [b]"
    assert norm_placeholders("[x] beats [y]") == "[a] beats [b]"


def test_norm_phrase_strips_stop_words():
    stop = StopList(["is", "the", "of"])
    assert norm_phrase("X is the capital of Y", stop) == "[a] capital [b]"


def test_empty_rulebase_scores_zero():
    rb = RuleBase("empty", frozenset())
    s = RuleBaseScorer(rb)
    assert s.score(cand("nsubj--a--dobj", "nsubj--b--dobj")) == 0.0


def test_lookup_after_normalization(tmp_path):
    f = tmp_path / "rules.tsv"
    f.write_text(
        "nsubj--annex--dobj\tnsubj--control--dobj\ttype=loc\n"  # extra column ignored
        "nsubj--беат--dobj\tnsubj--win--dobj\n"
        "\n"
        "only-one-column\n"
    )
    rb = RuleBase.from_tsv(f)
    assert len(rb) == 2
    s = RuleBaseScorer(rb)
    assert s.score(cand("nsubj--annex--dobj", "nsubj--control--dobj")) == 1.0
    assert s.score(cand("nsubj--annex--dobj", "nsubj--win--dobj")) == 0.0


def test_missing_rule_file_is_config_error(tmp_path):
    with pytest.raises(RuleBaseError):
        RuleBase.from_tsv(tmp_path / "missing.tsv")


def test_union_covers_both(tmp_path):
    a = RuleBase("a", frozenset({("p1", "h1")}))
    b = RuleBase("b", frozenset({("p2", "h2")}))
    u = union_rulebases([a, b])
    assert ("p1", "h1") in u and ("p2", "h2") in u
    assert len(u) == 2
    assert len(union_rulebases([])) == 0
