import io

import pytest

from nawatl_cfg.lexicon import (
    Animacy,
    KnowledgeBase,
    LexicalEntry,
    LexiconError,
    UnknownCategoryError,
    entries_for,
    load_kb,
    render_kb,
)

HEADER = "surface\tcategory\tanimacy\tgloss\n"


def kb_from(text):
    return load_kb(io.StringIO(HEADER + text))


def test_bundled_cardinalities(kb):
    expected = {"n": 26, "v": 16, "ADV_Q": 5, "POS": 3, "ART": 3, "ADV_T": 7, "ADJ": 3, "PP": 3, "NEG": 3}
    got = kb.cardinalities()
    assert {c: got[c] for c in expected} == expected
    assert got["PV"] == 3


def test_marker_order(kb):
    assert [e.surface for e in entries_for(kb, "POS")] == ["no", "mo", "i"]
    assert [e.surface for e in entries_for(kb, "NEG")] == ["amo", "axkeman", ""]
    assert [e.surface for e in entries_for(kb, "PP")] == ["na", "ta", "ya"]
    assert [e.surface for e in entries_for(kb, "PV")] == ["ni", "ti", ""]


def test_unknown_category_query(kb):
    with pytest.raises(UnknownCategoryError):
        entries_for(kb, "x")


def test_entries_for_is_stable(kb):
    assert entries_for(kb, "n") == entries_for(kb, "n")


def test_inanimate_nouns_and_dual_verbs(kb):
    inanimate = [e.surface for e in kb.entries_for("n") if e.animacy is Animacy.INANIMATE]
    assert inanimate == ["tonatih", "posolli", "xochitl", "tlahtolli"]
    both = [e.surface for e in kb.entries_for("v") if e.animacy is Animacy.BOTH]
    assert both == ["pia", "paktia"]
    assert all(e.animacy is Animacy.BOTH for e in kb if e.category not in ("n", "v"))


def test_single_line_entry():
    kb = kb_from("nantzin\tn\tanimate\tmother\n")
    (entry,) = kb.entries_for("n")
    assert entry == LexicalEntry("nantzin", "n", Animacy.ANIMATE, "mother")


def test_vide_token_maps_to_empty():
    kb = kb_from("∅\tNEG\t-\tvide\namo\tNEG\t-\tno\n")
    assert [e.surface for e in kb.entries_for("NEG")] == ["", "amo"]
    assert kb.entries_for("NEG")[0].is_vide


def test_comments_and_blank_lines():
    kb = load_kb(io.StringIO("# note\n\n" + HEADER + "# more\nmiki\tv\tanimate\tto die\n\n"))
    assert len(kb) == 1


@pytest.mark.parametrize(
    "body, message",
    [
        ("siwatl\tn\tanimate\twoman\nsiwatl\tn\tanimate\twoman\n", "duplicate"),
        ("siwatl\tx\tanimate\twoman\n", "unknown category"),
        ("siwatl\tn\t-\twoman\n", "missing animacy"),
        ("siwatl\tn\t\twoman\n", "missing animacy"),
        ("siwatl\tn\tsometimes\twoman\n", "bad animacy"),
        ("two words\tn\tanimate\tx\n", "single token"),
        ("∅\tn\tanimate\tnothing\n", "empty form"),
        ("amo\tNEG\tanimate\tno\n", "animacy tag"),
        ("siwatl\n", "columns"),
        ("", "empty"),
    ],
)
def test_load_errors(body, message):
    with pytest.raises(LexiconError, match=message):
        kb_from(body)


def test_header_required():
    with pytest.raises(LexiconError, match="header"):
        load_kb(io.StringIO("siwatl\tn\tanimate\twoman\n"))


def test_same_surface_in_two_categories_is_allowed(kb):
    assert kb.lookup("ART", "ni").category == "ART"
    assert kb.lookup("PV", "ni").category == "PV"


def test_round_trip(kb, core_kb):
    for original in (kb, core_kb):
        again = load_kb(io.StringIO(render_kb(original)))
        assert again == original
        assert list(again) == list(original)


def test_restrict_keeps_order_and_other_categories(kb):
    small = kb.restrict(n=["xochitl", "ichpochtli"], v=["toka"])
    assert [e.surface for e in small.entries_for("n")] == ["ichpochtli", "xochitl"]
    assert small.cardinality("NEG") == 3
    with pytest.raises(UnknownCategoryError):
        kb.restrict(zz=["a"])


def test_knowledge_base_is_immutable(kb):
    with pytest.raises(AttributeError):
        kb.entries = ()
    with pytest.raises(LexiconError):
        KnowledgeBase([LexicalEntry("a", "n", Animacy.ANIMATE)] * 2)
