import json
import math
import random
import re
import threading
import time
from collections import Counter

import pytest

import oracle
from conftest import random_lexicon
from nawatl_cfg.engine import (
    CountReport,
    SamplingError,
    cardinalities,
    count_symbolic,
    enumerate_sentences,
    expand,
    iter_sentences,
    realize,
    sample,
)
from nawatl_cfg.filtering import FilterPipeline, FilterVerdict
from nawatl_cfg.grammar import JoinOp, RecursionInGrammar, parse_grammar
from nawatl_cfg.lexicon import KnowledgeBase

HYGIENE = re.compile(r"^ | $|  ")


def reduced(kb, nouns=2, verbs=1):
    return kb.restrict(
        n=[e.surface for e in kb.entries_for("n")[:nouns]],
        v=[e.surface for e in kb.entries_for("v")[:verbs]],
    )


def enumerate_all(grammar, kb):
    out = []
    report = enumerate_sentences(grammar, kb, sink=out.append)
    return report, out


# -- counting against the oracle ---------------------------------------------


def test_reduced_lexicon_matches_oracle(grammar, core_kb):
    kb = reduced(core_kb)
    report, sentences = enumerate_all(grammar, kb)
    expected = oracle.sentences(grammar, kb)
    assert report.raw_count == len(expected) == count_symbolic(grammar, kb).raw_count
    assert Counter(s.text for s in sentences) == Counter(t for t, _ in expected)


def test_core_universe_matches_oracle(grammar, core_kb):
    expected = oracle.sentences(grammar, core_kb)
    report, sentences = enumerate_all(grammar, core_kb)
    assert report.raw_count == len(expected) == 14436
    assert Counter(s.text for s in sentences) == Counter(t for t, _ in expected)


def test_randomized_lexicons_match_oracle(grammar, extended_grammar, core_kb):
    rng = random.Random(7)
    for trial in range(25):
        g = grammar if trial % 2 else extended_grammar
        kb = random_lexicon(rng, core_kb)
        expected = oracle.sentences(g, kb)
        symbolic = count_symbolic(g, kb)
        assert symbolic.raw_count == len(expected)
        report, sentences = enumerate_all(g, kb)
        assert report.raw_count == symbolic.raw_count
        assert report.per_rule_breakdown == symbolic.per_rule_breakdown
        assert sorted(s.text for s in sentences) == sorted(t for t, _ in expected)


def test_inline_alternatives_count():
    g = parse_grammar("A -> x | y | vide\nS -> A\n@start S\n")
    assert count_symbolic(g, None).raw_count == 3
    assert [s.text for s in iter_sentences(g, None)] == ["x", "y", ""]


def test_index_equality_gives_nine():
    g = parse_grammar(
        "@indexed PP PV\n"
        "S -> PP_i NEG PV_j ; i,j=1,2,3 ; i=j\n"
        "PP -> na | ta | ya\nNEG -> amo | axkeman | vide\nPV -> ni | ti | vide\n"
    )
    assert count_symbolic(g, None).raw_count == 9
    # Oracle: every (i, j) pair, kept only when equal.
    assert len(oracle.sentences(g, None)) == 9
    texts = [s.text for s in iter_sentences(g, None)]
    assert texts[:3] == ["na amo ni", "na axkeman ni", "na ni"]


def test_index_domain_restricts_persons():
    g = parse_grammar("@indexed PP\nS -> PP_i x ; i=1,3\nPP -> na | ta | ya\n")
    assert [s.text for s in iter_sentences(g, None)] == ["na x", "ya x"]
    assert count_symbolic(g, None).raw_count == 2


def test_empty_noun_category_zeroes_rules(grammar, core_kb):
    kb = KnowledgeBase(e for e in core_kb if e.category != "n")
    report = count_symbolic(grammar, kb)
    # Every rule that reaches n collapses; V.2 (PP NEG PV+v ADV_Q) survives.
    assert {k for k, v in report.per_rule_breakdown.items() if v == 0} == {"P.1", "N.1", "N.2", "V.1"}
    assert report.raw_count == report.per_rule_breakdown["V.2"] == 3 * 3 * 3 * 4 * 3
    assert enumerate_sentences(grammar, kb).raw_count == report.raw_count


def test_per_rule_breakdown_sums_to_raw(grammar, kb):
    report = count_symbolic(grammar, kb)
    start_rules = [r.id for r in grammar.rules_for(grammar.start)]
    assert sum(report.per_rule_breakdown[r] for r in start_rules) == report.raw_count


def test_full_kb_raw_count_from_cardinalities(grammar, kb):
    c = cardinalities(grammar, kb)
    n_count = c["ADJ"] * c["ART"] * c["n"] + c["ADJ"] * c["POS"] * c["n"]
    v_count = n_count * c["NEG"] * c["v"] * c["ADV_Q"] + 3 * c["NEG"] * c["v"] * c["ADV_Q"]
    assert count_symbolic(grammar, kb).raw_count == c["ADV_T"] * (n_count + v_count) == 794556


def test_recursive_grammar_cannot_be_counted():
    g = parse_grammar("S -> a S | b\n")
    with pytest.raises(RecursionInGrammar):
        count_symbolic(g, None)
    with pytest.raises(RecursionInGrammar):
        enumerate_sentences(g, None)


# -- enumeration properties --------------------------------------------------


def test_replay_determinism_and_distinct_derivations(grammar, core_kb):
    _, sentences = enumerate_all(grammar, core_kb)
    traces = set()
    for s in sentences:
        assert expand(grammar, core_kb, s.derivation).text == s.text
        traces.add(s.derivation)
    assert len(traces) == len(sentences)


def test_coinciding_surfaces_are_separate_derivations():
    g = parse_grammar("S -> A B\nA -> x | vide\nB -> x | vide\n")
    texts = [s.text for s in iter_sentences(g, None)]
    assert texts == ["x x", "x", "x", ""]
    report = enumerate_sentences(g, None, dedup=True)
    assert (report.raw_count, report.filtered_count) == (4, 3)


def test_surface_hygiene_and_agreement(grammar, core_kb):
    _, sentences = enumerate_all(grammar, core_kb)
    for s in sentences:
        assert not HYGIENE.search(s.text), s.text
        persons = {c.symbol: c.person for c in s.derivation if c.symbol in ("PP", "PV")}
        if "PP" in persons:
            assert persons["PP"] == persons["PV"]


def test_enumeration_order_is_document_order(grammar, core_kb):
    first = [s.text for _, s in zip(range(3), iter_sentences(grammar, core_kb))]
    assert first == ["naman tomawak se siwatl", "naman tomawak se miston", "naman tomawak se elotl"]


def test_dedup_and_filtered_count(grammar, core_kb):
    plain = enumerate_sentences(grammar, core_kb)
    assert plain.filtered_count is None
    dedup = enumerate_sentences(grammar, core_kb, dedup=True)
    assert dedup.raw_count == plain.raw_count
    assert dedup.filtered_count == len({s.text for s in iter_sentences(grammar, core_kb)})
    filtered = enumerate_sentences(grammar, core_kb, FilterPipeline.default())
    assert filtered.filtered_count <= filtered.raw_count


def test_sink_failure_propagates(grammar, core_kb):
    def sink(_):
        raise RuntimeError("disk full")

    with pytest.raises(RuntimeError, match="disk full"):
        enumerate_sentences(grammar, core_kb, sink=sink)


def test_concurrent_enumeration_is_consistent(grammar, core_kb):
    results = []

    def work():
        results.append(enumerate_sentences(grammar, core_kb, FilterPipeline.default()).filtered_count)

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert len(set(results)) == 1


def test_realize_join_semantics():
    S, C = JoinOp.SPACE, JoinOp.CONCAT
    assert realize([(S, "a"), (C, "b"), (S, "c")]) == "ab c"
    assert realize([(S, ""), (S, "a"), (S, "")]) == "a"
    assert realize([(S, "a"), (S, ""), (C, "b")]) == "a b"
    assert realize([(S, "a"), (C, ""), (C, "b")]) == "ab"
    assert realize([]) == ""


# -- reports -----------------------------------------------------------------


def test_count_report_record_round_trip(grammar, kb):
    report = count_symbolic(grammar, kb)
    report.filtered_count = 12
    line = report.to_record()
    assert "\n" not in line
    assert CountReport.from_record(line) == report
    assert json.loads(line)["raw_count"] == 794556
    assert report.render().splitlines()[0] == "raw_count: 794556"


# -- sampling ----------------------------------------------------------------


def test_sample_zero_and_determinism(grammar, kb):
    assert sample(grammar, kb, seed=1, count=0) == []
    a = sample(grammar, kb, seed=42, count=50, filters=FilterPipeline.default())
    b = sample(grammar, kb, seed=42, count=50, filters=FilterPipeline.default())
    assert [s.text for s in a] == [s.text for s in b]
    assert [s.text for s in a] != [s.text for s in sample(grammar, kb, seed=43, count=50)]


def test_sample_replays(grammar, kb):
    for s in sample(grammar, kb, seed=5, count=200):
        assert expand(grammar, kb, s.derivation).text == s.text


def test_sample_rule_frequencies_within_five_sigma(grammar, core_kb):
    kb = reduced(core_kb, nouns=2, verbs=1)
    report = count_symbolic(grammar, kb)
    n = 1000
    drawn = sample(grammar, kb, seed=2024, count=n)
    hits = Counter(s.derivation[0].rule_id for s in drawn)
    for rule in grammar.rules_for("P"):
        p = report.per_rule_breakdown[rule.id] / report.raw_count
        sigma = math.sqrt(n * p * (1 - p))
        assert abs(hits[rule.id] - n * p) <= 5 * sigma + 1e-9, (rule.id, hits[rule.id], n * p)


def test_sample_is_uniform_over_derivations(grammar, core_kb):
    # Tiny universe: every derivation should be drawn about equally often.
    kb = core_kb.restrict(n=["siwatl"], v=["kwa"], ADV_T=["naman"], ADV_Q=["miyak"], ADJ=["tomawak"])
    total = count_symbolic(grammar, kb).raw_count
    n = 200 * total
    drawn = Counter(s.derivation for s in sample(grammar, kb, seed=11, count=n))
    assert len(drawn) == total
    p = 1 / total
    sigma = math.sqrt(n * p * (1 - p))
    assert all(abs(c - n * p) <= 5 * sigma for c in drawn.values())


def test_sample_gives_up_when_everything_is_rejected(grammar, core_kb):
    pipeline = FilterPipeline([("never", lambda s, kb: FilterVerdict(False, "never", "rejects all"))])
    with pytest.raises(SamplingError):
        sample(grammar, core_kb, seed=0, count=1, filters=pipeline, max_retries=20)


def test_sample_negative_count(grammar, kb):
    with pytest.raises(ValueError):
        sample(grammar, kb, seed=0, count=-1)


def test_symbolic_count_is_fast(grammar, kb):
    t0 = time.perf_counter()
    count_symbolic(grammar, kb)
    assert time.perf_counter() - t0 < 1.0
