import io
import random
import warnings
from fractions import Fraction
from itertools import combinations, permutations

import numpy as np
import pytest

from nawatl_cfg.similarity import (
    DegenerateEmbeddingWarning,
    EmbeddingTable,
    LeaveOneOutReport,
    RankingTask,
    SuiteFormatError,
    TaskScore,
    TaskSuite,
    VectorFormatError,
    cosine,
    embed_sentence,
    evaluate_suite,
    kendall_tau,
    kendall_tau_exact,
    leave_one_out_from_taus,
    leave_one_out_report,
    load_suite,
    load_vectors,
    rank_candidates,
    render_suite,
    sentence_embedding,
    write_vectors,
)


def brute_tau(a, b):
    """Direct pair count, written independently of the library."""
    n = len(a)
    conc = disc = 0
    for i in range(n):
        for j in range(i + 1, n):
            s = (a[i] - a[j]) * (b[i] - b[j])
            conc += s > 0
            disc += s < 0
    return Fraction(conc - disc, n * (n - 1) // 2)


# -- Kendall tau -----------------------------------------------------------------


def test_tau_examples():
    a = (1, 2, 3, 4, 5)
    assert kendall_tau(a, a) == 1.0
    assert kendall_tau(a, a[::-1]) == -1.0
    assert kendall_tau(a, (2, 1, 3, 4, 5)) == 0.8
    assert kendall_tau_exact(a, (2, 1, 3, 4, 5)) == Fraction(4, 5)


@pytest.mark.parametrize("n", range(2, 9))
def test_tau_identity_and_reverse(n):
    perms = permutations(range(1, n + 1)) if n <= 5 else (
        tuple(random.Random(n).sample(range(1, n + 1), n)) for _ in range(200)
    )
    for a in perms:
        reversed_ranking = tuple(n + 1 - r for r in a)
        assert kendall_tau_exact(a, a) == 1
        assert kendall_tau_exact(a, reversed_ranking) == -1


def test_tau_exhaustive_against_brute_force_n5():
    perms = list(permutations(range(1, 6)))
    for a in perms:
        for b in perms:
            t = kendall_tau_exact(a, b)
            assert t == brute_tau(a, b)
            assert t == kendall_tau_exact(b, a)
            assert -1 <= t <= 1


def test_tau_errors():
    with pytest.raises(ValueError):
        kendall_tau((1, 2), (1, 2, 3))
    with pytest.raises(ValueError):
        kendall_tau((1,), (1,))


# -- vectors -------------------------------------------------------------------


def test_load_vectors():
    table = load_vectors(io.StringIO("2 3\nkali 1 0 0\natl 0 1.5 -2\n"))
    assert (len(table), table.dimension) == (2, 3)
    assert np.array_equal(table["atl"], [0, 1.5, -2])


@pytest.mark.parametrize(
    "text, message",
    [
        ("2 3\nkali 1 0\natl 0 1 2\n", "dimension"),
        ("2 3\nkali 1 0 0\nkali 0 1 2\n", "duplicate"),
        ("1 3\nkali 1 nan 0\n", "non-finite"),
        ("1 3\nkali 1 x 0\n", "non-numeric"),
        ("3 3\nkali 1 0 0\n", "announces"),
        ("kali 1 0 0\n", "first line"),
    ],
)
def test_load_vector_errors(text, message):
    with pytest.raises(VectorFormatError, match=message):
        load_vectors(io.StringIO(text))


def test_vector_round_trip():
    table = EmbeddingTable.from_dict({"a": [0.1, 1 / 3], "b": [-2.0, 1e-17]})
    out = io.StringIO()
    write_vectors(table, out)
    again = load_vectors(io.StringIO(out.getvalue()))
    assert again.words == table.words
    assert np.array_equal(again.matrix, table.matrix)


TABLE = EmbeddingTable.from_dict({
    "kali": [1.0, 0.0, 0.0],
    "atl": [0.0, 1.0, 0.0],
    "tetl": [0.0, 0.0, 1.0],
    "iwan": [5.0, 5.0, 5.0],
})


def test_sentence_embedding_cases():
    assert np.array_equal(sentence_embedding("kali", TABLE), TABLE["kali"])
    assert np.array_equal(sentence_embedding("iwan in tlen ipan", TABLE), np.zeros(3))
    assert np.allclose(sentence_embedding("Kali atl.", TABLE), (TABLE["kali"] + TABLE["atl"]) / 2)
    e = embed_sentence("kali xyz iwan", TABLE)
    assert (e.used, e.oov, e.stopped) == (("kali",), ("xyz",), ("iwan",))


def test_sentence_embedding_order_invariant():
    rng = random.Random(3)
    words = ["kali", "atl", "tetl", "kali", "nope", "iwan"]
    base = sentence_embedding(" ".join(words), TABLE)
    for _ in range(50):
        rng.shuffle(words)
        assert np.allclose(sentence_embedding(" ".join(words), TABLE), base)


def test_cosine():
    assert cosine(np.array([1.0, 0]), np.array([2.0, 0])) == pytest.approx(1.0)
    assert cosine(np.zeros(2), np.array([1.0, 0])) == 0.0


# -- ranking -------------------------------------------------------------------


def task(reference, candidates, human=(1, 2, 3, 4, 5), task_id="t"):
    return RankingTask(task_id, reference, tuple(candidates), tuple(human))


def test_identical_candidate_ranked_first():
    t = task("kali atl", ["tetl", "atl", "kali tetl", "kali atl", "xyz"])
    assert rank_candidates(t, TABLE)[3] == 1


def test_ties_keep_candidate_order():
    t = task("kali", ["atl"] * 5)
    assert rank_candidates(t, TABLE) == (1, 2, 3, 4, 5)


def test_crafted_overlap_order():
    # A shares both content words with the reference, B only one.
    t = task("kali atl", ["kali tetl", "kali atl", "tetl", "xyz", "atl tetl"])
    ranks = rank_candidates(t, TABLE)
    assert ranks[1] < ranks[0]
    assert ranks[1] == 1


def test_degenerate_reference_warns():
    t = task("iwan xyz", ["kali", "atl", "tetl", "kali atl", "xyz"])
    with pytest.warns(DegenerateEmbeddingWarning):
        assert rank_candidates(t, TABLE) == (1, 2, 3, 4, 5)


def test_rank_scale_invariant():
    rng = np.random.default_rng(0)
    words = [f"w{i}" for i in range(12)]
    table = EmbeddingTable(4, tuple(words), rng.normal(size=(12, 4)))
    r = random.Random(0)
    for _ in range(30):
        t = task(" ".join(r.sample(words, 3)), [" ".join(r.sample(words, 3)) for _ in range(5)])
        base = rank_candidates(t, table)
        for factor in (1e-3, 0.5, 7.0, 1e4):
            assert rank_candidates(t, table.scaled(factor)) == base


def test_task_validation():
    with pytest.raises(SuiteFormatError):
        task("a", ["b"] * 4, (1, 2, 3, 4))
    with pytest.raises(SuiteFormatError):
        task("a", ["b"] * 5, (1, 1, 3, 4, 5))


# -- suites and scores -----------------------------------------------------------


def with_human(suite, fn):
    return TaskSuite(
        tuple(RankingTask(t.task_id, t.reference, t.candidates, fn(t.human_ranking)) for t in suite.tasks),
        suite.stopwords,
    )


def swap_top_two(ranking):
    return tuple({1: 2, 2: 1}.get(r, r) for r in ranking)


def test_fixture_suite_loads(suite):
    assert len(suite) == 30
    assert all(len(t.candidates) == 5 for t in suite.tasks)
    assert suite.stopwords == {"iwan", "in", "tlen", "ipan"}


def test_perfect_reversed_and_swapped(suite, onehot):
    assert evaluate_suite(suite, onehot).mean_tau == 1.0
    reversed_suite = with_human(suite, lambda h: tuple(6 - r for r in h))
    assert evaluate_suite(reversed_suite, onehot).mean_tau == -1.0
    swapped = evaluate_suite(with_human(suite, swap_top_two), onehot)
    assert swapped.per_task_tau == [0.8] * 30
    assert round(swapped.mean_tau, 3) == 0.8


def test_mean_of_two_tasks():
    score = TaskScore(["a", "b"], [1.0, 0.6], [(1, 2, 3, 4, 5)] * 2)
    assert score.mean_tau == pytest.approx(0.8)


def test_score_record_round_trip(suite, onehot):
    score = evaluate_suite(suite, onehot)
    line = score.to_record()
    assert "\n" not in line
    assert TaskScore.from_record(line) == score
    assert score.render().splitlines()[-1].split() == ["mean", "1.000"]


def test_suite_round_trip(suite):
    again = load_suite(io.StringIO(render_suite(suite)))
    assert again == suite


@pytest.mark.parametrize(
    "body",
    [
        "t1\treference\t-\t-\tkali\n",  # no candidates
        "t1\tcandidate\t1\t1\tkali\n",  # no reference
        "t1\treference\t-\t-\tkali\n" + "".join(f"t1\tcandidate\t{p}\t1\tx\n" for p in range(1, 6)),
        "t1\tsomething\t-\t-\tkali\n",
    ],
)
def test_bad_suites(body):
    with pytest.raises(SuiteFormatError):
        load_suite(io.StringIO("task_id\trole\tposition\thuman_rank\tsentence\n" + body))


# -- leave one out -----------------------------------------------------------------


def test_leave_one_out_three_tasks():
    report = leave_one_out_from_taus("v", [0.0, 0.5, 1.0])
    assert report.loo_means == [0.75, 0.5, 0.25]
    assert max(report.loo_means) == 0.75
    assert report.full_mean == 0.5
    assert report.spread == 0.5


def test_leave_one_out_constant_taus():
    report = leave_one_out_from_taus("v", [0.4] * 6)
    assert report.max == pytest.approx(report.mean)


def test_leave_one_out_report(suite, onehot):
    swapped = with_human(suite, swap_top_two)
    report = leave_one_out_report(swapped, {"onehot": onehot, "scaled": onehot.scaled(3.0)})
    assert [v.name for v in report.variants] == ["onehot", "scaled"]
    assert all(v.full_mean == pytest.approx(0.8) for v in report.variants)
    assert len(report.variants[0].loo_means) == 30
    line = report.to_record()
    assert LeaveOneOutReport.from_record(line) == report
    with pytest.raises(ValueError):
        leave_one_out_report(suite, [])


def test_degenerate_tasks_are_flagged_in_score():
    table = EmbeddingTable.from_dict({"kali": [1.0, 0.0]})
    s = TaskSuite((task("xyz", ["kali"] * 5, task_id="d"),))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        score = evaluate_suite(s, table)
    assert score.degenerate == ["d"]
    assert score.per_task_tau == [1.0]


def test_combinations_helper_sanity():
    # The exhaustive n=5 check covers all 10 pairs per permutation.
    assert len(list(combinations(range(5), 2))) == 10
