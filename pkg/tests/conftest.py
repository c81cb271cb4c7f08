import random
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nawatl_cfg.grammar import bundled_grammar  # noqa: E402
from nawatl_cfg.lexicon import (  # noqa: E402
    Animacy,
    KnowledgeBase,
    LexicalEntry,
    bundled_kb,
    data_path,
)
from nawatl_cfg.similarity import (  # noqa: E402
    DEFAULT_STOPWORDS,
    EmbeddingTable,
    load_suite,
    sentence_tokens,
)

SUITE_PATH = data_path("tasks/suite.tsv")


@pytest.fixture(scope="session")
def grammar():
    return bundled_grammar()


@pytest.fixture(scope="session")
def extended_grammar():
    return bundled_grammar("mgnaw0_extended")


@pytest.fixture(scope="session")
def kb():
    return bundled_kb()


@pytest.fixture(scope="session")
def core_kb():
    return bundled_kb("core")


@pytest.fixture(scope="session")
def core_with_toch(core_kb):
    # The short possessed form "toch" (rabbit) used in a worked example is
    # not a separate entry of the printed lexicon.
    return KnowledgeBase(list(core_kb) + [LexicalEntry("toch", "n", Animacy.ANIMATE, "rabbit")])


def random_lexicon(
    rng: random.Random, base: KnowledgeBase, max_per_category: int = 3, min_per_category: int = 0
) -> KnowledgeBase:
    """Random sub-lexicon of ``base``: at least one noun and verb, and a random
    subset (possibly empty, never reordered) of every marker category."""
    keep = {}
    for cat, entries in base.category_index.items():
        forms = [e.surface for e in entries]
        if not forms:
            continue
        low = max(min_per_category, 1 if cat in ("n", "v") else 0)
        k = rng.randint(min(low, len(forms)), min(max_per_category, len(forms)))
        chosen = set(rng.sample(forms, k))
        keep[cat] = [f for f in forms if f in chosen]
    return base.restrict(**keep)


def one_hot_table(suite) -> EmbeddingTable:
    words = sorted(
        {t for s in suite.references() + suite.candidates() for t in sentence_tokens(s)}
        - DEFAULT_STOPWORDS
    )
    return EmbeddingTable(len(words), tuple(words), np.eye(len(words)))


@pytest.fixture(scope="session")
def suite():
    return load_suite(SUITE_PATH)


@pytest.fixture(scope="session")
def onehot(suite):
    return one_hot_table(suite)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
