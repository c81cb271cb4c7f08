"""Sentence-level semantic-similarity ranking evaluated with Kendall's tau.

Each task pairs a reference sentence with five candidates and a human
ranking. A model ranks the candidates by cosine similarity between mean
word vectors, and the agreement with the human ranking is Kendall's tau-a.
"""

from __future__ import annotations

import json
import math
import statistics
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence, TextIO, Union

import numpy as np

from .corpus import NormalizationRuleSet, normalize, tokenize

DEFAULT_STOPWORDS = frozenset({"iwan", "in", "tlen", "ipan"})
N_CANDIDATES = 5
_PUNCT = ".,;:!?¿¡\"'«»()[]"


class VectorFormatError(ValueError):
    pass


class SuiteFormatError(ValueError):
    pass


class DegenerateEmbeddingWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EmbeddingTable:
    dimension: int
    words: tuple[str, ...]
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        if self.dimension <= 0:
            raise VectorFormatError("dimension must be positive")
        if self.matrix.shape != (len(self.words), self.dimension):
            raise VectorFormatError(
                f"matrix shape {self.matrix.shape} does not match {len(self.words)} x {self.dimension}"
            )
        if not np.all(np.isfinite(self.matrix)):
            raise VectorFormatError("non-finite vector component")
        index = {}
        for i, w in enumerate(self.words):
            if w in index:
                raise VectorFormatError(f"duplicate word {w!r}")
            index[w] = i
        object.__setattr__(self, "_index", index)

    @classmethod
    def from_dict(cls, vectors: Mapping[str, Sequence[float]]) -> "EmbeddingTable":
        words = tuple(vectors)
        if not words:
            raise VectorFormatError("empty vector table")
        rows = [np.asarray(vectors[w], dtype=np.float64) for w in words]
        dim = rows[0].shape[0]
        for w, r in zip(words, rows):
            if r.shape != (dim,):
                raise VectorFormatError(f"dimension mismatch for {w!r}: {r.shape[0]} != {dim}")
        return cls(dim, words, np.vstack(rows))

    def __contains__(self, word: str) -> bool:
        return word in self._index  # type: ignore[attr-defined]

    def __getitem__(self, word: str) -> np.ndarray:
        return self.matrix[self._index[word]]  # type: ignore[attr-defined]

    def __len__(self) -> int:
        return len(self.words)

    def scaled(self, factor: float) -> "EmbeddingTable":
        return EmbeddingTable(self.dimension, self.words, self.matrix * factor)


def load_vectors(source: Union[str, Path, TextIO]) -> EmbeddingTable:
    """Read the word2vec/fastText text format (``count dim`` header, then
    ``word v1 ... vd`` per line)."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return load_vectors(fh)
    header = source.readline().split()
    if len(header) != 2:
        raise VectorFormatError("first line must be 'count dimension'")
    try:
        count, dim = int(header[0]), int(header[1])
    except ValueError:
        raise VectorFormatError("first line must be 'count dimension'") from None
    words: list[str] = []
    rows: list[list[float]] = []
    seen: set[str] = set()
    for lineno, line in enumerate(source, start=2):
        parts = line.rstrip("\n").rstrip(" ").split(" ")
        if not parts or parts == [""]:
            continue
        word, values = parts[0], parts[1:]
        if len(values) != dim:
            raise VectorFormatError(f"line {lineno}: dimension mismatch ({len(values)} != {dim})")
        if word in seen:
            raise VectorFormatError(f"line {lineno}: duplicate word {word!r}")
        try:
            row = [float(v) for v in values]
        except ValueError:
            raise VectorFormatError(f"line {lineno}: non-numeric component") from None
        if not all(math.isfinite(v) for v in row):
            raise VectorFormatError(f"line {lineno}: non-finite component")
        seen.add(word)
        words.append(word)
        rows.append(row)
    if len(words) != count:
        raise VectorFormatError(f"header announces {count} words, found {len(words)}")
    matrix = np.asarray(rows, dtype=np.float64).reshape(len(words), dim)
    return EmbeddingTable(dim, tuple(words), matrix)


def write_vectors(table: EmbeddingTable, out: TextIO) -> None:
    out.write(f"{len(table)} {table.dimension}\n")
    for word, row in zip(table.words, table.matrix):
        out.write(word + " " + " ".join(repr(float(x)) for x in row) + "\n")


# ---------------------------------------------------------------------------
# sentence representation


def sentence_tokens(
    sentence: str, rules: Optional[NormalizationRuleSet] = None
) -> list[str]:
    if rules is not None:
        sentence = normalize(sentence, rules)
    out = []
    for tok in tokenize(sentence):
        tok = tok.strip(_PUNCT).casefold()
        if tok:
            out.append(tok)
    return out


@dataclass(frozen=True)
class SentenceEmbedding:
    vector: np.ndarray
    used: tuple[str, ...]
    oov: tuple[str, ...]
    stopped: tuple[str, ...]

    @property
    def is_zero(self) -> bool:
        return not self.used


def embed_sentence(
    sentence: str,
    table: EmbeddingTable,
    stopwords: Iterable[str] = DEFAULT_STOPWORDS,
    rules: Optional[NormalizationRuleSet] = None,
) -> SentenceEmbedding:
    stop = frozenset(stopwords)
    used, oov, stopped = [], [], []
    for tok in sentence_tokens(sentence, rules):
        if tok in stop:
            stopped.append(tok)
        elif tok in table:
            used.append(tok)
        else:
            oov.append(tok)
    if used:
        vector = np.mean([table[t] for t in used], axis=0)
    else:
        vector = np.zeros(table.dimension)
    return SentenceEmbedding(vector, tuple(used), tuple(oov), tuple(stopped))


def sentence_embedding(
    sentence: str,
    table: EmbeddingTable,
    stopwords: Iterable[str] = DEFAULT_STOPWORDS,
    rules: Optional[NormalizationRuleSet] = None,
) -> np.ndarray:
    """Mean vector of the in-vocabulary, non-stopword tokens (zeros if none)."""
    return embed_sentence(sentence, table, stopwords, rules).vector


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


# ---------------------------------------------------------------------------
# tasks


@dataclass(frozen=True)
class RankingTask:
    task_id: str
    reference: str
    candidates: tuple[str, ...]
    human_ranking: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.candidates) != N_CANDIDATES:
            raise SuiteFormatError(
                f"task {self.task_id}: expected {N_CANDIDATES} candidates, got {len(self.candidates)}"
            )
        if sorted(self.human_ranking) != list(range(1, N_CANDIDATES + 1)):
            raise SuiteFormatError(f"task {self.task_id}: human ranking {self.human_ranking} is not a permutation")


@dataclass(frozen=True)
class TaskSuite:
    tasks: tuple[RankingTask, ...]
    stopwords: frozenset[str] = DEFAULT_STOPWORDS

    def __len__(self) -> int:
        return len(self.tasks)

    def without(self, index: int) -> "TaskSuite":
        return TaskSuite(self.tasks[:index] + self.tasks[index + 1:], self.stopwords)

    def references(self) -> list[str]:
        return [t.reference for t in self.tasks]

    def candidates(self) -> list[str]:
        return [c for t in self.tasks for c in t.candidates]


SUITE_HEADER = ("task_id", "role", "position", "human_rank", "sentence")


def load_suite(
    source: Union[str, Path, TextIO], stopwords: Iterable[str] = DEFAULT_STOPWORDS
) -> TaskSuite:
    """Read a task-suite TSV (task_id, role, position, human_rank, sentence)."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return load_suite(fh, stopwords)
    refs: dict[str, str] = OrderedDict()
    cands: dict[str, dict[int, tuple[int, str]]] = OrderedDict()
    header_seen = False
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if not header_seen:
            if tuple(c.strip().lower() for c in cols) != SUITE_HEADER:
                raise SuiteFormatError(f"line {lineno}: expected header {'/'.join(SUITE_HEADER)}")
            header_seen = True
            continue
        if len(cols) != 5:
            raise SuiteFormatError(f"line {lineno}: expected 5 columns")
        task_id, role, position, rank, sentence = (c.strip() for c in cols)
        if role == "reference":
            if task_id in refs:
                raise SuiteFormatError(f"line {lineno}: second reference for task {task_id}")
            refs[task_id] = sentence
            cands.setdefault(task_id, {})
        elif role == "candidate":
            try:
                pos, hr = int(position), int(rank)
            except ValueError:
                raise SuiteFormatError(f"line {lineno}: position and human_rank must be integers") from None
            slot = cands.setdefault(task_id, {})
            if pos in slot:
                raise SuiteFormatError(f"line {lineno}: duplicate position {pos} in task {task_id}")
            slot[pos] = (hr, sentence)
        else:
            raise SuiteFormatError(f"line {lineno}: unknown role {role!r}")
    tasks = []
    for task_id, slot in cands.items():
        if task_id not in refs:
            raise SuiteFormatError(f"task {task_id} has no reference")
        if sorted(slot) != list(range(1, N_CANDIDATES + 1)):
            raise SuiteFormatError(f"task {task_id}: candidate positions must be 1..{N_CANDIDATES}")
        ordered = [slot[p] for p in sorted(slot)]
        tasks.append(
            RankingTask(task_id, refs[task_id], tuple(s for _, s in ordered), tuple(r for r, _ in ordered))
        )
    if not tasks:
        raise SuiteFormatError("suite has no tasks")
    return TaskSuite(tuple(tasks), frozenset(stopwords))


def render_suite(suite: TaskSuite) -> str:
    lines = ["\t".join(SUITE_HEADER)]
    for t in suite.tasks:
        lines.append(f"{t.task_id}\treference\t-\t-\t{t.reference}")
        for pos, (cand, rank) in enumerate(zip(t.candidates, t.human_ranking), start=1):
            lines.append(f"{t.task_id}\tcandidate\t{pos}\t{rank}\t{cand}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# ranking and scoring


def _rank(
    task: RankingTask,
    table: EmbeddingTable,
    stopwords: Iterable[str],
    rules: Optional[NormalizationRuleSet],
) -> tuple[tuple[int, ...], bool]:
    stop = frozenset(stopwords)
    ref = embed_sentence(task.reference, table, stop, rules)
    if ref.is_zero:
        return tuple(range(1, len(task.candidates) + 1)), True
    sims = [cosine(ref.vector, embed_sentence(c, table, stop, rules).vector) for c in task.candidates]
    order = sorted(range(len(sims)), key=lambda i: (-sims[i], i))
    ranks = [0] * len(sims)
    for rank, i in enumerate(order, start=1):
        ranks[i] = rank
    return tuple(ranks), False


def rank_candidates(
    task: RankingTask,
    table: EmbeddingTable,
    stopwords: Iterable[str] = DEFAULT_STOPWORDS,
    rules: Optional[NormalizationRuleSet] = None,
) -> tuple[int, ...]:
    """Model rank (1 = most similar) of each candidate, in candidate order.

    Ties keep candidate order. A reference with no usable token keeps the
    original order and emits :class:`DegenerateEmbeddingWarning`.
    """
    ranks, degenerate = _rank(task, table, stopwords, rules)
    if degenerate:
        warnings.warn(
            f"task {task.task_id}: reference has no in-vocabulary content word",
            DegenerateEmbeddingWarning,
            stacklevel=2,
        )
    return ranks


def kendall_tau_exact(a: Sequence[int], b: Sequence[int]) -> Fraction:
    if len(a) != len(b):
        raise ValueError(f"rankings differ in size: {len(a)} != {len(b)}")
    n = len(a)
    if n < 2:
        raise ValueError("Kendall's tau needs at least two items")
    score = 0
    for i, j in combinations(range(n), 2):
        da = a[i] - a[j]
        db = b[i] - b[j]
        if da * db > 0:
            score += 1
        elif da * db < 0:
            score -= 1
    return Fraction(score, n * (n - 1) // 2)


def kendall_tau(a: Sequence[int], b: Sequence[int]) -> float:
    """Kendall's tau-a between two rankings of the same items."""
    return float(kendall_tau_exact(a, b))


@dataclass
class TaskScore:
    task_ids: list[str]
    per_task_tau: list[float]
    model_rankings: list[tuple[int, ...]]
    degenerate: list[str] = field(default_factory=list)

    @property
    def mean_tau(self) -> float:
        return statistics.fmean(self.per_task_tau) if self.per_task_tau else float("nan")

    def render(self) -> str:
        lines = [f"{'task':<10}{'tau':>8}  model_ranking"]
        for tid, tau, r in zip(self.task_ids, self.per_task_tau, self.model_rankings):
            flag = "  (degenerate reference)" if tid in self.degenerate else ""
            lines.append(f"{tid:<10}{tau:>8.3f}  {' '.join(map(str, r))}{flag}")
        lines.append(f"{'mean':<10}{self.mean_tau:>8.3f}")
        return "\n".join(lines)

    def to_record(self) -> str:
        return json.dumps(
            {
                "task_ids": self.task_ids,
                "per_task_tau": self.per_task_tau,
                "model_rankings": [list(r) for r in self.model_rankings],
                "degenerate": self.degenerate,
                "mean_tau": round(self.mean_tau, 3),
            },
            separators=(",", ":"),
        )

    @classmethod
    def from_record(cls, line: str) -> "TaskScore":
        data = json.loads(line)
        return cls(
            data["task_ids"],
            data["per_task_tau"],
            [tuple(r) for r in data["model_rankings"]],
            data["degenerate"],
        )


def evaluate_suite(
    suite: TaskSuite,
    table: EmbeddingTable,
    rules: Optional[NormalizationRuleSet] = None,
) -> TaskScore:
    if not suite.tasks:
        raise ValueError("empty task suite")
    score = TaskScore([], [], [])
    for task in suite.tasks:
        ranks, degenerate = _rank(task, table, suite.stopwords, rules)
        if degenerate:
            score.degenerate.append(task.task_id)
        score.task_ids.append(task.task_id)
        score.model_rankings.append(ranks)
        score.per_task_tau.append(kendall_tau(task.human_ranking, ranks))
    return score


@dataclass
class VariantReport:
    name: str
    full_mean: float
    loo_means: list[float]

    @property
    def max(self) -> float:
        return max([self.full_mean] + self.loo_means)

    @property
    def mean(self) -> float:
        return statistics.fmean(self.loo_means) if self.loo_means else self.full_mean

    @property
    def spread(self) -> float:
        values = self.loo_means or [self.full_mean]
        return max(values) - min(values)


@dataclass
class LeaveOneOutReport:
    variants: list[VariantReport]

    def render(self) -> str:
        lines = [f"{'variant':<20}{'full':>8}{'loo max':>9}{'loo mean':>10}{'spread':>8}"]
        for v in self.variants:
            loo_max = max(v.loo_means) if v.loo_means else v.full_mean
            lines.append(f"{v.name:<20}{v.full_mean:>8.3f}{loo_max:>9.3f}{v.mean:>10.3f}{v.spread:>8.3f}")
        return "\n".join(lines)

    def to_record(self) -> str:
        return json.dumps(
            [
                {"name": v.name, "full_mean": v.full_mean, "loo_means": v.loo_means}
                for v in self.variants
            ],
            separators=(",", ":"),
        )

    @classmethod
    def from_record(cls, line: str) -> "LeaveOneOutReport":
        return cls([VariantReport(d["name"], d["full_mean"], list(d["loo_means"])) for d in json.loads(line)])


def leave_one_out_from_taus(name: str, taus: Sequence[float]) -> VariantReport:
    n = len(taus)
    total = math.fsum(taus)
    loo = [(total - t) / (n - 1) for t in taus] if n > 1 else []
    return VariantReport(name, total / n, loo)


def leave_one_out_report(
    suite: TaskSuite,
    tables: Union[Sequence[EmbeddingTable], Mapping[str, EmbeddingTable]],
    rules: Optional[NormalizationRuleSet] = None,
) -> LeaveOneOutReport:
    """Mean tau over the full suite and over every leave-one-task-out subset,
    for each embedding variant."""
    if isinstance(tables, Mapping):
        named = list(tables.items())
    else:
        named = [(f"variant{i + 1}", t) for i, t in enumerate(tables)]
    if not named:
        raise ValueError("no embedding variants given")
    variants = []
    for name, table in named:
        score = evaluate_suite(suite, table, rules)
        variants.append(leave_one_out_from_taus(name, score.per_task_tau))
    return LeaveOneOutReport(variants)
