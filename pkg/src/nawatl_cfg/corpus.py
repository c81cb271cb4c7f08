"""Orthographic normalization, corpus merging and corpus statistics."""

from __future__ import annotations

import functools
import json
import re
import unicodedata
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, TextIO, Union

from .lexicon import data_path

CONSONANTS = frozenset("bcdfghjklmnpqrstvwxyz")
_DOUBLE_CONSONANT = re.compile(r"([bcdfghjklmnpqrstvwxyz])\1+")
_MAX_PASSES = 8


class NormalizationError(ValueError):
    pass


@dataclass(frozen=True)
class RewriteRule:
    pattern: str
    replacement: str
    right_context: str = ""
    priority: int = 0

    def __post_init__(self) -> None:
        if not self.pattern:
            raise ValueError("rewrite pattern must not be empty")
        if len(self.replacement) > len(self.pattern):
            raise ValueError(
                f"rule {self.pattern!r} -> {self.replacement!r} would lengthen text"
            )
        object.__setattr__(self, "_context", re.compile(self.right_context) if self.right_context else None)

    def matches(self, text: str, pos: int) -> bool:
        if not text.startswith(self.pattern, pos):
            return False
        ctx = self._context  # type: ignore[attr-defined]
        return ctx is None or ctx.match(text, pos + len(self.pattern)) is not None


@dataclass(frozen=True)
class NormalizationRuleSet:
    rules: tuple[RewriteRule, ...] = ()
    lowercase: bool = True
    strip_diacritics: bool = True
    collapse_double_consonants: bool = True

    def __post_init__(self) -> None:
        ordered = tuple(sorted(self.rules, key=lambda r: r.priority))
        object.__setattr__(self, "rules", ordered)
        alternation = "|".join(
            re.escape(r.pattern) + (f"(?={r.right_context})" if r.right_context else "") for r in ordered
        )
        object.__setattr__(self, "_matcher", re.compile(alternation) if ordered else None)

    @property
    def matcher(self) -> "re.Pattern[str]":
        return self._matcher  # type: ignore[attr-defined]


def load_rules(source: Union[str, Path, TextIO, None] = None, **flags: bool) -> NormalizationRuleSet:
    """Read a rule table (TSV: pattern, right_context, replacement, priority).

    ``None`` loads the shipped default table.
    """
    if source is None:
        source = data_path("orthography.tsv")
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return load_rules(fh, **flags)
    rules = []
    header_seen = False
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if not header_seen:
            header_seen = True
            if cols[0].strip().lower() == "pattern":
                continue
        if len(cols) < 3:
            raise ValueError(f"line {lineno}: expected pattern, right_context, replacement[, priority]")
        pattern, context, replacement = cols[0], cols[1], cols[2]
        priority = int(cols[3]) if len(cols) > 3 and cols[3].strip() else len(rules)
        rules.append(RewriteRule(pattern, replacement, context, priority))
    return NormalizationRuleSet(tuple(rules), **flags)


def render_rules(rules: NormalizationRuleSet) -> str:
    lines = ["pattern\tright_context\treplacement\tpriority"]
    for r in rules.rules:
        lines.append(f"{r.pattern}\t{r.right_context}\t{r.replacement}\t{r.priority}")
    return "\n".join(lines) + "\n"


_DEFAULT_RULES: Optional[NormalizationRuleSet] = None


def default_rules() -> NormalizationRuleSet:
    global _DEFAULT_RULES
    if _DEFAULT_RULES is None:
        _DEFAULT_RULES = load_rules()
    return _DEFAULT_RULES


def _clean(line: str) -> str:
    out = []
    for ch in line:
        cat = unicodedata.category(ch)
        if ch == "\t":
            out.append(" ")
        elif cat in ("Cc", "Cf", "Cs", "Co", "Cn") and ch != " ":
            if cat == "Cs":
                raise NormalizationError("text contains a lone surrogate (malformed UTF-8)")
            continue
        else:
            out.append(ch)
    return "".join(out)


@functools.lru_cache(maxsize=4096)
def _fold_char(ch: str, lowercase: bool, strip: bool) -> str:
    out = ch.lower() if lowercase else ch
    if strip:
        decomposed = unicodedata.normalize("NFD", out)
        out = unicodedata.normalize(
            "NFC", "".join(c for c in decomposed if not unicodedata.combining(c))
        )
    # Some code points grow in UTF-8 when case-mapped or decomposed (U+023A,
    # CJK compatibility ideographs, some Tibetan letters). They are left
    # untouched so that normalization never lengthens text.
    if len(out.encode("utf-8")) > len(ch.encode("utf-8")):
        return ch
    return out


def _fold(text: str, rules: "NormalizationRuleSet") -> str:
    if not (rules.lowercase or rules.strip_diacritics):
        return text
    return "".join(_fold_char(ch, rules.lowercase, rules.strip_diacritics) for ch in text)


def _rewrite(text: str, rules: "NormalizationRuleSet") -> str:
    if not rules.rules:
        return text
    # One alternation in priority order: at each position the regex engine
    # tries the alternatives in order, which is exactly the rule priority.
    matcher = rules.matcher
    ordered = rules.rules

    def replace(m: "re.Match[str]") -> str:
        for rule in ordered:
            if rule.matches(text, m.start()):
                return rule.replacement
        raise AssertionError("unreachable")  # pragma: no cover

    return matcher.sub(replace, text)


def _normalize_line(line: str, rules: NormalizationRuleSet) -> str:
    text = _fold(_clean(line), rules)
    # Rewrites and collapsing can expose new matches; iterate to a fixpoint so
    # the result is idempotent. Neither step lengthens the text.
    for _ in range(_MAX_PASSES):
        new = _rewrite(text, rules)
        if rules.collapse_double_consonants:
            new = _DOUBLE_CONSONANT.sub(r"\1", new)
        if new == text:
            break
        text = new
    return text


def normalize(text: Union[str, bytes], rules: Optional[NormalizationRuleSet] = None) -> str:
    """Unify spelling: lowercase, strip accents, apply rewrites, collapse
    double consonants. Line breaks are kept; each line is normalized alone."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise NormalizationError(f"malformed UTF-8: {exc}") from None
    if rules is None:
        rules = default_rules()
    if text.startswith("\ufeff"):
        text = text[1:]
    return "\n".join(_normalize_line(line, rules) for line in text.split("\n"))


# ---------------------------------------------------------------------------
# statistics


def tokenize(sentence: str) -> list[str]:
    """Whitespace tokens with a sentence-final period removed."""
    tokens = sentence.split()
    if tokens and tokens[-1].endswith("."):
        last = tokens[-1].rstrip(".")
        if last:
            tokens[-1] = last
        else:
            tokens.pop()
    return tokens


@dataclass
class CorpusStats:
    documents: int = 0
    sentences: int = 0
    tokens: int = 0
    types: int = 0
    vocabulary: set[str] = field(default_factory=set, repr=False, compare=False)

    @property
    def tokens_per_sentence(self) -> float:
        return self.tokens / self.sentences if self.sentences else 0.0

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        vocab = self.vocabulary | other.vocabulary
        return CorpusStats(
            self.documents + other.documents,
            self.sentences + other.sentences,
            self.tokens + other.tokens,
            len(vocab),
            vocab,
        )

    def row(self) -> str:
        return f"{self.sentences} {self.tokens} {self.types} {self.tokens_per_sentence:.2f}"

    def render(self, label: str = "") -> str:
        header = f"{'':<12}{'Sentences':>10}{'Tokens':>10}{'Types':>10}{'Tok/Sent':>10}"
        line = (
            f"{label:<12}{self.sentences:>10}{self.tokens:>10}{self.types:>10}"
            f"{self.tokens_per_sentence:>10.2f}"
        )
        return header + "\n" + line

    def to_record(self) -> str:
        data = asdict(self)
        data.pop("vocabulary")
        data["tokens_per_sentence"] = round(self.tokens_per_sentence, 2)
        return json.dumps(data, separators=(",", ":"))

    @classmethod
    def from_record(cls, line: str) -> "CorpusStats":
        data = json.loads(line)
        data.pop("tokens_per_sentence", None)
        return cls(**data)


def compute_stats(stream: Iterable[str], documents: int = 1) -> CorpusStats:
    """Sentence, token and case-folded type counts for a one-sentence-per-line stream."""
    stats = CorpusStats(documents=0)
    vocab: set[str] = set()
    for line in stream:
        line = line.rstrip("\n")
        if not line.strip():
            continue
        tokens = tokenize(line)
        stats.sentences += 1
        stats.tokens += len(tokens)
        vocab.update(t.casefold() for t in tokens)
    stats.vocabulary = vocab
    stats.types = len(vocab)
    stats.documents = documents if stats.sentences else 0
    return stats


@dataclass(frozen=True)
class AugmentationRatios:
    rho_tokens: float
    rho_sentences: float

    def render(self) -> str:
        return (
            f"artificial/authentic tokens: {self.rho_tokens:.2%}\n"
            f"artificial/authentic sentences: {self.rho_sentences:.2%}"
        )

    def to_record(self) -> str:
        return json.dumps(asdict(self), separators=(",", ":"))


def augmentation_ratios(authentic: CorpusStats, artificial: CorpusStats) -> AugmentationRatios:
    if authentic.tokens <= 0 or authentic.sentences <= 0:
        raise ZeroDivisionError("authentic corpus has no tokens or no sentences")
    return AugmentationRatios(
        artificial.tokens / authentic.tokens,
        artificial.sentences / authentic.sentences,
    )


@dataclass
class MergeResult:
    authentic: CorpusStats
    artificial: CorpusStats

    @property
    def merged(self) -> CorpusStats:
        return self.authentic.merge(self.artificial)


def merge_corpora(
    authentic: Iterable[str],
    artificial: Iterable[str],
    rules: Optional[NormalizationRuleSet] = None,
) -> Iterator[str]:
    """Normalize the authentic stream, then the artificial one, yielding lines.

    Per-source statistics are available on the generator's ``StopIteration``
    value; :func:`merge_to` is the convenience wrapper that writes to a file
    and returns them.
    """
    rules = rules or default_rules()
    stats = []
    for stream in (authentic, artificial):
        acc = _StatsAccumulator()
        for line in stream:
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            norm = normalize(line, rules)
            acc.add(norm)
            yield norm
        stats.append(acc.result())
    return MergeResult(*stats)


def merge_to(
    authentic: Iterable[str],
    artificial: Iterable[str],
    out: TextIO,
    rules: Optional[NormalizationRuleSet] = None,
) -> MergeResult:
    gen = merge_corpora(authentic, artificial, rules)
    while True:
        try:
            out.write(next(gen) + "\n")
        except StopIteration as stop:
            return stop.value


class _StatsAccumulator:
    def __init__(self) -> None:
        self.sentences = 0
        self.tokens = 0
        self.vocab: set[str] = set()

    def add(self, line: str) -> None:
        tokens = tokenize(line)
        self.sentences += 1
        self.tokens += len(tokens)
        self.vocab.update(t.casefold() for t in tokens)

    def result(self) -> CorpusStats:
        return CorpusStats(1 if self.sentences else 0, self.sentences, self.tokens, len(self.vocab), self.vocab)
