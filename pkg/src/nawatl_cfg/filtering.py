"""Semantic acceptability filters over generated sentences."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence

from .engine import GeneratedSentence
from .lexicon import NOUN, VERB, KnowledgeBase, LexiconError


class UntaggedLexicalUse(LexiconError):
    pass


@dataclass(frozen=True)
class FilterVerdict:
    accepted: bool
    rejecting_filter: Optional[str] = None
    reason: str = ""

    def __post_init__(self) -> None:
        if self.accepted != (self.rejecting_filter is None):
            raise ValueError("a verdict names a rejecting filter iff it rejects")

    def __bool__(self) -> bool:
        return self.accepted


ACCEPT = FilterVerdict(True)

Predicate = Callable[[GeneratedSentence, KnowledgeBase], FilterVerdict]


def animacy_filter(sentence: GeneratedSentence, kb: Optional[KnowledgeBase] = None) -> FilterVerdict:
    """Reject sentences pairing an animate noun with an inanimate-only verb or
    the reverse. ``both`` on either side is compatible with anything."""
    nouns = sentence.uses_of(NOUN)
    verbs = sentence.uses_of(VERB)
    for use in nouns + verbs:
        if use.animacy is None:
            raise UntaggedLexicalUse(f"{use.category} {use.surface!r} has no animacy tag")
    for noun in nouns:
        for verb in verbs:
            if not noun.animacy.compatible_with(verb.animacy):
                return FilterVerdict(
                    False,
                    "animacy",
                    f"{noun.surface} ({noun.animacy.value}) with {verb.surface} ({verb.animacy.value})",
                )
    return ACCEPT


def no_repeat_noun_filter(sentence: GeneratedSentence, kb: Optional[KnowledgeBase] = None) -> FilterVerdict:
    seen: set[str] = set()
    for use in sentence.uses_of(NOUN):
        if use.surface in seen:
            return FilterVerdict(False, "no_repeat", f"noun {use.surface} repeated")
        seen.add(use.surface)
    return ACCEPT


FILTERS: dict[str, Predicate] = {
    "animacy": animacy_filter,
    "no_repeat": no_repeat_noun_filter,
}


class FilterPipeline:
    """Ordered conjunction of named filters; the first rejection wins.

    Extra predicates (e.g. a learned plausibility classifier) plug in with
    :meth:`add` under any unused name.
    """

    def __init__(self, filters: Iterable[tuple[str, Predicate]] = ()):
        self.filters: list[tuple[str, Predicate]] = []
        for name, fn in filters:
            self.add(name, fn)

    @classmethod
    def from_names(cls, names: Sequence[str]) -> "FilterPipeline":
        unknown = [n for n in names if n not in FILTERS]
        if unknown:
            raise KeyError(f"unknown filter(s): {', '.join(unknown)}; known: {', '.join(FILTERS)}")
        return cls((n, FILTERS[n]) for n in names)

    @classmethod
    def default(cls) -> "FilterPipeline":
        return cls.from_names(["animacy", "no_repeat"])

    def add(self, name: str, fn: Predicate) -> "FilterPipeline":
        if any(n == name for n, _ in self.filters):
            raise ValueError(f"filter {name!r} already in pipeline")
        self.filters.append((name, fn))
        return self

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.filters]

    def apply(self, sentence: GeneratedSentence, kb: Optional[KnowledgeBase] = None) -> FilterVerdict:
        for name, fn in self.filters:
            verdict = fn(sentence, kb)
            if not verdict.accepted:
                if verdict.rejecting_filter != name:
                    verdict = FilterVerdict(False, name, verdict.reason)
                return verdict
        return ACCEPT

    def __len__(self) -> int:
        return len(self.filters)

    def __repr__(self) -> str:
        return f"FilterPipeline({self.names})"


def apply_pipeline(
    pipeline: FilterPipeline, sentence: GeneratedSentence, kb: Optional[KnowledgeBase] = None
) -> FilterVerdict:
    return pipeline.apply(sentence, kb)


class RejectionLog:
    """Sentence filter wrapper that records rejections as TSV rows."""

    def __init__(self, pipeline: FilterPipeline, stream):
        self.pipeline = pipeline
        self.stream = stream

    def apply(self, sentence: GeneratedSentence, kb: Optional[KnowledgeBase] = None) -> FilterVerdict:
        verdict = self.pipeline.apply(sentence, kb)
        if not verdict.accepted:
            self.stream.write(f"{sentence.text}\t{verdict.rejecting_filter}\t{verdict.reason}\n")
        return verdict
