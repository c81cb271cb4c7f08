"""Tagged knowledge base binding lexical categories to surface forms.

The on-disk format is a UTF-8 TSV with a header row and the columns
``surface, category, animacy, gloss``. Lines starting with ``#`` are
comments. The empty ("vide") alternative is stored as ``∅``.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, TextIO, Union

VIDE_TOKEN = "∅"

NOUN = "n"
VERB = "v"
OPEN_CATEGORIES = (NOUN, VERB)
MARKER_CATEGORIES = ("ADJ", "ADV_T", "ADV_Q", "ART", "POS", "PP", "PV", "NEG")
CATEGORIES = OPEN_CATEGORIES + MARKER_CATEGORIES

HEADER = ("surface", "category", "animacy", "gloss")


class LexiconError(ValueError):
    """Raised for malformed or inconsistent knowledge-base data."""


class UnknownCategoryError(LexiconError, KeyError):
    def __str__(self) -> str:  # KeyError repr-quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class Animacy(enum.Enum):
    ANIMATE = "animate"
    INANIMATE = "inanimate"
    BOTH = "both"

    def compatible_with(self, other: "Animacy") -> bool:
        if Animacy.BOTH in (self, other):
            return True
        return self is other


@dataclass(frozen=True)
class LexicalEntry:
    surface: str
    category: str
    animacy: Animacy = Animacy.BOTH
    gloss: str = ""

    @property
    def is_vide(self) -> bool:
        return self.surface == ""

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise UnknownCategoryError(f"unknown category {self.category!r}")
        if any(ch.isspace() for ch in self.surface):
            raise LexiconError(f"surface form {self.surface!r} is not a single token")
        if self.is_vide and self.category in OPEN_CATEGORIES:
            raise LexiconError(f"category {self.category!r} cannot hold the empty form")
        if self.category in MARKER_CATEGORIES and self.animacy is not Animacy.BOTH:
            raise LexiconError(
                f"marker {self.surface!r} ({self.category}) must not carry an animacy tag"
            )


@dataclass(frozen=True)
class KnowledgeBase:
    """Immutable, document-ordered collection of lexical entries."""

    entries: tuple[LexicalEntry, ...]
    category_index: dict[str, tuple[LexicalEntry, ...]] = field(
        init=False, repr=False, compare=False
    )

    def __init__(self, entries: Iterable[LexicalEntry]) -> None:
        entries = tuple(entries)
        seen: set[tuple[str, str]] = set()
        index: dict[str, list[LexicalEntry]] = {c: [] for c in CATEGORIES}
        for entry in entries:
            key = (entry.surface, entry.category)
            if key in seen:
                shown = entry.surface or VIDE_TOKEN
                raise LexiconError(f"duplicate entry {shown!r} in category {entry.category}")
            seen.add(key)
            index[entry.category].append(entry)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(
            self, "category_index", {c: tuple(v) for c, v in index.items()}
        )

    def entries_for(self, category: str) -> tuple[LexicalEntry, ...]:
        try:
            return self.category_index[category]
        except KeyError:
            raise UnknownCategoryError(f"unknown category {category!r}") from None

    def cardinality(self, category: str) -> int:
        return len(self.entries_for(category))

    def cardinalities(self) -> dict[str, int]:
        return {c: len(v) for c, v in self.category_index.items()}

    def lookup(self, category: str, surface: str) -> LexicalEntry:
        for entry in self.entries_for(category):
            if entry.surface == surface:
                return entry
        raise LexiconError(f"unknown lexical form {surface!r} in category {category}")

    def restrict(self, **keep: Iterable[str]) -> "KnowledgeBase":
        """Copy of the knowledge base keeping only the named surfaces per category.

        Categories not mentioned are kept whole; ``vide`` is spelled ``""``.
        """
        wanted = {cat: set(forms) for cat, forms in keep.items()}
        for cat in wanted:
            self.entries_for(cat)
        return KnowledgeBase(
            e for e in self.entries
            if e.category not in wanted or e.surface in wanted[e.category]
        )

    def __iter__(self) -> Iterator[LexicalEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def entries_for(kb: KnowledgeBase, category: str) -> tuple[LexicalEntry, ...]:
    return kb.entries_for(category)


def _parse_animacy(raw: str, category: str, lineno: int) -> Animacy:
    raw = raw.strip().lower()
    if category in OPEN_CATEGORIES:
        if raw in ("", "-"):
            raise LexiconError(f"line {lineno}: missing animacy for {category!r} entry")
    elif raw in ("", "-"):
        return Animacy.BOTH
    try:
        return Animacy(raw)
    except ValueError:
        raise LexiconError(f"line {lineno}: bad animacy tag {raw!r}") from None


def load_kb(source: Union[str, Path, TextIO]) -> KnowledgeBase:
    """Parse a knowledge-base TSV from a path or an open text stream."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            return load_kb(fh)

    entries: list[LexicalEntry] = []
    header_seen = False
    for lineno, line in enumerate(source, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        cols = line.split("\t")
        if not header_seen:
            if tuple(c.strip().lower() for c in cols[:4]) != HEADER:
                raise LexiconError(f"line {lineno}: expected header {'/'.join(HEADER)}")
            header_seen = True
            continue
        if len(cols) < 3:
            raise LexiconError(f"line {lineno}: expected 4 tab-separated columns")
        surface, category, animacy = (c.strip() for c in cols[:3])
        gloss = cols[3].strip() if len(cols) > 3 else ""
        if category not in CATEGORIES:
            raise UnknownCategoryError(f"line {lineno}: unknown category {category!r}")
        if surface == VIDE_TOKEN:
            surface = ""
        elif not surface:
            raise LexiconError(f"line {lineno}: empty surface form")
        try:
            entries.append(
                LexicalEntry(surface, category, _parse_animacy(animacy, category, lineno), gloss)
            )
        except LexiconError as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    if not entries:
        raise LexiconError("knowledge base is empty")
    return KnowledgeBase(entries)


def render_kb(kb: KnowledgeBase) -> str:
    out = io.StringIO()
    out.write("\t".join(HEADER) + "\n")
    for e in kb.entries:
        animacy = e.animacy.value if e.category in OPEN_CATEGORIES else "-"
        out.write(f"{e.surface or VIDE_TOKEN}\t{e.category}\t{animacy}\t{e.gloss}\n")
    return out.getvalue()


def data_path(name: str) -> Path:
    """Filesystem path of a file shipped in the package data directory."""
    return Path(str(resources.files("nawatl_cfg") / "data" / name))


def bundled_kb(name: str = "full") -> KnowledgeBase:
    """Load a shipped knowledge base: ``"full"`` (full) or ``"core"``."""
    return load_kb(data_path(f"{name}.tsv"))
