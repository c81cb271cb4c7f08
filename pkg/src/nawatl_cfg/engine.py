"""Constrained expansion, exhaustive enumeration, counting and sampling.

A derivation is recorded as a preorder list of :class:`Choice` records, one
per choice point: every nonterminal with production rules picks a rule, and
every preterminal (inline alternatives or a knowledge-base category) picks an
alternative. Person-indexed preterminals still record their choice; when the
index is fixed by the rule or bound by an earlier element, only the matching
alternative is legal.

Realization joins elements left to right. An element that realizes to the
empty string is dropped together with its join, and the join carried to the
next realized element is a space if any join across the gap was a space.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Optional, Protocol, Sequence, Union

from .grammar import (
    Grammar,
    GrammarError,
    JoinOp,
    ProductionRule,
    RecursionInGrammar,
    RuleElement,
    find_cycles,
    validate_grammar,
)
from .lexicon import Animacy, KnowledgeBase, LexiconError, VIDE_TOKEN


class ConstraintViolation(GrammarError):
    """A person-index agreement constraint is broken by the selected choices."""


class ChoiceError(GrammarError):
    """The choice vector does not fit the grammar."""


class UnknownLexicalForm(ChoiceError, LexiconError):
    pass


class SamplingError(RuntimeError):
    pass


@dataclass(frozen=True)
class Choice:
    symbol: str
    index: int
    rule_id: Optional[str] = None
    person: Optional[int] = None


@dataclass(frozen=True)
class LexicalUse:
    category: str
    surface: str
    animacy: Optional[Animacy]


@dataclass(frozen=True)
class GeneratedSentence:
    text: str
    tokens: tuple[str, ...]
    derivation: tuple[Choice, ...]
    lexical_uses: tuple[LexicalUse, ...]

    @property
    def choices(self) -> tuple[int, ...]:
        return tuple(c.index for c in self.derivation)

    def uses_of(self, category: str) -> list[LexicalUse]:
        return [u for u in self.lexical_uses if u.category == category]


@dataclass
class CountReport:
    raw_count: int
    filtered_count: Optional[int] = None
    per_rule_breakdown: dict[str, int] = field(default_factory=dict)

    def render(self) -> str:
        lines = [f"raw_count: {self.raw_count}"]
        if self.filtered_count is not None:
            lines.append(f"filtered_count: {self.filtered_count}")
        for rule_id, n in self.per_rule_breakdown.items():
            lines.append(f"rule {rule_id}: {n}")
        return "\n".join(lines)

    def to_record(self) -> str:
        return json.dumps(
            {
                "raw_count": self.raw_count,
                "filtered_count": self.filtered_count,
                "per_rule_breakdown": self.per_rule_breakdown,
            },
            separators=(",", ":"),
            ensure_ascii=False,
        )

    @classmethod
    def from_record(cls, line: str) -> "CountReport":
        data = json.loads(line)
        return cls(data["raw_count"], data["filtered_count"], dict(data["per_rule_breakdown"]))


#: Filtered corpus size reported for the bundled grammar and knowledge base.
REFERENCE_FILTERED_COUNT = 807_093


def reconciliation_note(report: CountReport, reference: int = REFERENCE_FILTERED_COUNT) -> str:
    """One line comparing ``report.filtered_count`` with a reference size."""
    if report.filtered_count is None:
        raise ValueError("report has no filtered count")
    delta = report.filtered_count - reference
    line = (
        f"reference filtered count {reference:,}; this run {report.filtered_count:,}; "
        f"delta {delta:+,} ({delta / reference:+.2%}); ratio {report.filtered_count / reference:.4f}"
    )
    if reference > report.raw_count:
        line += f"; reference exceeds the raw universe of {report.raw_count:,} derivations"
    return line


class SentenceFilter(Protocol):
    def apply(self, sentence: GeneratedSentence, kb: KnowledgeBase): ...


def realize(pieces: Iterable[tuple[JoinOp, str]]) -> str:
    out: list[str] = []
    pending: Optional[JoinOp] = None
    for join, lexeme in pieces:
        if pending is None or pending is JoinOp.NULL:
            pending = join
        elif join is JoinOp.SPACE:
            pending = JoinOp.SPACE
        if not lexeme:
            continue
        if out:
            out.append(" " if pending is JoinOp.SPACE else "")
        out.append(lexeme)
        pending = None
    return "".join(out)


@dataclass(frozen=True)
class _Option:
    lexeme: str
    use: Optional[LexicalUse]


# (pieces, lexical uses, derivation)
_Fragment = tuple[tuple[tuple[JoinOp, str], ...], tuple[LexicalUse, ...], tuple[Choice, ...]]

CACHE_LIMIT = 20_000


class _Compiled:
    """Grammar and knowledge base resolved into per-symbol option tables."""

    def __init__(self, grammar: Grammar, kb: Optional[KnowledgeBase]):
        self.grammar = grammar
        self.kb = kb
        self._options: dict[str, tuple[_Option, ...]] = {}
        self._counts: dict[str, int] = {}
        self._fragment_cache: dict[str, list[_Fragment]] = {}

    # -- symbol tables -----------------------------------------------------

    def options(self, name: str) -> tuple[_Option, ...]:
        cached = self._options.get(name)
        if cached is not None:
            return cached
        g = self.grammar
        if name in g.alternatives:
            opts = tuple(_Option(s.lexeme, LexicalUse(name, s.lexeme, None)) for s in g.alternatives[name])
        elif name in g.lexical_categories:
            if self.kb is None:
                raise LexiconError(f"category {name!r} needs a knowledge base")
            opts = tuple(
                _Option(e.surface, LexicalUse(name, e.surface, e.animacy))
                for e in self.kb.entries_for(name)
            )
        else:
            raise GrammarError(f"{name!r} is not a preterminal")
        self._options[name] = opts
        return opts

    def is_preterminal(self, name: str) -> bool:
        return self.grammar.is_preterminal(name)

    def rules(self, name: str) -> tuple[ProductionRule, ...]:
        rules = self.grammar.rules_for(name)
        if not rules and not self.is_preterminal(name):
            raise GrammarError(f"undefined symbol {name!r}")
        return rules

    def person_of(self, name: str, index: int) -> Optional[int]:
        return index + 1 if name in self.grammar.indexed else None

    # -- counting ----------------------------------------------------------

    def count(self, name: str) -> int:
        cached = self._counts.get(name)
        if cached is not None:
            return cached
        if self.is_preterminal(name):
            total = len(self.options(name))
        else:
            total = sum(self.count_rule(r) for r in self.rules(name))
        self._counts[name] = total
        return total

    def rule_factors(self, rule: ProductionRule) -> tuple[list[int], list[int]]:
        """Per-element factors (1 for index-bound elements) and per-class factors."""
        classes = rule.variable_classes()
        element_factors: list[int] = []
        class_members: dict[str, list[RuleElement]] = {}
        for el in rule.rhs:
            if el.symbol.is_terminal:
                element_factors.append(1)
            elif el.fixed_person is not None:
                size = len(self.options(el.symbol.name))
                element_factors.append(1 if 0 < el.fixed_person <= size else 0)
            elif el.index_variable is not None:
                element_factors.append(1)
                class_members.setdefault(classes[el.index_variable], []).append(el)
            else:
                element_factors.append(self.count(el.symbol.name))
        class_factors = [
            len(self.class_values(rule, classes, root, members))
            for root, members in class_members.items()
        ]
        return element_factors, class_factors

    def class_values(
        self, rule: ProductionRule, classes: dict[str, str], root: str, members: Sequence[RuleElement]
    ) -> list[int]:
        """0-based indices admissible for every member of an equality class."""
        limit = min(len(self.options(el.symbol.name)) for el in members)
        values = set(range(limit))
        for var, canon in classes.items():
            if canon == root:
                domain = rule.domain_of(var)
                if domain is not None:
                    values &= {p - 1 for p in domain}
        return sorted(values)

    def count_rule(self, rule: ProductionRule) -> int:
        element_factors, class_factors = self.rule_factors(rule)
        total = 1
        for f in element_factors + class_factors:
            total *= f
        return total

    # -- fragment enumeration ------------------------------------------------

    def fragments(self, name: str) -> Iterator[_Fragment]:
        cached = self._fragment_cache.get(name)
        if cached is not None:
            return iter(cached)
        if self.is_preterminal(name):
            frags = [
                (((JoinOp.SPACE, o.lexeme),), (o.use,) if o.use else (), (Choice(name, i, None, self.person_of(name, i)),))
                for i, o in enumerate(self.options(name))
            ]
            self._fragment_cache[name] = frags
            return iter(frags)
        gen = self._symbol_fragments(name)
        if self.count(name) <= CACHE_LIMIT:
            frags = list(gen)
            self._fragment_cache[name] = frags
            return iter(frags)
        return gen

    def _symbol_fragments(self, name: str) -> Iterator[_Fragment]:
        for i, rule in enumerate(self.rules(name)):
            head = (Choice(name, i, rule.id, None),)
            for pieces, uses, trace in self._rule_fragments(rule):
                yield pieces, uses, head + trace

    def _rule_fragments(self, rule: ProductionRule) -> Iterator[_Fragment]:
        rhs = rule.rhs
        classes = rule.variable_classes()
        class_values: dict[str, set[int]] = {}
        for root in set(classes.values()):
            members = [el for el in rhs if el.index_variable and classes[el.index_variable] == root]
            if members:
                class_values[root] = set(self.class_values(rule, classes, root, members))
        n = len(rhs)

        def element_options(el: RuleElement, bindings: dict[str, int]) -> Iterator[tuple[Optional[int], _Fragment]]:
            sym = el.symbol
            if sym.is_terminal:
                yield None, (((el.join_to_previous, sym.lexeme),), (), ())
                return
            name = sym.name
            fixed = el.fixed_person
            var = el.index_variable
            if fixed is not None or var is not None:
                opts = self.options(name)
                if fixed is not None:
                    indices: Iterable[int] = [fixed - 1] if 0 < fixed <= len(opts) else []
                else:
                    root = classes[var]
                    if root in bindings:
                        indices = [bindings[root]]
                    else:
                        indices = sorted(class_values[root])
                for i in indices:
                    o = opts[i]
                    yield i, (
                        ((el.join_to_previous, o.lexeme),),
                        (o.use,) if o.use else (),
                        (Choice(name, i, None, self.person_of(name, i)),),
                    )
                return
            for pieces, uses, trace in self.fragments(name):
                if pieces[0][0] is not el.join_to_previous:
                    pieces = ((el.join_to_previous, pieces[0][1]),) + pieces[1:]
                yield None, (pieces, uses, trace)

        def rec(k: int, bindings: dict[str, int], pieces, uses, trace) -> Iterator[_Fragment]:
            if k == n:
                yield pieces, uses, trace
                return
            el = rhs[k]
            var = el.index_variable
            for idx, (p, u, t) in element_options(el, bindings):
                b = bindings
                if var is not None and classes[var] not in bindings:
                    b = {**bindings, classes[var]: idx}
                yield from rec(k + 1, b, pieces + p, uses + u, trace + t)

        yield from rec(0, {}, (), (), ())

    # -- replay --------------------------------------------------------------

    def replay(self, name: str, choices: Sequence[Union[int, str, Choice]]) -> _Fragment:
        stream = iter(choices)
        frag = self._replay_symbol(name, JoinOp.SPACE, None, stream)
        leftover = next(stream, None)
        if leftover is not None:
            raise ChoiceError(f"unused choice {leftover!r} after the derivation completed")
        return frag

    def _next_choice(self, stream, name: str):
        try:
            item = next(stream)
        except StopIteration:
            raise ChoiceError(f"choice vector exhausted at {name!r}") from None
        return item.index if isinstance(item, Choice) else item

    def _replay_symbol(self, name: str, join: JoinOp, forced: Optional[tuple[int, str]], stream) -> _Fragment:
        if self.is_preterminal(name):
            opts = self.options(name)
            item = self._next_choice(stream, name)
            if isinstance(item, str):
                surface = "" if item == VIDE_TOKEN else item
                matches = [i for i, o in enumerate(opts) if o.lexeme == surface]
                if not matches:
                    raise UnknownLexicalForm(f"unknown lexical form {item!r} for {name!r}")
                idx = matches[0]
            else:
                idx = int(item)
                if not 0 <= idx < len(opts):
                    raise UnknownLexicalForm(f"alternative {idx} out of range for {name!r} ({len(opts)} alternatives)")
            if forced is not None and forced[0] != idx:
                want, why = forced
                raise ConstraintViolation(
                    f"{name} person {idx + 1} conflicts with required person {want + 1} ({why})"
                )
            o = opts[idx]
            return ((join, o.lexeme),), (o.use,) if o.use else (), (Choice(name, idx, None, self.person_of(name, idx)),)

        rules = self.rules(name)
        item = self._next_choice(stream, name)
        if isinstance(item, str):
            ids = [r.id for r in rules]
            if item not in ids:
                raise ChoiceError(f"{item!r} is not a rule of {name!r}")
            ridx = ids.index(item)
        else:
            ridx = int(item)
            if not 0 <= ridx < len(rules):
                raise ChoiceError(f"rule {ridx} out of range for {name!r}")
        rule = rules[ridx]
        classes = rule.variable_classes()
        bindings: dict[str, tuple[int, str]] = {}
        pieces: tuple = ()
        uses: tuple = ()
        trace: tuple = (Choice(name, ridx, rule.id, None),)
        for k, el in enumerate(rule.rhs):
            ejoin = join if k == 0 else el.join_to_previous
            if el.symbol.is_terminal:
                pieces += ((ejoin, el.symbol.lexeme),)
                continue
            forced = None
            var = el.index_variable
            if el.fixed_person is not None:
                forced = (el.fixed_person - 1, f"fixed by rule {rule.id}")
            elif var is not None and classes[var] in bindings:
                forced = bindings[classes[var]]
            p, u, t = self._replay_symbol(el.symbol.name, ejoin, forced, stream)
            if var is not None:
                idx = t[0].index
                root = classes[var]
                allowed = self.class_values(
                    rule, classes, root,
                    [e for e in rule.rhs if e.index_variable and classes[e.index_variable] == root],
                )
                if idx not in allowed:
                    raise ConstraintViolation(f"{el} takes person {idx + 1}, outside the allowed persons of rule {rule.id}")
                bindings.setdefault(root, (idx, f"{var} bound by {el} in rule {rule.id}"))
            pieces += p
            uses += u
            trace += t
        return pieces, uses, trace


def _sentence(frag: _Fragment) -> GeneratedSentence:
    pieces, uses, trace = frag
    text = realize(pieces)
    return GeneratedSentence(text, tuple(text.split(" ")) if text else (), trace, uses)


def _check_countable(grammar: Grammar) -> None:
    cycles = find_cycles(grammar)
    if cycles:
        raise RecursionInGrammar("recursion detected: " + " -> ".join(cycles[0]))


def expand(
    grammar: Grammar,
    kb: Optional[KnowledgeBase],
    choices: Sequence[Union[int, str, Choice]],
    start: Optional[str] = None,
) -> GeneratedSentence:
    """Realize the derivation selected by ``choices`` (preorder, one per choice point).

    Items may be integer indices, rule ids (at rule points), surface forms
    (at preterminals; ``"∅"`` or ``""`` selects the empty alternative) or
    :class:`Choice` records from an earlier derivation.
    """
    return _sentence(_Compiled(grammar, kb).replay(start or grammar.start, choices))


def iter_sentences(
    grammar: Grammar, kb: Optional[KnowledgeBase], start: Optional[str] = None
) -> Iterator[GeneratedSentence]:
    """Every derivation's sentence, once, in document order."""
    _check_countable(grammar)
    compiled = _Compiled(grammar, kb)
    for frag in compiled.fragments(start or grammar.start):
        yield _sentence(frag)


def enumerate_sentences(
    grammar: Grammar,
    kb: Optional[KnowledgeBase],
    filters: Optional[SentenceFilter] = None,
    sink: Optional[Callable[[GeneratedSentence], object]] = None,
    dedup: bool = False,
) -> CountReport:
    """Stream the whole sentence universe into ``sink`` and count it.

    ``raw_count`` counts derivations before filtering. ``filtered_count`` is
    the number of sentences handed to ``sink``; it is ``None`` when neither
    filters nor deduplication are active.
    """
    raw = 0
    kept = 0
    usage: dict[str, int] = {r.id: 0 for r in grammar.rules}
    seen: set[str] = set()
    for sentence in iter_sentences(grammar, kb):
        raw += 1
        for c in sentence.derivation:
            if c.rule_id is not None:
                usage[c.rule_id] += 1
        if filters is not None and not filters.apply(sentence, kb).accepted:
            continue
        if dedup:
            if sentence.text in seen:
                continue
            seen.add(sentence.text)
        kept += 1
        if sink is not None:
            sink(sentence)
    filtered = kept if (filters is not None or dedup) else None
    return CountReport(raw, filtered, usage)


def count_symbolic(grammar: Grammar, kb: Optional[KnowledgeBase]) -> CountReport:
    """Count derivations from products and sums of alternative cardinalities.

    ``per_rule_breakdown`` holds, for each rule, the number of rule
    applications across the whole universe (for start rules, the number of
    sentences using that rule).
    """
    _check_countable(grammar)
    compiled = _Compiled(grammar, kb)
    raw = compiled.count(grammar.start)

    # Outside counts: number of derivation contexts in which each structural
    # nonterminal is expanded.
    outside: dict[str, int] = {grammar.start: 1}
    order = _topological_order(grammar, grammar.start)
    usage: dict[str, int] = {r.id: 0 for r in grammar.rules}
    for name in order:
        ctx = outside.get(name, 0)
        for rule in grammar.rules_for(name):
            element_factors, class_factors = compiled.rule_factors(rule)
            rest_classes = 1
            for f in class_factors:
                rest_classes *= f
            total = rest_classes
            for f in element_factors:
                total *= f
            usage[rule.id] = ctx * total
            if ctx == 0:
                continue
            for k, el in enumerate(rule.rhs):
                if el.symbol.is_terminal or grammar.is_preterminal(el.symbol.name):
                    continue
                others = rest_classes
                for j, f in enumerate(element_factors):
                    if j != k:
                        others *= f
                outside[el.symbol.name] = outside.get(el.symbol.name, 0) + ctx * others
    return CountReport(raw, None, usage)


def _topological_order(grammar: Grammar, start: str) -> list[str]:
    graph = grammar.dependency_graph()
    seen: set[str] = set()
    post: list[str] = []

    def visit(node: str) -> None:
        seen.add(node)
        for nxt in sorted(graph.get(node, ())):
            if nxt not in seen:
                visit(nxt)
        post.append(node)

    visit(start)
    return [n for n in reversed(post) if not grammar.is_preterminal(n)]


def sample(
    grammar: Grammar,
    kb: Optional[KnowledgeBase],
    seed: int,
    count: int,
    filters: Optional[SentenceFilter] = None,
    max_retries: int = 10_000,
) -> list[GeneratedSentence]:
    """Draw ``count`` sentences uniformly over derivations.

    Rejected sentences are redrawn; :class:`SamplingError` is raised when a
    single draw is rejected ``max_retries`` times in a row.
    """
    if count < 0:
        raise ValueError("count must be non-negative")
    _check_countable(grammar)
    compiled = _Compiled(grammar, kb)
    if count and compiled.count(grammar.start) == 0:
        raise SamplingError("the grammar generates no sentences")
    rng = random.Random(seed)
    out: list[GeneratedSentence] = []
    while len(out) < count:
        for _ in range(max_retries):
            choices = _draw(compiled, grammar.start, rng)
            sentence = _sentence(compiled.replay(grammar.start, choices))
            if filters is None or filters.apply(sentence, kb).accepted:
                out.append(sentence)
                break
        else:
            raise SamplingError(f"filters rejected {max_retries} consecutive draws")
    return out


def _draw(compiled: _Compiled, name: str, rng: random.Random) -> list[int]:
    if compiled.is_preterminal(name):
        return [rng.randrange(len(compiled.options(name)))]
    rules = compiled.rules(name)
    r = rng.randrange(compiled.count(name))
    for ridx, rule in enumerate(rules):
        weight = compiled.count_rule(rule)
        if r < weight:
            break
        r -= weight
    choices = [ridx]
    classes = rule.variable_classes()
    bound: dict[str, int] = {}
    for el in rule.rhs:
        if el.symbol.is_terminal:
            continue
        var = el.index_variable
        if el.fixed_person is not None:
            choices.append(el.fixed_person - 1)
        elif var is not None:
            root = classes[var]
            if root not in bound:
                members = [e for e in rule.rhs if e.index_variable and classes[e.index_variable] == root]
                bound[root] = rng.choice(compiled.class_values(rule, classes, root, members))
            choices.append(bound[root])
        else:
            choices.extend(_draw(compiled, el.symbol.name, rng))
    return choices


def cardinalities(grammar: Grammar, kb: Optional[KnowledgeBase]) -> dict[str, int]:
    """Alternative counts for every preterminal used by the grammar."""
    compiled = _Compiled(grammar, kb)
    names = sorted(set(grammar.alternatives) | set(grammar.lexical_categories))
    return {n: len(compiled.options(n)) for n in names}


__all__ = [
    "Choice",
    "ChoiceError",
    "ConstraintViolation",
    "CountReport",
    "GeneratedSentence",
    "LexicalUse",
    "SamplingError",
    "UnknownLexicalForm",
    "cardinalities",
    "count_symbolic",
    "enumerate_sentences",
    "expand",
    "iter_sentences",
    "realize",
    "reconciliation_note",
    "REFERENCE_FILTERED_COUNT",
    "sample",
    "validate_grammar",
]
