"""Grammar data model, the rule-file parser and structural validation.

Rule files use a small notation::

    @start P
    @indexed PP PV POS
    @lexical n v ADJ ART POS PP PV NEG ADV_T ADV_Q

    P -> ADV_T (N|V)
    N -> ADJ (ART_|POS)+n
    V -> PP_i NEG PV_j+v ADV_Q ; i,j=1,2,3 ; i=j
    ADV_Q -> miyak|tlawel|vide

Whitespace joins with a space, ``+`` concatenates, a trailing ``_`` forces a
space after an element (it wins over a following ``+``). ``X_i`` attaches a
person-index variable, ``X_3`` a fixed person. Parenthesised alternations are
multiplied out into separate rules. A definition whose alternatives are all
single terminals is an inline alternative list rather than a rule.
"""

from __future__ import annotations

import enum
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Union

VIDE_NAMES = frozenset({"vide", "∅"})


class GrammarError(ValueError):
    pass


class GrammarSyntaxError(GrammarError):
    pass


class RecursionInGrammar(GrammarError):
    pass


class SymbolKind(enum.Enum):
    TERMINAL = "terminal"
    NONTERMINAL = "nonterminal"


class JoinOp(enum.Enum):
    SPACE = "space"
    CONCAT = "concat"
    NULL = "null"


@dataclass(frozen=True)
class GrammarSymbol:
    kind: SymbolKind
    name: str
    lexeme: str = ""

    @classmethod
    def nonterminal(cls, name: str) -> "GrammarSymbol":
        return cls(SymbolKind.NONTERMINAL, name)

    @classmethod
    def terminal(cls, lexeme: str) -> "GrammarSymbol":
        return cls(SymbolKind.TERMINAL, lexeme or "vide", lexeme)

    @property
    def is_terminal(self) -> bool:
        return self.kind is SymbolKind.TERMINAL


@dataclass(frozen=True)
class RuleElement:
    symbol: GrammarSymbol
    join_to_previous: JoinOp = JoinOp.SPACE
    person_index: Optional[str] = None

    @property
    def fixed_person(self) -> Optional[int]:
        if self.person_index is not None and self.person_index.isdigit():
            return int(self.person_index)
        return None

    @property
    def index_variable(self) -> Optional[str]:
        if self.person_index is not None and not self.person_index.isdigit():
            return self.person_index
        return None

    def __str__(self) -> str:
        name = self.symbol.name
        if self.person_index:
            name += "_" + self.person_index
        return name


@dataclass(frozen=True)
class ProductionRule:
    id: str
    lhs: str
    rhs: tuple[RuleElement, ...]
    constraints: tuple[tuple[str, str], ...] = ()
    domains: tuple[tuple[str, tuple[int, ...]], ...] = ()

    def __str__(self) -> str:
        parts = []
        for k, el in enumerate(self.rhs):
            if k and el.join_to_previous is JoinOp.CONCAT:
                parts.append("+")
            elif k:
                parts.append(" ")
            parts.append(str(el))
        text = f"{self.lhs} -> {''.join(parts)}"
        if self.constraints:
            text += " ; " + " ; ".join(f"{a}={b}" for a, b in self.constraints)
        return text

    def variable_classes(self) -> dict[str, str]:
        """Map each index variable to a canonical representative of its
        equality class."""
        parent: dict[str, str] = {}
        for el in self.rhs:
            var = el.index_variable
            if var is not None:
                parent.setdefault(var, var)
        for a, b in self.constraints:
            parent.setdefault(a, a)
            parent.setdefault(b, b)

        def find(x: str) -> str:
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b in self.constraints:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
        return {v: find(v) for v in parent}

    def domain_of(self, var: str) -> Optional[tuple[int, ...]]:
        for name, values in self.domains:
            if name == var:
                return values
        return None


@dataclass(frozen=True)
class Grammar:
    rules: tuple[ProductionRule, ...]
    start: str
    alternatives: dict[str, tuple[GrammarSymbol, ...]] = field(default_factory=dict)
    lexical_categories: frozenset[str] = frozenset()
    indexed: frozenset[str] = frozenset()

    @property
    def nonterminals(self) -> frozenset[str]:
        names = {r.lhs for r in self.rules}
        names.update(self.alternatives)
        names.update(self.lexical_categories)
        return frozenset(names)

    @property
    def symbols(self) -> frozenset[GrammarSymbol]:
        out = {GrammarSymbol.nonterminal(n) for n in self.nonterminals}
        for rule in self.rules:
            out.update(el.symbol for el in rule.rhs)
        for alts in self.alternatives.values():
            out.update(alts)
        return frozenset(out)

    def rules_for(self, name: str) -> tuple[ProductionRule, ...]:
        return self._by_lhs.get(name, ())

    def is_preterminal(self, name: str) -> bool:
        return name in self.alternatives or name in self.lexical_categories

    def rule(self, rule_id: str) -> ProductionRule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    @property
    def _by_lhs(self) -> dict[str, tuple[ProductionRule, ...]]:
        cached = self.__dict__.get("_by_lhs_cache")
        if cached is None:
            grouped: dict[str, list[ProductionRule]] = defaultdict(list)
            for r in self.rules:
                grouped[r.lhs].append(r)
            cached = {k: tuple(v) for k, v in grouped.items()}
            object.__setattr__(self, "_by_lhs_cache", cached)
        return cached

    def dependency_graph(self) -> dict[str, set[str]]:
        graph: dict[str, set[str]] = defaultdict(set)
        for r in self.rules:
            for el in r.rhs:
                if not el.symbol.is_terminal:
                    graph[r.lhs].add(el.symbol.name)
        return graph


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    subject: str = ""

    def __str__(self) -> str:
        return f"{self.code}: {self.message}"


def find_cycles(grammar: Grammar) -> list[list[str]]:
    """Return one representative cycle per back edge of the nonterminal graph."""
    graph = grammar.dependency_graph()
    WHITE, GREY, BLACK = 0, 1, 2
    colour: dict[str, int] = defaultdict(int)
    cycles: list[list[str]] = []
    stack: list[str] = []

    def visit(node: str) -> None:
        colour[node] = GREY
        stack.append(node)
        for nxt in sorted(graph.get(node, ())):
            if colour[nxt] == GREY:
                cycles.append(stack[stack.index(nxt):] + [nxt])
            elif colour[nxt] == WHITE:
                visit(nxt)
        stack.pop()
        colour[node] = BLACK

    for node in [r.lhs for r in grammar.rules]:
        if colour[node] == WHITE:
            visit(node)
    return cycles


def validate_grammar(grammar: Grammar) -> list[Diagnostic]:
    diags: list[Diagnostic] = []
    nts = grammar.nonterminals

    if grammar.start not in nts:
        diags.append(Diagnostic("unknown start", f"start symbol {grammar.start!r} is not declared", grammar.start))

    both = set(grammar.alternatives) & set(grammar.lexical_categories)
    for name in sorted(both):
        diags.append(Diagnostic("conflicting definition", f"{name!r} has inline alternatives and a lexical binding", name))
    for name in sorted({r.lhs for r in grammar.rules} & (set(grammar.alternatives) | set(grammar.lexical_categories))):
        diags.append(Diagnostic("conflicting definition", f"{name!r} has both production rules and alternatives", name))

    for name, alts in grammar.alternatives.items():
        if not alts:
            diags.append(Diagnostic("empty alternatives", f"{name!r} has no alternatives", name))
        for alt in alts:
            if not alt.is_terminal:
                diags.append(Diagnostic("bad alternative", f"alternative {alt.name!r} of {name!r} is not a terminal", name))

    undefined_seen: set[str] = set()
    for rule in grammar.rules:
        if not rule.rhs:
            diags.append(Diagnostic("empty rule", f"rule {rule.id} has an empty right-hand side", rule.id))
        var_uses: dict[str, int] = defaultdict(int)
        for el in rule.rhs:
            sym = el.symbol
            if sym.is_terminal:
                if el.person_index is not None:
                    diags.append(Diagnostic("bad person index", f"terminal {sym.name!r} in rule {rule.id} carries a person index", rule.id))
                continue
            if sym.name not in nts and sym.name not in undefined_seen:
                undefined_seen.add(sym.name)
                diags.append(Diagnostic("undefined symbol", f"{sym.name!r} (used in rule {rule.id}) has no rule, alternative list or lexical binding", sym.name))
            if el.person_index is not None:
                if sym.name not in grammar.indexed:
                    diags.append(Diagnostic("bad person index", f"{sym.name!r} in rule {rule.id} is not declared person-indexed", rule.id))
                elif not grammar.is_preterminal(sym.name):
                    diags.append(Diagnostic("bad person index", f"person-indexed {sym.name!r} in rule {rule.id} must be a preterminal", rule.id))
                if el.fixed_person is not None and el.fixed_person < 1:
                    diags.append(Diagnostic("bad person index", f"person {el.person_index} in rule {rule.id} is out of range", rule.id))
                if el.index_variable is not None:
                    var_uses[el.index_variable] += 1
        for a, b in rule.constraints:
            if a == b:
                diags.append(Diagnostic("constraint variable", f"constraint {a}={b} in rule {rule.id} relates a variable to itself", rule.id))
            for var in sorted({a, b}):
                if var_uses.get(var, 0) == 0:
                    diags.append(Diagnostic("constraint variable", f"constraint variable {var!r} in rule {rule.id} is not used by any element", rule.id))
        for var, _ in rule.domains:
            if var_uses.get(var, 0) == 0:
                diags.append(Diagnostic("constraint variable", f"domain given for unused variable {var!r} in rule {rule.id}", rule.id))

    for cycle in find_cycles(grammar):
        diags.append(Diagnostic("recursion detected", "nonterminal cycle " + " -> ".join(cycle), cycle[0]))
    return diags


# ---------------------------------------------------------------------------
# parsing

_NAME_RE = re.compile(r"[A-Za-z∅][A-Za-z0-9_]*")
_INDEX_RE = re.compile(r"^(?P<base>.+?)_(?P<index>[a-z]|[0-9]+)$")
_DOMAIN_RE = re.compile(r"^\s*([a-z](?:\s*,\s*[a-z])*)\s*=\s*([0-9]+(?:\s*,\s*[0-9]+)*)\s*$")
_EQUAL_RE = re.compile(r"^\s*([a-z])\s*=\s*([a-z])\s*$")


@dataclass
class _Atom:
    name: str
    index: Optional[str]
    space_after: bool


@dataclass
class _FlatElement:
    atom: _Atom
    sep_before: Optional[str]  # " ", "+" or None for the first element


class _RhsParser:
    """Recursive-descent parser for one right-hand side."""

    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, msg: str) -> GrammarSyntaxError:
        return GrammarSyntaxError(f"line {self.lineno}: {msg} in {self.text.strip()!r}")

    def skip_ws(self) -> bool:
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1
        return self.pos > start

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def parse(self) -> list[list[_FlatElement]]:
        alts = self.alternatives()
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.error(f"unexpected {self.peek()!r}")
        return alts

    def alternatives(self) -> list[list[_FlatElement]]:
        out = self.sequence()
        while True:
            self.skip_ws()
            if self.peek() != "|":
                return out
            self.pos += 1
            out.extend(self.sequence())

    def sequence(self) -> list[list[_FlatElement]]:
        self.skip_ws()
        results: list[list[_FlatElement]] = [[]]
        sep: Optional[str] = None
        while True:
            ch = self.peek()
            if ch in ("", "|", ")"):
                if sep == "+":
                    raise self.error("dangling '+'")
                break
            item = self.item()
            combined = []
            for prefix in results:
                for alt in item:
                    alt = [_FlatElement(alt[0].atom, sep if prefix else None)] + alt[1:] if alt else alt
                    combined.append(prefix + alt)
            results = combined
            self.skip_ws()
            if self.peek() == "+":
                self.pos += 1
                self.skip_ws()
                sep = "+"
            else:
                sep = " "
        if results == [[]]:
            raise self.error("empty alternative")
        return results

    def item(self) -> list[list[_FlatElement]]:
        if self.peek() == "(":
            self.pos += 1
            alts = self.alternatives()
            self.skip_ws()
            if self.peek() != ")":
                raise self.error("missing ')'")
            self.pos += 1
            return alts
        m = _NAME_RE.match(self.text, self.pos)
        if not m:
            raise self.error(f"unexpected {self.peek()!r}")
        self.pos = m.end()
        raw = m.group(0)
        space_after = raw.endswith("_") and len(raw) > 1
        if space_after:
            raw = raw.rstrip("_")
        index = None
        im = _INDEX_RE.match(raw)
        if im:
            raw, index = im.group("base"), im.group("index")
        return [[_FlatElement(_Atom(raw, index, space_after), None)]]


def _strip_comment(line: str) -> str:
    pos = line.find("#")
    return line if pos < 0 else line[:pos]


def parse_grammar(text: str) -> Grammar:
    """Parse the rule-file notation into a :class:`Grammar`.

    Syntax errors raise :class:`GrammarSyntaxError`; structural problems
    (undefined symbols, recursion, ...) are left to :func:`validate_grammar`.
    """
    start: Optional[str] = None
    indexed: set[str] = set()
    lexical: set[str] = set()
    definitions: list[tuple[int, str, list[list[_FlatElement]], list[str]]] = []

    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw_line).strip()
        if not line:
            continue
        if line.startswith("@"):
            directive, *args = line[1:].split()
            if directive == "start":
                if len(args) != 1:
                    raise GrammarSyntaxError(f"line {lineno}: @start takes one symbol")
                start = args[0]
            elif directive == "indexed":
                indexed.update(args)
            elif directive == "lexical":
                lexical.update(args)
            else:
                raise GrammarSyntaxError(f"line {lineno}: unknown directive @{directive}")
            continue
        if "->" not in line:
            raise GrammarSyntaxError(f"line {lineno}: expected 'LHS -> RHS'")
        lhs, rhs = (part.strip() for part in line.split("->", 1))
        if not _NAME_RE.fullmatch(lhs):
            raise GrammarSyntaxError(f"line {lineno}: bad left-hand side {lhs!r}")
        rhs, *constraint_parts = rhs.split(";")
        alts = _RhsParser(rhs, lineno).parse()
        definitions.append((lineno, lhs, alts, constraint_parts))

    nonterminals = {lhs for _, lhs, _, _ in definitions} | lexical

    def is_nonterminal(name: str) -> bool:
        return name in nonterminals or (name[0].isupper() and name not in VIDE_NAMES)

    rules: list[ProductionRule] = []
    alternatives: dict[str, list[GrammarSymbol]] = {}
    counters: dict[str, int] = defaultdict(int)

    for lineno, lhs, alts, constraint_parts in definitions:
        simple = all(
            len(alt) == 1 and alt[0].atom.index is None and not is_nonterminal(alt[0].atom.name)
            for alt in alts
        )
        if simple and not constraint_parts:
            alternatives.setdefault(lhs, []).extend(
                GrammarSymbol.terminal("" if a[0].atom.name in VIDE_NAMES else a[0].atom.name)
                for a in alts
            )
            continue

        constraints: list[tuple[str, str]] = []
        domains: list[tuple[str, tuple[int, ...]]] = []
        for part in constraint_parts:
            if not part.strip():
                continue
            if m := _EQUAL_RE.match(part):
                constraints.append((m.group(1), m.group(2)))
            elif m := _DOMAIN_RE.match(part):
                values = tuple(int(v) for v in m.group(2).split(","))
                for var in m.group(1).split(","):
                    domains.append((var.strip(), values))
            else:
                raise GrammarSyntaxError(f"line {lineno}: cannot parse constraint {part.strip()!r}")

        for alt in alts:
            elements = []
            prev: Optional[_Atom] = None
            for flat in alt:
                atom = flat.atom
                if prev is None:
                    join = JoinOp.SPACE
                elif prev.space_after or flat.sep_before != "+":
                    join = JoinOp.SPACE
                else:
                    join = JoinOp.CONCAT
                if is_nonterminal(atom.name):
                    symbol = GrammarSymbol.nonterminal(atom.name)
                    index = atom.index
                else:
                    lexeme = "" if atom.name in VIDE_NAMES else atom.name
                    if atom.index is not None:
                        lexeme = f"{atom.name}_{atom.index}"
                    symbol = GrammarSymbol.terminal(lexeme)
                    index = None
                elements.append(RuleElement(symbol, join, index))
                prev = atom
            counters[lhs] += 1
            rules.append(
                ProductionRule(
                    id=f"{lhs}.{counters[lhs]}",
                    lhs=lhs,
                    rhs=tuple(elements),
                    constraints=tuple(constraints),
                    domains=tuple(domains),
                )
            )

    if start is None:
        if not definitions:
            raise GrammarSyntaxError("grammar has no rules")
        start = definitions[0][1]
    return Grammar(
        rules=tuple(rules),
        start=start,
        alternatives={k: tuple(v) for k, v in alternatives.items()},
        lexical_categories=frozenset(lexical),
        indexed=frozenset(indexed),
    )


def load_grammar(source: Union[str, Path]) -> Grammar:
    with open(source, encoding="utf-8") as fh:
        return parse_grammar(fh.read())


def bundled_grammar(name: str = "mgnaw0") -> Grammar:
    """Load a shipped grammar: ``"mgnaw0"`` or ``"mgnaw0_extended"``."""
    from .lexicon import data_path

    return load_grammar(data_path(f"{name}.cfg"))


def make_grammar(
    rules: Iterable[ProductionRule],
    start: str,
    alternatives: Optional[dict[str, Iterable[str]]] = None,
    lexical: Iterable[str] = (),
    indexed: Iterable[str] = (),
) -> Grammar:
    """Build a grammar in code; alternatives are given as plain strings."""
    alts = {
        k: tuple(GrammarSymbol.terminal("" if s in VIDE_NAMES else s) for s in v)
        for k, v in (alternatives or {}).items()
    }
    return Grammar(tuple(rules), start, alts, frozenset(lexical), frozenset(indexed))
