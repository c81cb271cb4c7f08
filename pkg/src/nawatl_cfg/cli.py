"""Command-line entry point: ``nawatl-cfg <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import sys
from pathlib import Path
from typing import Iterator, Optional, Sequence, TextIO

from .corpus import (
    NormalizationError,
    augmentation_ratios,
    compute_stats,
    load_rules,
    merge_to,
    normalize,
)
from .engine import (
    count_symbolic,
    enumerate_sentences,
    reconciliation_note,
    sample,
)
from .filtering import FilterPipeline, RejectionLog
from .grammar import GrammarError, load_grammar, validate_grammar
from .lexicon import LexiconError, data_path, load_kb
from .similarity import (
    DEFAULT_STOPWORDS,
    evaluate_suite,
    leave_one_out_report,
    load_suite,
    load_vectors,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
DEFAULT_SEED = 0
VERIFY_BOUND = 100_000


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@contextlib.contextmanager
def _output(path: Optional[str]) -> Iterator[TextIO]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            yield fh


def _read_lines(path: str) -> Iterator[str]:
    if path == "-":
        yield from sys.stdin
        return
    with open(path, encoding="utf-8", errors="strict") as fh:
        yield from fh


def _existing(path: str) -> str:
    if path != "-" and not Path(path).is_file():
        raise DataError(f"no such file: {path}")
    return path


def _load_inputs(args):
    grammar_path = _existing(args.grammar or str(data_path("mgnaw0.cfg")))
    kb_path = _existing(args.kb or str(data_path("full.tsv")))
    grammar = load_grammar(grammar_path)
    diags = validate_grammar(grammar)
    if diags:
        raise DataError("invalid grammar:\n  " + "\n  ".join(map(str, diags)))
    kb = load_kb(kb_path)
    missing = [c for c in sorted(grammar.lexical_categories) if not kb.entries_for(c)]
    if missing and not getattr(args, "allow_empty", False):
        print(f"warning: no knowledge-base entries for {', '.join(missing)}", file=sys.stderr)
    return grammar, kb


def _pipeline(spec: Optional[str]) -> Optional[FilterPipeline]:
    if spec is None or spec.strip().lower() in ("", "none"):
        return None
    names = [s.strip() for s in spec.split(",") if s.strip()]
    try:
        return FilterPipeline.from_names(names)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _emit(report_text: str, record: str, fmt: str, stream: TextIO) -> None:
    print(record if fmt == "machine" else report_text, file=stream)


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    grammar, kb = _load_inputs(args)
    pipeline = _pipeline(args.filters)
    with contextlib.ExitStack() as stack:
        out = stack.enter_context(_output(args.out))
        active = pipeline
        if pipeline is not None and args.rejections:
            log = stack.enter_context(open(args.rejections, "w", encoding="utf-8"))
            log.write("sentence\trejecting_filter\treason\n")
            active = RejectionLog(pipeline, log)
        if args.sample is not None:
            sentences = sample(grammar, kb, args.seed, args.sample, active, max_retries=args.max_retries)
            for s in sentences:
                out.write(s.text + "\n")
            report = count_symbolic(grammar, kb)
            _emit(report.render() + f"\nsampled: {len(sentences)} (seed {args.seed})",
                  report.to_record(), args.format, sys.stderr)
            return EXIT_OK
        report = enumerate_sentences(
            grammar, kb, active, sink=lambda s: out.write(s.text + "\n"), dedup=args.dedup
        )
    text = report.render()
    if report.filtered_count is not None and pipeline is not None:
        text += "\n" + reconciliation_note(report)
    _emit(text, report.to_record(), args.format, sys.stderr)
    return EXIT_OK


def cmd_count(args) -> int:
    grammar, kb = _load_inputs(args)
    report = count_symbolic(grammar, kb)
    lines = [report.render()]
    ok = True
    if args.verify:
        if report.raw_count > args.bound:
            lines.append(f"verify skipped: raw_count {report.raw_count} exceeds bound {args.bound}")
        else:
            enumerated = enumerate_sentences(grammar, kb)
            ok = (
                enumerated.raw_count == report.raw_count
                and enumerated.per_rule_breakdown == report.per_rule_breakdown
            )
            lines.append(
                "symbolic == enumerated" if ok
                else f"MISMATCH: symbolic {report.raw_count} != enumerated {enumerated.raw_count}"
            )
    _emit("\n".join(lines), report.to_record(), args.format, sys.stdout)
    return EXIT_OK if ok else EXIT_DATA


def cmd_normalize(args) -> int:
    rules = load_rules(_existing(args.rules)) if args.rules else load_rules()
    with _output(args.out) as out:
        for path in args.inputs or ["-"]:
            for line in _read_lines(_existing(path)):
                out.write(normalize(line.rstrip("\r\n"), rules) + "\n")
    return EXIT_OK


def cmd_merge(args) -> int:
    rules = load_rules(_existing(args.rules)) if args.rules else load_rules()
    with _output(args.out) as out:
        result = merge_to(
            _read_lines(_existing(args.authentic)), _read_lines(_existing(args.artificial)), out, rules
        )
    merged = result.merged
    lines = [
        result.authentic.render("authentic"),
        result.artificial.render("artificial").split("\n", 1)[1],
        merged.render("merged").split("\n", 1)[1],
    ]
    record = {
        "authentic": json.loads(result.authentic.to_record()),
        "artificial": json.loads(result.artificial.to_record()),
        "merged": json.loads(merged.to_record()),
    }
    if result.authentic.tokens and result.authentic.sentences:
        ratios = augmentation_ratios(result.authentic, result.artificial)
        lines.append(ratios.render())
        record["ratios"] = json.loads(ratios.to_record())
    _emit("\n".join(lines), json.dumps(record, separators=(",", ":")), args.format, sys.stderr)
    return EXIT_OK


def cmd_stats(args) -> int:
    for path in args.inputs:
        stats = compute_stats(_read_lines(_existing(path)))
        if args.format == "machine":
            print(stats.to_record())
        elif args.table:
            print(stats.render(Path(path).stem))
        else:
            print(stats.row())
    return EXIT_OK


def cmd_eval(args) -> int:
    stopwords = DEFAULT_STOPWORDS
    if args.stopwords is not None:
        stopwords = frozenset(w.strip() for w in args.stopwords.split(",") if w.strip())
    suite = load_suite(_existing(args.suite), stopwords)
    tables = {Path(p).name: load_vectors(_existing(p)) for p in args.vectors}
    rules = load_rules(_existing(args.rules)) if args.rules else None
    first_name, first = next(iter(tables.items()))
    score = evaluate_suite(suite, first, rules)
    _emit(score.render(), score.to_record(), args.format, sys.stdout)
    if args.leave_one_out:
        report = leave_one_out_report(suite, tables, rules)
        _emit(report.render(), report.to_record(), args.format, sys.stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nawatl-cfg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def grammar_args(p):
        p.add_argument("--grammar", help="grammar file (default: bundled mgnaw0.cfg)")
        p.add_argument("--kb", help="knowledge-base TSV (default: bundled full.tsv)")
        p.add_argument("--format", choices=("text", "machine"), default="text")

    p = sub.add_parser("generate", help="enumerate or sample sentences")
    grammar_args(p)
    p.add_argument("--filters", default="animacy,no_repeat",
                   help="comma-separated filter names, or 'none' (default: animacy,no_repeat)")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--sample", type=int, metavar="N", help="draw N sentences instead of enumerating")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--max-retries", type=int, default=10_000)
    p.add_argument("--dedup", action="store_true", help="drop repeated surface strings")
    p.add_argument("--rejections", help="write rejected sentences as TSV")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("count", help="count the sentence universe symbolically")
    grammar_args(p)
    p.add_argument("--verify", action="store_true", help="cross-check against enumeration")
    p.add_argument("--bound", type=int, default=VERIFY_BOUND)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("normalize", help="unify spelling of one-sentence-per-line text")
    p.add_argument("inputs", nargs="*")
    p.add_argument("--rules", help="rule-table TSV (default: bundled orthography.tsv)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("merge", help="normalize and concatenate authentic + artificial corpora")
    p.add_argument("authentic")
    p.add_argument("artificial")
    p.add_argument("--rules")
    p.add_argument("--out")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("stats", help="sentences, tokens, types, tokens per sentence")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--table", action="store_true", help="aligned table instead of a bare row")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="score embeddings on a ranking-task suite")
    p.add_argument("--vectors", required=True, action="append",
                   help="vector file; repeat to compare variants")
    p.add_argument("--suite", required=True)
    p.add_argument("--stopwords", help="comma-separated stopwords (default: iwan,in,tlen,ipan)")
    p.add_argument("--rules", help="normalize sentences with this rule table first")
    p.add_argument("--leave-one-out", action="store_true")
    p.add_argument("--format", choices=("text", "machine"), default="text")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, GrammarError, LexiconError, NormalizationError, ValueError,
            UnicodeDecodeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
