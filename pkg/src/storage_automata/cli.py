"""Command-line front end: ``storage-automata <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
import warnings
from typing import Sequence

from . import approx, parse, transform
from .automaton import RunBudget, WeightedAutomaton, fmt_word, recognizes, runs_on, unweighted, weight_of_word
from .fileformat import FormatError, dumps, example_names, example_text, load_automaton, load_example
from .semiring import BOOLEAN, COUNTING, TROPICAL, SaturationWarning, axiom_violations, order_violations
from .storage import StorageError

EXIT_OK, EXIT_NO, EXIT_PARTIAL, EXIT_ERROR = 0, 1, 2, 3


def read_word(text: str, tokens: bool) -> tuple:
    return tuple(text.split()) if tokens else tuple(text)


def fmt_config(m, cfg) -> str:
    return f"({cfg.state}, {unweighted(m).storage.fmt(cfg.storage)}, {fmt_word(cfg.remaining)})"


def _weight(m, v):
    return m.semiring.encode(v) if isinstance(m, WeightedAutomaton) else None


def _run_json(m, run, trace: bool) -> dict:
    d = {"transitions": list(run.transitions)}
    if isinstance(m, WeightedAutomaton):
        d["weight"] = _weight(m, run.weight)
    if trace:
        d["trace"] = [fmt_config(m, c) for c in run.trace]
    return d


def _print_run(m, run, trace: bool, prefix: str = "") -> None:
    head = prefix
    if isinstance(m, WeightedAutomaton):
        head += f"{_weight(m, run.weight)}\t"
    print(head + " ".join(run.transitions))
    if trace:
        for cfg in run.trace:
            print("    " + fmt_config(m, cfg))


def _emit(args, payload: dict, text_lines: Sequence[str] = ()) -> None:
    if args.format == "json":
        print(json.dumps(payload, ensure_ascii=False))
    else:
        for line in text_lines:
            print(line)


def _budget(args) -> RunBudget:
    return RunBudget(max_steps=args.max_steps, max_size=args.max_size)


# --- commands --------------------------------------------------------------------------------------


def cmd_validate(args) -> int:
    m = load_automaton(args.file)
    aut = unweighted(m)
    kind = f"weighted over {m.semiring.name}" if isinstance(m, WeightedAutomaton) else "unweighted"
    _emit(
        args,
        {"valid": True, "states": len(aut.states), "transitions": len(aut.transitions), "storage": aut.storage.kind},
        [f"OK: {len(aut.states)} states, {len(aut.transitions)} transitions, storage {aut.storage.kind}, {kind}"],
    )
    return EXIT_OK


def cmd_recognize(args) -> int:
    m = load_automaton(args.file)
    w = read_word(args.word, args.tokens)
    res = recognizes(m, w, _budget(args))
    if res.accepted:
        verdict = "ACCEPT"
    else:
        verdict = "REJECT" if res.exact else "UNKNOWN"
    payload = {"verdict": verdict, "exact": res.exact}
    if res.witness is not None:
        payload["witness"] = _run_json(m, res.witness, True)
    if args.format == "json":
        _emit(args, payload)
    else:
        print(verdict if res.exact or res.accepted else f"{verdict} (search budget exhausted)")
        if res.witness is not None:
            _print_run(m, res.witness, True, "witness: ")
    if res.accepted:
        return EXIT_OK
    return EXIT_NO if res.exact else EXIT_PARTIAL


def cmd_weight(args) -> int:
    m = load_automaton(args.file)
    if not isinstance(m, WeightedAutomaton):
        raise FormatError("weight needs a weighted automaton (a file with 'semiring')")
    ww = weight_of_word(m, read_word(args.word, args.tokens), _budget(args), method=args.method)
    value = _weight(m, ww.value)
    _emit(args, {"weight": value, "exact": ww.exact}, [f"{value}" + ("" if ww.exact else "\t(truncated)")])
    return EXIT_OK if ww.exact else EXIT_PARTIAL


def cmd_runs(args) -> int:
    m = load_automaton(args.file)
    rs = runs_on(m, read_word(args.word, args.tokens), _budget(args))
    if args.format == "json":
        _emit(args, {"runs": [_run_json(m, r, args.trace) for r in rs], "truncated": rs.truncated})
    else:
        for i, r in enumerate(rs, 1):
            _print_run(m, r, args.trace, f"{i}\t")
        if rs.truncated:
            print("(search truncated by the step budget)")
    if rs.truncated:
        return EXIT_PARTIAL
    return EXIT_OK if len(rs) else EXIT_NO


def _write(args, m) -> None:
    text = dumps(m)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def cmd_transform(args) -> int:
    m = load_automaton(args.file)
    if args.kind == "pf":
        out = transform.predicate_free(m)
    elif args.kind == "det-powerset":
        out = transform.determinize_powerset(m)
    elif args.kind == "det-bounded":
        if args.bound is None:
            raise FormatError("det-bounded needs --bound")
        out = transform.determinize_bounded(m, args.bound)
    else:
        out = transform.to_fsa(m, args.cap).to_automaton()
    _write(args, out)
    return EXIT_OK


def _strategy(args, m) -> approx.ApproximationStrategy:
    return approx.parse_chain([args.strategy] + list(args.then or []), unweighted(m).storage)


def cmd_approx(args) -> int:
    m = load_automaton(args.file)
    _write(args, approx.approximate_automaton(m, _strategy(args, m)))
    return EXIT_OK


def cmd_nbest(args) -> int:
    m = load_automaton(args.file)
    if not isinstance(m, WeightedAutomaton):
        raise FormatError("nbest needs a weighted automaton (a file with 'semiring')")
    limits = parse.SearchLimits(
        max_run_length=args.max_run_length, max_expansions=args.max_expansions, max_enumerated=args.max_enumerated
    )
    res = parse.coarse_to_fine_nbest(m, _strategy(args, m), args.n, read_word(args.word, args.tokens), limits, args.stop_rule)
    if args.format == "json":
        _emit(
            args,
            {
                "runs": [_run_json(m, r, args.trace) for r in res.runs],
                "certified": res.certified,
                "coarse_runs": len(res.coarse_popped),
                "candidates": res.candidates,
            },
        )
    else:
        for i, r in enumerate(res.runs, 1):
            _print_run(m, r, args.trace, f"{i}\t")
        if not res.certified:
            print("(limits reached: not certified n-best)")
    if not res.certified:
        return EXIT_PARTIAL
    return EXIT_OK if res.runs else EXIT_NO


def cmd_examples(args) -> int:
    if args.name:
        sys.stdout.write(example_text(args.name))
        return EXIT_OK
    for name in example_names():
        aut = unweighted(load_example(name))
        print(f"{name}\t{aut.storage.kind}\t{len(aut.transitions)} transitions")
    return EXIT_OK


def cmd_check(args) -> int:
    """Property checks on sampled data: semiring laws and strategy closed forms."""
    rng = random.Random(args.seed)
    warnings.simplefilter("ignore", SaturationWarning)
    failures = []
    for sr in (BOOLEAN, TROPICAL, COUNTING):
        triples = [(sr.sample(rng), sr.sample(rng), sr.sample(rng)) for _ in range(args.samples)]
        bad = axiom_violations(sr, triples) + order_violations(sr, triples)
        print(f"semiring {sr.name}: {len(bad)} violations on {args.samples} triples")
        failures += bad
    for name in example_names():
        storage = unweighted(load_example(name)).storage
        for text in ("top", "top-k:2", "uniq", "bd-k:2", "count", "eo", "cf"):
            try:
                A = approx.parse_strategy(text, storage)
            except StorageError:
                continue
            bad = approx.strategy_violations(A, depth=4, limit=500)
            print(f"strategy {text} on {name}: {len(bad)} violations")
            failures += bad
    for line in failures[:20]:
        print("  " + line)
    return EXIT_OK if not failures else EXIT_NO


# --- parser ----------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    def global_flags(parser, default):
        # accepted before or after the command; subcommand copies must not reset the values
        parser.add_argument("--format", choices=("text", "json"), default=default("text"))
        parser.add_argument("--tokens", action="store_true", default=default(False), help="words are whitespace-separated symbols")
        parser.add_argument("-v", "--verbose", action="store_true", default=default(False))

    common = argparse.ArgumentParser(add_help=False)
    global_flags(common, lambda v: argparse.SUPPRESS)
    p = argparse.ArgumentParser(
        prog="storage-automata",
        description="Weighted automata with data storage: recognition, transformation, approximation, n-best parsing.",
    )
    global_flags(p, lambda v: v)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_text, file=True):
        sp = sub.add_parser(name, help=help_text, parents=[common])
        if file:
            sp.add_argument("file", help="automaton JSON file, or the name of a bundled example")
        sp.set_defaults(fn=fn)
        return sp

    def word_args(sp):
        sp.add_argument("--word", "-w", required=True, help='input word ("" for the empty word)')
        sp.add_argument("--max-steps", type=int, default=None, help="run length budget (default 10|w|+100)")
        sp.add_argument("--max-size", type=int, default=None, help="only consider storage configurations up to this size")

    add("validate", cmd_validate, "load and validate an automaton")
    sp = add("recognize", cmd_recognize, "decide membership; exit 1 on REJECT")
    word_args(sp)
    sp = add("weight", cmd_weight, "weight of a word: semiring sum over its runs")
    word_args(sp)
    sp.add_argument("--method", choices=("auto", "runs", "best"), default="auto")
    sp = add("runs", cmd_runs, "list all runs on a word")
    word_args(sp)
    sp.add_argument("--trace", action="store_true")

    sp = add("transform", cmd_transform, "equivalence constructions", file=False)
    sp.add_argument("kind", choices=("pf", "det-powerset", "det-bounded", "to-fsa"))
    sp.add_argument("file", help="automaton JSON file, or the name of a bundled example")
    sp.add_argument("--bound", type=int)
    sp.add_argument("--cap", type=int, default=10_000)
    sp.add_argument("-o", "--output")

    def strategy_args(sp):
        sp.add_argument("--strategy", required=True, help="top|top-k:K|uniq|merge:FILE|bd-k:K|incomp-k:FILE,K|eo|count|cf")
        sp.add_argument("--then", action="append", help="compose with a further strategy on the previous target")

    sp = add("approx", cmd_approx, "approximate an automaton")
    strategy_args(sp)
    sp.add_argument("-o", "--output")

    sp = add("nbest", cmd_nbest, "coarse-to-fine n-best runs on a word")
    sp.add_argument("--word", "-w", required=True)
    sp.add_argument("-n", type=int, default=1)
    strategy_args(sp)
    sp.add_argument("--max-expansions", type=int, default=1_000_000)
    sp.add_argument("--max-run-length", type=int, default=None)
    sp.add_argument("--max-enumerated", type=int, default=None)
    sp.add_argument("--stop-rule", choices=("printed", "nth"), default="printed")
    sp.add_argument("--trace", action="store_true")

    sp = add("examples", cmd_examples, "list bundled examples or print one", file=False)
    sp.add_argument("name", nargs="?")

    sp = add("check", cmd_check, "run sampled property checks", file=False)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--samples", type=int, default=1000)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.fn(args)
    except (FormatError, StorageError, ValueError, TypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
