"""Command-line entry point.

Subcommands: parse, eval, generate, compile-tm, simulate-tm, verify,
dataset.  All outputs are deterministic functions of the flags, input
files, and the seed (flag or CRASP_FORGE_SEED).  Exit codes: 0 success,
2 usage, 3 parse/format errors, 4 verification mismatch, 5 budget
exhausted, 6 I/O failure, 7 generation fault.
"""
from __future__ import annotations

import argparse
import json
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from itertools import product
from typing import List, Optional

from . import corpus
from .cot import GenerationError, annotate, generate
from .dsl import ParseError, parse_cot_program, parse_program, render_cot_program, render_program
from .evaluator import EvalError, evaluate
from .tm import TmFormatError, load_tm, simulate, value_change_log
from .tmcompile import compile_tm, verify_one
from .tokens import coerce_input, render_tokens

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_MISMATCH = 4
EXIT_BUDGET = 5
EXIT_IO = 6
EXIT_GENERATION = 7

SCHEMA = "crasp-forge.report/1"


def _err(msg: str) -> None:
    print(f"crasp-forge: error: {msg}", file=sys.stderr)


def _read_text(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("CRASP_FORGE_SEED")
    return int(env) if env else 0


def _emit_header(args) -> None:
    if args.format == "structured":
        print(json.dumps({"schema": SCHEMA}))


def _load_any_program(text: str):
    """A CoT program if the text declares outputs or an input alphabet."""
    lines = [l.strip() for l in text.splitlines()]
    is_cot = any(l.startswith(("OUTPUT(", "OUTPUT_SIGNPOST(", "#input")) for l in lines)
    if is_cot:
        return parse_cot_program(text), True
    return parse_program(text), False


# --- subcommands ----------------------------------------------------------------

def cmd_parse(args) -> int:
    prog, is_cot = _load_any_program(_read_text(args.program))
    text = render_cot_program(prog) if is_cot else render_program(prog)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_eval(args) -> int:
    prog, is_cot = _load_any_program(_read_text(args.program))
    base = prog.base if is_cot else prog
    toks = coerce_input(args.input, base.alphabet)
    table = evaluate(base, toks)
    names = args.defs.split(",") if args.defs else list(table.names)
    _emit_header(args)
    for pos in range(1, len(toks) + 1):
        row = {n: table.value(n, pos) for n in names}
        if args.format == "structured":
            print(json.dumps({"position": pos, "values": row}, sort_keys=True))
        else:
            cells = " ".join(f"{n}={row[n]}" for n in names)
            print(f"{pos}: {cells}")
    return EXIT_OK


def cmd_generate(args) -> int:
    cp, is_cot = _load_any_program(_read_text(args.program))
    if not is_cot:
        _err("generate needs a CoT program (with OUTPUT clauses)")
        return EXIT_PARSE
    toks = coerce_input(args.input, cp.base.alphabet)
    if args.annotate:
        toks = annotate([str(t) for t in toks], args.signpost_start)
    result = generate(cp, toks, args.budget)
    _emit_header(args)
    if args.format == "structured":
        print(json.dumps({
            "trace": render_tokens(result.trace),
            "completed": result.completed,
            "answer": render_tokens(result.answer) if result.answer is not None else None,
            "steps": result.steps,
        }, sort_keys=True))
    else:
        print(render_tokens(result.trace))
        if not args.quiet and result.completed:
            print(f"answer: {render_tokens(result.answer)}", file=sys.stderr)
    return EXIT_OK if result.completed else EXIT_BUDGET


def cmd_compile_tm(args) -> int:
    m = load_tm(_read_text(args.machine))
    cp = compile_tm(m)
    text = render_cot_program(cp)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
        if not args.quiet:
            print(f"wrote {args.out} ({len(cp.base.defs)} definitions)")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate_tm(args) -> int:
    m = load_tm(_read_text(args.machine))
    r = simulate(m, list(args.input), args.max_steps)
    _emit_header(args)
    if args.format == "structured":
        body = {"halted": r.halted, "steps": r.steps, "output": r.output}
        if args.log:
            body["events"] = [
                [{"step": s, "cell": c, "old": a, "new": b} for s, c, a, b in tape]
                for tape in value_change_log(r)]
        print(json.dumps(body, sort_keys=True))
    else:
        print(f"halted: {r.halted}  steps: {r.steps}  output: {r.output!r}")
        if args.log:
            for t, tape in enumerate(value_change_log(r), start=1):
                for s, c, a, b in tape:
                    print(f"  tape {t} step {s}: cell {c} {a}->{b}")
    return EXIT_OK


def _verify_inputs(args, m) -> List[str]:
    if args.input:
        return list(args.input)
    sigma = m.input_alphabet
    inputs: List[str] = []
    if args.exhaustive_len is not None:
        inputs.append("")
        for n in range(1, args.exhaustive_len + 1):
            inputs.extend("".join(p) for p in product(sigma, repeat=n))
    if args.random:
        rng = random.Random(_seed(args))
        for _ in range(args.random):
            n = rng.randint(0, args.max_len)
            inputs.append("".join(rng.choice(sigma) for _ in range(n)))
    if not inputs:
        raise ValueError("no inputs: use --input, --exhaustive-len, or --random")
    return inputs


def _verify_worker(payload):
    m, cp, w, budget_factor, max_oracle_steps = payload
    budget_fn = None
    if budget_factor is not None:
        budget_fn = lambda wl, n: budget_factor * m.n_tapes * (n + wl + 2) + 64
    return verify_one(m, cp, w, max_oracle_steps, budget_fn)


def cmd_verify(args) -> int:
    m = load_tm(_read_text(args.machine))
    try:
        inputs = _verify_inputs(args, m)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_USAGE
    cp = compile_tm(m)
    payloads = [(m, cp, w, args.budget_factor, args.max_oracle_steps)
                for w in inputs]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            entries = list(pool.map(_verify_worker, payloads, chunksize=8))
    else:
        entries = [_verify_worker(p) for p in payloads]
    _emit_header(args)
    bad = 0
    for e in entries:
        if args.format == "structured":
            print(json.dumps({"input": e.input, "ok": e.ok,
                              "halted": e.oracle_halted, "steps": e.oracle_steps,
                              "checks": e.checks, "detail": e.detail},
                             sort_keys=True))
        elif not e.ok:
            print(f"MISMATCH {e.failure()}")
        if not e.ok:
            bad += 1
    if args.format != "structured" and not args.quiet:
        print(f"{len(entries) - bad}/{len(entries)} inputs OK")
    return EXIT_OK if bad == 0 else EXIT_MISMATCH


def cmd_dataset(args) -> int:
    cfg = corpus.TaskConfig(
        task=args.task, fmt=args.fmt, min_len=args.min_len,
        max_len=args.max_len, max_test_len=args.max_test_len,
        seed=_seed(args), repetitive_ratio=args.repetitive_ratio,
        repeat_prob=args.repeat_prob, split=args.split)
    cfg.validate()
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        summary = corpus.gen_dataset(cfg, args.count, sink, jobs=args.jobs,
                                     plain=args.plain)
    finally:
        if args.out:
            sink.close()
    if not args.quiet:
        print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return EXIT_OK


# --- wiring ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crasp-forge", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("text", "structured"), default="text")
        p.add_argument("--quiet", action="store_true")
        p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("parse", help="parse a program and print its canonical form")
    p.add_argument("--program", required=True)
    common(p)
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("eval", help="evaluate a program over a token sequence")
    p.add_argument("--program", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--defs", default=None, help="comma-separated definition names")
    common(p)
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("generate", help="run autoregressive CoT generation")
    p.add_argument("--program", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--annotate", action="store_true",
                   help="interleave the input with signpost tokens first")
    p.add_argument("--signpost-start", type=int, default=1)
    common(p)
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("compile-tm", help="compile a machine to a CoT program")
    p.add_argument("--machine", required=True)
    p.add_argument("--out", default=None)
    common(p)
    p.set_defaults(fn=cmd_compile_tm)

    p = sub.add_parser("simulate-tm", help="run the direct machine simulator")
    p.add_argument("--machine", required=True)
    p.add_argument("--input", default="")
    p.add_argument("--max-steps", type=int, default=20000)
    p.add_argument("--log", action="store_true", help="print value-change events")
    common(p)
    p.set_defaults(fn=cmd_simulate_tm)

    p = sub.add_parser("verify", help="check the compiled program against the simulator")
    p.add_argument("--machine", required=True)
    p.add_argument("--input", action="append", default=None)
    p.add_argument("--exhaustive-len", type=int, default=None)
    p.add_argument("--random", type=int, default=0)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--budget-factor", type=int, default=None)
    p.add_argument("--max-oracle-steps", type=int, default=20000)
    p.add_argument("--jobs", type=int, default=1)
    common(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("dataset", help="generate a task corpus")
    p.add_argument("--task", required=True, choices=sorted(corpus.VALID_FORMATS))
    p.add_argument("--format", dest="fmt", required=True,
                   choices=(corpus.NAIVE, corpus.VALUE_CHANGE, corpus.SIGNPOST,
                            corpus.SIGNPOST_TAPE, corpus.SIGNPOST_VALUE_CHANGE))
    p.add_argument("--min-len", type=int, required=True)
    p.add_argument("--max-len", type=int, required=True)
    p.add_argument("--max-test-len", type=int, required=True)
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--repetitive-ratio", type=float, default=0.0)
    p.add_argument("--repeat-prob", type=float, default=0.9)
    p.add_argument("--split", choices=("train", "test"), default="train")
    p.add_argument("--plain", action="store_true",
                   help="emit 'PROMPT ### trace TRACE' lines instead of JSON")
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(fn=cmd_dataset)
    return ap


def run(argv: Optional[List[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.fn(args)
    except (ParseError, TmFormatError, corpus.CorpusError, EvalError) as exc:
        _err(str(exc))
        return EXIT_PARSE
    except GenerationError as exc:
        _err(f"generation fault at step {exc.step}: {exc}")
        return EXIT_GENERATION
    except OSError as exc:
        _err(str(exc))
        return EXIT_IO


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
