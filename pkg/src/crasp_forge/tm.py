"""Multi-tape deterministic Turing machines: loading and direct simulation.

Tapes are one-sided, indexed from 1; a left move at cell 1 stays at cell 1.
The input occupies cells 1..|w| of tape 1 and every other cell of every
tape is blank.  The machine output is the final nonblank prefix of the
designated output tape.  The simulator is the ground-truth oracle the
compiler is verified against.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

L, R, S = "L", "R", "S"


class TmFormatError(ValueError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.line = line


@dataclass(frozen=True)
class Rule:
    state: str
    reads: Tuple[str, ...]
    new_state: str
    writes: Tuple[Tuple[str, str], ...]  # (symbol, direction) per tape


@dataclass
class TmSpec:
    states: Tuple[str, ...]
    input_alphabet: Tuple[str, ...]
    tape_alphabet: Tuple[str, ...]
    blank: str
    start: str
    halting: Tuple[str, ...]
    n_tapes: int
    output_tape: int
    rules: Tuple[Rule, ...]
    delta: Dict[Tuple[str, Tuple[str, ...]], Rule] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self.delta:
            self.delta = {(r.state, r.reads): r for r in self.rules}


@dataclass(frozen=True)
class StepRecord:
    state: str
    heads: Tuple[int, ...]
    reads: Tuple[str, ...]
    events: Tuple[Optional[Tuple[str, str]], ...]  # (old, new) per tape, None = keep
    new_state: str
    new_heads: Tuple[int, ...]


@dataclass
class RunResult:
    halted: bool
    steps: int
    output: Optional[str]
    step_log: Tuple[StepRecord, ...]
    final_state: str
    final_heads: Tuple[int, ...]
    tapes: Tuple[Dict[int, str], ...]

    def configs(self) -> List[Tuple[str, Tuple[int, ...]]]:
        """States and head vectors after 0..N steps (N+1 entries)."""
        out = [(r.state, r.heads) for r in self.step_log]
        out.append((self.final_state, self.final_heads))
        return out


_HEADERS = ("states", "input", "tape", "blank", "start", "halt", "tapes", "output_tape")
_RULE_RE = re.compile(
    r"^(\S+)\s*,\s*\(([^()]*)\)\s*->\s*(\S+)\s*,\s*(.+)$")
_WRITE_RE = re.compile(r"\(\s*([^\s(),]+)\s*,\s*([LRS])\s*\)")


def load_tm(text: str) -> TmSpec:
    headers: Dict[str, str] = {}
    rule_lines: List[Tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0].strip()
        if not line:
            continue
        matched = False
        for h in _HEADERS:
            if line.startswith(h + ":"):
                if h in headers:
                    raise TmFormatError(f"duplicate header {h!r}", lineno)
                headers[h] = line[len(h) + 1:].strip()
                matched = True
                break
        if not matched:
            rule_lines.append((lineno, line))
    for h in _HEADERS:
        if h not in headers:
            raise TmFormatError(f"missing header {h!r}")

    states = tuple(headers["states"].split())
    input_alpha = tuple(headers["input"].split())
    tape_alpha = tuple(headers["tape"].split())
    blank = headers["blank"]
    start = headers["start"]
    halting = tuple(headers["halt"].split())
    try:
        n_tapes = int(headers["tapes"])
        output_tape = int(headers["output_tape"])
    except ValueError:
        raise TmFormatError("tapes:/output_tape: must be integers")

    sset, gset = set(states), set(tape_alpha)
    if len(sset) != len(states) or len(gset) != len(tape_alpha):
        raise TmFormatError("duplicate state or tape symbol")
    if blank not in gset:
        raise TmFormatError(f"blank {blank!r} not in tape alphabet")
    if blank in input_alpha:
        raise TmFormatError("blank must not be an input symbol")
    for s in input_alpha:
        if s not in gset:
            raise TmFormatError(f"input symbol {s!r} not in tape alphabet")
    if start not in sset:
        raise TmFormatError(f"start state {start!r} not declared")
    for h in halting:
        if h not in sset:
            raise TmFormatError(f"halting state {h!r} not declared")
    if n_tapes < 1:
        raise TmFormatError("tapes: must be >= 1")
    if not 1 <= output_tape <= n_tapes:
        raise TmFormatError(f"output_tape {output_tape} out of range 1..{n_tapes}")

    rules: List[Rule] = []
    seen = set()
    for lineno, line in rule_lines:
        m = _RULE_RE.match(line)
        if not m:
            raise TmFormatError(f"malformed transition {line!r}", lineno)
        q, reads_text, q2, writes_text = m.groups()
        reads = tuple(s.strip() for s in reads_text.split(","))
        writes = tuple(_WRITE_RE.findall(writes_text))
        if len(reads) != n_tapes or len(writes) != n_tapes:
            raise TmFormatError(
                f"transition arity mismatch (expected {n_tapes} tapes)", lineno)
        if q not in sset or q2 not in sset:
            raise TmFormatError(f"undeclared state in {line!r}", lineno)
        if q in halting:
            raise TmFormatError(f"transition from halting state {q!r}", lineno)
        for s in reads:
            if s not in gset:
                raise TmFormatError(f"undeclared symbol {s!r}", lineno)
        for s, _d in writes:
            if s not in gset:
                raise TmFormatError(f"undeclared symbol {s!r}", lineno)
        key = (q, reads)
        if key in seen:
            raise TmFormatError(f"duplicate transition for {key}", lineno)
        seen.add(key)
        rules.append(Rule(q, reads, q2, writes))

    spec = TmSpec(states, input_alpha, tape_alpha, blank, start, halting,
                  n_tapes, output_tape, tuple(rules))
    _check_total(spec)
    return spec


def _check_total(m: TmSpec) -> None:
    from itertools import product

    for q in m.states:
        if q in m.halting:
            continue
        for vec in product(m.tape_alphabet, repeat=m.n_tapes):
            if (q, vec) not in m.delta:
                raise TmFormatError(f"missing transition for ({q}, {vec})")


def simulate(m: TmSpec, w: Sequence[str], max_steps: int) -> RunResult:
    for s in w:
        if s not in m.input_alphabet:
            raise ValueError(f"input symbol {s!r} not in the input alphabet")
    if max_steps < 0:
        raise ValueError("max_steps must be >= 0")
    tapes: List[Dict[int, str]] = [dict() for _ in range(m.n_tapes)]
    for k, s in enumerate(w, start=1):
        tapes[0][k] = s
    heads = [1] * m.n_tapes
    state = m.start
    log: List[StepRecord] = []
    steps = 0
    while state not in m.halting and steps < max_steps:
        reads = tuple(tapes[t].get(heads[t], m.blank) for t in range(m.n_tapes))
        rule = m.delta[(state, reads)]
        events: List[Optional[Tuple[str, str]]] = []
        new_heads: List[int] = []
        for t in range(m.n_tapes):
            sym, direction = rule.writes[t]
            if sym != reads[t]:
                events.append((reads[t], sym))
                if sym == m.blank:
                    tapes[t].pop(heads[t], None)
                else:
                    tapes[t][heads[t]] = sym
            else:
                events.append(None)
            if direction == R:
                new_heads.append(heads[t] + 1)
            elif direction == L:
                new_heads.append(max(1, heads[t] - 1))
            else:
                new_heads.append(heads[t])
        log.append(StepRecord(state, tuple(heads), reads, tuple(events),
                              rule.new_state, tuple(new_heads)))
        state = rule.new_state
        heads = new_heads
        steps += 1
    halted = state in m.halting
    output = _output(tapes[m.output_tape - 1], m.blank) if halted else None
    return RunResult(halted, steps, output, tuple(log), state, tuple(heads),
                     tuple(tapes))


def _output(tape: Dict[int, str], blank: str) -> str:
    out = []
    cell = 1
    while cell in tape and tape[cell] != blank:
        out.append(tape[cell])
        cell += 1
    return "".join(out)


def value_change_log(r: RunResult):
    """Per-tape write events as (step, cell, old, new), in step order."""
    n_tapes = len(r.tapes)
    out: List[List[Tuple[int, int, str, str]]] = [[] for _ in range(n_tapes)]
    for step, rec in enumerate(r.step_log):
        for t, ev in enumerate(rec.events):
            if ev is not None:
                out[t].append((step, rec.heads[t], ev[0], ev[1]))
    return out
