"""Autoregressive chain-of-thought generation over a program.

A CoT program pairs a base program with output clauses.  Every clause guard
is the name of a Boolean definition; at each step the engine evaluates all
guards at the last position and requires exactly one to be active, so
nondeterminism is surfaced instead of silently resolved.  Signpost clauses
emit the signpost found at a fixed lookback offset, moved by -1/0/+1.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

from .program import CRASP, CRASP_POS, Program, ProgramError, def_kinds
from .stepper import EvalState
from .tokens import EOS, SEP, Token


class GenerationError(RuntimeError):
    """Raised when the next-token map is undefined on the current prefix."""

    def __init__(self, message: str, step: int = 0, position: int = 0):
        super().__init__(message)
        self.step = step
        self.position = position


class ZeroActive(GenerationError):
    pass


class MultipleActive(GenerationError):
    def __init__(self, message, active, step=0, position=0):
        super().__init__(message, step, position)
        self.active = tuple(active)


class AnchorNotSignpost(GenerationError):
    pass


class IndexUnderflow(GenerationError):
    pass


class MalformedAnnotation(ValueError):
    pass


@dataclass(frozen=True)
class OutputClause:
    symbol: str
    guard: str


@dataclass(frozen=True)
class SignpostClause:
    anchor: int        # the signpost sits at position (last - anchor)
    direction: int     # -1, 0, or +1
    guard: str


@dataclass(frozen=True)
class CotProgram:
    base: Program
    outputs: Tuple[OutputClause, ...]
    signpost_outputs: Tuple[SignpostClause, ...] = ()
    sep: str = SEP
    eos: str = EOS
    input_alphabet: Tuple[str, ...] = ()


def validate_cot(cp: CotProgram) -> None:
    kinds = def_kinds(cp.base)
    alpha = set(cp.base.alphabet)
    seen = set()
    for cl in cp.outputs:
        if cl.symbol not in alpha:
            raise ProgramError(f"output symbol {cl.symbol!r} not in alphabet")
        if cl.symbol in seen:
            raise ProgramError(f"symbol {cl.symbol!r} has two output clauses")
        seen.add(cl.symbol)
        _guard(cl.guard, kinds)
    for cl in cp.signpost_outputs:
        if cl.anchor < 1:
            raise ProgramError("signpost anchor offset must be >= 1")
        if cl.direction not in (-1, 0, 1):
            raise ProgramError("signpost direction must be -1, 0, or +1")
        _guard(cl.guard, kinds)
    if cp.base.dialect in (CRASP, CRASP_POS) and cp.signpost_outputs:
        raise ProgramError("signpost output clauses require the cstar-rasp dialect")
    for s in (cp.sep, cp.eos):
        if s not in alpha:
            raise ProgramError(f"distinguished symbol {s!r} not in alphabet")
        if s in cp.input_alphabet:
            raise ProgramError(f"distinguished symbol {s!r} must not be an input symbol")
    for s in cp.input_alphabet:
        if s not in alpha:
            raise ProgramError(f"input symbol {s!r} not in alphabet")


def _guard(name: str, kinds) -> None:
    if name not in kinds:
        raise ProgramError(f"guard {name!r} is not a definition")
    if kinds[name] != "bool":
        raise ProgramError(f"guard {name!r} must be Boolean-valued")


@dataclass
class GenerationResult:
    trace: Tuple[Token, ...]
    completed: bool
    answer: Optional[Tuple[Token, ...]]
    steps: int


def _next_from_state(cp: CotProgram, state: EvalState, step: int) -> Token:
    active: List[Union[OutputClause, SignpostClause]] = []
    for cl in cp.outputs:
        if state.value(cl.guard):
            active.append(cl)
    for cl in cp.signpost_outputs:
        if state.value(cl.guard):
            active.append(cl)
    pos = state.position
    if not active:
        raise ZeroActive(f"no output clause active at position {pos}", step, pos)
    if len(active) > 1:
        names = [c.guard for c in active]
        raise MultipleActive(
            f"{len(active)} output clauses active at position {pos}: {names}",
            names, step, pos)
    clause = active[0]
    if isinstance(clause, OutputClause):
        return clause.symbol
    anchor_pos = pos - clause.anchor
    if anchor_pos < 1:
        raise AnchorNotSignpost(
            f"signpost anchor position {anchor_pos} out of range", step, pos)
    tok = state.token_at(anchor_pos)
    if not isinstance(tok, int):
        raise AnchorNotSignpost(
            f"token at position {anchor_pos} is {tok!r}, not a signpost", step, pos)
    idx = tok + clause.direction
    if idx < 1:
        raise IndexUnderflow(
            f"signpost index underflow at position {pos}", step, pos)
    return idx


def next_token(cp: CotProgram, prefix: Sequence[Token]) -> Token:
    """The deterministic next-token map on a single prefix."""
    if not prefix:
        raise GenerationError("prefix must be nonempty")
    state = EvalState(cp.base, prefix)
    return _next_from_state(cp, state, step=1)


def generate(cp: CotProgram, prompt: Sequence[Token], budget: int) -> GenerationResult:
    """Run the next-token map autoregressively until <EOS> or budget tokens."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if not prompt:
        raise GenerationError("prompt must be nonempty")
    state = EvalState(cp.base, prompt)
    trace: List[Token] = []
    for step in range(1, budget + 1):
        tok = _next_from_state(cp, state, step)
        state.append(tok)
        trace.append(tok)
        if tok == cp.eos:
            answer = extract_answer(trace, cp.sep)
            return GenerationResult(tuple(trace), True, tuple(answer), step)
    return GenerationResult(tuple(trace), False, None, budget)


def extract_answer(trace: Sequence[Token], sep: str = SEP) -> List[Token]:
    """Tokens strictly between the last separator and the final token."""
    last_sep = None
    for k, t in enumerate(trace):
        if t == sep:
            last_sep = k
    if last_sep is None:
        return []
    return list(trace[last_sep + 1:len(trace) - 1])


def annotate(symbols: Sequence[str], start: int = 1) -> List[Token]:
    """Interleave each input symbol with its unique signpost token."""
    if start < 1:
        raise ValueError("signpost start offset must be >= 1")
    out: List[Token] = []
    for k, s in enumerate(symbols):
        out.append(s)
        out.append(start + k)
    return out


def deannotate(tokens: Sequence[Token]) -> List[str]:
    """Inverse of annotate: recover the finite symbols, checking the shape."""
    if len(tokens) % 2 != 0:
        raise MalformedAnnotation(f"odd length {len(tokens)}")
    out: List[str] = []
    expected: Optional[int] = None
    for k in range(0, len(tokens), 2):
        sym, sp = tokens[k], tokens[k + 1]
        if isinstance(sym, int):
            raise MalformedAnnotation(f"expected a finite symbol at slot {k + 1}")
        if not isinstance(sp, int):
            raise MalformedAnnotation(f"expected a signpost at slot {k + 2}")
        if expected is not None and sp != expected:
            raise MalformedAnnotation(
                f"signpost {sp} breaks the consecutive run (expected {expected})")
        expected = sp + 1
        out.append(sym)
    return out
