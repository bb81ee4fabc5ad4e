"""Reference whole-string evaluation.

This is the definitional semantics: every definition is evaluated at every
position by direct recursion, with prefix scans for counting operations
(O(n) per position, O(n^2) per match count).  The incremental engine in
``stepper`` must agree with it everywhere; property tests enforce that.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .program import (
    Add, Always, And, BoolRef, Cond, Count, CountRef, Le, MatchCount,
    MatchPredicate, Not, OffsetRel, One, Periodic, Program, Sub, Sym, Top,
    def_kinds,
)
from .tokens import Token


class EvalError(ValueError):
    pass


@dataclass
class EvalTable:
    program: Program
    tokens: Tuple[Token, ...]
    columns: Dict[str, Tuple[int, ...]]

    def value(self, name: str, pos: int):
        """Value of a definition at a 1-based position."""
        return self.columns[name][pos - 1]

    def last(self, name: str):
        return self.columns[name][-1]

    def row(self, pos: int) -> Dict[str, int]:
        return {n: col[pos - 1] for n, col in self.columns.items()}

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(self.columns)


def check_tokens(tokens: Sequence[Token], alphabet: Sequence[str]) -> None:
    alpha = set(alphabet)
    for t in tokens:
        if isinstance(t, int):
            if t < 1:
                raise EvalError(f"signpost index must be >= 1, got {t}")
        elif t not in alpha:
            raise EvalError(f"token {t!r} is not in the program alphabet")


def evaluate(program: Program, tokens: Sequence[Token]) -> EvalTable:
    kinds = def_kinds(program)
    toks = tuple(tokens)
    if not toks:
        raise EvalError("evaluation needs at least one token")
    check_tokens(toks, program.alphabet)
    columns: Dict[str, Tuple[int, ...]] = {}
    for name, expr in program.defs:
        ev = _Eval(toks, columns)
        if kinds[name] == "bool":
            col = tuple(ev.bool_at(expr, i) for i in range(1, len(toks) + 1))
        else:
            col = tuple(ev.count_at(expr, i) for i in range(1, len(toks) + 1))
        columns[name] = col
    return EvalTable(program, toks, columns)


def match_holds(tokens: Sequence[Token], chi: MatchPredicate, i: int, j: int) -> bool:
    """chi(i, j) over 1-based positions, per the shift rules."""
    for d, g, t in chi.conjuncts:
        ja, ia = j - d, i - g
        if ja < 1 or ia < 1:
            return False
        a, b = tokens[ja - 1], tokens[ia - 1]
        if t == 0:
            if a != b or isinstance(a, int) != isinstance(b, int):
                return False
        else:
            if not (isinstance(a, int) and isinstance(b, int) and a == b + t):
                return False
    return True


class _Eval:
    def __init__(self, tokens: Tuple[Token, ...], columns: Dict[str, Tuple[int, ...]]):
        self.tokens = tokens
        self.columns = columns

    def bool_at(self, expr, i: int) -> int:
        if isinstance(expr, Sym):
            return 1 if self.tokens[i - 1] == expr.symbol else 0
        if isinstance(expr, Not):
            return 1 - self.bool_at(expr.arg, i)
        if isinstance(expr, And):
            return 1 if self.bool_at(expr.left, i) and self.bool_at(expr.right, i) else 0
        if isinstance(expr, Periodic):
            return 1 if i % expr.modulus == expr.residue else 0
        if isinstance(expr, Top):
            return 1
        if isinstance(expr, Le):
            return 1 if self.count_at(expr.left, i) <= self.count_at(expr.right, i) else 0
        if isinstance(expr, BoolRef):
            return self.columns[expr.name][i - 1]
        raise EvalError(f"not a Boolean expression: {expr!r}")

    def count_at(self, expr, i: int) -> int:
        if isinstance(expr, Count):
            if isinstance(expr.rel, Always):
                return sum(self.bool_at(expr.pred, j) for j in range(1, i + 1))
            j = i - expr.rel.delta
            if j < 1:
                return 0
            return self.bool_at(expr.pred, j)
        if isinstance(expr, MatchCount):
            total = 0
            for j in range(1, i + 1):
                if match_holds(self.tokens, expr.chi, i, j):
                    if expr.pred is None or self.bool_at(expr.pred, j):
                        total += 1
            return total
        if isinstance(expr, Cond):
            if self.bool_at(expr.guard, i):
                return self.count_at(expr.then, i)
            return self.count_at(expr.orelse, i)
        if isinstance(expr, Add):
            return self.count_at(expr.left, i) + self.count_at(expr.right, i)
        if isinstance(expr, Sub):
            return self.count_at(expr.left, i) - self.count_at(expr.right, i)
        if isinstance(expr, One):
            return 1
        if isinstance(expr, CountRef):
            return self.columns[expr.name][i - 1]
        raise EvalError(f"not a count expression: {expr!r}")
