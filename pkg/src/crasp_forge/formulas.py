"""Boolean formula ASTs: exact counting, uniform sampling, rendering.

Size is the node count.  T(1) = 2 literals; a formula of size n is either
NOT over size n-1 or AND/OR over a split (a, b) with a + b = n - 1, so
T(n) = T(n-1) + 2 * sum_a T(a) * T(n-1-a).  sample_formula draws uniformly
over all ASTs of exactly the requested size by weighting every choice with
these exact counts (big integers, no floating point).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Sequence, Tuple, Union


@dataclass(frozen=True)
class Lit:
    value: bool


@dataclass(frozen=True)
class NotNode:
    child: "Formula"


@dataclass(frozen=True)
class BinNode:
    op: str  # "AND" | "OR"
    left: "Formula"
    right: "Formula"


Formula = Union[Lit, NotNode, BinNode]


def size(ast: Formula) -> int:
    if isinstance(ast, Lit):
        return 1
    if isinstance(ast, NotNode):
        return 1 + size(ast.child)
    return 1 + size(ast.left) + size(ast.right)


def eval_ast(ast: Formula) -> bool:
    if isinstance(ast, Lit):
        return ast.value
    if isinstance(ast, NotNode):
        return not eval_ast(ast.child)
    left, right = eval_ast(ast.left), eval_ast(ast.right)
    return (left and right) if ast.op == "AND" else (left or right)


@lru_cache(maxsize=None)
def count_formulas(n: int) -> int:
    if n < 1:
        return 0
    if n == 1:
        return 2
    total = count_formulas(n - 1)
    for a in range(1, n - 1):
        total += 2 * count_formulas(a) * count_formulas(n - 1 - a)
    return total


def sample_formula(n: int, rng) -> Formula:
    if n < 1:
        raise ValueError("formula size must be >= 1")
    if n == 1:
        return Lit(bool(rng.randrange(2)))
    r = rng.randrange(count_formulas(n))
    if r < count_formulas(n - 1):
        return NotNode(sample_formula(n - 1, rng))
    r -= count_formulas(n - 1)
    for a in range(1, n - 1):
        b = n - 1 - a
        w = count_formulas(a) * count_formulas(b)
        for op in ("AND", "OR"):
            if r < w:
                return BinNode(op, sample_formula(a, rng), sample_formula(b, rng))
            r -= w
    raise AssertionError("count_formulas is inconsistent with the sampler")


def enumerate_formulas(n: int) -> Iterator[Formula]:
    """All ASTs of exactly size n (oracle for the counting recurrence)."""
    if n == 1:
        yield Lit(False)
        yield Lit(True)
        return
    for child in enumerate_formulas(n - 1):
        yield NotNode(child)
    for a in range(1, n - 1):
        for left in enumerate_formulas(a):
            for right in enumerate_formulas(n - 1 - a):
                for op in ("AND", "OR"):
                    yield BinNode(op, left, right)


def postorder_values(ast: Formula) -> List[bool]:
    """Truth values of every subformula in post-order (left, right, root)."""
    out: List[bool] = []

    def walk(f: Formula) -> bool:
        if isinstance(f, Lit):
            v = f.value
        elif isinstance(f, NotNode):
            v = not walk(f.child)
        else:
            l = walk(f.left)
            r = walk(f.right)
            v = (l and r) if f.op == "AND" else (l or r)
        out.append(v)
        return v

    walk(ast)
    return out


def render_naive(ast: Formula) -> str:
    """Canonical text: every binary node parenthesized, NOT bare with a
    parenthesized composite operand."""
    if isinstance(ast, Lit):
        return "true" if ast.value else "false"
    if isinstance(ast, NotNode):
        return f"NOT {_operand(ast.child)}"
    return f"( {render_naive(ast.left)} {ast.op} {render_naive(ast.right)} )"


def _operand(ast: Formula) -> str:
    text = render_naive(ast)
    if isinstance(ast, Lit) or isinstance(ast, BinNode):
        # binary nodes already wear their own parentheses
        return text
    return f"( {text} )"


def render_signpost(ast: Formula, first_id: int = 0) -> str:
    """Annotated rendering: post-order ids, operators carry child pointers."""
    text, _my_id, _next = _render_sp(ast, first_id)
    return text


def _render_sp(ast: Formula, next_id: int) -> Tuple[str, int, int]:
    if isinstance(ast, Lit):
        lit = "true" if ast.value else "false"
        return f"<{next_id}> {lit}", next_id, next_id + 1
    if isinstance(ast, NotNode):
        child_text, child_id, nxt = _render_sp(ast.child, next_id)
        if isinstance(ast.child, NotNode):
            child_text = f"( {child_text} )"
        return f"[ <{child_id}> ] <{nxt}> NOT {child_text}", nxt, nxt + 1
    left_text, left_id, nxt = _render_sp(ast.left, next_id)
    right_text, right_id, nxt2 = _render_sp(ast.right, nxt)
    my = nxt2
    return (f"( {left_text} [ <{left_id}> , <{right_id}> ] <{my}> {ast.op} "
            f"{right_text} )", my, my + 1)


# --- prompt parsing (the task oracle's independent route) -----------------------

class FormulaSyntaxError(ValueError):
    pass


def parse_naive(text: str) -> Formula:
    toks = text.split()
    ast, pos = _parse_expr(toks, 0)
    if pos != len(toks):
        raise FormulaSyntaxError(f"trailing tokens at {pos}")
    return ast


def _parse_expr(toks: Sequence[str], pos: int) -> Tuple[Formula, int]:
    left, pos = _parse_primary(toks, pos)
    while pos < len(toks) and toks[pos] in ("AND", "OR"):
        op = toks[pos]
        right, pos = _parse_primary(toks, pos + 1)
        left = BinNode(op, left, right)
    return left, pos


def _parse_primary(toks: Sequence[str], pos: int) -> Tuple[Formula, int]:
    if pos >= len(toks):
        raise FormulaSyntaxError("unexpected end of formula")
    t = toks[pos]
    if t == "true":
        return Lit(True), pos + 1
    if t == "false":
        return Lit(False), pos + 1
    if t == "NOT":
        child, pos = _parse_primary(toks, pos + 1)
        return NotNode(child), pos
    if t == "(":
        ast, pos = _parse_expr(toks, pos + 1)
        if pos >= len(toks) or toks[pos] != ")":
            raise FormulaSyntaxError("missing )")
        return ast, pos + 1
    raise FormulaSyntaxError(f"unexpected token {t!r}")


def parse_signpost(text: str) -> Formula:
    toks = text.split()
    ast, pos = _parse_sp_expr(toks, 0)
    if pos != len(toks):
        raise FormulaSyntaxError(f"trailing tokens at {pos}")
    return ast


def _parse_sp_expr(toks: Sequence[str], pos: int) -> Tuple[Formula, int]:
    left, pos = _parse_sp_primary(toks, pos)
    while pos < len(toks) and toks[pos] == "[" and "," in toks[pos:pos + 4]:
        # [ <l> , <r> ] <id> OP right
        if pos + 6 >= len(toks):
            raise FormulaSyntaxError("truncated operator annotation")
        op = toks[pos + 6]
        if op not in ("AND", "OR"):
            raise FormulaSyntaxError(f"expected AND/OR, got {op!r}")
        right, pos2 = _parse_sp_primary(toks, pos + 7)
        left = BinNode(op, left, right)
        pos = pos2
    return left, pos


def _parse_sp_primary(toks: Sequence[str], pos: int) -> Tuple[Formula, int]:
    if pos >= len(toks):
        raise FormulaSyntaxError("unexpected end of formula")
    t = toks[pos]
    if t == "(":
        ast, pos = _parse_sp_expr(toks, pos + 1)
        if pos >= len(toks) or toks[pos] != ")":
            raise FormulaSyntaxError("missing )")
        return ast, pos + 1
    if t == "[":
        # [ <c> ] <id> NOT child
        if pos + 4 >= len(toks) or toks[pos + 2] != "]" or toks[pos + 4] != "NOT":
            raise FormulaSyntaxError("malformed NOT annotation")
        child, pos = _parse_sp_primary(toks, pos + 5)
        return NotNode(child), pos
    if t.startswith("<") and pos + 1 < len(toks):
        lit = toks[pos + 1]
        if lit == "true":
            return Lit(True), pos + 2
        if lit == "false":
            return Lit(False), pos + 2
    raise FormulaSyntaxError(f"unexpected token {t!r}")
