"""Textual program format: parser and canonical renderer.

One definition per line, ``Name(i) := expr``.  Header pragmas declare the
dialect and alphabets.  Comments start with ``;``.  The renderer emits a
deterministic canonical form; parsing it back yields a structurally
identical program.  ``0``, naturals >= 2, ``=`` and ``or`` are accepted as
sugar and normalize to the core operations.

The full grammar is documented in docs/formats.md.
"""
from __future__ import annotations

import re
from typing import List, Optional, Tuple

from .program import (
    Add, Always, And, BoolRef, Cond, Count, CountRef, Le, MatchCount,
    MatchPredicate, Not, OffsetRel, One, Periodic, Program, Sub, Sym, Top,
    def_kinds, nat,
)
from . import cot as _cot

# characters disallowed in bare symbols: whitespace, braces, parens, comma,
# semicolon, equals; anything else renders verbatim, the rest gets {braces}
_BARE_OK = re.compile(r"^[^\s{}(),;=]+$")

_DEF_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\(([A-Za-z])\)\s*:=\s*(.+)$")
_OUT_RE = re.compile(r"^OUTPUT\((?:\{([^}]+)\}|([^(){}\s]+))\)\s*:=\s*([A-Za-z_][A-Za-z0-9_]*)$")
_OUTSIG_RE = re.compile(
    r"^OUTPUT_SIGNPOST\(\s*([0-9]+)\s*,\s*(-?[0-9]+)\s*\)\s*:=\s*([A-Za-z_][A-Za-z0-9_]*)$")
_COUNT_RE = re.compile(r"#\[\s*([A-Za-z])\s*<=\s*([A-Za-z])\s*(?:,\s*(top|\2\s*=\s*\1\s*\+\s*[0-9]+))?\s*\]")
_OFFSET_RE = re.compile(r"=\s*[A-Za-z]\s*\+\s*([0-9]+)")
_MATCH_RE = re.compile(r"#match\[\s*(\([^\]]*\))\s*\]")
_TRIPLE_RE = re.compile(r"\(\s*([0-9]+)\s*,\s*([0-9]+)\s*,\s*(-?[0-9]+)\s*\)")
_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_NAT_RE = re.compile(r"[0-9]+")

_KEYWORDS = {"and", "or", "not", "if", "then", "else", "true", "periodic"}


class ParseError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"line {line}, col {col}: {message}" if line else message)
        self.line = line
        self.col = col


def strip_comment(line: str) -> str:
    depth = 0
    for k, c in enumerate(line):
        if c == "{":
            depth += 1
        elif c == "}":
            depth = max(0, depth - 1)
        elif c == ";" and depth == 0:
            return line[:k]
    return line


def _unwrap_sym(field: str) -> str:
    if field.startswith("{") and field.endswith("}") and len(field) > 2:
        return field[1:-1]
    return field


# --- scanner ---------------------------------------------------------------

def _scan(text: str, lineno: int) -> List[Tuple[str, object, int]]:
    toks: List[Tuple[str, object, int]] = []
    k = 0
    n = len(text)
    while k < n:
        c = text[k]
        if c.isspace():
            k += 1
            continue
        col = k + 1
        m = _MATCH_RE.match(text, k)
        if m:
            conjs = tuple(
                (int(a), int(b), int(t)) for a, b, t in _TRIPLE_RE.findall(m.group(1)))
            if not conjs:
                raise ParseError("empty match predicate", lineno, col)
            toks.append(("MATCH", MatchPredicate(conjs), col))
            k = m.end()
            continue
        m = _COUNT_RE.match(text, k)
        if m:
            psi = m.group(3)
            if psi is None or psi == "top":
                rel = Always()
            else:
                om = _OFFSET_RE.search(psi)
                rel = OffsetRel(int(om.group(1)))
            toks.append(("COUNT", rel, col))
            k = m.end()
            continue
        if text.startswith("Q_", k):
            k += 2
            if k < n and text[k] == "{":
                end = text.find("}", k + 1)
                if end < 0:
                    raise ParseError("unterminated symbol brace", lineno, col)
                sym = text[k + 1:end]
                k = end + 1
            else:
                m = re.compile(r"[^\s{}(),;=]+").match(text, k)
                if not m:
                    raise ParseError("expected symbol after Q_", lineno, col)
                sym = m.group(0)
                k = m.end()
            toks.append(("QSYM", sym, col))
            continue
        if text.startswith("<=", k):
            toks.append(("OP", "<=", col))
            k += 2
            continue
        if c in "()+-=,":
            toks.append(("OP", c, col))
            k += 1
            continue
        m = _NAT_RE.match(text, k)
        if m:
            toks.append(("NAT", int(m.group(0)), col))
            k = m.end()
            continue
        m = _NAME_RE.match(text, k)
        if m:
            word = m.group(0)
            kind = "KW" if word in _KEYWORDS else "NAME"
            toks.append((kind, word, col))
            k = m.end()
            continue
        raise ParseError(f"unexpected character {c!r}", lineno, col)
    return toks


# --- expression parser -------------------------------------------------------

class _ExprParser:
    def __init__(self, toks, lineno, kinds, alphabet):
        self.toks = toks
        self.pos = 0
        self.lineno = lineno
        self.kinds = kinds
        self.alphabet = alphabet

    def error(self, msg: str):
        col = self.toks[self.pos][2] if self.pos < len(self.toks) else (
            self.toks[-1][2] if self.toks else 1)
        raise ParseError(msg, self.lineno, col)

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else ("EOF", None, 0)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def accept(self, kind, value=None) -> bool:
        k, v, _ = self.peek()
        if k == kind and (value is None or v == value):
            self.pos += 1
            return True
        return False

    def expect(self, kind, value=None):
        if not self.accept(kind, value):
            self.error(f"expected {value or kind}")

    def parse(self):
        node, kind = self.expr()
        if self.peek()[0] != "EOF":
            self.error("trailing input")
        return node, kind

    def expr(self):
        node, kind = self.cmp()
        while True:
            k, v, _ = self.peek()
            if k == "KW" and v in ("and", "or"):
                self.pos += 1
                if kind != "bool":
                    self.error(f"left operand of {v!r} must be Boolean")
                rhs, rkind = self.cmp()
                if rkind != "bool":
                    self.error(f"right operand of {v!r} must be Boolean")
                if v == "and":
                    node = And(node, rhs)
                else:
                    node = Not(And(Not(node), Not(rhs)))
            else:
                return node, kind

    def cmp(self):
        node, kind = self.sum()
        k, v, _ = self.peek()
        if k == "OP" and v in ("<=", "="):
            self.pos += 1
            if kind != "count":
                self.error(f"left operand of {v!r} must be count-valued")
            rhs, rkind = self.sum()
            if rkind != "count":
                self.error(f"right operand of {v!r} must be count-valued")
            if v == "<=":
                return Le(node, rhs), "bool"
            return And(Le(node, rhs), Le(rhs, node)), "bool"
        return node, kind

    def sum(self):
        node, kind = self.unary()
        while True:
            k, v, _ = self.peek()
            if k == "OP" and v in ("+", "-"):
                self.pos += 1
                if kind != "count":
                    self.error(f"left operand of {v!r} must be count-valued")
                rhs, rkind = self.unary()
                if rkind != "count":
                    self.error(f"right operand of {v!r} must be count-valued")
                node = Add(node, rhs) if v == "+" else Sub(node, rhs)
            else:
                return node, kind

    def unary(self):
        if self.accept("KW", "not"):
            node, kind = self.unary()
            if kind != "bool":
                self.error("operand of 'not' must be Boolean")
            return Not(node), "bool"
        return self.atom()

    def atom(self):
        k, v, col = self.take()
        if k == "KW" and v == "true":
            return Top(), "bool"
        if k == "NAT":
            return nat(v), "count"
        if k == "KW" and v == "periodic":
            self.expect("OP", "(")
            m = self._nat()
            self.expect("OP", ",")
            r = self._nat()
            self.expect("OP", ")")
            try:
                return Periodic(m, r), "bool"
            except Exception as exc:
                raise ParseError(str(exc), self.lineno, col)
        if k == "KW" and v == "if":
            guard, gk = self.expr()
            if gk != "bool":
                self.error("'if' guard must be Boolean")
            self.expect("KW", "then")
            then, tk = self.expr()
            self.expect("KW", "else")
            orelse, ek = self.expr()
            if tk != "count" or ek != "count":
                self.error("'if' branches must be count-valued")
            return Cond(guard, then, orelse), "count"
        if k == "COUNT":
            body, bk = self.unary()
            if bk != "bool":
                self.error("count body must be Boolean")
            return Count(v, body), "count"
        if k == "MATCH":
            pred = None
            if self._starts_atom():
                pred, pk = self.unary()
                if pk != "bool":
                    self.error("match body must be Boolean")
            return MatchCount(v, pred), "count"
        if k == "QSYM":
            self._args()
            if v not in self.alphabet:
                raise ParseError(f"unknown symbol {v!r}", self.lineno, col)
            return Sym(v), "bool"
        if k == "NAME":
            self._args()
            if v not in self.kinds:
                raise ParseError(f"reference to undefined name {v!r}", self.lineno, col)
            if self.kinds[v] == "bool":
                return BoolRef(v), "bool"
            return CountRef(v), "count"
        if k == "OP" and v == "(":
            node, kind = self.expr()
            self.expect("OP", ")")
            return node, kind
        raise ParseError("expected an expression", self.lineno, col)

    def _starts_atom(self) -> bool:
        k, v, _ = self.peek()
        if k in ("QSYM", "NAME", "NAT", "COUNT", "MATCH"):
            return True
        if k == "KW" and v in ("true", "not", "if", "periodic"):
            return True
        if k == "OP" and v == "(":
            return True
        return False

    def _nat(self) -> int:
        k, v, _ = self.take()
        if k != "NAT":
            self.error("expected a natural number")
        return v

    def _args(self):
        self.expect("OP", "(")
        k, v, _ = self.take()
        if k not in ("NAME", "KW") or not isinstance(v, str) or len(v) != 1:
            self.error("expected a position variable")
        self.expect("OP", ")")


# --- program-level parse ------------------------------------------------------

def _parse_lines(text: str):
    dialect = None
    alphabet: Optional[List[str]] = None
    input_alpha: Optional[List[str]] = None
    defs: List[Tuple[str, object]] = []
    outputs: List[Tuple[str, str]] = []
    signposts: List[Tuple[int, int, str]] = []
    kinds = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("#dialect"):
            parts = line.split()
            if len(parts) != 2:
                raise ParseError("malformed #dialect line", lineno, 1)
            dialect = parts[1]
            continue
        if line.startswith("#alphabet"):
            alphabet = [_unwrap_sym(f) for f in line.split()[1:]]
            continue
        if line.startswith("#input"):
            input_alpha = [_unwrap_sym(f) for f in line.split()[1:]]
            continue
        m = _OUT_RE.match(line)
        if m:
            sym = m.group(1) if m.group(1) is not None else m.group(2)
            outputs.append((sym, m.group(3)))
            continue
        m = _OUTSIG_RE.match(line)
        if m:
            signposts.append((int(m.group(1)), int(m.group(2)), m.group(3)))
            continue
        m = _DEF_RE.match(line)
        if not m:
            raise ParseError("expected a definition, output clause, or pragma", lineno, 1)
        name, _var, body = m.group(1), m.group(2), m.group(3)
        if dialect is None or alphabet is None:
            raise ParseError("#dialect and #alphabet must precede definitions", lineno, 1)
        if name in kinds:
            raise ParseError(f"duplicate definition {name!r}", lineno, 1)
        toks = _scan(body, lineno)
        node, kind = _ExprParser(toks, lineno, kinds, set(alphabet)).parse()
        defs.append((name, node))
        kinds[name] = kind
    if dialect is None or alphabet is None:
        raise ParseError("missing #dialect or #alphabet header")
    return dialect, alphabet, input_alpha, defs, outputs, signposts, kinds


def parse_program(text: str) -> Program:
    dialect, alphabet, _inp, defs, outputs, signposts, _ = _parse_lines(text)
    if outputs or signposts:
        raise ParseError("output clauses are only valid in a CoT program")
    prog = Program(dialect, tuple(alphabet), tuple(defs))
    def_kinds(prog)
    return prog


def parse_cot_program(text: str):
    dialect, alphabet, inp, defs, outputs, signposts, _ = _parse_lines(text)
    prog = Program(dialect, tuple(alphabet), tuple(defs))
    def_kinds(prog)
    cp = _cot.CotProgram(
        base=prog,
        outputs=tuple(_cot.OutputClause(s, g) for s, g in outputs),
        signpost_outputs=tuple(
            _cot.SignpostClause(k, d, g) for k, d, g in signposts),
        input_alphabet=tuple(inp or ()),
    )
    _cot.validate_cot(cp)
    return cp


# --- rendering ----------------------------------------------------------------

def _render_sym(sym: str) -> str:
    return sym if _BARE_OK.match(sym) else "{" + sym + "}"


def _count_literal(expr) -> Optional[int]:
    if isinstance(expr, One):
        return 1
    if isinstance(expr, Sub) and expr.left == One() and expr.right == One():
        return 0
    if isinstance(expr, Add) and isinstance(expr.right, One):
        left = _count_literal(expr.left)
        if left is not None and left >= 1:
            return left + 1
    return None


def _as_or(expr) -> Optional[Tuple[object, object]]:
    if (isinstance(expr, Not) and isinstance(expr.arg, And)
            and isinstance(expr.arg.left, Not) and isinstance(expr.arg.right, Not)):
        return expr.arg.left.arg, expr.arg.right.arg
    return None


def _as_eq(expr) -> Optional[Tuple[object, object]]:
    if (isinstance(expr, And) and isinstance(expr.left, Le) and isinstance(expr.right, Le)
            and expr.left.left == expr.right.right and expr.left.right == expr.right.left):
        return expr.left.left, expr.left.right
    return None


def render_expr(expr, var: str = "i") -> str:
    if isinstance(expr, Sym):
        return f"Q_{_render_sym(expr.symbol)}({var})"
    if isinstance(expr, Top):
        return "true"
    if isinstance(expr, Periodic):
        return f"periodic({expr.modulus}, {expr.residue})"
    if isinstance(expr, BoolRef) or isinstance(expr, CountRef):
        return f"{expr.name}({var})"
    if isinstance(expr, Not):
        pair = _as_or(expr)
        if pair is not None:
            return f"({render_expr(pair[0], var)} or {render_expr(pair[1], var)})"
        return f"not {_render_operand(expr.arg, var)}"
    if isinstance(expr, And):
        pair = _as_eq(expr)
        if pair is not None:
            return f"({render_expr(pair[0], var)} = {render_expr(pair[1], var)})"
        return f"({render_expr(expr.left, var)} and {render_expr(expr.right, var)})"
    if isinstance(expr, Le):
        return f"({render_expr(expr.left, var)} <= {render_expr(expr.right, var)})"
    lit = _count_literal(expr)
    if lit is not None:
        return str(lit)
    if isinstance(expr, Add):
        return f"({render_expr(expr.left, var)} + {render_expr(expr.right, var)})"
    if isinstance(expr, Sub):
        return f"({render_expr(expr.left, var)} - {render_expr(expr.right, var)})"
    if isinstance(expr, Cond):
        return (f"(if {render_expr(expr.guard, var)} then {render_expr(expr.then, var)}"
                f" else {render_expr(expr.orelse, var)})")
    if isinstance(expr, Count):
        head = "#[j<=i]" if isinstance(expr.rel, Always) else f"#[j<=i, i=j+{expr.rel.delta}]"
        return f"{head} {_render_operand(expr.pred, 'j')}"
    if isinstance(expr, MatchCount):
        trips = ",".join(f"({d},{g},{t})" for d, g, t in expr.chi.conjuncts)
        if expr.pred is None:
            return f"#match[{trips}]"
        return f"#match[{trips}] {_render_operand(expr.pred, 'j')}"
    raise ValueError(f"cannot render {expr!r}")


def _render_operand(expr, var: str) -> str:
    """Render a count/match body at unary precedence."""
    if isinstance(expr, (Sym, Top, Periodic, BoolRef, CountRef)):
        return render_expr(expr, var)
    if isinstance(expr, Not) and _as_or(expr) is None:
        return f"not {_render_operand(expr.arg, var)}"
    text = render_expr(expr, var)
    if text.startswith("("):
        return text
    return f"({text})"


def render_program(program: Program) -> str:
    lines = [f"#dialect {program.dialect}",
             "#alphabet " + " ".join(_render_sym(s) for s in program.alphabet)]
    if program.defs:
        lines.append("")
    for name, expr in program.defs:
        lines.append(f"{name}(i) := {render_expr(expr)}")
    return "\n".join(lines) + "\n"


def render_cot_program(cp) -> str:
    base = render_program(cp.base).rstrip("\n")
    lines = base.splitlines()
    lines.insert(2, "#input " + " ".join(_render_sym(s) for s in cp.input_alphabet))
    lines.append("")
    for cl in cp.outputs:
        lines.append(f"OUTPUT({_render_sym(cl.symbol)}) := {cl.guard}")
    for cl in cp.signpost_outputs:
        lines.append(f"OUTPUT_SIGNPOST({cl.anchor}, {cl.direction}) := {cl.guard}")
    return "\n".join(lines) + "\n"
