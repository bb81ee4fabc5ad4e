"""Program AST: Boolean- and count-valued operations over token prefixes.

A program is an ordered list of named definitions; a definition may reference
only earlier names, so programs are acyclic by construction.  Three dialects
are supported:

* ``crasp``       -- finite alphabet, prefix counts, local offset relations
* ``crasp-pos``   -- adds the periodic positional predicate
* ``cstar-rasp``  -- drops the positional predicate, adds the local match
                     predicate over the unbounded signpost alphabet

Positions are 1-based throughout.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Optional, Tuple, Union

CRASP = "crasp"
CRASP_POS = "crasp-pos"
CSTAR_RASP = "cstar-rasp"
DIALECTS = (CRASP, CRASP_POS, CSTAR_RASP)


class ProgramError(ValueError):
    pass


# --- local relations -------------------------------------------------------

@dataclass(frozen=True)
class Always:
    """psi(i, j) = true for every j <= i."""


@dataclass(frozen=True)
class OffsetRel:
    """psi(i, j) = (i == j + delta); delta = 0 means j = i."""
    delta: int


LocalRelation = Union[Always, OffsetRel]


@dataclass(frozen=True)
class MatchPredicate:
    """Conjunction of neighborhood equalities between positions j and i.

    Each conjunct (delta, gamma, tau) requires token(j - delta) to equal
    token(i - gamma) shifted by tau.  Shifts are arithmetic on signposts
    only; with tau != 0 a finite token on either side makes the conjunct
    false, as does any out-of-range position.
    """
    conjuncts: Tuple[Tuple[int, int, int], ...]

    def __post_init__(self):
        if not self.conjuncts:
            raise ProgramError("match predicate needs at least one conjunct")
        for d, g, _t in self.conjuncts:
            if d < 0 or g < 0:
                raise ProgramError("match offsets must be naturals")


# --- Boolean-valued expressions -------------------------------------------

@dataclass(frozen=True)
class Sym:
    """Q_sigma(i): the token at the evaluated position is the finite symbol."""
    symbol: str


@dataclass(frozen=True)
class Not:
    arg: "BoolExpr"


@dataclass(frozen=True)
class And:
    left: "BoolExpr"
    right: "BoolExpr"


@dataclass(frozen=True)
class Periodic:
    """i = residue (mod modulus); crasp-pos only."""
    modulus: int
    residue: int

    def __post_init__(self):
        if self.modulus < 1 or not (0 <= self.residue < self.modulus):
            raise ProgramError(f"bad periodic({self.modulus}, {self.residue})")


@dataclass(frozen=True)
class Top:
    """Constant true."""


@dataclass(frozen=True)
class Le:
    left: "CountExpr"
    right: "CountExpr"


@dataclass(frozen=True)
class BoolRef:
    name: str


# --- count-valued expressions ----------------------------------------------

@dataclass(frozen=True)
class Count:
    """#[j <= i, psi(i,j)] pred(j)."""
    rel: LocalRelation
    pred: "BoolExpr"


@dataclass(frozen=True)
class MatchCount:
    """#[j <= i, chi(i,j) and pred(j)]; pred of None counts bare matches."""
    chi: MatchPredicate
    pred: Optional["BoolExpr"] = None


@dataclass(frozen=True)
class Cond:
    guard: "BoolExpr"
    then: "CountExpr"
    orelse: "CountExpr"


@dataclass(frozen=True)
class Add:
    left: "CountExpr"
    right: "CountExpr"


@dataclass(frozen=True)
class Sub:
    left: "CountExpr"
    right: "CountExpr"


@dataclass(frozen=True)
class One:
    """Constant 1."""


@dataclass(frozen=True)
class CountRef:
    name: str


BoolExpr = Union[Sym, Not, And, Periodic, Top, Le, BoolRef]
CountExpr = Union[Count, MatchCount, Cond, Add, Sub, One, CountRef]

_BOOL_NODES = (Sym, Not, And, Periodic, Top, Le, BoolRef)
_COUNT_NODES = (Count, MatchCount, Cond, Add, Sub, One, CountRef)

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")


@dataclass(frozen=True)
class Program:
    dialect: str
    alphabet: Tuple[str, ...]
    defs: Tuple[Tuple[str, Union[BoolExpr, CountExpr]], ...] = field(default=())

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(n for n, _ in self.defs)

    def expr(self, name: str) -> Union[BoolExpr, CountExpr]:
        for n, e in self.defs:
            if n == name:
                return e
        raise KeyError(name)


def is_bool_node(expr) -> bool:
    return isinstance(expr, _BOOL_NODES)


@lru_cache(maxsize=256)
def def_kinds(program: Program) -> Dict[str, str]:
    """Validate a program and return {name: 'bool'|'count'} per definition."""
    alpha = set(program.alphabet)
    if program.dialect not in DIALECTS:
        raise ProgramError(f"unknown dialect {program.dialect!r}")
    if len(alpha) != len(program.alphabet):
        raise ProgramError("duplicate symbol in alphabet")
    kinds: Dict[str, str] = {}
    for name, expr in program.defs:
        if not _NAME_RE.match(name) or name.startswith("Q_"):
            raise ProgramError(f"bad definition name {name!r}")
        if name in kinds:
            raise ProgramError(f"duplicate definition {name!r}")
        kind = _check(expr, kinds, alpha, program.dialect, name)
        kinds[name] = kind
    return kinds


def validate_program(program: Program) -> None:
    def_kinds(program)


def _check(expr, kinds, alpha, dialect, where) -> str:
    if isinstance(expr, Sym):
        if expr.symbol not in alpha:
            raise ProgramError(f"{where}: unknown symbol {expr.symbol!r}")
        return "bool"
    if isinstance(expr, Not):
        _want("bool", expr.arg, kinds, alpha, dialect, where)
        return "bool"
    if isinstance(expr, And):
        _want("bool", expr.left, kinds, alpha, dialect, where)
        _want("bool", expr.right, kinds, alpha, dialect, where)
        return "bool"
    if isinstance(expr, Periodic):
        if dialect != CRASP_POS:
            raise ProgramError(f"{where}: periodic() requires dialect {CRASP_POS}")
        return "bool"
    if isinstance(expr, Top):
        return "bool"
    if isinstance(expr, Le):
        _want("count", expr.left, kinds, alpha, dialect, where)
        _want("count", expr.right, kinds, alpha, dialect, where)
        return "bool"
    if isinstance(expr, BoolRef):
        _ref(expr.name, "bool", kinds, where)
        return "bool"
    if isinstance(expr, Count):
        if isinstance(expr.rel, OffsetRel) and expr.rel.delta < 0:
            raise ProgramError(f"{where}: offset must be a natural")
        _want("bool", expr.pred, kinds, alpha, dialect, where)
        return "count"
    if isinstance(expr, MatchCount):
        if dialect != CSTAR_RASP:
            raise ProgramError(f"{where}: match counts require dialect {CSTAR_RASP}")
        if expr.pred is not None:
            _want("bool", expr.pred, kinds, alpha, dialect, where)
        return "count"
    if isinstance(expr, Cond):
        _want("bool", expr.guard, kinds, alpha, dialect, where)
        _want("count", expr.then, kinds, alpha, dialect, where)
        _want("count", expr.orelse, kinds, alpha, dialect, where)
        return "count"
    if isinstance(expr, (Add, Sub)):
        _want("count", expr.left, kinds, alpha, dialect, where)
        _want("count", expr.right, kinds, alpha, dialect, where)
        return "count"
    if isinstance(expr, One):
        return "count"
    if isinstance(expr, CountRef):
        _ref(expr.name, "count", kinds, where)
        return "count"
    raise ProgramError(f"{where}: not an expression node: {expr!r}")


def _want(kind, expr, kinds, alpha, dialect, where):
    got = _check(expr, kinds, alpha, dialect, where)
    if got != kind:
        raise ProgramError(f"{where}: expected {kind}-valued expression, got {got}")


def _ref(name, kind, kinds, where):
    if name not in kinds:
        raise ProgramError(f"{where}: reference to undefined name {name!r}")
    if kinds[name] != kind:
        raise ProgramError(f"{where}: {name!r} is {kinds[name]}-valued, expected {kind}")


# --- small construction helpers --------------------------------------------

def b_or(*exprs: BoolExpr) -> BoolExpr:
    """Disjunction, desugared to not(and(not .., not ..)) left-to-right."""
    if not exprs:
        return Not(Top())
    out = exprs[0]
    for e in exprs[1:]:
        out = Not(And(Not(out), Not(e)))
    return out


def b_and(*exprs: BoolExpr) -> BoolExpr:
    if not exprs:
        return Top()
    out = exprs[0]
    for e in exprs[1:]:
        out = And(out, e)
    return out


def nat(n: int) -> CountExpr:
    """Canonical constant: 0 is (1 - 1), n >= 1 a left chain of adds."""
    if n < 0:
        raise ProgramError("nat() takes a natural")
    if n == 0:
        return Sub(One(), One())
    out: CountExpr = One()
    for _ in range(n - 1):
        out = Add(out, One())
    return out


def eq(a: CountExpr, b: CountExpr) -> BoolExpr:
    return And(Le(a, b), Le(b, a))


def ge1(c: CountExpr) -> BoolExpr:
    return Le(One(), c)
