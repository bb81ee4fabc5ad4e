"""Incremental (append-one-token) evaluation.

A program is compiled once into a Python step function that maintains
running prefix counts, bounded-window histories for offset relations, and a
fingerprint index for match counts, so that appending a token costs time
independent of the prefix length (match-count index entries are keyed by the
neighborhood tokens on the j side; queries by the shifted neighborhood on
the i side).  Results must be identical to ``evaluator.evaluate``; the
property suite checks the two paths against each other.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Sequence, Tuple

from .program import (
    Add, Always, And, BoolRef, Cond, Count, CountRef, Le, MatchCount, Not,
    OffsetRel, One, Periodic, Program, Sub, Sym, Top, def_kinds,
)
from .evaluator import EvalError
from .tokens import Token


@dataclass
class Plan:
    names: Tuple[str, ...]
    index: Dict[str, int]
    source: str
    factory: Callable[[], Callable]


@lru_cache(maxsize=64)
def plan_for(program: Program) -> Plan:
    kinds = def_kinds(program)
    gen = _Codegen(program, kinds)
    source = gen.build()
    ns: dict = {}
    exec(compile(source, "<crasp-plan>", "exec"), {}, ns)
    names = tuple(n for n, _ in program.defs)
    return Plan(names, {n: k for k, n in enumerate(names)}, source, ns["make"])


class EvalState:
    """Single-owner incremental evaluation state over a fixed program."""

    def __init__(self, program: Program, tokens: Sequence[Token] = ()):
        self.program = program
        self._plan = plan_for(program)
        self._alpha = frozenset(program.alphabet)
        self._step = self._plan.factory()
        self._toks: List[Token] = []
        self._last: Tuple[int, ...] = ()
        for t in tokens:
            self.append(t)

    @property
    def position(self) -> int:
        return len(self._toks)

    @property
    def tokens(self) -> Tuple[Token, ...]:
        return tuple(self._toks)

    def token_at(self, pos: int) -> Token:
        """1-based access into the consumed prefix."""
        return self._toks[pos - 1]

    def append(self, tok: Token) -> None:
        if isinstance(tok, int):
            if tok < 1:
                raise EvalError(f"signpost index must be >= 1, got {tok}")
        elif tok not in self._alpha:
            raise EvalError(f"token {tok!r} is not in the program alphabet")
        self._toks.append(tok)
        self._last = self._step(self._toks, len(self._toks))

    def value(self, name: str) -> int:
        if not self._toks:
            raise EvalError("no token appended yet")
        return self._last[self._plan.index[name]]

    def value_by_index(self, k: int) -> int:
        return self._last[k]

    def last_values(self) -> Dict[str, int]:
        if not self._toks:
            raise EvalError("no token appended yet")
        return dict(zip(self._plan.names, self._last))


def evaluate_incremental(state: EvalState, tok: Token) -> EvalState:
    """Append one token; the state is updated in place and returned."""
    state.append(tok)
    return state


class _Codegen:
    def __init__(self, program: Program, kinds: Dict[str, str]):
        self.program = program
        self.kinds = kinds
        self.lines: List[str] = []
        self.n_counters = 0
        self.n_hists = 0
        self.n_matches = 0
        self.n_tmp = 0
        self.def_var: Dict[str, str] = {}
        self.memo: Dict[object, str] = {}
        self.counter_slot: Dict[object, int] = {}
        self.hist_slot: Dict[object, int] = {}
        self.match_slot: Dict[object, int] = {}
        self.entry_shape: Dict[Tuple[int, ...], str] = {}
        self.query_shape: Dict[Tuple[Tuple[int, int], ...], str] = {}
        self.def_hist_needed = set()
        self.def_hist_slot: Dict[str, int] = {}

    # -- scanning ------------------------------------------------------------

    def _scan(self, expr) -> None:
        """Find definitions whose per-position history must be retained."""
        if isinstance(expr, Count):
            if (isinstance(expr.rel, OffsetRel) and expr.rel.delta >= 1
                    and isinstance(expr.pred, BoolRef)):
                self.def_hist_needed.add(expr.pred.name)
            self._scan(expr.pred)
        elif isinstance(expr, MatchCount):
            if expr.pred is not None:
                self._scan(expr.pred)
        elif isinstance(expr, Not):
            self._scan(expr.arg)
        elif isinstance(expr, (And, Le, Add, Sub)):
            self._scan(expr.left)
            self._scan(expr.right)
        elif isinstance(expr, Cond):
            self._scan(expr.guard)
            self._scan(expr.then)
            self._scan(expr.orelse)

    # -- emission helpers ------------------------------------------------------

    def emit(self, line: str) -> None:
        self.lines.append("        " + line)

    def tmp(self) -> str:
        self.n_tmp += 1
        return f"x{self.n_tmp}"

    # -- shapes ----------------------------------------------------------------

    def entry_fp(self, deltas: Tuple[int, ...]) -> str:
        if deltas in self.entry_shape:
            return self.entry_shape[deltas]
        var = f"efp{len(self.entry_shape)}"
        maxd = max(deltas)
        comps = ", ".join(f"toks[i-{d + 1}]" for d in deltas)
        if len(deltas) == 1:
            comps += ","
        self.emit(f"{var} = ({comps}) if i > {maxd} else None")
        self.entry_shape[deltas] = var
        return var

    def query_fp(self, shape: Tuple[Tuple[int, int], ...]) -> str:
        if shape in self.query_shape:
            return self.query_shape[shape]
        var = f"qfp{len(self.query_shape)}"
        maxg = max(g for g, _ in shape)
        self.emit(f"{var} = None")
        self.emit(f"if i > {maxg}:")
        parts = []
        ok_checks = []
        for idx, (g, t) in enumerate(shape):
            cv = f"{var}_{idx}"
            self.emit(f"    {cv} = toks[i-{g + 1}]")
            if t != 0:
                ok_checks.append(f"type({cv}) is int")
                parts.append(f"{cv} + {t}" if t > 0 else f"{cv} - {-t}")
            else:
                parts.append(cv)
        tup = ", ".join(parts) + ("," if len(parts) == 1 else "")
        if ok_checks:
            self.emit(f"    if {' and '.join(ok_checks)}:")
            self.emit(f"        {var} = ({tup})")
        else:
            self.emit(f"    {var} = ({tup})")
        self.query_shape[shape] = var
        return var

    # -- expression compilation --------------------------------------------------

    def _or_terms(self, expr) -> List[object] | None:
        """Recognize the canonical not(and(not a, not b)) disjunction shape."""
        if not (isinstance(expr, Not) and isinstance(expr.arg, And)):
            return None

        def negs(e) -> List[object] | None:
            if isinstance(e, Not):
                return [e.arg]
            if isinstance(e, And):
                l, r = negs(e.left), negs(e.right)
                if l is None or r is None:
                    return None
                return l + r
            return None

        return negs(expr.arg)

    def bool_expr(self, expr) -> str:
        if expr in self.memo:
            return self.memo[expr]
        if isinstance(expr, Sym):
            out = f"(t == {expr.symbol!r})"
        elif isinstance(expr, Top):
            out = "1"
        elif isinstance(expr, Periodic):
            out = f"(i % {expr.modulus} == {expr.residue})"
        elif isinstance(expr, BoolRef):
            out = self.def_var[expr.name]
        elif isinstance(expr, Not):
            terms = self._or_terms(expr)
            if terms is not None:
                parts = " or ".join(self.bool_expr(tm) for tm in terms)
                out = self._var(expr, f"1 if {parts} else 0")
            else:
                out = f"(1 - {self.bool_expr(expr.arg)})"
        elif isinstance(expr, And):
            out = f"({self.bool_expr(expr.left)} and {self.bool_expr(expr.right)})"
        elif isinstance(expr, Le):
            out = f"({self.count_expr(expr.left)} <= {self.count_expr(expr.right)})"
        else:
            raise EvalError(f"not a Boolean expression: {expr!r}")
        self.memo[expr] = out
        return out

    def _var(self, expr, rhs: str) -> str:
        v = self.tmp()
        self.emit(f"{v} = {rhs}")
        self.memo[expr] = v
        return v

    def count_expr(self, expr) -> str:
        if expr in self.memo:
            return self.memo[expr]
        if isinstance(expr, One):
            out = "1"
        elif isinstance(expr, CountRef):
            out = self.def_var[expr.name]
        elif isinstance(expr, Add):
            out = f"({self.count_expr(expr.left)} + {self.count_expr(expr.right)})"
        elif isinstance(expr, Sub):
            out = f"({self.count_expr(expr.left)} - {self.count_expr(expr.right)})"
        elif isinstance(expr, Cond):
            g = self.bool_expr(expr.guard)
            out = f"({self.count_expr(expr.then)} if {g} else {self.count_expr(expr.orelse)})"
        elif isinstance(expr, Count):
            out = self._count(expr)
        elif isinstance(expr, MatchCount):
            out = self._match_count(expr)
        else:
            raise EvalError(f"not a count expression: {expr!r}")
        self.memo[expr] = out
        return out

    def _count(self, expr: Count) -> str:
        if isinstance(expr.rel, Always):
            slot = self.counter_slot.get(expr)
            if slot is None:
                slot = self.counter_slot[expr] = self.n_counters
                self.n_counters += 1
            pv = self.bool_expr(expr.pred)
            v = self.tmp()
            self.emit(f"{v} = _C[{slot}] + (1 if {pv} else 0)")
            self.emit(f"_C[{slot}] = {v}")
            return v
        d = expr.rel.delta
        pred = expr.pred
        if d == 0:
            return f"(1 if {self.bool_expr(pred)} else 0)"
        if isinstance(pred, Sym):
            return f"(1 if i > {d} and toks[i-{d + 1}] == {pred.symbol!r} else 0)"
        if isinstance(pred, Top):
            return f"(1 if i > {d} else 0)"
        if isinstance(pred, Periodic):
            return (f"(1 if i > {d} and (i - {d}) % {pred.modulus} == "
                    f"{pred.residue} else 0)")
        if isinstance(pred, BoolRef):
            slot = self.def_hist_slot[pred.name]
            return f"(_H[{slot}][i-{d + 1}] if i > {d} else 0)"
        # general predicate: retain its per-position history
        slot = self.hist_slot.get(pred)
        if slot is None:
            slot = self.hist_slot[pred] = self.n_hists
            self.n_hists += 1
            pv = self.bool_expr(pred)
            self.emit(f"_H[{slot}].append(1 if {pv} else 0)")
        return f"(_H[{slot}][i-{d + 1}] if i > {d} else 0)"

    def _match_count(self, expr: MatchCount) -> str:
        slot = self.match_slot.get(expr)
        deltas = tuple(d for d, _, _ in expr.chi.conjuncts)
        qshape = tuple((g, t) for _, g, t in expr.chi.conjuncts)
        efp = self.entry_fp(deltas)
        qfp = self.query_fp(qshape)
        if slot is None:
            slot = self.match_slot[expr] = self.n_matches
            self.n_matches += 1
            if expr.pred is None:
                cond = f"{efp} is not None"
            else:
                cond = f"{efp} is not None and {self.bool_expr(expr.pred)}"
            self.emit(f"if {cond}:")
            self.emit(f"    _m = _M[{slot}]")
            self.emit(f"    _m[{efp}] = _m.get({efp}, 0) + 1")
        v = self.tmp()
        self.emit(f"{v} = _M[{slot}].get({qfp}, 0) if {qfp} is not None else 0")
        return v

    # -- whole plan ------------------------------------------------------------

    def build(self) -> str:
        for _, expr in self.program.defs:
            self._scan(expr)
        for k, (name, expr) in enumerate(self.program.defs):
            if name in self.def_hist_needed:
                self.def_hist_slot[name] = self.n_hists
                self.n_hists += 1
        for k, (name, expr) in enumerate(self.program.defs):
            var = f"v{k}"
            if self.kinds[name] == "bool":
                rhs = self.bool_expr(expr)
                self.emit(f"{var} = 1 if {rhs} else 0")
            else:
                self.emit(f"{var} = {self.count_expr(expr)}")
            self.def_var[name] = var
            self.memo[BoolRef(name)] = var
            self.memo[CountRef(name)] = var
            if name in self.def_hist_slot:
                self.emit(f"_H[{self.def_hist_slot[name]}].append({var})")
        ret = ", ".join(f"v{k}" for k in range(len(self.program.defs)))
        if len(self.program.defs) == 1:
            ret += ","
        body = "\n".join(self.lines) if self.lines else "        pass"
        return (
            "def make():\n"
            f"    _C = [0] * {max(1, self.n_counters)}\n"
            f"    _H = [[] for _ in range({max(1, self.n_hists)})]\n"
            f"    _M = [dict() for _ in range({max(1, self.n_matches)})]\n"
            "    def step(toks, i):\n"
            "        t = toks[i-1]\n"
            f"{body}\n"
            f"        return ({ret})\n"
            "    return step\n"
        )
