"""Compile a Turing machine into a CoT program over the signpost alphabet.

The emitted trace simulates the machine in fixed-shape blocks.  Single-tape
blocks are ``q c $ e`` (4 tokens); with T tapes the heads are tagged,
``q t1 c .. tT c $ e1 .. eT`` (2 + 3T tokens).  Cell contents are never
stored: each cell is addressed by a signpost, writes are logged as
``WRITE(old->new)`` events, and the symbol under a head is recovered as the
balance of matching write events plus the annotated input.

Protocol around the blocks:

* bootstrap: a rewind walk ``REWIND c`` hops from the last input signpost
  down to cell 1, then the step-0 block ``q0 c1 $`` is emitted;
* when the block state is halting, another rewind walk returns to cell 1;
* output phase: ``<SEP>``, then symbol/signpost pairs read off the output
  tape by balance counts, and ``<EOS>`` at the first blank cell.

Token accounting (see trace_length_check): each simulated step emits one
block, so single-tape simulation is exactly 4N tokens; the step-0 block and
the rewind walks are bootstrap/teardown and sit outside that 4N; the whole
trace is bounded by C_BOUND * T * max(1, N + |w|).

An empty input has no signposts, so the prompt for compiled programs is
``BEGIN c1`` in that case (cell 1 reads as blank); use tm_prompt().
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .cot import CotProgram, OutputClause, SignpostClause, annotate, deannotate, generate
from .program import (
    Add, Always, And, BoolRef, Cond, Count, CountRef, Le, MatchCount,
    MatchPredicate, Not, OffsetRel, One, Program, Sub, Sym, Top, b_and, b_or,
    eq, ge1, nat, CSTAR_RASP,
)
from .stepper import EvalState
from .tm import RunResult, TmSpec, simulate
from .tokens import EOS, SEP, Token

C_BOUND = 24

DOLLAR = "$"
KEEP = "KEEP"
REWIND = "REWIND"
BEGIN = "BEGIN"


class CompileError(ValueError):
    pass


def write_symbol(old: str, new: str) -> str:
    return f"WRITE({old}->{new})"


def tape_symbol(k: int) -> str:
    return f"TAPE{k}"


def tm_prompt(w: Sequence[str], start: int = 1) -> List[Token]:
    """Annotated prompt for a compiled program; empty input gets a begin pair."""
    if len(w) == 0:
        return [BEGIN, start]
    return annotate(list(w), start)


@dataclass
class _Builder:
    defs: List[Tuple[str, object]] = field(default_factory=list)
    names: set = field(default_factory=set)

    def add(self, name: str, expr) -> BoolRef:
        if name in self.names:
            raise CompileError(f"duplicate definition {name!r}")
        self.names.add(name)
        self.defs.append((name, expr))
        return name


def _frag(sym: str, pool: Sequence[str], prefix: str) -> str:
    if sym.isalnum():
        return sym
    return f"{prefix}{list(pool).index(sym)}"


def compile_tm(m: TmSpec) -> CotProgram:
    """Emit the CoT program simulating ``m`` on annotated inputs."""
    T = m.n_tapes
    out_tape = m.output_tape
    gamma = list(m.tape_alphabet)
    nonblank = [s for s in gamma if s != m.blank]
    specials = {DOLLAR, KEEP, REWIND, BEGIN, SEP, EOS}
    if set(m.states) & set(gamma):
        raise CompileError("states and tape symbols must be disjoint")
    if (set(m.states) | set(gamma)) & specials:
        raise CompileError(f"machine names collide with reserved symbols {specials}")

    writes = [(a, b) for a in gamma for b in gamma if a != b]
    alphabet: List[str] = list(nonblank)
    alphabet += [q for q in m.states]
    alphabet += [DOLLAR, KEEP, REWIND, BEGIN, SEP, EOS]
    alphabet += [write_symbol(a, b) for a, b in writes]
    if T > 1:
        alphabet += [tape_symbol(k) for k in range(1, T + 1)]

    gfrag = {s: _frag(s, gamma, "g") for s in gamma}
    qfrag = {q: _frag(q, m.states, "q") for q in m.states}

    b = _Builder()
    add = b.add

    def bref(name: str) -> BoolRef:
        return BoolRef(name)

    # --- phase bookkeeping ---------------------------------------------------
    add("CntDollar", Count(Always(), Sym(DOLLAR)))
    add("CntSep", Count(Always(), Sym(SEP)))
    add("CntRewind", Count(Always(), Sym(REWIND)))
    add("CntState", Count(Always(), b_or(*[Sym(q) for q in m.states])))
    add("SeenDollar", ge1(CountRef("CntDollar")))
    add("SeenSep", ge1(CountRef("CntSep")))
    add("SeenRewind", ge1(CountRef("CntRewind")))
    add("SeenState", ge1(CountRef("CntState")))

    # --- token classes ---------------------------------------------------------
    add("IsState", b_or(*[Sym(q) for q in m.states]))
    add("IsAns", b_or(*[Sym(s) for s in nonblank]))
    add("IsInput", b_or(*[Sym(s) for s in m.input_alphabet]) if m.input_alphabet else Not(Top()))
    add("IsFinite", b_or(*[Sym(s) for s in alphabet]))
    add("IsSign", Not(BoolRef("IsFinite")))
    marker_syms = list(m.states) + [REWIND] + ([tape_symbol(k) for k in range(1, T + 1)] if T > 1 else [])
    add("IsMarker", b_or(*[Sym(s) for s in marker_syms]))

    # --- previous-token helpers -------------------------------------------------
    add("PrevDollar", ge1(Count(OffsetRel(1), Sym(DOLLAR))))
    add("PrevSep", ge1(Count(OffsetRel(1), Sym(SEP))))
    add("PrevRewind", ge1(Count(OffsetRel(1), Sym(REWIND))))
    add("PrevMarker", ge1(Count(OffsetRel(1), BoolRef("IsMarker"))))
    add("PrevInput", ge1(Count(OffsetRel(1), BoolRef("IsInput"))))
    if T == 1:
        add("PrevState", ge1(Count(OffsetRel(1), BoolRef("IsState"))))
    else:
        for k in range(1, T + 1):
            add(f"PrevTape{k}", ge1(Count(OffsetRel(1), Sym(tape_symbol(k)))))
    for s in m.input_alphabet:
        add(f"PrevIs_{gfrag[s]}", ge1(Count(OffsetRel(1), Sym(s))))

    # --- first-cell detection -----------------------------------------------------
    def zero_matches(name: str, gamma_off: int, pred_name: str) -> str:
        chi = MatchPredicate(((0, gamma_off, -1),))
        return add(name, eq(MatchCount(chi, BoolRef(pred_name)), nat(0)))

    zero_matches("BootFirstCell", 0, "PrevInput")
    zero_matches("HaltFirstCell", 0, "PrevMarker")

    # --- block geometry --------------------------------------------------------
    state_off = 2 if T == 1 else 2 * T + 1
    cell_off = {k: (1 if T == 1 else 2 * T + 1 - 2 * k) for k in range(1, T + 1)}
    evt_cell_off = {k: (2 if T == 1 else 2 * T + 1 - k) for k in range(1, T + 1)}
    rewind_off = 2 if T == 1 else 2 * T + 2 - 2 * out_tape
    head_anchor = 3 if T == 1 else 3 * T + 1
    move_off = {k: (2 if T == 1 else 2 * k + T) for k in range(1, T + 1)}

    zero_matches("HaltRewindCell1", rewind_off, "PrevMarker")

    # --- decoding the current block at $ -----------------------------------------
    for q in m.states:
        add(f"CurrState_{qfrag[q]}",
            And(Sym(DOLLAR), ge1(Count(OffsetRel(state_off), Sym(q)))))
    add("CurrHalt", b_or(*[bref(f"CurrState_{qfrag[q]}") for q in m.halting])
        if m.halting else Not(Top()))

    # event-slot predicates: the k-th event token has its $ at distance k
    for k in range(1, T + 1):
        add(f"AtEvtSlot{k}", ge1(Count(OffsetRel(k), Sym(DOLLAR))))

    # --- balance families ----------------------------------------------------------
    def balance_family(tag: str, tape: int, anchor_g: int, shift: int,
                       has_input: bool) -> None:
        """Defs {tag}N_.., {tag}Init_.., {tag}Bal_.., {tag}One_.. for one anchor."""
        slot = f"AtEvtSlot{tape}"
        for a, c in writes:
            chi = MatchPredicate(((evt_cell_off[tape], anchor_g, shift),))
            pred = And(Sym(write_symbol(a, c)), bref(slot))
            add(f"{tag}N_{gfrag[a]}_{gfrag[c]}", MatchCount(chi, pred))
        if has_input:
            for s in m.input_alphabet:
                chi = MatchPredicate(((0, anchor_g, shift),))
                add(f"{tag}Init_{gfrag[s]}",
                    ge1(MatchCount(chi, bref(f"PrevIs_{gfrag[s]}"))))
            blank_expr = Not(b_or(*[bref(f"{tag}Init_{gfrag[s]}")
                                    for s in m.input_alphabet])) \
                if m.input_alphabet else Top()
            add(f"{tag}Init_{gfrag[m.blank]}", blank_expr)
            for s in gamma:
                if s != m.blank and s not in m.input_alphabet:
                    add(f"{tag}Init_{gfrag[s]}", Not(Top()))
        else:
            for s in gamma:
                expr = Top() if s == m.blank else Not(Top())
                add(f"{tag}Init_{gfrag[s]}", expr)
        for s in gamma:
            bal = _ind(bref(f"{tag}Init_{gfrag[s]}"))
            for a, c in writes:
                term = CountRef(f"{tag}N_{gfrag[a]}_{gfrag[c]}")
                if c == s:
                    bal = _add(bal, term)
                elif a == s:
                    bal = _sub(bal, term)
            add(f"{tag}Bal_{gfrag[s]}", bal)
            add(f"{tag}One_{gfrag[s]}", eq(CountRef(f"{tag}Bal_{gfrag[s]}"), One()))

    for k in range(1, T + 1):
        balance_family(f"T{k}", k, cell_off[k], 0, has_input=(k == 1))
    sep_tag = f"T{out_tape}" if cell_off[out_tape] == 1 else "Sep"
    if sep_tag == "Sep":
        balance_family("Sep", out_tape, 1, 0, has_input=(out_tape == 1))
    balance_family("Walk", out_tape, 0, 1, has_input=(out_tape == 1))

    # --- transition table as finite disjunctions --------------------------------
    def rule_guard(rule) -> object:
        terms = [bref(f"CurrState_{qfrag[rule.state]}")]
        for k in range(1, T + 1):
            terms.append(bref(f"T{k}One_{gfrag[rule.reads[k - 1]]}"))
        return b_and(*terms)

    by_state: Dict[str, List] = {q: [] for q in m.states}
    keep_terms: Dict[int, List] = {k: [] for k in range(1, T + 1)}
    write_terms: Dict[Tuple[int, str, str], List] = {}
    move_terms: Dict[Tuple[int, str], List] = {}
    for rule in m.rules:
        g = rule_guard(rule)
        by_state[rule.new_state].append(g)
        for k in range(1, T + 1):
            sym, direction = rule.writes[k - 1]
            old = rule.reads[k - 1]
            if sym == old:
                keep_terms[k].append(g)
            else:
                write_terms.setdefault((k, old, sym), []).append(g)
            move_terms.setdefault((k, direction), []).append(g)

    for q in m.states:
        add(f"NextQ_{qfrag[q]}", b_or(*by_state[q]) if by_state[q] else Not(Top()))
    for k in range(1, T + 1):
        add(f"NextKeep{k}", b_or(*keep_terms[k]) if keep_terms[k] else Not(Top()))
        for a, c in writes:
            terms = write_terms.get((k, a, c), [])
            add(f"NextW{k}_{gfrag[a]}_{gfrag[c]}",
                b_or(*terms) if terms else Not(Top()))
        for d in "LRS":
            terms = move_terms.get((k, d), [])
            add(f"Move{k}_{d}", b_or(*terms) if terms else Not(Top()))
        add(f"AtCell1Dollar{k}",
            And(Sym(DOLLAR),
                eq(MatchCount(MatchPredicate(((0, cell_off[k], -1),)),
                              BoolRef("PrevMarker")), nat(0))))

    # shifted forms evaluated at the emission positions
    for q in m.states:
        add(f"ShNextQ_{qfrag[q]}",
            ge1(Count(OffsetRel(T), bref(f"NextQ_{qfrag[q]}"))))
    for k in range(2, T + 1):
        add(f"ShNextKeep{k}", ge1(Count(OffsetRel(k - 1), bref(f"NextKeep{k}"))))
        for a, c in writes:
            add(f"ShNextW{k}_{gfrag[a]}_{gfrag[c]}",
                ge1(Count(OffsetRel(k - 1), bref(f"NextW{k}_{gfrag[a]}_{gfrag[c]}"))))
    for k in range(1, T + 1):
        for d in "LRS":
            add(f"ShMove{k}_{d}", ge1(Count(OffsetRel(move_off[k]), bref(f"Move{k}_{d}"))))
        add(f"ShAtCell1_{k}", ge1(Count(OffsetRel(move_off[k]), bref(f"AtCell1Dollar{k}"))))

    halt_start = m.start in m.halting
    outputs: List[OutputClause] = []
    signposts: List[SignpostClause] = []
    sign_guards: Dict[Tuple[int, int], List] = {}

    def out(symbol: str, name: str, expr) -> None:
        outputs.append(OutputClause(symbol, add(name, expr)))

    def sig(anchor: int, d: int, expr) -> None:
        sign_guards.setdefault((anchor, d), []).append(expr)

    not_seen_state = Not(bref("SeenState"))
    in_output = bref("SeenSep")
    pre_output = Not(bref("SeenSep"))

    if halt_start:
        # the machine never runs: rewind to cell 1, then read the tape out
        out(REWIND, "EmitRewind",
            b_or(Not(bref("SeenRewind")),
                 b_and(bref("IsSign"), bref("SeenRewind"), pre_output,
                       Not(bref("BootFirstCell")))))
        out(SEP, "EmitSep",
            b_and(bref("IsSign"), bref("SeenRewind"), pre_output,
                  bref("BootFirstCell")))
        sig(1, 0, And(Sym(REWIND), eq(CountRef("CntRewind"), One())))
        sig(1, -1, And(Sym(REWIND), Le(nat(2), CountRef("CntRewind"))))
    else:
        # bootstrap: walk from the last input signpost down to cell 1
        out(REWIND, "EmitRewind",
            b_or(b_and(Not(bref("SeenRewind")), not_seen_state),
                 b_and(bref("IsSign"), bref("SeenRewind"), not_seen_state,
                       Not(bref("BootFirstCell"))),
                 And(Sym(DOLLAR), bref("CurrHalt")),
                 b_and(bref("IsSign"), bref("PrevRewind"), bref("SeenState"),
                       pre_output, Not(bref("HaltFirstCell")))))
        sig(1, 0, b_and(Sym(REWIND), not_seen_state, eq(CountRef("CntRewind"), One())))
        boot_walk = b_and(Sym(REWIND), not_seen_state, Le(nat(2), CountRef("CntRewind")))
        halt_walk = b_and(Sym(REWIND), bref("SeenState"), Not(bref("PrevDollar")))
        sig(1, -1, b_or(boot_walk, halt_walk))

        # step-0 block
        start_guard = b_and(bref("IsSign"), bref("SeenRewind"), not_seen_state,
                            bref("BootFirstCell"))
        for q in m.states:
            guard = bref(f"ShNextQ_{qfrag[q]}")
            if q == m.start:
                guard = b_or(start_guard, guard)
            out(q, f"EmitState_{qfrag[q]}", guard)

        if T == 1:
            sig(1, 0, b_and(bref("IsState"), Not(bref("SeenDollar"))))
            out(DOLLAR, "EmitDollar",
                b_and(bref("IsSign"), bref("PrevState"), pre_output))
        else:
            out(tape_symbol(1), "EmitTape1", bref("IsState"))
            for k in range(2, T + 1):
                out(tape_symbol(k), f"EmitTape{k}",
                    b_and(bref("IsSign"), bref(f"PrevTape{k - 1}")))
            sig(2, 0, b_and(Sym(tape_symbol(1)), Not(bref("SeenDollar"))))
            for k in range(2, T + 1):
                sig(1, 0, b_and(Sym(tape_symbol(k)), Not(bref("SeenDollar"))))
            out(DOLLAR, "EmitDollar",
                b_and(bref("IsSign"), bref(f"PrevTape{T}"), pre_output))

        # event slots
        keep_guards = [And(Sym(DOLLAR), bref("NextKeep1"))]
        keep_guards += [bref(f"ShNextKeep{k}") for k in range(2, T + 1)]
        out(KEEP, "EmitKeep", b_or(*keep_guards))
        for a, c in writes:
            wguards = [And(Sym(DOLLAR), bref(f"NextW1_{gfrag[a]}_{gfrag[c]}"))]
            wguards += [bref(f"ShNextW{k}_{gfrag[a]}_{gfrag[c]}")
                        for k in range(2, T + 1)]
            out(write_symbol(a, c), f"EmitW_{gfrag[a]}_{gfrag[c]}", b_or(*wguards))

        # simulation head slots
        for k in range(1, T + 1):
            at_slot = (b_and(bref("IsState"), bref("SeenDollar")) if T == 1
                       else b_and(Sym(tape_symbol(k)), bref("SeenDollar")))
            sig(head_anchor, -1,
                b_and(at_slot, bref(f"ShMove{k}_L"), Not(bref(f"ShAtCell1_{k}"))))
            sig(head_anchor, 0,
                b_and(at_slot, b_or(bref(f"ShMove{k}_S"),
                                    And(bref(f"ShMove{k}_L"), bref(f"ShAtCell1_{k}")))))
            sig(head_anchor, 1, b_and(at_slot, bref(f"ShMove{k}_R")))

        # halt rewind: first hop anchors at the halting block's output-tape head
        first_hop = b_and(Sym(REWIND), bref("SeenState"), bref("PrevDollar"))
        sig(rewind_off, -1, b_and(first_hop, Not(bref("HaltRewindCell1"))))
        sig(rewind_off, 0, b_and(first_hop, bref("HaltRewindCell1")))

        out(SEP, "EmitSep",
            b_and(bref("IsSign"), bref("PrevRewind"), bref("SeenState"),
                  pre_output, bref("HaltFirstCell")))

    # output phase (same for both variants)
    for s in nonblank:
        out(s, f"EmitAns_{gfrag[s]}",
            b_or(And(Sym(SEP), bref(f"{sep_tag}One_{gfrag[s]}")),
                 b_and(bref("IsSign"), in_output, bref(f"WalkOne_{gfrag[s]}"))))
    out(EOS, "EmitEos",
        b_or(And(Sym(SEP), bref(f"{sep_tag}One_{gfrag[m.blank]}")),
             b_and(bref("IsSign"), in_output, bref(f"WalkOne_{gfrag[m.blank]}"))))
    sig(2, 0, b_and(bref("IsAns"), in_output, bref("PrevSep")))
    sig(1, 1, b_and(bref("IsAns"), in_output, Not(bref("PrevSep"))))

    for (anchor, d), guards in sorted(sign_guards.items()):
        name = add(f"EmitSign_{anchor}_{'m' if d < 0 else 'p' if d > 0 else 'z'}",
                   b_or(*guards))
        signposts.append(SignpostClause(anchor, d, name))

    base = Program(CSTAR_RASP, tuple(alphabet), tuple(b.defs))
    return CotProgram(base=base, outputs=tuple(outputs),
                      signpost_outputs=tuple(signposts),
                      input_alphabet=tuple(m.input_alphabet))


def _ind(guard) -> Cond:
    return Cond(guard, One(), nat(0))


def _add(a, c) -> Add:
    return Add(a, c)


def _sub(a, c) -> Sub:
    return Sub(a, c)


# --- trace structure -----------------------------------------------------------

class TraceFormatError(ValueError):
    pass


@dataclass
class ParsedTrace:
    boot_pairs: int
    configs: List[Tuple[str, Tuple[int, ...]]]   # (state, head cells) per block
    events: List[Tuple[Optional[Tuple[str, str]], ...]]  # per transition, per tape
    rewind_pairs: int
    answer: Tuple[Token, ...]
    finished: bool
    simulation_tokens: int
    output_tokens: int
    dollar_positions: List[int]  # 1-based positions in prompt+trace


def parse_trace(m: TmSpec, prompt: Sequence[Token], trace: Sequence[Token]) -> ParsedTrace:
    """Split a generated trace into its phases and decode the blocks."""
    T = m.n_tapes
    halt_start = m.start in m.halting
    toks = list(trace)
    states = set(m.states)
    write_syms = {write_symbol(a, b): (a, b)
                  for a in m.tape_alphabet for b in m.tape_alphabet if a != b}
    pos = 0
    base = len(prompt)

    def need(kind_ok, what):
        nonlocal pos
        if pos >= len(toks):
            raise TraceFormatError(f"trace ended while expecting {what}")
        t = toks[pos]
        if not kind_ok(t):
            raise TraceFormatError(f"expected {what} at trace offset {pos}, got {t!r}")
        pos += 1
        return t

    boot_pairs = 0
    while pos < len(toks) and toks[pos] == REWIND:
        pos += 1
        need(lambda t: isinstance(t, int), "a rewind signpost")
        boot_pairs += 1

    configs: List[Tuple[str, Tuple[int, ...]]] = []
    events: List[Tuple[Optional[Tuple[str, str]], ...]] = []
    dollar_positions: List[int] = []
    sim_start = pos

    if not halt_start:
        while True:
            q = need(lambda t: t in states, "a state symbol")
            heads = []
            for k in range(1, T + 1):
                if T > 1:
                    need(lambda t, k=k: t == tape_symbol(k), f"tape tag {k}")
                heads.append(need(lambda t: isinstance(t, int), "a head signpost"))
            need(lambda t: t == DOLLAR, "the block separator")
            dollar_positions.append(base + pos)
            configs.append((q, tuple(heads)))
            if q in m.halting:
                break
            evs = []
            for k in range(T):
                e = need(lambda t: t == KEEP or t in write_syms, "an event token")
                evs.append(None if e == KEEP else write_syms[e])
            events.append(tuple(evs))
            if pos >= len(toks):
                break

    sim_tokens = pos - sim_start
    rewind_pairs = 0
    while pos < len(toks) and toks[pos] == REWIND:
        pos += 1
        need(lambda t: isinstance(t, int), "a rewind signpost")
        rewind_pairs += 1

    finished = False
    answer: List[Token] = []
    out_start = pos
    if pos < len(toks):
        need(lambda t: t == SEP, "the separator")
        while pos < len(toks) and toks[pos] != EOS:
            answer.append(toks[pos])
            pos += 1
        if pos < len(toks):
            need(lambda t: t == EOS, "the end marker")
            finished = True
    if pos != len(toks):
        raise TraceFormatError(f"trailing tokens after <EOS> at offset {pos}")
    init_block = 0 if halt_start else (2 + 2 * T if T > 1 else 3)
    return ParsedTrace(
        boot_pairs=boot_pairs,
        configs=configs,
        events=events,
        rewind_pairs=rewind_pairs,
        answer=tuple(answer),
        finished=finished,
        simulation_tokens=max(0, sim_tokens - init_block),
        output_tokens=len(toks) - out_start,
        dollar_positions=dollar_positions,
    )


# --- differential verification ---------------------------------------------------


@dataclass
class VerifyEntry:
    input: str
    ok: bool
    oracle_halted: bool
    oracle_steps: int
    checks: Dict[str, bool]
    detail: str = ""

    def failure(self) -> str:
        bad = [k for k, v in self.checks.items() if not v]
        return f"{self.input!r}: {', '.join(bad)} ({self.detail})" if bad else ""


@dataclass
class VerifyReport:
    machine_tapes: int
    entries: List[VerifyEntry]

    @property
    def ok(self) -> bool:
        return all(e.ok for e in self.entries)

    def failures(self) -> List[str]:
        return [e.failure() for e in self.entries if not e.ok]


def default_budget(w_len: int, steps: int, n_tapes: int) -> int:
    return C_BOUND * n_tapes * (steps + w_len + 2) + 64


def verify_one(m: TmSpec, cp: CotProgram, w: str,
               max_oracle_steps: int = 20000,
               budget_fn: Optional[Callable[[int, int], int]] = None,
               check_balances: bool = True,
               start: int = 1) -> VerifyEntry:
    oracle = simulate(m, w, max_oracle_steps)
    if budget_fn is not None:
        budget = budget_fn(len(w), oracle.steps)
    else:
        budget = default_budget(len(w), oracle.steps, m.n_tapes)
    prompt = tm_prompt(w, start)
    gen = generate(cp, prompt, budget)
    checks: Dict[str, bool] = {}
    detail = ""

    checks["halting"] = gen.completed == oracle.halted
    if oracle.halted and gen.completed:
        try:
            got = "".join(deannotate(gen.answer))
            first_sp = gen.answer[1] if len(gen.answer) >= 2 else None
            checks["answer"] = (got == oracle.output
                                and (first_sp is None or first_sp == start))
            if not checks["answer"]:
                detail = f"answer {got!r} vs oracle {oracle.output!r}"
        except Exception as exc:
            checks["answer"] = False
            detail = f"bad answer annotation: {exc}"
    parsed = None
    try:
        parsed = parse_trace(m, prompt, gen.trace)
        checks["blocks"] = True
    except TraceFormatError as exc:
        checks["blocks"] = False
        detail = detail or str(exc)
    if parsed is not None and oracle.halted and gen.completed:
        ok, why = _compare_steps(m, oracle, parsed, start)
        checks["steps"] = ok
        if not ok:
            detail = detail or why
        lr = _length_laws(m, w, oracle, parsed, len(gen.trace))
        checks["length"] = lr.ok
        if not lr.ok:
            detail = detail or lr.why
        if check_balances:
            ok, why = audit_balances(m, cp, oracle, prompt, gen.trace, parsed)
            checks["balance"] = ok
            if not ok:
                detail = detail or why
    entry = VerifyEntry(w, all(checks.values()), oracle.halted, oracle.steps,
                        checks, detail)
    return entry


def verify_equivalence(m: TmSpec, inputs: Sequence[str],
                       budget_fn: Optional[Callable[[int, int], int]] = None,
                       max_oracle_steps: int = 20000,
                       check_balances: bool = True,
                       start: int = 1) -> VerifyReport:
    """Run the compiled program against the direct simulator on each input."""
    cp = compile_tm(m)
    entries = [verify_one(m, cp, w, max_oracle_steps, budget_fn,
                          check_balances, start)
               for w in inputs]
    return VerifyReport(m.n_tapes, entries)


def _compare_steps(m: TmSpec, oracle: RunResult, parsed: ParsedTrace, start: int):
    if m.start in m.halting:
        # the compiled program skips simulation entirely for these machines
        if parsed.configs or parsed.events:
            return False, "unexpected blocks for a halt-at-start machine"
        return True, ""
    want = oracle.configs()
    if len(parsed.configs) != len(want):
        return False, f"{len(parsed.configs)} blocks vs oracle {len(want)} configs"
    for mstep, ((gq, gh), (wq, wh)) in enumerate(zip(parsed.configs, want)):
        wh_sp = tuple(start + c - 1 for c in wh)
        if gq != wq or gh != wh_sp:
            return False, f"block {mstep}: ({gq}, {gh}) vs oracle ({wq}, {wh_sp})"
    if len(parsed.events) != len(oracle.step_log):
        return False, "event count mismatch"
    for mstep, (gev, rec) in enumerate(zip(parsed.events, oracle.step_log)):
        if gev != rec.events:
            return False, f"step {mstep}: events {gev} vs oracle {rec.events}"
    return True, ""


@dataclass
class LengthReport:
    simulation_tokens: int
    output_tokens: int
    total_tokens: int
    oracle_steps: int
    per_step_tokens: int
    bound_limit: int
    ok: bool
    why: str = ""


def _length_laws(m: TmSpec, w: str, oracle: RunResult, parsed: ParsedTrace,
                 total: int) -> LengthReport:
    T = m.n_tapes
    n = oracle.steps
    per_block = 4 if T == 1 else 2 + 3 * T
    limit = C_BOUND * T * max(1, n + len(w))
    rep = LengthReport(parsed.simulation_tokens, parsed.output_tokens, total,
                       n, per_block, limit, True)
    if parsed.simulation_tokens != per_block * n:
        rep.ok, rep.why = False, (
            f"simulation tokens {parsed.simulation_tokens} != {per_block}*N={per_block * n}")
    elif parsed.output_tokens > 2 + 2 * (n + len(w)):
        rep.ok, rep.why = False, f"output tokens {parsed.output_tokens} over bound"
    elif total > limit:
        rep.ok, rep.why = False, f"total {total} over C bound {limit}"
    return rep


def trace_length_check(m: TmSpec, w: str, max_oracle_steps: int = 20000,
                       start: int = 1) -> LengthReport:
    """Token accounting for one halting run (see the module docstring)."""
    oracle = simulate(m, w, max_oracle_steps)
    if not oracle.halted:
        raise ValueError(f"machine does not halt on {w!r} within {max_oracle_steps} steps")
    cp = compile_tm(m)
    prompt = tm_prompt(w, start)
    gen = generate(cp, prompt, default_budget(len(w), oracle.steps, m.n_tapes))
    if not gen.completed:
        raise ValueError("generation did not complete within the default budget")
    parsed = parse_trace(m, prompt, gen.trace)
    return _length_laws(m, w, oracle, parsed, len(gen.trace))


def audit_balances(m: TmSpec, cp: CotProgram, oracle: RunResult,
                   prompt: Sequence[Token], trace: Sequence[Token],
                   parsed: ParsedTrace):
    """Replay the trace checking that at every block separator exactly one
    symbol per tape has balance 1 and that it is the oracle's head symbol."""
    gamma = list(m.tape_alphabet)
    gfrag = {s: _frag(s, gamma, "g") for s in gamma}
    names = [[f"T{k}Bal_{gfrag[s]}" for s in gamma] for k in range(1, m.n_tapes + 1)]
    under_head = _head_symbols(m, oracle)
    state = EvalState(cp.base)
    toks = list(prompt) + list(trace)
    dollars = set(parsed.dollar_positions)
    block = 0
    for pos, tok in enumerate(toks, start=1):
        state.append(tok)
        if pos in dollars:
            for k in range(m.n_tapes):
                ones = [s for s, nm in zip(gamma, names[k])
                        if state.value(nm) == 1]
                if len(ones) != 1:
                    return False, (f"block {block} tape {k + 1}: balance-1 set {ones}")
                if ones[0] != under_head[block][k]:
                    return False, (f"block {block} tape {k + 1}: balance says "
                                   f"{ones[0]!r}, oracle head reads {under_head[block][k]!r}")
            block += 1
    return True, ""


def _head_symbols(m: TmSpec, oracle: RunResult) -> List[Tuple[str, ...]]:
    """Symbol under each head after 0..N steps."""
    out = [rec.reads for rec in oracle.step_log]
    final = tuple(oracle.tapes[t].get(oracle.final_heads[t], m.blank)
                  for t in range(m.n_tapes))
    out.append(final)
    return out
