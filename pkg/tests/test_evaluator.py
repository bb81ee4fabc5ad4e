import pytest
from hypothesis import given, settings, strategies as st

from crasp_forge.evaluator import EvalError, evaluate
from crasp_forge.program import (
    Add, Always, And, BoolRef, Cond, Count, CountRef, CRASP, CRASP_POS,
    CSTAR_RASP, Le, MatchCount, MatchPredicate, Not, OffsetRel, One,
    Periodic, Program, Sub, Sym, Top, def_kinds,
)
from crasp_forge.stepper import EvalState

ALPHA = ("a", "b", "c")


def test_parity_count_of_ones(parity):
    table = evaluate(parity.base, list("1101"))
    assert table.value("C_1", 4) == 3
    assert [table.value("C_1", i) for i in (1, 2, 3, 4)] == [1, 2, 2, 3]


def test_count_all_positions_equals_index():
    prog = Program(CRASP, ALPHA, (("N", Count(Always(), Top())),))
    table = evaluate(prog, ["a", "b", "c", "a"])
    assert list(table.columns["N"]) == [1, 2, 3, 4]


def test_matchcount_counts_equal_signposts():
    prog = Program(CSTAR_RASP, ALPHA,
                   (("M", MatchCount(MatchPredicate(((0, 0, 0),)))),))
    table = evaluate(prog, [3, 7, 3])
    # brute force over j <= i: position 3 matches positions 1 and 3
    assert list(table.columns["M"]) == [1, 1, 2]


def test_matchcount_shift():
    chi = MatchPredicate(((0, 1, 1),))  # token(j) == token(i-1) + 1
    prog = Program(CSTAR_RASP, ALPHA, (("M", MatchCount(chi)),))
    table = evaluate(prog, [2, 1, 5, 2])
    # at i=4: token(i-1)=5 -> target 6: no match; at i=3: token(2)=1 -> 2: j=1
    assert table.value("M", 3) == 1
    assert table.value("M", 4) == 0


def test_out_of_alphabet_token_rejected():
    prog = Program(CRASP, ALPHA, (("N", Count(Always(), Top())),))
    with pytest.raises(EvalError, match="not in the program alphabet"):
        evaluate(prog, ["a", "z"])


def test_incremental_rejects_bad_token_and_keeps_state():
    prog = Program(CRASP, ALPHA, (("N", Count(Always(), Top())),))
    st_ = EvalState(prog, ["a"])
    with pytest.raises(EvalError):
        st_.append("z")
    assert st_.position == 1
    assert st_.value("N") == 1


def test_periodic_positions():
    prog = Program(CRASP_POS, ALPHA, (("P", Periodic(3, 1)),))
    table = evaluate(prog, ["a"] * 7)
    assert list(table.columns["P"]) == [1, 0, 0, 1, 0, 0, 1]


# --- random-program agreement ------------------------------------------------

def _build_bool(draw, depth, bools, counts):
    pick = draw(st.integers(0, 5 if depth > 0 else 2))
    if pick == 0:
        return Sym(draw(st.sampled_from(ALPHA)))
    if pick == 1:
        return Top()
    if pick == 2:
        return BoolRef(draw(st.sampled_from(bools))) if bools else Top()
    if pick == 3:
        return Not(_build_bool(draw, depth - 1, bools, counts))
    if pick == 4:
        return And(_build_bool(draw, depth - 1, bools, counts),
                   _build_bool(draw, depth - 1, bools, counts))
    return Le(_build_count(draw, depth - 1, bools, counts),
              _build_count(draw, depth - 1, bools, counts))


def _build_count(draw, depth, bools, counts):
    pick = draw(st.integers(0, 7 if depth > 0 else 2))
    if pick == 0:
        return One()
    if pick == 1:
        return CountRef(draw(st.sampled_from(counts))) if counts else One()
    if pick == 2 or pick == 3:
        rel = Always() if draw(st.booleans()) else OffsetRel(draw(st.integers(0, 3)))
        return Count(rel, _build_bool(draw, max(0, depth - 1), bools, counts))
    if pick == 4:
        conj = tuple((draw(st.integers(0, 2)), draw(st.integers(0, 2)),
                      draw(st.integers(-2, 2)))
                     for _ in range(draw(st.integers(1, 2))))
        pred = (_build_bool(draw, depth - 1, bools, counts)
                if draw(st.booleans()) else None)
        return MatchCount(MatchPredicate(conj), pred)
    if pick == 5:
        return Add(_build_count(draw, depth - 1, bools, counts),
                   _build_count(draw, depth - 1, bools, counts))
    if pick == 6:
        return Sub(_build_count(draw, depth - 1, bools, counts),
                   _build_count(draw, depth - 1, bools, counts))
    return Cond(_build_bool(draw, depth - 1, bools, counts),
                _build_count(draw, depth - 1, bools, counts),
                _build_count(draw, depth - 1, bools, counts))


@st.composite
def programs(draw):
    n_defs = draw(st.integers(1, 5))
    defs, bools, counts = [], [], []
    for k in range(n_defs):
        if draw(st.booleans()):
            name = f"b{k}"
            defs.append((name, _build_bool(draw, 2, bools, counts)))
            bools.append(name)
        else:
            name = f"c{k}"
            defs.append((name, _build_count(draw, 2, bools, counts)))
            counts.append(name)
    prog = Program(CSTAR_RASP, ALPHA, tuple(defs))
    def_kinds(prog)
    return prog


tokens_st = st.lists(
    st.one_of(st.sampled_from(ALPHA), st.integers(1, 5)),
    min_size=1, max_size=12)


@settings(max_examples=120, deadline=None)
@given(programs(), tokens_st)
def test_incremental_matches_batch(prog, toks):
    table = evaluate(prog, toks)
    state = EvalState(prog)
    for i, tok in enumerate(toks, start=1):
        state.append(tok)
        for name in prog.names:
            assert state.value(name) == table.value(name, i), (name, i)


@settings(max_examples=60, deadline=None)
@given(programs(), tokens_st)
def test_counts_monotone_and_bounded(prog, toks):
    table = evaluate(prog, toks)
    for name, expr in prog.defs:
        if isinstance(expr, Count) and isinstance(expr.rel, Always):
            col = table.columns[name]
            assert all(col[i] <= col[i + 1] for i in range(len(col) - 1))
        if isinstance(expr, (Count, MatchCount)):
            col = table.columns[name]
            assert all(0 <= v <= i for i, v in enumerate(col, start=1))


@settings(max_examples=60, deadline=None)
@given(programs(), tokens_st, st.integers(0, 20))
def test_match_values_invariant_under_signpost_shift(prog, toks, delta):
    shifted = [t + delta if isinstance(t, int) else t for t in toks]
    t1 = evaluate(prog, toks)
    t2 = evaluate(prog, shifted)
    for name, expr in prog.defs:
        assert t1.columns[name] == t2.columns[name], name


@settings(max_examples=30, deadline=None)
@given(tokens_st.filter(lambda l: all(isinstance(t, str) for t in l)))
def test_crasp_program_unchanged_when_retagged_pos(toks):
    defs = (("C", Count(Always(), Sym("a"))),
            ("P", Le(One(), CountRef("C"))),
            ("D", Count(OffsetRel(1), BoolRef("P"))))
    p1 = Program(CRASP, ALPHA, defs)
    p2 = Program(CRASP_POS, ALPHA, defs)
    assert evaluate(p1, toks).columns == evaluate(p2, toks).columns


def test_stepper_plan_is_cached():
    from crasp_forge.stepper import plan_for

    prog = Program(CRASP, ALPHA, (("N", Count(Always(), Top())),))
    assert plan_for(prog) is plan_for(prog)
