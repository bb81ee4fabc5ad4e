import pytest
from hypothesis import given, settings, strategies as st

from crasp_forge.cot import (
    AnchorNotSignpost, CotProgram, GenerationResult, IndexUnderflow,
    MalformedAnnotation, MultipleActive, OutputClause, SignpostClause,
    ZeroActive, annotate, deannotate, extract_answer, generate, next_token,
    validate_cot,
)
from crasp_forge.program import (
    Always, And, Count, CSTAR_RASP, Le, Not, OffsetRel, One, Program,
    ProgramError, Sym, Top, eq, ge1,
)
from crasp_forge.tokens import EOS, SEP


def test_next_token_initial(parity):
    assert next_token(parity, list("1101")) == "E"


def test_next_token_copies_after_sep(parity):
    prefix = list("1101") + ["E", "O", "E", "O", SEP]
    assert next_token(parity, prefix) == "O"


def test_generate_parity_1101(parity):
    r = generate(parity, list("1101"), 64)
    assert r.completed
    assert r.trace == ("E", "O", "E", "O", SEP, "O", EOS)
    assert r.answer == ("O",)
    assert r.steps == 7


def test_generate_parity_zero(parity):
    r = generate(parity, list("0"), 64)
    assert r.trace == ("E", SEP, "E", EOS)
    assert r.answer == ("E",)


def test_budget_exhaustion_never_emits_eos(parity):
    r = generate(parity, list("1101"), 3)
    assert not r.completed
    assert r.answer is None
    assert EOS not in r.trace
    assert r.steps == 3


def _tiny_program(*outputs):
    base = Program(CSTAR_RASP, ("x", SEP, EOS),
                   (("Always", Top()), ("Never", Not(Top()))))
    return CotProgram(base, outputs, input_alphabet=("x",))


def test_multiple_active_is_surfaced():
    cp = _tiny_program(OutputClause("x", "Always"), OutputClause(SEP, "Always"))
    with pytest.raises(MultipleActive) as err:
        next_token(cp, ["x"])
    assert set(err.value.active) == {"Always"}
    assert err.value.position == 1


def test_zero_active_is_surfaced():
    cp = _tiny_program(OutputClause("x", "Never"))
    with pytest.raises(ZeroActive):
        next_token(cp, ["x"])


def test_generation_error_carries_step(parity):
    # after the full trace, every guard is false again
    full = list("1101") + ["E", "O", "E", "O", SEP, "O", EOS]
    with pytest.raises(ZeroActive) as err:
        next_token(parity, full)
    assert err.value.step == 1


def test_signpost_anchor_must_be_signpost():
    base = Program(CSTAR_RASP, ("x", SEP, EOS), (("Always", Top()),))
    cp = CotProgram(base, (), (SignpostClause(1, 0, "Always"),),
                    input_alphabet=("x",))
    with pytest.raises(AnchorNotSignpost):
        next_token(cp, ["x", "x"])
    assert next_token(cp, ["x", 5]) == 5


def test_index_underflow():
    base = Program(CSTAR_RASP, ("x", SEP, EOS), (("Always", Top()),))
    cp = CotProgram(base, (), (SignpostClause(1, -1, "Always"),),
                    input_alphabet=("x",))
    with pytest.raises(IndexUnderflow):
        next_token(cp, ["x", 1])
    assert next_token(cp, ["x", 2]) == 1


def test_output_clause_uniqueness_validated():
    with pytest.raises(ProgramError, match="two output clauses"):
        validate_cot(_tiny_program(OutputClause("x", "Always"),
                                   OutputClause("x", "Never")))


def test_signposts_rejected_for_finite_dialects(parity):
    cp = CotProgram(parity.base, parity.outputs,
                    (SignpostClause(1, 0, "Init"),),
                    input_alphabet=parity.input_alphabet)
    with pytest.raises(ProgramError, match="cstar-rasp"):
        validate_cot(cp)


def test_annotate_examples():
    assert annotate(["a", "b"], 1) == ["a", 1, "b", 2]
    assert annotate([], 5) == []
    assert annotate(["a", "b", "c"], 40) == ["a", 40, "b", 41, "c", 42]


def test_deannotate_examples():
    assert deannotate(["a", 7, "b", 8]) == ["a", "b"]
    assert deannotate([]) == []
    with pytest.raises(MalformedAnnotation):
        deannotate(["a", 7, "b", 9])
    with pytest.raises(MalformedAnnotation):
        deannotate(["a", 7, "b"])
    with pytest.raises(MalformedAnnotation):
        deannotate([7, "a"])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from("ab"), max_size=20), st.integers(1, 50))
def test_annotate_deannotate_inverse(symbols, start):
    assert deannotate(annotate(symbols, start)) == symbols


def test_answer_takes_last_sep():
    trace = ["a", SEP, "b", SEP, "c", "d", EOS]
    assert extract_answer(trace) == ["c", "d"]
    assert extract_answer(["a", EOS]) == []


def test_generate_is_deterministic(parity):
    a = generate(parity, list("10110"), 64)
    b = generate(parity, list("10110"), 64)
    assert a == b


def test_eos_exactly_once_at_end(parity):
    for w in ("1", "0", "1101", "000101"):
        r = generate(parity, list(w), 128)
        assert r.completed
        assert r.trace.count(EOS) == 1
        assert r.trace[-1] == EOS
