import random
from itertools import product

import pytest
from hypothesis import given, settings, strategies as st

from crasp_forge.tm import TmFormatError, load_tm, simulate, value_change_log
from crasp_forge import zoo

MINIMAL = """
states: s h
input: 1
tape: 1 _
blank: _
start: s
halt: h
tapes: 1
output_tape: 1
s, (1) -> s, (1, R)
s, (_) -> h, (1, S)
"""


def test_minimal_machine_loads():
    m = load_tm(MINIMAL)
    assert len(m.states) == 2 and m.n_tapes == 1
    r = simulate(m, "11", 100)
    assert r.halted and r.output == "111"


def test_increment_totality(machines):
    m = machines["increment"]
    for q in m.states:
        if q in m.halting:
            continue
        for vec in product(m.tape_alphabet, repeat=m.n_tapes):
            assert (q, vec) in m.delta


def test_undeclared_symbol_rejected():
    with pytest.raises(TmFormatError, match="undeclared symbol"):
        load_tm(MINIMAL.replace("s, (_) -> h, (1, S)", "s, (_) -> h, (2, S)"))


def test_missing_transition_rejected():
    text = "\n".join(l for l in MINIMAL.splitlines() if "(_)" not in l)
    with pytest.raises(TmFormatError, match="missing transition"):
        load_tm(text)


def test_output_tape_range_checked():
    with pytest.raises(TmFormatError, match="output_tape"):
        load_tm(MINIMAL.replace("output_tape: 1", "output_tape: 2"))


# --- fixture behavior against independent oracles -------------------------------

def lsb_value(bits: str) -> int:
    return sum(1 << k for k, b in enumerate(bits) if b == "1")




def test_increment_matches_arithmetic(machines):
    m = machines["increment"]
    for n in range(0, 9):
        for bits in ("".join(p) for p in product("01", repeat=n)):
            r = simulate(m, bits, 1000)
            assert r.halted
            assert lsb_value(r.output) == lsb_value(bits) + 1, bits


def test_increment_spec_example(machines):
    r = simulate(machines["increment"], "011", 100)
    assert r.halted and r.output == "111"


def test_flip_matches_string_flip(machines):
    m = machines["flip"]
    for bits in ("", "0", "1", "0110", "111000"):
        r = simulate(m, bits, 1000)
        assert r.output == bits.replace("0", "x").replace("1", "0").replace("x", "1")


def test_unary_add(machines):
    m = machines["unary_add"]
    for a in range(0, 6):
        for b in range(0, 6):
            w = "1" * a + "+" + "1" * b
            r = simulate(m, w, 1000)
            assert r.halted and r.output == "1" * (a + b), w


def test_palindrome(machines):
    m = machines["palindrome"]
    for n in range(0, 8):
        for bits in ("".join(p) for p in product("01", repeat=n)):
            r = simulate(m, bits, 5000)
            want = "1" if bits == bits[::-1] else "0"
            assert r.halted and r.output == want, bits


def test_copy_and_reverse(machines):
    rng = random.Random(5)
    for _ in range(50):
        w = "".join(rng.choice("ab") for _ in range(rng.randint(0, 12)))
        r = simulate(machines["copy2"], w, 1000)
        assert r.halted and r.output == w
    for _ in range(50):
        w = "".join(rng.choice("01") for _ in range(rng.randint(0, 12)))
        r = simulate(machines["reverse2"], w, 1000)
        assert r.halted and r.output == w[::-1]


def test_immediate_halt_zero_steps(machines):
    r = simulate(machines["immediate"], "", 100)
    assert r.halted and r.steps == 0 and r.output == ""
    assert r.step_log == ()


def test_budget_exhaustion(machines):
    r = simulate(machines["loop"], "01", 100)
    assert not r.halted and r.steps == 100 and r.output is None


def test_max_steps_zero_simulates_nothing(machines):
    r = simulate(machines["flip"], "01", 0)
    assert not r.halted and r.steps == 0
    assert r.tapes[0] == {1: "0", 2: "1"}


# --- value-change log --------------------------------------------------------------

def test_read_only_run_has_empty_log(machines):
    r = simulate(machines["loop"], "01", 50)
    assert value_change_log(r) == [[]]


def test_increment_111_events(machines):
    r = simulate(machines["increment"], "111", 100)
    (events,) = value_change_log(r)
    assert events == [(0, 1, "1", "0"), (1, 2, "1", "0"), (2, 3, "1", "0"),
                      (3, 4, "_", "1")]


def test_copy_events_carry_tape_index(machines):
    r = simulate(machines["copy2"], "ab", 100)
    log = value_change_log(r)
    assert log[0] == []
    assert log[1] == [(0, 1, "_", "a"), (1, 2, "_", "b")]


def test_determinism(machines):
    a = simulate(machines["palindrome"], "0110", 5000)
    b = simulate(machines["palindrome"], "0110", 5000)
    assert a == b


def test_heads_never_leave_the_tape(machines):
    for name, m in machines.items():
        sigma = m.input_alphabet
        r = simulate(m, sigma[0] * 3, 300)
        for rec in r.step_log:
            assert all(h >= 1 for h in rec.heads)
            assert all(h >= 1 for h in rec.new_heads)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["flip", "increment", "palindrome", "unary_add"]),
       st.text(alphabet="01", max_size=10))
def test_replaying_events_reconstructs_tape(machines, name, w):
    m = machines[name]
    if any(c not in m.input_alphabet for c in w):
        w = w.replace("0", m.input_alphabet[0])
    r = simulate(m, w, 5000)
    tape = {k: c for k, c in enumerate(w, start=1)}
    for step, cell, old, new in value_change_log(r)[0]:
        assert tape.get(cell, m.blank) == old
        if new == m.blank:
            tape.pop(cell, None)
        else:
            tape[cell] = new
    assert tape == r.tapes[0]


def test_write_minimality(machines):
    for name in ("flip", "palindrome", "increment"):
        r = simulate(machines[name], "0110", 5000)
        for tape in value_change_log(r):
            assert all(old != new for _, _, old, new in tape)
