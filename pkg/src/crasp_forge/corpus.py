"""Task corpora: parity, Boolean evaluation, S5 permutation, binary
permutation, in each studied trace format.

Record text follows the training-format boxes exactly: prompts and traces
are whitespace token streams, a full plain line is
``PROMPT ### trace TRACE`` and traces end with ``<|endoftext|>``.
Generation is pure in (config, seed, record index), so datasets can be
produced by parallel workers and concatenated in index order.
"""
from __future__ import annotations

import hashlib
import json
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from . import formulas as fx

ENDTEXT = "<|endoftext|>"
PROMPT_SEP = "### trace"

PARITY, BOOLEAN, S5, BINARY = "parity", "boolean", "s5", "binary"
NAIVE = "naive"
VALUE_CHANGE = "value-change"
SIGNPOST = "signpost"
SIGNPOST_TAPE = "signpost-tape"
SIGNPOST_VALUE_CHANGE = "signpost-value-change"

VALID_FORMATS: Dict[str, Tuple[str, ...]] = {
    PARITY: (NAIVE, VALUE_CHANGE),
    BOOLEAN: (NAIVE, SIGNPOST),
    S5: (NAIVE, SIGNPOST, SIGNPOST_TAPE),
    BINARY: (NAIVE, SIGNPOST, SIGNPOST_VALUE_CHANGE),
}

VARS = ("A", "B", "C", "D", "E")
BINARY_OBJECTS = ("Cat", "Dog")

# four objects each of rendered token lengths 1, 2 and 3
OBJECT_POOL = (
    "Cat", "Dog", "Hat", "Book",
    "Red Car", "Tin Cup", "Old Map", "Blue Pen",
    "Big Red Ball", "Old Tin Box", "New Gold Ring", "Wet Grey Stone",
)


class CorpusError(ValueError):
    pass


@dataclass
class TaskConfig:
    task: str
    fmt: str
    min_len: int
    max_len: int
    max_test_len: int
    seed: int = 0
    repetitive_ratio: float = 0.0
    repeat_prob: float = 0.9
    split: str = "train"  # signpost-tape shuffles its operations block on train

    def validate(self) -> None:
        if self.task not in VALID_FORMATS:
            raise CorpusError(f"unknown task {self.task!r}")
        if self.fmt not in VALID_FORMATS[self.task]:
            raise CorpusError(f"format {self.fmt!r} is not valid for {self.task!r}")
        if not 1 <= self.min_len <= self.max_len:
            raise CorpusError("need 1 <= min_len <= max_len")
        if self.max_test_len < self.max_len:
            raise CorpusError("max_test_len must be >= max_len")
        if not 0.0 <= self.repetitive_ratio <= 1.0:
            raise CorpusError("repetitive_ratio must be in [0, 1]")
        if self.split not in ("train", "test"):
            raise CorpusError("split must be 'train' or 'test'")


@dataclass
class CorpusRecord:
    prompt: str
    trace: str
    answer: str
    meta: Dict[str, object] = field(default_factory=dict)

    def plain_line(self) -> str:
        return f"{self.prompt} {PROMPT_SEP} {self.trace}"

    def json_line(self) -> str:
        body = {"prompt": self.prompt, "trace": self.trace,
                "answer": self.answer, "meta": self.meta}
        return json.dumps(body, sort_keys=True)


# --- parity ---------------------------------------------------------------------

def parity_states(bits: Sequence[int]) -> List[str]:
    out, parity = [], 0
    for b in bits:
        parity ^= b
        out.append("O" if parity else "E")
    return out


def render_parity(bits: Sequence[int], fmt: str) -> Tuple[str, str, str]:
    prompt = " ".join(str(b) for b in bits)
    answer = "O" if sum(bits) % 2 else "E"
    if fmt == NAIVE:
        states = parity_states(bits)
    else:
        states = ["E"]
        for b in bits:
            if b:
                states.append("O" if states[-1] == "E" else "E")
    trace = f"{' '.join(states)} answer {answer}{ENDTEXT}"
    return prompt, trace, answer


# --- boolean evaluation ------------------------------------------------------------

def render_boolean(ast: fx.Formula, fmt: str, first_id: int = 0) -> Tuple[str, str, str]:
    values = fx.postorder_values(ast)
    answer = "T" if values[-1] else "F"
    letters = ["T" if v else "F" for v in values]
    if fmt == NAIVE:
        prompt = fx.render_naive(ast)
        trace = f"{' '.join(letters)} answer: {answer}{ENDTEXT}"
    else:
        prompt = fx.render_signpost(ast, first_id)
        pairs = " ".join(f"<{first_id + k}> {v}" for k, v in enumerate(letters))
        trace = f"{pairs} answer: {answer}{ENDTEXT}"
    return prompt, trace, answer


# --- permutation tasks ----------------------------------------------------------------

@dataclass
class PermInstance:
    init: Tuple[str, ...]                  # objects at A..E
    ops: List[Tuple[str, str]]             # chronological swaps
    ids: Optional[List[int]] = None        # signpost id per op
    presented: Optional[List[int]] = None  # op order in the prompt (signpost-tape)


def fold_swaps(init: Sequence[str], ops: Sequence[Tuple[str, str]]) -> List[str]:
    state = list(init)
    for x, y in ops:
        ix, iy = VARS.index(x), VARS.index(y)
        state[ix], state[iy] = state[iy], state[ix]
    return state


def _state_text(state: Sequence[str]) -> str:
    return " ".join(f"{v} {o}" for v, o in zip(VARS, state))


def render_perm(inst: PermInstance, fmt: str) -> Tuple[str, str, str]:
    init_text = f"init {_state_text(inst.init)}"
    final = fold_swaps(inst.init, inst.ops)
    answer = " ".join(final)

    if fmt == NAIVE:
        ops_text = "".join(f"swap {x} {y} . " for x, y in inst.ops)
        prompt = f"{init_text} operation {ops_text}end ."
    elif fmt == SIGNPOST or fmt == SIGNPOST_VALUE_CHANGE:
        ops_text = "".join(f"<{i}> swap {x} {y} <{i}> . "
                           for i, (x, y) in zip(inst.ids, inst.ops))
        prompt = f"{init_text} operation {ops_text}end ."
    elif fmt == SIGNPOST_TAPE:
        order = inst.presented or list(range(len(inst.ops)))
        tape = " ".join(f"<{i}>" for i in inst.ids)
        shown = "".join(f"<{inst.ids[k]}> swap {inst.ops[k][0]} {inst.ops[k][1]} . "
                        for k in order)
        prompt = f"{init_text} tape {tape} end operation {shown}".rstrip()
    else:
        raise CorpusError(f"bad permutation format {fmt!r}")

    if fmt == NAIVE:
        state = list(inst.init)
        parts = []
        for x, y in inst.ops:
            state = fold_swaps(state, [(x, y)])
            parts.append(f"swap {x} {y} write {_state_text(state)} . ")
        trace = f"{''.join(parts)}end answer {answer}{ENDTEXT}"
    elif fmt in (SIGNPOST, SIGNPOST_TAPE):
        state = list(inst.init)
        parts = []
        for i, (x, y) in zip(inst.ids, inst.ops):
            state = fold_swaps(state, [(x, y)])
            parts.append(f"load <{i}> . line <{i}> swap {x} {y} "
                         f"write {_state_text(state)} ")
        trace = f"{''.join(parts)}load end . end answer {answer}{ENDTEXT}"
    else:
        trace = _render_value_change_trace(inst, answer)
    return prompt, trace, answer


def _render_value_change_trace(inst: PermInstance, answer: str) -> str:
    state = list(inst.init)
    parts = []
    writes: Dict[str, List[Tuple[str, str]]] = {v: [] for v in VARS}
    for i, (x, y) in zip(inst.ids, inst.ops):
        ix, iy = VARS.index(x), VARS.index(y)
        old_x, old_y = state[ix], state[iy]
        state[ix], state[iy] = old_y, old_x
        evs = []
        for v, old, new in ((x, old_x, old_y), (y, old_y, old_x)):
            if old == new:
                evs.append(f"K_{v}")
            else:
                evs.append(f"W_{v} {old}_{new}")
                writes[v].append((old, new))
        parts.append(f"load <{i}> . <{i}> swap {x} {y} {' '.join(evs)} ")
    res = []
    for v, init_obj in zip(VARS, inst.init):
        incoming = sum(1 for old, new in writes[v] if new == init_obj)
        outgoing = sum(1 for old, new in writes[v] if old == init_obj)
        if incoming == outgoing:
            cmp_tok, final = "==", init_obj
        else:
            other = BINARY_OBJECTS[1 - BINARY_OBJECTS.index(init_obj)]
            cmp_tok, final = "<", other
        res.append(f"<{v}> init {init_obj} IN {cmp_tok} OUT final {final} ")
    return (f"{''.join(parts)}load end . res {''.join(res)}"
            f"answer {answer}{ENDTEXT}")


# --- sampling --------------------------------------------------------------------------

def _sample_ops(rng: random.Random, count: int, repetitive: bool,
                repeat_prob: float) -> List[Tuple[str, str]]:
    ops: List[Tuple[str, str]] = []
    for _ in range(count):
        if repetitive and ops and rng.random() < repeat_prob:
            ops.append(ops[-1])
        else:
            x, y = rng.sample(VARS, 2)
            ops.append((x, y))
    return ops


def _sample_ids(rng: random.Random, count: int, max_test_len: int) -> List[int]:
    top = max(count, max_test_len // 2)
    return rng.sample(range(1, top + 1), count)


def gen_record(cfg: TaskConfig, rng: random.Random, index: int = 0) -> CorpusRecord:
    cfg.validate()
    length = rng.randint(cfg.min_len, cfg.max_len)
    o_p = rng.randint(1, max(1, cfg.max_test_len - length))
    meta: Dict[str, object] = {"task": cfg.task, "format": cfg.fmt,
                               "length": length, "index": index,
                               "seed": cfg.seed, "o_p": o_p}

    if cfg.task == PARITY:
        bits = [rng.randrange(2) for _ in range(length)]
        prompt, trace, answer = render_parity(bits, cfg.fmt)
    elif cfg.task == BOOLEAN:
        ast = fx.sample_formula(length, rng)
        o_c = 0
        if cfg.fmt == SIGNPOST:
            o_c = rng.randint(0, max(0, cfg.max_test_len // 2 - length))
            meta["o_c"] = o_c
        prompt, trace, answer = render_boolean(ast, cfg.fmt, o_c)
    else:
        repetitive = rng.random() < cfg.repetitive_ratio
        meta["repetitive"] = repetitive
        ops = _sample_ops(rng, length, repetitive, cfg.repeat_prob)
        if cfg.task == S5:
            init = tuple(rng.sample(OBJECT_POOL, 5))
        else:
            while True:
                init = tuple(rng.choice(BINARY_OBJECTS) for _ in VARS)
                if len(set(init)) > 1:
                    break
        ids = presented = None
        if cfg.fmt != NAIVE:
            ids = _sample_ids(rng, length, cfg.max_test_len)
            meta["ids"] = ids
        if cfg.fmt == SIGNPOST_TAPE:
            presented = list(range(length))
            if cfg.split == "train":
                rng.shuffle(presented)
        inst = PermInstance(init, ops, ids, presented)
        prompt, trace, answer = render_perm(inst, cfg.fmt)
    return CorpusRecord(prompt, trace, answer, meta)


# --- oracles -----------------------------------------------------------------------------

def strip_prompt(text: str) -> str:
    text = text.strip()
    if text.endswith(PROMPT_SEP):
        text = text[: -len(PROMPT_SEP)].strip()
    return text


def task_oracle(task: str, fmt: str, prompt: str) -> str:
    """Recompute the canonical answer from the prompt alone."""
    body = strip_prompt(prompt)
    if task == PARITY:
        bits = [int(t) for t in body.split()]
        return "O" if sum(bits) % 2 else "E"
    if task == BOOLEAN:
        ast = fx.parse_signpost(body) if fmt == SIGNPOST else fx.parse_naive(body)
        return "T" if fx.eval_ast(ast) else "F"
    init, ops = parse_perm_prompt(body, fmt)
    return " ".join(fold_swaps(init, ops))


def pretty_answer(task: str, answer: str) -> str:
    """The task-description form of an answer (Even/Odd, True/False, states)."""
    if task == PARITY:
        return "Even" if answer == "E" else "Odd"
    if task == BOOLEAN:
        return "True" if answer == "T" else "False"
    objs = answer.split()
    # multi-token objects: split back on the variable boundaries is not
    # possible from the flat answer, so join from the full words directly
    return ", ".join(f"{v} = {o}" for v, o in zip(VARS, _regroup_objects(objs)))


def _regroup_objects(words: Sequence[str]) -> List[str]:
    # answers carry five objects whose token lengths are 1..3; regroup by
    # matching against the known pools
    singles = set(OBJECT_POOL) | set(BINARY_OBJECTS)
    out: List[str] = []
    k = 0
    while k < len(words) and len(out) < 5:
        matched = None
        for take in (3, 2, 1):
            cand = " ".join(words[k:k + take])
            if cand in singles:
                matched = cand
                k += take
                break
        if matched is None:
            matched = words[k]
            k += 1
        out.append(matched)
    return out


def parse_perm_prompt(body: str, fmt: str) -> Tuple[Tuple[str, ...], List[Tuple[str, str]]]:
    toks = body.split()
    if not toks or toks[0] != "init":
        raise CorpusError("permutation prompt must start with 'init'")
    pos = 1
    init: List[str] = []
    stops = {"operation", "tape"}
    for k, v in enumerate(VARS):
        if toks[pos] != v:
            raise CorpusError(f"expected variable {v} in the init block")
        pos += 1
        obj: List[str] = []
        nxt = VARS[k + 1] if k + 1 < len(VARS) else None
        while pos < len(toks) and toks[pos] != nxt and toks[pos] not in stops:
            obj.append(toks[pos])
            pos += 1
        if not obj:
            raise CorpusError(f"missing object for variable {v}")
        init.append(" ".join(obj))

    ops: List[Tuple[str, str]] = []
    if fmt == SIGNPOST_TAPE:
        if toks[pos] != "tape":
            raise CorpusError("expected a tape block")
        pos += 1
        order: List[str] = []
        while toks[pos] != "end":
            order.append(toks[pos])
            pos += 1
        pos += 1
        if toks[pos] != "operation":
            raise CorpusError("expected the operations block")
        pos += 1
        by_id: Dict[str, Tuple[str, str]] = {}
        while pos < len(toks):
            sid = toks[pos]
            if toks[pos + 1] != "swap":
                raise CorpusError("malformed tape operation")
            by_id[sid] = (toks[pos + 2], toks[pos + 3])
            pos += 4
            if pos < len(toks) and toks[pos] == ".":
                pos += 1
        ops = [by_id[sid] for sid in order]
        return tuple(init), ops

    if toks[pos] != "operation":
        raise CorpusError("expected the operations block")
    pos += 1
    while pos < len(toks) and toks[pos] != "end":
        if toks[pos].startswith("<"):
            # <id> swap X Y <id> .
            ops.append((toks[pos + 2], toks[pos + 3]))
            pos += 5
        else:
            ops.append((toks[pos + 1], toks[pos + 2]))
            pos += 3
        if pos < len(toks) and toks[pos] == ".":
            pos += 1
    return tuple(init), ops


# --- dataset streaming ------------------------------------------------------------------

def record_rng(seed: int, index: int) -> random.Random:
    return random.Random(f"{seed}:{index}")


def make_record(cfg: TaskConfig, index: int) -> CorpusRecord:
    return gen_record(cfg, record_rng(cfg.seed, index), index)


def _record_line(args) -> Tuple[int, str]:
    cfg, index, plain = args
    rec = make_record(cfg, index)
    return rec.meta["length"], (rec.plain_line() if plain else rec.json_line())


def gen_dataset(cfg: TaskConfig, count: int, sink, jobs: int = 1,
                plain: bool = False) -> Dict[str, object]:
    """Stream records to a text sink; returns a reproducibility summary."""
    cfg.validate()
    if count < 1:
        raise CorpusError("count must be >= 1")
    digest = hashlib.sha256()
    lengths: Dict[int, int] = {}
    tasks = ((cfg, k, plain) for k in range(count))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_record_line, tasks, chunksize=64)
            for length, line in results:
                lengths[length] = lengths.get(length, 0) + 1
                data = line + "\n"
                sink.write(data)
                digest.update(data.encode())
    else:
        for args in tasks:
            length, line = _record_line(args)
            lengths[length] = lengths.get(length, 0) + 1
            data = line + "\n"
            sink.write(data)
            digest.update(data.encode())
    return {"count": count, "seed": cfg.seed, "task": cfg.task,
            "format": cfg.fmt,
            "lengths": {str(k): v for k, v in sorted(lengths.items())},
            "checksum": digest.hexdigest()}
