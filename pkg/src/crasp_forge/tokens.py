"""Token representation shared by every layer of the toolchain.

A token is either a finite-alphabet symbol (a ``str``) or a signpost drawn
from the unbounded ordered alphabet (an ``int`` >= 1).  On the wire a
signpost renders as ``<n>``; every other whitespace-free field is a finite
symbol taken verbatim.
"""
from __future__ import annotations

import re
from typing import Iterable, List, Sequence, Union

Token = Union[str, int]

SEP = "<SEP>"
EOS = "<EOS>"

_SIGNPOST_RE = re.compile(r"^<([0-9]+)>$")


class TokenError(ValueError):
    pass


def is_signpost(tok: Token) -> bool:
    return isinstance(tok, int)


def signpost(index: int) -> int:
    if index < 1:
        raise TokenError(f"signpost index must be >= 1, got {index}")
    return index


def parse_token(text: str) -> Token:
    m = _SIGNPOST_RE.match(text)
    if m:
        return signpost(int(m.group(1)))
    if not text or any(c.isspace() for c in text):
        raise TokenError(f"invalid token text {text!r}")
    return text


def parse_tokens(text: str) -> List[Token]:
    return [parse_token(t) for t in text.split()]


def render_token(tok: Token) -> str:
    if isinstance(tok, int):
        return f"<{tok}>"
    return tok


def render_tokens(toks: Iterable[Token]) -> str:
    return " ".join(render_token(t) for t in toks)


def coerce_input(text: str, alphabet: Sequence[str]) -> List[Token]:
    """Parse user input leniently: whitespace-separated tokens, or a bare
    string of single-character symbols when no whitespace is present."""
    if any(c.isspace() for c in text.strip()):
        return parse_tokens(text)
    stripped = text.strip()
    if stripped and all(c in alphabet for c in stripped):
        return list(stripped)
    return parse_tokens(text)
