"""Bundled fixture machines and programs."""
from __future__ import annotations

from importlib import resources
from typing import List

from .cot import CotProgram
from .tm import TmSpec, load_tm


def _read(subdir: str, name: str) -> str:
    return resources.files(__package__).joinpath(f"{subdir}/{name}").read_text()


def fixture_names() -> List[str]:
    root = resources.files(__package__).joinpath("machines")
    return sorted(p.name[:-3] for p in root.iterdir() if p.name.endswith(".tm"))


def load_fixture(name: str) -> TmSpec:
    return load_tm(_read("machines", f"{name}.tm"))


def fixture_text(name: str) -> str:
    return _read("machines", f"{name}.tm")


def parity_program() -> CotProgram:
    from .dsl import parse_cot_program

    return parse_cot_program(_read("programs", "parity.crasp"))


def parity_text() -> str:
    return _read("programs", "parity.crasp")
