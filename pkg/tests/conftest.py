import random
import re
from pathlib import Path

import pytest

from tracerw.checker import Checker
from tracerw.harness import _Gen, _choice
from tracerw.traces import Triple

ROOT = Path(__file__).resolve().parent.parent
PROGRAMS = ROOT / "programs"

_NAME = re.compile(r"\b([a-z])(\d*)\b")


def canonical(rendered: str) -> str:
    """Rename identifiers and members by order of first appearance."""
    idents: dict = {}
    members: dict = {}

    def sub(m):
        letter, k = m.group(1), m.group(2)
        new = idents.setdefault(letter, "abcdefghijklmnopqrstuvwxyz"[len(idents)])
        if not k:
            return new
        table = members.setdefault(letter, {})
        return f"{new}{table.setdefault(k, len(table))}"

    return _NAME.sub(sub, rendered)


def source(name: str) -> str:
    return (PROGRAMS / f"{name}.elv").read_text()


def random_triple(seed: int) -> Triple:
    """Traced triple of a random well-typed strategy (usually several traces)."""
    rng = random.Random(seed)
    for _ in range(200):
        g = _Gen(rng)
        strat = g.strategy(rng.randrange(8, 24))
        if rng.random() < 0.6:
            strat = _choice(strat, g.strategy(rng.randrange(8, 16)))
        chk = Checker()
        try:
            tri = chk.infer(strat, {}, {})
        except Exception:
            continue
        omega = chk.uni.zonk(tri.omega)
        if tri.phi:
            return Triple(tri.phi, (), omega)
    raise RuntimeError("no typed strategy found")


@pytest.fixture
def programs_dir() -> Path:
    return PROGRAMS
