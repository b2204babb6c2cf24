"""Opt-in instrumentation used by tests and the metatheory harness."""

from __future__ import annotations

import contextlib
from dataclasses import dataclass, field


@dataclass
class ProbeLog:
    unify_ok: int = 0
    unify_fail: int = 0
    unify_violations: list = field(default_factory=list)
    match_ok: int = 0
    match_fail: int = 0
    match_violations: list = field(default_factory=list)
    comptrace: list = field(default_factory=list)  # (iterations, successes)


_active: list[ProbeLog] = []


def current() -> ProbeLog | None:
    return _active[-1] if _active else None


@contextlib.contextmanager
def recording():
    log = ProbeLog()
    _active.append(log)
    try:
        yield log
    finally:
        _active.pop()
