"""Execution policies threaded through every kernel.

A policy picks sequential or multi-threaded evaluation and, optionally, a
kernel backend. Every kernel produces bitwise identical output under all
policies; only wall-clock time differs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

from . import _backend


@dataclass(frozen=True)
class Policy:
    kind: Literal["seq", "par"] = "seq"
    threads: int = 1
    backend: str | None = None

    def __post_init__(self):
        if self.kind not in ("seq", "par"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @property
    def nthreads(self) -> int:
        """Worker count handed to kernels (1 for sequential)."""
        return 1 if self.kind == "seq" else self.threads

    @property
    def kernels(self):
        return _backend.get(self.backend)

    def __str__(self):
        return "seq" if self.kind == "seq" else f"par({self.threads})"


SEQ = Policy()


def par(threads: int, backend: str | None = None) -> Policy:
    return Policy("par", threads, backend)


def parse_policy(text: str, threads: int = 1) -> Policy:
    """Parse ``seq``, ``par`` or ``par:N``."""
    text = text.strip()
    if text == "seq":
        return SEQ
    if text == "par":
        return par(threads)
    if text.startswith("par:"):
        return par(int(text[4:]))
    raise ValueError(f"bad policy {text!r}; expected seq, par or par:N")
