"""Kernel backend selection.

The compiled OpenMP module is used when it imports; otherwise the numpy
module. ``GATHERFV_BACKEND=python`` forces the fallback and
``GATHERFV_BACKEND=compiled`` makes a missing extension an error.
"""
import importlib
import os

from . import _kernels_py

_cache = {"python": _kernels_py}


def _load_compiled():
    if "compiled" not in _cache:
        _cache["compiled"] = importlib.import_module("gatherfv._kernels")
    return _cache["compiled"]


def available() -> list[str]:
    names = ["python"]
    try:
        _load_compiled()
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def _select_default() -> str:
    choice = os.environ.get("GATHERFV_BACKEND", "auto").lower()
    if choice == "python":
        return "python"
    if choice == "compiled":
        _load_compiled()
        return "compiled"
    if choice != "auto":
        raise ValueError(f"GATHERFV_BACKEND must be auto, compiled or python, not {choice!r}")
    return available()[0]


DEFAULT = _select_default()


def get(name: str | None = None):
    name = name or DEFAULT
    if name == "compiled":
        return _load_compiled()
    if name == "python":
        return _kernels_py
    raise ValueError(f"unknown backend {name!r}")
