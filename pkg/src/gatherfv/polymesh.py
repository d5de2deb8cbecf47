"""Read and write the ASCII subset of the polyMesh directory format.

Each file is an optional ``FoamFile { ... }`` header followed by
``<count> ( <entry>* )``. ``//`` and ``/* */`` comments are skipped.
Boundary condition values are not stored here; they come from the case.
"""
from __future__ import annotations

import bisect
import re
from pathlib import Path

import numpy as np

from .errors import ParseError
from .mesh import Mesh, Patch, make_mesh

FILES = ("points", "faces", "owner", "neighbour", "boundary")

_TOKEN = re.compile(r"""
      (?P<skip>//[^\n]*|/\*.*?\*/|\s+)
    | (?P<punct>[(){};])
    | (?P<word>[^\s(){};/]+(?:/(?![/*])[^\s(){};/]*)*)
    | (?P<bad>/\*|/)
""", re.VERBOSE | re.DOTALL)

_INT = re.compile(r"[+-]?\d+\Z")


class _Tokens:
    def __init__(self, text: str, path):
        self.path = path
        self._newlines = [m.start() for m in re.finditer("\n", text)]
        toks = []
        for m in _TOKEN.finditer(text):
            kind = m.lastgroup
            if kind == "skip":
                continue
            if kind == "bad":
                raise ParseError(f"unterminated comment or stray {m.group()!r}", path, self._line(m.start()))
            toks.append((m.group(), m.start()))
        self.toks = toks
        self.i = 0

    def _line(self, pos):
        return bisect.bisect_right(self._newlines, pos - 1) + 1

    def line(self):
        if self.i < len(self.toks):
            return self._line(self.toks[self.i][1])
        return len(self._newlines) + 1

    def error(self, message):
        return ParseError(message, self.path, self.line())

    def peek(self):
        return self.toks[self.i][0] if self.i < len(self.toks) else None

    def next(self, what="token"):
        if self.i >= len(self.toks):
            raise self.error(f"unexpected end of file, expected {what}")
        tok = self.toks[self.i][0]
        self.i += 1
        return tok

    def expect(self, literal):
        tok = self.next(repr(literal))
        if tok != literal:
            self.i -= 1
            raise self.error(f"expected {literal!r}, found {tok!r}")

    def integer(self, what="integer"):
        tok = self.next(what)
        if not _INT.match(tok):
            self.i -= 1
            raise self.error(f"expected {what}, found {tok!r}")
        return int(tok)

    def real(self):
        tok = self.next("number")
        try:
            value = float(tok)
        except ValueError:
            self.i -= 1
            raise self.error(f"expected number, found {tok!r}") from None
        if not np.isfinite(value):
            self.i -= 1
            raise self.error(f"non-finite number {tok!r}")
        return value

    def skip_header(self):
        if self.peek() != "FoamFile":
            return
        self.next()
        self.expect("{")
        depth = 1
        while depth:
            tok = self.next("'}' closing FoamFile")
            depth += {"{": 1, "}": -1}.get(tok, 0)

    def finish(self):
        if self.i != len(self.toks):
            raise self.error(f"unexpected trailing token {self.peek()!r}")


def _read_list(path: Path, entry):
    tokens = _Tokens(path.read_text(), path)
    tokens.skip_header()
    count = tokens.integer("list count")
    if count < 0:
        raise tokens.error(f"negative list count {count}")
    tokens.expect("(")
    items = []
    for n in range(count):
        if tokens.peek() == ")":
            raise tokens.error(f"list declares {count} entries but has {n}")
        items.append(entry(tokens))
    if tokens.peek() != ")":
        raise tokens.error(f"list declares {count} entries but has more")
    tokens.expect(")")
    tokens.finish()
    return items


def _point(t: _Tokens):
    t.expect("(")
    p = (t.real(), t.real(), t.real())
    t.expect(")")
    return p


def _face(t: _Tokens):
    k = t.integer("face vertex count")
    t.expect("(")
    verts = [t.integer("vertex index") for _ in range(k)]
    t.expect(")")
    return verts


def _label(t: _Tokens):
    return t.integer("cell label")


def _patch(t: _Tokens):
    name = t.next("patch name")
    if name in ("(", ")", "{", "}", ";"):
        t.i -= 1
        raise t.error(f"expected patch name, found {name!r}")
    t.expect("{")
    entries = {}
    while t.peek() != "}":
        key = t.next("keyword")
        if key in ("nFaces", "startFace"):
            entries[key] = t.integer(key)
            t.expect(";")
        elif key == "type":
            entries[key] = t.next("patch type")
            t.expect(";")
        else:
            depth = 0  # unknown entry such as inGroups: skip to its ';'
            while True:
                tok = t.next("';'")
                depth += {"(": 1, ")": -1}.get(tok, 0)
                if tok == ";" and depth == 0:
                    break
    t.expect("}")
    for key in ("type", "nFaces", "startFace"):
        if key not in entries:
            raise t.error(f"patch {name} has no {key} entry")
    return Patch(name, entries["startFace"], entries["nFaces"], type=entries["type"])


def read_polymesh(directory) -> Mesh:
    """Parse a polyMesh directory and validate the result."""
    d = Path(directory)
    points = _read_list(d / "points", _point)
    faces = _read_list(d / "faces", _face)
    owner = _read_list(d / "owner", _label)
    neighbour = _read_list(d / "neighbour", _label)
    patches = _read_list(d / "boundary", _patch)
    mesh = make_mesh(np.array(points, dtype=np.float64).reshape(-1, 3), faces, owner, neighbour, patches)
    return mesh.validate()


def _header(cls, obj):
    return (
        "FoamFile\n{\n    version     2.0;\n    format      ascii;\n"
        f"    class       {cls};\n    location    \"constant/polyMesh\";\n"
        f"    object      {obj};\n}}\n\n"
    )


def _write(path: Path, cls: str, body: str):
    with open(path, "w") as fh:
        fh.write(_header(cls, path.name))
        fh.write(body)
        fh.write("\n")


def _multiline(lines: list[str]) -> str:
    return f"{len(lines)}\n(\n" + "".join(line + "\n" for line in lines) + ")"


def format_list_body(values) -> str:
    """Single-line body ``n ( v0 v1 ... )`` used for label lists."""
    if len(values) == 0:
        return "0 ( )"
    return f"{len(values)} ( {' '.join(map(str, values))} )"


def write_polymesh(mesh: Mesh, directory) -> None:
    """Write the five polyMesh files; read_polymesh inverts this exactly."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    _write(d / "points", "vectorField",
           _multiline([f"({x!r} {y!r} {z!r})" for x, y, z in mesh.points.tolist()]))
    _write(d / "faces", "faceList",
           _multiline([f"{len(f)}({' '.join(map(str, f))})" for f in mesh.faces]))
    _write(d / "owner", "labelList", format_list_body(mesh.owner.tolist()))
    _write(d / "neighbour", "labelList", format_list_body(mesh.neighbour.tolist()))
    _write(d / "boundary", "polyBoundaryMesh", _multiline([
        f"{p.name}\n{{\n    type {p.type};\n    nFaces {p.n_faces};\n    startFace {p.start_face};\n}}"
        for p in mesh.patches
    ]))
