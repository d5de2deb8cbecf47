"""Atomic-free cell -> face adjacency built from owner/neighbour lists.

Face-addressed loops (``acc[owner[f]] += ...``) race when run in parallel.
Regrouping the faces by cell turns them into per-cell gathers. The groups
are stored compressed: ``items`` holds the face indices of every group back
to back and ``starts[g]:starts[g+1]`` delimits group g.

Construction uses only data-parallel primitives (stable sort, scans,
reduce-by-key). Each builder has a plain sequential oracle for testing.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _threads
from .mesh import Mesh
from .policy import SEQ, Policy

INDEX = np.int64
_INDEX_MAX = np.iinfo(INDEX).max


@dataclass(frozen=True, eq=False)
class CompressedLists:
    items: np.ndarray
    starts: np.ndarray

    @property
    def n_groups(self) -> int:
        return self.starts.shape[0] - 1

    def group(self, g: int) -> np.ndarray:
        return self.items[self.starts[g]:self.starts[g + 1]]

    def counts(self) -> np.ndarray:
        return np.diff(self.starts)

    def __eq__(self, other):
        if not isinstance(other, CompressedLists):
            return NotImplemented
        return np.array_equal(self.items, other.items) and np.array_equal(self.starts, other.starts)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class PatchCompression:
    face_index: np.ndarray   # local patch-face indices, sorted by face cell
    face_start: np.ndarray   # offsets, one group per distinct face cell

    @property
    def n_groups(self) -> int:
        return self.face_start.shape[0] - 1

    def __eq__(self, other):
        if not isinstance(other, PatchCompression):
            return NotImplemented
        return (np.array_equal(self.face_index, other.face_index)
                and np.array_equal(self.face_start, other.face_start))

    __hash__ = None


# ---------------------------------------------------------------- primitives

def _merge_sorted(keys, a, b):
    """Stable merge of two index runs already sorted by keys; a precedes b."""
    ka, kb = keys[a], keys[b]
    out = np.empty(a.size + b.size, dtype=INDEX)
    out[np.arange(a.size) + np.searchsorted(kb, ka, side="left")] = a
    out[np.arange(b.size) + np.searchsorted(ka, kb, side="right")] = b
    return out


def stable_argsort(keys, policy: Policy = SEQ) -> np.ndarray:
    """Permutation p with keys[p] nondecreasing; equal keys keep input order.

    The parallel path sorts contiguous chunks on worker threads and merges
    neighbouring runs pairwise; a stable sort's output is unique, so both
    paths return the same permutation.
    """
    keys = np.asarray(keys)
    n = keys.shape[0]
    nt = policy.nthreads
    if nt <= 1 or n < 2 * nt:
        return np.argsort(keys, kind="stable").astype(INDEX, copy=False)

    def sort_chunk(a, b):
        return (a + np.argsort(keys[a:b], kind="stable")).astype(INDEX, copy=False)

    runs = _threads.map_chunks(n, nt, sort_chunk)
    while len(runs) > 1:
        pairs = [(runs[i], runs[i + 1]) for i in range(0, len(runs) - 1, 2)]
        merged = [f.result() for f in [_threads.pool(nt).submit(_merge_sorted, keys, a, b) for a, b in pairs]]
        if len(runs) % 2:
            merged.append(runs[-1])
        runs = merged
    return runs[0]


def exclusive_scan(values, policy: Policy = SEQ) -> np.ndarray:
    """Prefix sums with the total appended: out[0] = 0, out[i+1] = out[i] + values[i]."""
    raw = np.asarray(values)
    if raw.dtype == object:
        raise OverflowError("values do not fit the 64-bit index type")
    if raw.size and not np.issubdtype(raw.dtype, np.integer):
        raise TypeError("exclusive_scan expects integer values")
    try:
        values = raw.astype(INDEX, casting="safe") if raw.size else np.zeros(0, dtype=INDEX)
    except TypeError:
        raise OverflowError("values do not fit the 64-bit index type") from None
    if values.size and float(np.abs(values.astype(np.float64)).sum()) >= float(_INDEX_MAX):
        raise OverflowError("prefix sum overflows the 64-bit index type")
    n = values.shape[0]
    out = np.zeros(n + 1, dtype=INDEX)
    nt = policy.nthreads
    if nt <= 1 or n < 2 * nt:
        np.cumsum(values, out=out[1:])
        return out

    bounds = _threads.chunks(n, nt)

    def local(span):
        a, b = span
        np.cumsum(values[a:b], out=out[a + 1:b + 1])

    list(_threads.pool(nt).map(local, bounds))
    totals = np.array([out[b] for _, b in bounds], dtype=INDEX)
    offsets = np.concatenate([[0], np.cumsum(totals)[:-1]])

    def shift(args):
        (a, b), off = args
        out[a + 1:b + 1] += off

    list(_threads.pool(nt).map(shift, zip(bounds, offsets)))
    return out


def _reduce_by_key(sorted_keys: np.ndarray, weights: np.ndarray):
    """Segmented sum of weights over runs of equal (already sorted) keys."""
    if sorted_keys.size == 0:
        return sorted_keys[:0], weights[:0]
    heads = np.flatnonzero(np.concatenate([[True], sorted_keys[1:] != sorted_keys[:-1]]))
    return sorted_keys[heads], np.add.reduceat(weights, heads)


def _check_keys(keys, n_cells):
    keys = np.asarray(keys)
    if keys.size == 0:
        return np.zeros(0, dtype=INDEX)
    if not np.issubdtype(keys.dtype, np.integer):
        raise ValueError("cell keys must be integers")
    if n_cells < 0 or keys.min() < 0 or keys.max() >= n_cells:
        raise ValueError(f"cell key outside [0, {n_cells})")
    return keys.astype(INDEX, copy=False)


def build_cell_face_lists(keys, n_cells: int, policy: Policy = SEQ) -> CompressedLists:
    """Group face indices by their cell key.

    items: stable argsort of the keys. starts: the sorted keys are extended
    with one sentinel per cell (weight 0, real faces weight 1), sorted again,
    reduced by key to a per-cell count that exists even for cells with no
    faces, and exclusive-scanned.
    """
    keys = _check_keys(keys, n_cells)
    items = stable_argsort(keys, policy)
    sorted_keys = keys[items]
    combined = np.concatenate([sorted_keys, np.arange(n_cells, dtype=INDEX)])
    weight = np.concatenate([np.ones(keys.size, dtype=INDEX), np.zeros(n_cells, dtype=INDEX)])
    order = stable_argsort(combined, policy)
    cells, counts = _reduce_by_key(combined[order], weight[order])
    assert cells.size == n_cells
    return CompressedLists(items, exclusive_scan(counts, policy))


def build_patch_compression(face_cells, policy: Policy = SEQ) -> PatchCompression:
    """Group the faces of one patch by their (repeated) face cell.

    Flags mark the first face of each run of equal sorted cells, an
    inclusive scan of the flags numbers the runs, the run sizes are counted
    and exclusive-scanned into ``face_start``.
    """
    face_cells = np.asarray(face_cells, dtype=INDEX)
    face_index = stable_argsort(face_cells, policy)
    s = face_cells[face_index]
    flags = np.ones(s.size, dtype=INDEX)
    flags[1:][s[1:] == s[:-1]] = 0
    run_id = exclusive_scan(flags, policy)[1:] - 1  # inclusive scan, 0-based
    n_runs = int(run_id[-1]) + 1 if s.size else 0
    counts = np.bincount(run_id, minlength=n_runs).astype(INDEX)
    return PatchCompression(face_index, exclusive_scan(counts, policy))


# ---------------------------------------------------------------- oracles

def cell_face_lists_oracle(keys, n_cells: int) -> CompressedLists:
    """Sequential grouping: walk faces in order, append to their cell's list."""
    groups = [[] for _ in range(n_cells)]
    for f, c in enumerate(np.asarray(keys).tolist()):
        if not 0 <= c < n_cells:
            raise ValueError(f"cell key outside [0, {n_cells})")
        groups[c].append(f)
    starts = [0]
    for g in groups:
        starts.append(starts[-1] + len(g))
    items = [f for g in groups for f in g]
    return CompressedLists(np.array(items, dtype=INDEX), np.array(starts, dtype=INDEX))


def patch_compression_oracle(face_cells) -> PatchCompression:
    """Sequential run-length grouping of faces by cell, cells ascending."""
    by_cell: dict[int, list[int]] = {}
    for i, c in enumerate(np.asarray(face_cells).tolist()):
        by_cell.setdefault(c, []).append(i)
    index, start = [], [0]
    for c in sorted(by_cell):
        index.extend(by_cell[c])
        start.append(len(index))
    return PatchCompression(np.array(index, dtype=INDEX), np.array(start, dtype=INDEX))


# ---------------------------------------------------------------- mesh level

@dataclass(frozen=True, eq=False)
class CellFaceAdjacency:
    """All gather structures for one mesh.

    ``owner_lists`` groups every face by owner and ``neighbour_lists`` every
    internal face by neighbour. The kernels use ``lower_lists``, the owner
    grouping restricted to internal faces; boundary faces are gathered
    through the per-patch compressions instead.
    """
    owner_lists: CompressedLists
    neighbour_lists: CompressedLists
    lower_lists: CompressedLists
    patches: tuple[PatchCompression, ...]
    n_cells: int
    n_faces: int
    n_internal_faces: int
    patch_sizes: tuple[int, ...]

    def check(self, mesh: Mesh):
        if (self.n_cells, self.n_faces, self.n_internal_faces) != (
                mesh.n_cells, mesh.n_faces, mesh.n_internal_faces) or self.patch_sizes != tuple(
                p.n_faces for p in mesh.patches):
            raise ValueError("adjacency was built for a different mesh")


def build_adjacency(mesh: Mesh, policy: Policy = SEQ) -> CellFaceAdjacency:
    nc, ni = mesh.n_cells, mesh.n_internal_faces
    return CellFaceAdjacency(
        owner_lists=build_cell_face_lists(mesh.owner, nc, policy),
        neighbour_lists=build_cell_face_lists(mesh.neighbour, nc, policy),
        lower_lists=build_cell_face_lists(mesh.owner[:ni], nc, policy),
        patches=tuple(build_patch_compression(mesh.face_cells(p), policy) for p in mesh.patches),
        n_cells=nc,
        n_faces=mesh.n_faces,
        n_internal_faces=ni,
        patch_sizes=tuple(p.n_faces for p in mesh.patches),
    )
