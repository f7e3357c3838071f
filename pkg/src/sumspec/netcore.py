"""Sparse symmetric multigraphs, layer stacks and degree truncation.

A ``SparseSymGraph`` keeps only its strict upper triangle as three parallel
integer arrays; symmetric queries and a full CSR view are derived from it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import AllRowsDropped, IndexOutOfRange, SelfLoop, SizeMismatch

# Exponent of (T * dbar) in the truncation threshold, i.e. 1 + 1/4.
DEFAULT_EXPONENT = 1.25


@dataclass(frozen=True, eq=False)
class SparseSymGraph:
    """Symmetric nonnegative integer matrix with zero diagonal.

    ``rows[k] < cols[k]`` for every stored entry and ``(rows, cols)`` is
    sorted lexicographically without duplicates.
    """

    n: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray
    _csr: list = field(default_factory=list, repr=False, compare=False)

    @classmethod
    def from_coo(cls, n: int, rows, cols, weights=None) -> "SparseSymGraph":
        """Build from arbitrary (i, j, w) triples; duplicates are summed and
        (j, i) is folded onto (i, j)."""
        n = int(n)
        if n < 0:
            raise ValueError("vertex count must be nonnegative")
        rows = np.asarray(rows, dtype=np.int64).ravel()
        cols = np.asarray(cols, dtype=np.int64).ravel()
        if weights is None:
            weights = np.ones(rows.shape, dtype=np.int64)
        weights = np.asarray(weights, dtype=np.int64).ravel()
        if not (rows.shape == cols.shape == weights.shape):
            raise SizeMismatch("rows, cols and weights must have equal length")
        if rows.size:
            bad = (rows < 0) | (rows >= n) | (cols < 0) | (cols >= n)
            if bad.any():
                k = int(np.flatnonzero(bad)[0])
                raise IndexOutOfRange(f"edge ({rows[k]}, {cols[k]}) outside [0, {n})")
            loops = rows == cols
            if loops.any():
                k = int(np.flatnonzero(loops)[0])
                raise SelfLoop(f"self-loop at vertex {rows[k]}")
            if (weights < 0).any():
                raise ValueError("edge weights must be nonnegative")
        lo = np.minimum(rows, cols)
        hi = np.maximum(rows, cols)
        key = lo * max(n, 1) + hi
        uniq, inverse = np.unique(key, return_inverse=True)
        summed = np.bincount(inverse, weights=weights, minlength=uniq.size)
        summed = np.rint(summed).astype(np.int64)
        keep = summed > 0
        uniq, summed = uniq[keep], summed[keep]
        width = max(n, 1)
        return cls(n, uniq // width, uniq % width, summed)

    @classmethod
    def empty(cls, n: int) -> "SparseSymGraph":
        z = np.zeros(0, dtype=np.int64)
        return cls(int(n), z, z.copy(), z.copy())

    @property
    def nnz(self) -> int:
        """Number of stored (upper-triangle) entries."""
        return int(self.rows.size)

    @property
    def total_weight(self) -> int:
        return int(self.weights.sum())

    def weight(self, i: int, j: int) -> int:
        if not (0 <= i < self.n and 0 <= j < self.n):
            raise IndexOutOfRange(f"({i}, {j}) outside [0, {self.n})")
        if i == j:
            return 0
        lo, hi = (i, j) if i < j else (j, i)
        key = lo * self.n + hi
        keys = self.rows * self.n + self.cols
        pos = np.searchsorted(keys, key)
        if pos < keys.size and keys[pos] == key:
            return int(self.weights[pos])
        return 0

    def edges(self) -> Iterable[tuple[int, int, int]]:
        for i, j, w in zip(self.rows.tolist(), self.cols.tolist(), self.weights.tolist()):
            yield i, j, w

    def row_sums(self) -> np.ndarray:
        out = np.bincount(self.rows, weights=self.weights, minlength=self.n)
        out += np.bincount(self.cols, weights=self.weights, minlength=self.n)
        return np.rint(out).astype(np.int64)

    def to_csr(self, dtype=np.float64) -> sp.csr_matrix:
        """Full symmetric CSR matrix (cached per dtype)."""
        for cached in self._csr:
            if cached.dtype == np.dtype(dtype):
                return cached
        r = np.concatenate([self.rows, self.cols])
        c = np.concatenate([self.cols, self.rows])
        w = np.concatenate([self.weights, self.weights]).astype(dtype)
        mat = sp.csr_matrix((w, (r, c)), shape=(self.n, self.n))
        mat.sort_indices()
        self._csr.append(mat)
        return mat

    def to_dense(self) -> np.ndarray:
        return self.to_csr(np.int64).toarray()

    def induced(self, kept: np.ndarray) -> "SparseSymGraph":
        """Subgraph on ``kept`` (sorted), relabelled 0..len(kept)-1."""
        kept = np.asarray(kept, dtype=np.int64)
        pos = np.full(self.n, -1, dtype=np.int64)
        pos[kept] = np.arange(kept.size)
        r, c = pos[self.rows], pos[self.cols]
        mask = (r >= 0) & (c >= 0)
        # kept is increasing, so relabelling preserves r < c and the sort order
        return SparseSymGraph(int(kept.size), r[mask], c[mask], self.weights[mask].copy())

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseSymGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


@dataclass(frozen=True)
class LayerStack:
    n: int
    layers: tuple[SparseSymGraph, ...]

    def __post_init__(self):
        if len(self.layers) < 1:
            raise ValueError("a layer stack needs at least one layer")
        for t, layer in enumerate(self.layers):
            if layer.n != self.n:
                raise SizeMismatch(f"layer {t} has n={layer.n}, expected {self.n}")
        object.__setattr__(self, "layers", tuple(self.layers))

    @classmethod
    def of(cls, layers: Sequence[SparseSymGraph]) -> "LayerStack":
        if not layers:
            raise ValueError("a layer stack needs at least one layer")
        return cls(layers[0].n, tuple(layers))

    @property
    def T(self) -> int:
        return len(self.layers)


@dataclass(frozen=True)
class TruncationResult:
    kept: np.ndarray
    sub: SparseSymGraph
    threshold: float
    dbar: float

    @property
    def n_prime(self) -> int:
        return int(self.kept.size)


def from_edge_list(n: int, edges: Iterable[tuple[int, int]]) -> SparseSymGraph:
    """Graph whose weight on {u, v} is the multiplicity of that pair in ``edges``."""
    arr = np.asarray(list(edges), dtype=np.int64).reshape(-1, 2)
    return SparseSymGraph.from_coo(n, arr[:, 0], arr[:, 1])


def aggregate_sum(stack: LayerStack) -> SparseSymGraph:
    """Entrywise sum of all layers."""
    rows = np.concatenate([g.rows for g in stack.layers])
    cols = np.concatenate([g.cols for g in stack.layers])
    weights = np.concatenate([g.weights for g in stack.layers])
    out = SparseSymGraph.from_coo(stack.n, rows, cols, weights)
    assert out.nnz == 0 or int(out.weights.max()) <= sum(
        int(g.weights.max()) if g.nnz else 0 for g in stack.layers
    )
    return out


def average_degree(a0: SparseSymGraph, t: int) -> float:
    if t < 1 or a0.n < 1:
        raise ValueError("need t >= 1 and n >= 1")
    return 2.0 * a0.total_weight / (a0.n * t)


def degree_threshold(dbar: float, t: int, exponent: float = DEFAULT_EXPONENT) -> float:
    """``e * (t * dbar) ** exponent`` with e Euler's number."""
    return math.e * (t * dbar) ** exponent


def kept_rows(row_sums: np.ndarray, threshold: float) -> np.ndarray:
    # non-strict: a row sum equal to the threshold is kept
    return np.flatnonzero(np.asarray(row_sums) <= threshold).astype(np.int64)


def truncate_by_degree(
    a0: SparseSymGraph, t: int, exponent: float = DEFAULT_EXPONENT
) -> TruncationResult:
    """Drop vertices whose row sum in ``a0`` exceeds the degree threshold."""
    dbar = average_degree(a0, t)
    threshold = degree_threshold(dbar, t, exponent)
    kept = kept_rows(a0.row_sums(), threshold)
    if kept.size == 0:
        raise AllRowsDropped(f"no row sum is <= {threshold:.6g}")
    return TruncationResult(kept, a0.induced(kept), threshold, dbar)


def read_edge_list(path, n: int) -> SparseSymGraph:
    """Parse a whitespace-separated 0-based edge list; '#' lines and blank
    lines are skipped."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s or s.startswith("#"):
                continue
            parts = s.split()
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected two vertex ids, got {s!r}")
            pairs.append((int(parts[0]), int(parts[1])))
    return from_edge_list(n, pairs)


def write_edge_list(path, graph: SparseSymGraph) -> None:
    """Write one line per unit of weight so that reading back restores ``graph``."""
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, w in graph.edges():
            for _ in range(w):
                fh.write(f"{i} {j}\n")


def load_manifest(path) -> LayerStack:
    """Load ``{"n": int, "layers": [path, ...]}``; relative layer paths are
    resolved against the manifest's directory."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict) or "n" not in doc or "layers" not in doc:
        raise ValueError(f"{path}: manifest needs keys 'n' and 'layers'")
    n = int(doc["n"])
    base = path.parent
    layers = [read_edge_list(base / p, n) for p in doc["layers"]]
    return LayerStack(n, tuple(layers))
