"""Plug-in estimates of the community proportions and connectivity matrices."""

from __future__ import annotations

import numpy as np

from .errors import SizeMismatch
from .membership import MembershipMatrix
from .netcore import LayerStack, SparseSymGraph


def estimate_pi(zhat: MembershipMatrix) -> np.ndarray:
    return zhat.sizes() / zhat.n


def pair_counts(zhat: MembershipMatrix) -> np.ndarray:
    """O[a, b] = n_a * n_b off the diagonal and n_a * (n_a - 1) on it."""
    sizes = zhat.sizes().astype(np.float64)
    out = np.outer(sizes, sizes)
    np.fill_diagonal(out, sizes * (sizes - 1))
    return out


def block_edge_counts(layer: SparseSymGraph, zhat: MembershipMatrix) -> np.ndarray:
    """Sum of A_ij over ordered pairs (i, j) with labels (a, b)."""
    k = zhat.k
    a = zhat.labels[layer.rows]
    b = zhat.labels[layer.cols]
    counts = np.zeros((k, k), dtype=np.float64)
    np.add.at(counts, (a, b), layer.weights)
    np.add.at(counts, (b, a), layer.weights)
    return counts


def estimate_B(stack: LayerStack, zhat: MembershipMatrix) -> list:
    """Per-layer connectivity estimates.

    Blocks with no vertex pairs (O[a, b] == 0) are NaN rather than 0.
    """
    if stack.n != zhat.n:
        raise SizeMismatch(f"stack has n={stack.n}, membership has n={zhat.n}")
    denom = pair_counts(zhat)
    defined = denom > 0
    out = []
    for layer in stack.layers:
        counts = block_edge_counts(layer, zhat)
        est = np.full(counts.shape, np.nan)
        est[defined] = counts[defined] / denom[defined]
        out.append(est)
    return out
