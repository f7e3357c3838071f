"""Leading eigenpairs of a sparse symmetric matrix, ranked by |eigenvalue|.

Two implicitly restarted Lanczos solves (ARPACK) are run, one for each end
of the spectrum. The union of the returned vectors spans an invariant
subspace, so a Rayleigh-Ritz step on that union yields exact eigenpairs
that are then ranked by absolute value. This catches large negative
eigenvalues that a single largest-algebraic solve would miss.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, eigsh

from .errors import ConvergenceFailure, KTooLarge
from .netcore import SparseSymGraph

DEFAULT_TOL = 1e-8
RESTARTS_PER_VECTOR = 300


@dataclass(frozen=True, eq=False)
class Embedding:
    vectors: np.ndarray
    values: np.ndarray
    kept: np.ndarray
    residuals: np.ndarray
    # |lambda_k| == |lambda_{k+1}| (to 1e-9 relative): the k-th column is an
    # arbitrary completion of a degenerate eigenspace
    tie_at_cut: bool = False

    @property
    def k(self) -> int:
        return int(self.values.size)


def as_operator(a):
    """Float64 CSR (or dense) view of a graph or matrix."""
    if isinstance(a, SparseSymGraph):
        return a.to_csr(np.float64)
    if sp.issparse(a):
        return sp.csr_matrix(a, dtype=np.float64)
    return np.asarray(a, dtype=np.float64)


def canonicalize_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip columns so that the first nonzero coordinate is positive."""
    out = np.array(vectors, dtype=np.float64, copy=True)
    for c in range(out.shape[1]):
        col = out[:, c]
        big = np.abs(col) > 1e-10 * max(np.abs(col).max(), 1e-300)
        if big.any() and col[np.argmax(big)] < 0:
            out[:, c] = -col
    return out


def _rank_by_magnitude(values: np.ndarray) -> np.ndarray:
    # descending |lambda|; among equal magnitudes the positive one first
    return np.lexsort((-values, -np.abs(values)))


def _dense_pairs(mat, k):
    dense = mat.toarray() if sp.issparse(mat) else mat
    vals, vecs = np.linalg.eigh(dense)
    order = _rank_by_magnitude(vals)
    return vals[order], vecs[:, order]


def _arpack_pairs(mat, k, v0, maxiter):
    n = mat.shape[0]
    ncv = min(n, max(2 * k + 1, 20))
    blocks = []
    for which in ("LA", "SA"):
        try:
            _, vecs = eigsh(mat, k=k, which=which, v0=v0, ncv=ncv, maxiter=maxiter, tol=0)
        except ArpackNoConvergence as exc:
            raise ConvergenceFailure(
                f"ARPACK ({which}) did not converge within {maxiter} restarts",
                residuals=None,
            ) from exc
        except ArpackError as exc:
            raise ConvergenceFailure(f"ARPACK ({which}) failed: {exc}") from exc
        blocks.append(vecs)
    basis, s, _ = np.linalg.svd(np.hstack(blocks), full_matrices=False)
    basis = basis[:, s > 1e-6 * s[0]]
    projected = basis.T @ (mat @ basis)
    projected = 0.5 * (projected + projected.T)
    vals, rot = np.linalg.eigh(projected)
    order = _rank_by_magnitude(vals)
    return vals[order], basis @ rot[:, order]


def leading_eigenpairs(
    a,
    k: int,
    tol: float = DEFAULT_TOL,
    seed: int = 0,
    kept: Optional[np.ndarray] = None,
    max_restarts: Optional[int] = None,
) -> Embedding:
    """The ``k`` eigenpairs of symmetric ``a`` with largest absolute eigenvalue.

    Each returned pair satisfies ``||A u - lam u|| <= tol * max(1, |lam|)``;
    otherwise ConvergenceFailure is raised with the achieved residuals.
    """
    mat = as_operator(a)
    n = mat.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if k > n:
        raise KTooLarge(f"asked for {k} eigenpairs of a {n}x{n} matrix")
    kept = np.arange(n) if kept is None else np.asarray(kept, dtype=np.int64)

    is_zero = (mat.count_nonzero() == 0) if sp.issparse(mat) else not mat.any()
    if is_zero:
        # every vector is an eigenvector; Lanczos would break down immediately
        vals, vecs = np.zeros(n), np.eye(n)
    elif k >= n - 1:
        vals, vecs = _dense_pairs(mat, k)
    else:
        v0 = np.random.default_rng([int(seed), 0xE16]).uniform(-1.0, 1.0, size=n)
        maxiter = max_restarts if max_restarts is not None else RESTARTS_PER_VECTOR * k
        vals, vecs = _arpack_pairs(mat, k, v0, maxiter)

    tie = False
    if vals.size > k:
        a_k, a_next = abs(vals[k - 1]), abs(vals[k])
        tie = bool(a_k - a_next <= 1e-9 * max(a_k, 1.0))
    vals, vecs = vals[:k].copy(), canonicalize_signs(vecs[:, :k])

    residuals = np.linalg.norm(mat @ vecs - vecs * vals, axis=0)
    bound = tol * np.maximum(1.0, np.abs(vals))
    if (residuals > bound).any():
        raise ConvergenceFailure(
            f"eigenpair residuals {residuals.tolist()} exceed tolerance {tol}",
            residuals=residuals,
        )
    return Embedding(vecs, vals, kept, residuals, tie)


def scree_values(a, kmax: int, tol: float = DEFAULT_TOL, seed: int = 0) -> np.ndarray:
    """The ``kmax`` largest absolute eigenvalues, descending."""
    return np.abs(leading_eigenpairs(a, kmax, tol=tol, seed=seed).values)
