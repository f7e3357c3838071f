"""End-to-end spectral clustering of a summed layer stack.

``algorithm1``: sum, degree truncation, top-|lambda| eigenvectors, K-means.
``algorithm2``: same embedding, rows projected to the unit sphere, K-median.
Vertices removed by truncation (and, for algorithm2, vertices whose
embedding row is zero) are assigned community 0.
"""

from __future__ import annotations

import contextlib
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from . import cluster, eigensolve
from .errors import AllRowsDropped, NoNonzeroRows, SumSpecError
from .membership import MembershipMatrix, extend_membership
from .netcore import (
    LayerStack,
    SparseSymGraph,
    aggregate_sum,
    degree_threshold,
    kept_rows,
    truncate_by_degree,
)

ALGORITHMS = ("alg1", "alg2")


@dataclass(frozen=True)
class Options:
    tol: float = eigensolve.DEFAULT_TOL
    restarts: int = cluster.DEFAULT_RESTARTS
    seed: int = 0
    # truncation threshold is e * (T * dbar) ** (1 + delta)
    delta: float = 0.25
    max_restarts: Optional[int] = None

    @property
    def exponent(self) -> float:
        return 1.0 + self.delta


@dataclass
class RunReport:
    algorithm: str
    n: int
    T: int
    k: int
    dbar: float = float("nan")
    threshold: float = float("nan")
    n_prime: int = 0
    n_double_prime: Optional[int] = None
    eigenvalues: list = field(default_factory=list)
    eigen_tie_at_cut: bool = False
    objective: float = float("nan")
    repairs: int = 0
    labels: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DetectionResult:
    membership: MembershipMatrix
    report: RunReport
    embedding: eigensolve.Embedding
    # the truncated sum matrix the embedding was computed from
    sub: object


@contextlib.contextmanager
def _stage(name):
    try:
        yield
    except SumSpecError as exc:
        if getattr(exc, "stage", None) is None:
            exc.stage = name
        raise


def _truncate_matrix(a0, t: int, exponent: float):
    """Truncation for a plain symmetric matrix (e.g. an expected matrix)."""
    if sp.issparse(a0):
        mat = sp.csr_matrix(a0, dtype=np.float64)
        row_sums = np.asarray(mat.sum(axis=1)).ravel()
    else:
        mat = np.asarray(a0, dtype=np.float64)
        row_sums = mat.sum(axis=1)
    n = mat.shape[0]
    dbar = float(row_sums.sum()) / (n * t)
    threshold = degree_threshold(dbar, t, exponent)
    kept = kept_rows(row_sums, threshold)
    if kept.size == 0:
        raise AllRowsDropped(f"no row sum is <= {threshold:.6g}")
    sub = mat[kept][:, kept]
    return kept, sub, threshold, dbar


def detect_matrix(a0, t: int, k: int, opts: Options = Options(),
                  algorithm: str = "alg1") -> DetectionResult:
    """Run either algorithm on an already-summed matrix ``a0`` over ``t`` layers.

    ``a0`` may be a SparseSymGraph or any real symmetric matrix, which lets a
    harness feed in expected matrices directly.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {algorithm!r}")
    if k < 1:
        raise ValueError("k must be >= 1")
    n = a0.n if isinstance(a0, SparseSymGraph) else a0.shape[0]
    report = RunReport(algorithm=algorithm, n=n, T=t, k=k)

    with _stage("truncate"):
        if isinstance(a0, SparseSymGraph):
            tr = truncate_by_degree(a0, t, opts.exponent)
            kept, sub, threshold, dbar = tr.kept, tr.sub, tr.threshold, tr.dbar
        else:
            kept, sub, threshold, dbar = _truncate_matrix(a0, t, opts.exponent)
    report.dbar, report.threshold, report.n_prime = dbar, threshold, int(kept.size)

    with _stage("eigensolve"):
        emb = eigensolve.leading_eigenpairs(
            sub, k, tol=opts.tol, seed=opts.seed, kept=kept, max_restarts=opts.max_restarts
        )
    report.eigenvalues = emb.values.tolist()
    report.eigen_tie_at_cut = emb.tie_at_cut

    if algorithm == "alg1":
        with _stage("cluster"):
            fit = cluster.approx_kmeans(emb.vectors, k, restarts=opts.restarts, seed=opts.seed)
        partial = fit.assign
    else:
        u_plus, nonzero = cluster.normalize_rows(emb.vectors)
        report.n_double_prime = int(nonzero.size)
        with _stage("normalize"):
            if nonzero.size == 0:
                raise NoNonzeroRows("every embedding row is zero")
        with _stage("cluster"):
            fit = cluster.approx_kmedian(u_plus, k, restarts=opts.restarts, seed=opts.seed)
        partial = extend_membership(fit.assign, nonzero, kept.size, k).labels

    report.objective, report.repairs = fit.objective, fit.repairs
    membership = extend_membership(partial, kept, n, k)
    report.labels = membership.labels.tolist()
    return DetectionResult(membership, report, emb, sub)


def detect(stack: LayerStack, k: int, opts: Options = Options(),
           algorithm: str = "alg1") -> DetectionResult:
    with _stage("aggregate"):
        a0 = aggregate_sum(stack)
    return detect_matrix(a0, stack.T, k, opts, algorithm)


def algorithm1(stack: LayerStack, k: int, opts: Options = Options()) -> MembershipMatrix:
    """Spectral clustering of the summed adjacency matrix."""
    return detect(stack, k, opts, "alg1").membership


def algorithm2(stack: LayerStack, k: int, opts: Options = Options()) -> MembershipMatrix:
    """Spherical spectral clustering of the summed adjacency matrix."""
    return detect(stack, k, opts, "alg2").membership
