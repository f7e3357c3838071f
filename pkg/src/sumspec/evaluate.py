"""Misclassification metrics and the quantities the consistency bounds are
stated in (spectral deviation, smallest nonzero singular value, ...)."""

from __future__ import annotations

import itertools
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .eigensolve import as_operator
from .errors import EmptyCommunity, SizeMismatch
from .membership import MembershipMatrix

EXHAUSTIVE_MAX_K = 8
RANK_CUTOFF = 1e-9
POWER_TOL = 1e-6
POWER_MAX_ITER = 20000


@dataclass(frozen=True)
class EvalReport:
    overall: float
    per_community: list
    # permutation[b] is the true label matched to estimated label b
    permutation: list

    def to_dict(self) -> dict:
        return asdict(self)


def confusion_matrix(truth: np.ndarray, est: np.ndarray, k: int) -> np.ndarray:
    """counts[a, b] = #{i : truth_i == a and est_i == b}."""
    counts = np.zeros((k, k), dtype=np.int64)
    np.add.at(counts, (truth, est), 1)
    return counts


def match_exhaustive(counts: np.ndarray) -> tuple[int, np.ndarray]:
    """Maximise sum_b counts[perm[b], b] over all permutations."""
    k = counts.shape[0]
    perms = np.array(list(itertools.permutations(range(k))), dtype=np.int64)
    scores = counts[perms, np.arange(k)].sum(axis=1)
    best = int(np.argmax(scores))
    return int(scores[best]), perms[best]


def match_hungarian(counts: np.ndarray) -> tuple[int, np.ndarray]:
    rows, cols = linear_sum_assignment(counts, maximize=True)
    perm = np.empty(counts.shape[0], dtype=np.int64)
    perm[cols] = rows
    return int(counts[rows, cols].sum()), perm


def misclassification(truth: MembershipMatrix, est: MembershipMatrix,
                      method: Optional[str] = None) -> EvalReport:
    """Fraction of vertices misclassified under the best relabelling of ``est``.

    ``method`` is "exhaustive" or "hungarian"; by default exhaustive search is
    used up to k = 8.
    """
    if truth.n != est.n:
        raise SizeMismatch(f"truth has n={truth.n}, estimate has n={est.n}")
    k = max(truth.k, est.k)
    counts = confusion_matrix(truth.labels, est.labels, k)
    if method is None:
        method = "exhaustive" if k <= EXHAUSTIVE_MAX_K else "hungarian"
    if method == "exhaustive":
        matched, perm = match_exhaustive(counts)
    elif method == "hungarian":
        matched, perm = match_hungarian(counts)
    else:
        raise ValueError(f"unknown matching method {method!r}")
    n = truth.n
    sizes = counts.sum(axis=1)
    correct = np.zeros(k, dtype=np.int64)
    correct[perm] = counts[perm, np.arange(k)]
    per = np.where(sizes > 0, 1.0 - correct / np.maximum(sizes, 1), 0.0)
    overall = 1.0 - matched / n if n else 0.0
    return EvalReport(float(overall), per.tolist(), perm.tolist())


def _deviation_operator(a, p):
    a = as_operator(a)
    p = np.asarray(p, dtype=np.float64)
    if a.shape != p.shape:
        raise SizeMismatch(f"A is {a.shape}, P is {p.shape}")
    return lambda x: a @ x - p @ x, a.shape[0]


def spectral_norm_deviation(a, p, tol: float = POWER_TOL, seed: int = 0,
                            max_iter: int = POWER_MAX_ITER) -> float:
    """||A - P|| by power iteration on (A - P)^2.

    Stops once successive Rayleigh quotients of (A - P)^2 agree to
    ``tol**2`` relative, which keeps the norm itself well inside ``tol``.
    """
    apply, n = _deviation_operator(a, p)
    if n == 0:
        return 0.0
    x = np.random.default_rng([int(seed), 0x5057]).standard_normal(n)
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iter):
        y = apply(x)
        # Rayleigh quotient of (A - P)^2 at x
        rq = float(y @ y)
        if rq == 0.0:
            return 0.0
        z = apply(y)
        x = z / np.linalg.norm(z)
        if abs(rq - est) <= tol * tol * rq:
            est = rq
            break
        est = rq
    return float(np.sqrt(est))


def gamma_n(p) -> float:
    """Smallest singular value of ``p`` above ``RANK_CUTOFF * ||p||``."""
    s = np.linalg.svd(np.asarray(p, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0.0
    return float(s[s > RANK_CUTOFF * s[0]].min())


def heterogeneity_tau(psi, z, k: Optional[int] = None) -> np.ndarray:
    """(sum psi^2) * (sum psi^-2) over each community."""
    psi = np.asarray(psi, dtype=np.float64)
    z = np.asarray(z, dtype=np.int64)
    k = int(z.max()) + 1 if k is None else int(k)
    if (psi <= 0).any():
        raise ValueError("psi must be positive")
    sizes = np.bincount(z, minlength=k)
    if (sizes == 0).any():
        raise EmptyCommunity(f"communities {np.flatnonzero(sizes == 0).tolist()} are empty")
    sq = np.bincount(z, weights=psi**2, minlength=k)
    inv = np.bincount(z, weights=psi**-2.0, minlength=k)
    return sq * inv


@dataclass(frozen=True)
class TheoremDiagnostics:
    alpha: float
    lam: float
    gamma_n: float
    spectral_dev: float
    tau: Optional[list]
    n_prime: int
    n_prime_min: int
    p_norm: float

    def to_dict(self) -> dict:
        return asdict(self)

    def gamma_bound(self, t: int) -> float:
        """T * alpha * lambda * n'_min, a lower bound on gamma_n when lambda > 0."""
        return t * self.alpha * self.lam * self.n_prime_min


def alpha_lambda(b_stack: Sequence) -> tuple[float, float]:
    """alpha = largest probability over all layers; lambda * alpha = smallest
    eigenvalue over all layers."""
    mats = [np.asarray(b, dtype=np.float64) for b in b_stack]
    alpha = max(float(b.max()) for b in mats)
    smallest = min(float(np.linalg.eigvalsh(b)[0]) for b in mats)
    return alpha, (smallest / alpha if alpha > 0 else 0.0)


def theorem_diagnostics(a, p, kept, truth: MembershipMatrix, b_stack: Sequence,
                        psi=None, seed: int = 0) -> TheoremDiagnostics:
    """Diagnostics for a truncated sum matrix ``a`` and its expectation ``p``."""
    kept = np.asarray(kept, dtype=np.int64)
    alpha, lam = alpha_lambda(b_stack)
    sizes = np.bincount(truth.labels[kept], minlength=truth.k)
    tau = None
    if psi is not None:
        tau = heterogeneity_tau(psi, truth.labels, truth.k).tolist()
    p = np.asarray(p, dtype=np.float64)
    return TheoremDiagnostics(
        alpha=alpha,
        lam=lam,
        gamma_n=gamma_n(p),
        spectral_dev=spectral_norm_deviation(a, p, seed=seed),
        tau=tau,
        n_prime=int(kept.size),
        n_prime_min=int(sizes.min()),
        p_norm=float(np.linalg.norm(p, 2)),
    )


def misclassification_bound_shape(n: int, n_prime: int, n_min: int, k: int,
                                  gamma: float, deviation: float) -> tuple[float, float]:
    """Split the misclassification bound for algorithm1 into its fixed part
    (n - n') / n_min and the factor multiplying the unknown constant,
    K * ||A - P||^2 / gamma^2."""
    fixed = (n - n_prime) / n_min if n_min else np.inf
    scale = k * deviation**2 / gamma**2 if gamma > 0 else np.inf
    return float(fixed), float(scale)
