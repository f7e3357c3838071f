"""Dynamic stochastic block models, with and without degree correction.

Edge draws use a counter-based generator: the uniform deciding pair
(i, j) in layer t is a pure function of (seed, t, i, j), so layers and
vertex pairs can be sampled in any order (or in parallel) with identical
results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .errors import EmptyCommunity, IdentifiabilityViolation, InvalidDistribution
from .membership import GroundTruth
from .netcore import LayerStack, SparseSymGraph

PI_TOL = 1e-12
PSI_TOL = 1e-12
DEFAULT_PSI_RANGE = (0.2, 1.0)

_GOLDEN = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1
_PAIR_BLOCK = 1 << 20


def _validate_pi(pi) -> np.ndarray:
    pi = np.asarray(pi, dtype=np.float64).ravel()
    if pi.size == 0 or not np.all(np.isfinite(pi)) or (pi < 0).any():
        raise InvalidDistribution(f"invalid probability vector {pi.tolist()}")
    if abs(pi.sum() - 1.0) > PI_TOL:
        raise InvalidDistribution(f"probabilities sum to {pi.sum()!r}, not 1")
    return pi


def _validate_b(b, k: Optional[int] = None) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError(f"connectivity matrix must be square, got shape {b.shape}")
    if k is not None and b.shape[0] != k:
        raise ValueError(f"connectivity matrix is {b.shape[0]}x{b.shape[0]}, expected {k}x{k}")
    if not np.array_equal(b, b.T):
        raise ValueError("connectivity matrix must be symmetric")
    if not np.all(np.isfinite(b)) or (b < 0).any() or (b > 1).any():
        raise ValueError("connectivity probabilities must lie in [0, 1]")
    return b


@dataclass(frozen=True, eq=False)
class ModelParams:
    """pi, the per-layer connectivity matrices and optional degree parameters."""

    k: int
    pi: np.ndarray
    b_stack: tuple
    psi: Optional[np.ndarray] = None

    def __post_init__(self):
        pi = _validate_pi(self.pi)
        if pi.size != self.k:
            raise InvalidDistribution(f"pi has {pi.size} entries for k={self.k}")
        if len(self.b_stack) < 1:
            raise ValueError("b_stack needs at least one layer")
        stack = tuple(_validate_b(b, self.k) for b in self.b_stack)
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "b_stack", stack)
        if self.psi is not None:
            psi = np.asarray(self.psi, dtype=np.float64).ravel()
            if (psi <= 0).any() or (psi > 1).any():
                raise ValueError("degree parameters must lie in (0, 1]")
            object.__setattr__(self, "psi", psi)

    @property
    def T(self) -> int:
        return len(self.b_stack)

    @property
    def alpha(self) -> float:
        return max(float(b.max()) for b in self.b_stack)

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "pi": self.pi.tolist(),
            "b_stack": [b.tolist() for b in self.b_stack],
            "psi": None if self.psi is None else self.psi.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelParams":
        return cls(
            k=int(doc["k"]),
            pi=doc["pi"],
            b_stack=tuple(np.asarray(b, dtype=np.float64) for b in doc["b_stack"]),
            psi=doc.get("psi"),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ModelParams":
        return cls.from_dict(json.loads(text))


def sample_memberships(n: int, pi, seed: int) -> GroundTruth:
    """Draw n i.i.d. labels from the categorical distribution ``pi``."""
    pi = _validate_pi(pi)
    rng = np.random.default_rng(seed)
    z = rng.choice(pi.size, size=int(n), p=pi)
    return GroundTruth(z, int(pi.size))


def normalize_psi(raw, z, k: Optional[int] = None) -> np.ndarray:
    """Divide each weight by the largest weight in its community."""
    raw = np.asarray(raw, dtype=np.float64).ravel()
    z = np.asarray(z, dtype=np.int64).ravel()
    if raw.shape != z.shape:
        raise ValueError("raw weights and labels differ in length")
    if (raw <= 0).any():
        raise ValueError("raw degree weights must be positive")
    k = int(z.max()) + 1 if k is None else int(k)
    peak = np.full(k, -np.inf)
    np.maximum.at(peak, z, raw)
    empty = np.flatnonzero(~np.isfinite(peak))
    if empty.size:
        raise EmptyCommunity(f"communities {empty.tolist()} have no members")
    psi = raw / peak[z]
    # pin the maximiser to exactly 1 regardless of rounding
    psi[raw == peak[z]] = 1.0
    return psi


def draw_psi(gt: GroundTruth, seed: int, low: float = 0.2, high: float = 1.0) -> np.ndarray:
    """Uniform[low, high] raw weights normalised per community."""
    if not 0 < low <= high:
        raise ValueError("need 0 < low <= high")
    rng = np.random.default_rng([int(seed), 0x5053])
    return normalize_psi(rng.uniform(low, high, size=gt.n), gt.labels, gt.k)


def check_identifiable(psi, z, k: int) -> None:
    psi = np.asarray(psi, dtype=np.float64)
    peak = np.full(k, -np.inf)
    np.maximum.at(peak, np.asarray(z), psi)
    bad = np.flatnonzero(np.isfinite(peak) & (np.abs(peak - 1.0) > PSI_TOL))
    if bad.size:
        raise IdentifiabilityViolation(
            f"max degree parameter in communities {bad.tolist()} is not 1: {peak[bad].tolist()}"
        )


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finaliser, vectorised over uint64."""
    x = x ^ (x >> np.uint64(30))
    x = x * np.uint64(0xBF58476D1CE4E5B9)
    x = x ^ (x >> np.uint64(27))
    x = x * np.uint64(0x94D049BB133111EB)
    return x ^ (x >> np.uint64(31))


def _layer_key(seed: int, layer: int) -> np.uint64:
    s = np.array([(int(seed) + _GOLDEN) & _MASK64], dtype=np.uint64)
    s = _mix64(s)
    s = _mix64(s ^ np.uint64(((int(layer) + 1) * _GOLDEN) & _MASK64))
    return s[0]


def pair_uniforms(seed: int, layer: int, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    """Uniform[0, 1) variate attached to the unordered pair {i, j} of a layer."""
    i = np.asarray(i, dtype=np.uint64)
    j = np.asarray(j, dtype=np.uint64)
    lo, hi = np.minimum(i, j), np.maximum(i, j)
    counter = hi * (hi - np.uint64(1)) // np.uint64(2) + lo + np.uint64(1)
    x = _mix64(_layer_key(seed, layer) + counter * np.uint64(_GOLDEN))
    return (x >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


def _pair_blocks(n: int):
    """Yield (i, j) arrays covering all i < j, a bounded number of pairs at a time."""
    start = 0
    while start < n - 1:
        stop, count = start, 0
        while stop < n - 1 and (count == 0 or count + (n - 1 - stop) <= _PAIR_BLOCK):
            count += n - 1 - stop
            stop += 1
        lengths = n - 1 - np.arange(start, stop)
        i = np.repeat(np.arange(start, stop, dtype=np.int64), lengths)
        offsets = np.arange(i.size) - np.repeat(np.cumsum(lengths) - lengths, lengths)
        yield i, i + 1 + offsets
        start = stop


def _sample_layer(z, b, psi, seed, layer) -> SparseSymGraph:
    n = z.size
    rows, cols = [], []
    for i, j in _pair_blocks(n):
        p = b[z[i], z[j]]
        if psi is not None:
            p = p * psi[i] * psi[j]
        hit = pair_uniforms(seed, layer, i, j) < p
        rows.append(i[hit])
        cols.append(j[hit])
    if not rows:
        return SparseSymGraph.empty(n)
    r, c = np.concatenate(rows), np.concatenate(cols)
    # blocks are emitted in (i, j) lexicographic order already
    return SparseSymGraph(n, r, c, np.ones(r.size, dtype=np.int64))


def sample_dsbm_layer(gt: GroundTruth, b, seed: int, layer: int = 0) -> SparseSymGraph:
    """One layer: each pair i < j joins with probability b[z_i, z_j]."""
    b = _validate_b(b, gt.k)
    return _sample_layer(gt.labels, b, None, seed, layer)


def sample_ddcbm_layer(gt: GroundTruth, psi, b, seed: int, layer: int = 0) -> SparseSymGraph:
    """One layer: each pair i < j joins with probability psi_i psi_j b[z_i, z_j]."""
    b = _validate_b(b, gt.k)
    psi = np.asarray(psi, dtype=np.float64).ravel()
    if psi.size != gt.n:
        raise ValueError(f"psi has {psi.size} entries for n={gt.n}")
    check_identifiable(psi, gt.labels, gt.k)
    return _sample_layer(gt.labels, b, psi, seed, layer)


def sample_stack(gt: GroundTruth, b_stack: Sequence, seed: int, psi=None) -> LayerStack:
    """All layers of a DSBM (``psi is None``) or DDCBM draw."""
    if psi is None:
        layers = [sample_dsbm_layer(gt, b, seed, t) for t, b in enumerate(b_stack)]
    else:
        layers = [sample_ddcbm_layer(gt, psi, b, seed, t) for t, b in enumerate(b_stack)]
    return LayerStack(gt.n, tuple(layers))


def expected_sum_matrix(gt: GroundTruth, kept, b_stack: Sequence, psi=None) -> np.ndarray:
    """Sum over layers of Z B Z^T (or Psi B Psi^T) restricted to ``kept``.

    The diagonal is left as the formula gives it, i.e. nonzero.
    """
    kept = np.arange(gt.n) if kept is None else np.asarray(kept, dtype=np.int64)
    z = gt.labels[kept]
    b_sum = np.sum([np.asarray(b, dtype=np.float64) for b in b_stack], axis=0)
    p = b_sum[np.ix_(z, z)]
    if psi is not None:
        w = np.asarray(psi, dtype=np.float64)[kept]
        p = p * np.outer(w, w)
    return p


class SumCheck(NamedTuple):
    nonsingular: bool
    min_eigenvalue: float
    lam: float


def check_sum_nonsingular(b_stack: Sequence) -> SumCheck:
    """Is the layer-summed connectivity matrix invertible?

    ``min_eigenvalue`` is the smallest (algebraic) eigenvalue of the sum and
    ``lam`` that value divided by the largest single-layer probability.
    """
    mats = [np.asarray(b, dtype=np.float64) for b in b_stack]
    if not mats:
        raise ValueError("b_stack is empty")
    total = np.sum(mats, axis=0)
    eig = np.linalg.eigvalsh(total)
    scale = np.linalg.norm(total, 2)
    nonsingular = bool(scale > 0 and np.abs(eig).min() > 1e-10 * scale)
    alpha = max(float(b.max()) for b in mats)
    lam = float(eig[0] / alpha) if alpha > 0 else 0.0
    return SumCheck(nonsingular, float(eig[0]), lam)
