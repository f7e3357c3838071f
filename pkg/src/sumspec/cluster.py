"""Row clustering of spectral embeddings.

``approx_kmeans`` is kmeans++ seeding followed by Lloyd iterations,
``approx_kmedian`` the same scheme with D^1 seeding and geometric-median
center updates. Both keep the best of several seeded restarts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput

DEFAULT_RESTARTS = 20
MAX_ALTERNATIONS = 300
WEISZFELD_TOL = 1e-9
WEISZFELD_MAX_STEPS = 200
NEWTON_STEPS = 20
ZERO_ROW_TOL = 1e-12
# clusters up to this size also try every member as a candidate median
_VERTEX_CHECK_LIMIT = 2000


@dataclass(frozen=True, eq=False)
class RowClustering:
    assign: np.ndarray
    centers: np.ndarray
    objective: float
    history: list = field(default_factory=list)
    repairs: int = 0
    restart_objectives: list = field(default_factory=list)


def _sq_dists(rows, centers):
    diff = rows[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _nearest(dist):
    # argmin returns the first minimum, i.e. ties go to the lowest center index
    return np.argmin(dist, axis=1)


def kmeans_objective(rows, assign, k: int) -> float:
    """Sum of squared distances to cluster centroids for a fixed assignment."""
    rows = np.asarray(rows, dtype=np.float64)
    total = 0.0
    for c in range(k):
        members = rows[assign == c]
        if members.size:
            total += float(((members - members.mean(axis=0)) ** 2).sum())
    return total


def kmedian_cost(rows, assign, centers) -> float:
    return float(np.linalg.norm(rows - centers[assign], axis=1).sum())


def _seed_centers(rows, k, rng, power):
    """kmeans++-style seeding with sampling weight dist**power."""
    m = rows.shape[0]
    chosen = [int(rng.integers(m))]
    best = np.full(m, np.inf)
    for _ in range(1, k):
        d = np.linalg.norm(rows - rows[chosen[-1]], axis=1)
        best = np.minimum(best, d)
        w = best**power
        total = w.sum()
        if total > 0:
            chosen.append(int(rng.choice(m, p=w / total)))
        else:
            chosen.append(int(rng.integers(m)))
    return rows[chosen].copy()


def _repair_empty(rows, assign, centers, k, metric_dist):
    """Move each empty cluster's center to the point farthest from its own
    center. Returns the number of clusters repaired."""
    counts = np.bincount(assign, minlength=k)
    empty = np.flatnonzero(counts == 0)
    if empty.size == 0:
        return 0
    own = metric_dist(rows, centers[assign])
    taken = set()
    for c in empty:
        order = np.argsort(-own, kind="stable")
        pick = next((int(i) for i in order if int(i) not in taken), int(order[0]))
        taken.add(pick)
        centers[c] = rows[pick]
    return int(empty.size)


def _row_sq(rows, targets):
    return ((rows - targets) ** 2).sum(axis=1)


def _row_norm(rows, targets):
    return np.linalg.norm(rows - targets, axis=1)


def _lloyd(rows, k, rng, max_iter):
    centers = _seed_centers(rows, k, rng, power=2)
    assign = _nearest(_sq_dists(rows, centers))
    history, repairs = [], 0
    for _ in range(max_iter):
        for c in range(k):
            members = rows[assign == c]
            if members.size:
                centers[c] = members.mean(axis=0)
        repairs += _repair_empty(rows, assign, centers, k, _row_sq)
        new = _nearest(_sq_dists(rows, centers))
        history.append(float(_row_sq(rows, centers[new]).sum()))
        if np.array_equal(new, assign):
            break
        assign = new
    # final centroid refresh keeps centers consistent with the returned assignment
    for c in range(k):
        members = rows[assign == c]
        if members.size:
            centers[c] = members.mean(axis=0)
    assign, centers = _hartigan(rows, assign, centers, k, history)
    objective = float(_row_sq(rows, centers[assign]).sum())
    return assign, centers, objective, history, repairs


def _hartigan(rows, assign, centers, k, history, max_sweeps: int = MAX_ALTERNATIONS):
    """Single-row moves that strictly lower the objective (Hartigan-Wong).

    A Lloyd fixed point can still be improved by moving one row, because the
    move also shifts both centroids. Stops at a point where no move helps.
    """
    assign = assign.copy()
    counts = np.bincount(assign, minlength=k).astype(np.float64)
    for _ in range(max_sweeps):
        moved = False
        for i in range(rows.shape[0]):
            a = assign[i]
            if counts[a] <= 1:
                continue
            d = ((centers - rows[i]) ** 2).sum(axis=1)
            remove = counts[a] / (counts[a] - 1.0) * d[a]
            add = counts / (counts + 1.0) * d
            add[a] = np.inf
            b = int(np.argmin(add))
            if add[b] < remove * (1.0 - 1e-12):
                centers[a] = (centers[a] * counts[a] - rows[i]) / (counts[a] - 1.0)
                centers[b] = (centers[b] * counts[b] + rows[i]) / (counts[b] + 1.0)
                counts[a] -= 1.0
                counts[b] += 1.0
                assign[i] = b
                moved = True
        if not moved:
            break
        for c in range(k):
            centers[c] = rows[assign == c].mean(axis=0)
        history.append(float(_row_sq(rows, centers[assign]).sum()))
    return assign, centers


def _check_input(rows, k):
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2:
        raise ValueError("rows must be a 2-D array")
    if k < 1 or rows.shape[0] < k:
        raise DegenerateInput(f"cannot form {k} clusters from {rows.shape[0]} rows")
    return rows


def _best_of(runs):
    objectives = [r[2] for r in runs]
    best = int(np.argmin(objectives))
    assign, centers, objective, history, repairs = runs[best]
    return RowClustering(assign, centers, objective, history, repairs, objectives)


def approx_kmeans(rows, k: int, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                  max_iter: int = MAX_ALTERNATIONS) -> RowClustering:
    """Best-of-``restarts`` kmeans++/Lloyd clustering of the rows."""
    rows = _check_input(rows, k)
    streams = np.random.SeedSequence([int(seed), 0x4B4D]).spawn(max(1, restarts))
    runs = [_lloyd(rows, k, np.random.default_rng(s), max_iter) for s in streams]
    return _best_of(runs)


def normalize_rows(u, zero_tol: float = ZERO_ROW_TOL):
    """Unit-normalise rows with norm above ``zero_tol``; return them with
    their indices."""
    u = np.asarray(u, dtype=np.float64)
    norms = np.linalg.norm(u, axis=1)
    nonzero = np.flatnonzero(norms > zero_tol)
    return u[nonzero] / norms[nonzero, None], nonzero


def geometric_median(points, start=None, tol: float = WEISZFELD_TOL,
                     max_steps: int = WEISZFELD_MAX_STEPS) -> np.ndarray:
    """Weiszfeld iteration with the Vardi-Zhang step at data points.

    The returned point never has a larger sum of distances than ``start``.
    """
    points = np.asarray(points, dtype=np.float64)
    y = points.mean(axis=0) if start is None else np.array(start, dtype=np.float64)
    if points.shape[0] == 1:
        return points[0].copy()

    def cost(c):
        return float(np.linalg.norm(points - c, axis=1).sum())

    y0, c0 = y.copy(), cost(y)
    for _ in range(max_steps):
        d = np.linalg.norm(points - y, axis=1)
        at = d <= 1e-14
        far = ~at
        if not far.any():
            break
        w = 1.0 / d[far]
        t = (points[far] * w[:, None]).sum(axis=0) / w.sum()
        n_at = int(at.sum())
        if n_at:
            r_vec = ((points[far] - y) * w[:, None]).sum(axis=0)
            r = float(np.linalg.norm(r_vec))
            if r <= n_at:
                break
            eta = n_at / r
            t = (1.0 - eta) * t + eta * y
        step = float(np.linalg.norm(t - y))
        y = t
        if step <= tol * max(1.0, float(np.linalg.norm(y))):
            break
    y = _newton_polish(points, y, cost)
    if points.shape[0] <= _VERTEX_CHECK_LIMIT:
        sums = np.linalg.norm(points[:, None, :] - points[None, :, :], axis=2).sum(axis=1)
        j = int(np.argmin(sums))
        if sums[j] < cost(y):
            y = points[j].copy()
    if cost(y) > c0:
        return y0
    return y


def _newton_polish(points, y, cost, steps: int = NEWTON_STEPS):
    """Newton steps on the sum of distances. Weiszfeld is only linearly
    convergent, so this sharpens the last digits; a step is kept only if it
    lowers the cost."""
    c = cost(y)
    for _ in range(steps):
        diff = y - points
        d = np.linalg.norm(diff, axis=1)
        if (d <= 1e-12).any():
            break
        u = diff / d[:, None]
        grad = u.sum(axis=0)
        hess = (np.eye(y.size) * (1.0 / d).sum()) - (u.T * (1.0 / d)) @ u
        try:
            delta = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(delta)):
            break
        shrink = 1.0
        while shrink > 1e-6:
            cand = y - shrink * delta
            cc = cost(cand)
            if cc < c:
                break
            shrink *= 0.5
        else:
            break
        y, c = cand, cc
    return y


def _alternate_median(rows, k, rng, max_iter):
    centers = _seed_centers(rows, k, rng, power=1)
    assign = _nearest(_sq_dists(rows, centers))
    history, repairs = [], 0
    for _ in range(max_iter):
        for c in range(k):
            members = rows[assign == c]
            if members.size:
                centers[c] = geometric_median(members, start=centers[c])
        repairs += _repair_empty(rows, assign, centers, k, _row_norm)
        new = _nearest(_sq_dists(rows, centers))
        history.append(kmedian_cost(rows, new, centers))
        if np.array_equal(new, assign):
            break
        assign = new
    objective = kmedian_cost(rows, assign, centers)
    return assign, centers, objective, history, repairs


def approx_kmedian(rows, k: int, restarts: int = DEFAULT_RESTARTS, seed: int = 0,
                   max_iter: int = MAX_ALTERNATIONS) -> RowClustering:
    """Best-of-``restarts`` K-median clustering (sum of Euclidean distances)."""
    rows = _check_input(rows, k)
    streams = np.random.SeedSequence([int(seed), 0x4B4E]).spawn(max(1, restarts))
    runs = [_alternate_median(rows, k, np.random.default_rng(s), max_iter) for s in streams]
    return _best_of(runs)
