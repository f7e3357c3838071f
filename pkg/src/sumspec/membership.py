"""Hard community assignments.

Labels are 0-based: community 0 plays the role of the first unit vector,
which is also the fill value for vertices an algorithm could not place.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeMismatch


@dataclass(frozen=True, eq=False)
class MembershipMatrix:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64).ravel()
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.k):
            raise ValueError(f"labels must lie in [0, {self.k})")
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return int(self.labels.size)

    @property
    def z(self) -> np.ndarray:
        return self.labels

    def as_matrix(self) -> np.ndarray:
        """n x k one-hot matrix."""
        out = np.zeros((self.n, self.k), dtype=np.int64)
        out[np.arange(self.n), self.labels] = 1
        return out

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.k)

    def __eq__(self, other):
        if not isinstance(other, MembershipMatrix):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.labels, other.labels)

    __hash__ = None


class GroundTruth(MembershipMatrix):
    """Membership drawn by a generative model."""


def extend_membership(partial_labels, kept, n: int, k: int) -> MembershipMatrix:
    """Place ``partial_labels`` at positions ``kept`` of a length-``n`` labelling;
    every other vertex gets label 0."""
    partial = np.asarray(partial_labels, dtype=np.int64).ravel()
    kept = np.asarray(kept, dtype=np.int64).ravel()
    if partial.size != kept.size:
        raise SizeMismatch(f"{partial.size} labels for {kept.size} kept vertices")
    if kept.size and (kept.min() < 0 or kept.max() >= n):
        raise SizeMismatch(f"kept indices must lie in [0, {n})")
    labels = np.zeros(n, dtype=np.int64)
    labels[kept] = partial
    return MembershipMatrix(labels, k)
