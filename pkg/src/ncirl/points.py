"""Point-based piecewise-linear value representations.

Each state carries a :class:`PointSet`: values at the coordinate corners of
the nonnegative orthant plus a bag of stored (vector, value) pairs. The
primal side stores belief points on the simplex, the dual side stores
nonnegative penalty vectors; both interpolate with the same ray-through-a-
stored-point construction, so the container is shared.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PointSet:
    """Corner values plus stored interior (vector, value) pairs.

    ``corner_values[k]`` is the value at the k-th unit vector. ``vectors``
    is ``(n_points, dim)`` and ``values`` aligns with its rows. The set is
    mutable: sweeps rewrite values in place and expansion inserts vectors.
    """

    corner_values: np.ndarray
    vectors: np.ndarray = field(default=None)
    values: np.ndarray = field(default=None)

    def __post_init__(self):
        self.corner_values = np.asarray(self.corner_values, dtype=np.float64)
        if self.vectors is None:
            self.vectors = np.zeros((0, self.dim))
        self.vectors = np.asarray(self.vectors, dtype=np.float64).reshape(
            -1, self.dim
        )
        if self.values is None:
            self.values = np.zeros(len(self.vectors))
        self.values = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if len(self.values) != len(self.vectors):
            raise ValueError("vectors and values must align")

    @classmethod
    def zeros(cls, dim: int) -> "PointSet":
        return cls(corner_values=np.zeros(dim))

    @classmethod
    def constant(cls, dim: int, value: float) -> "PointSet":
        return cls(corner_values=np.full(dim, float(value)))

    @property
    def dim(self) -> int:
        return len(self.corner_values)

    @property
    def n_points(self) -> int:
        return len(self.vectors)

    def copy(self) -> "PointSet":
        return PointSet(
            corner_values=self.corner_values.copy(),
            vectors=self.vectors.copy(),
            values=self.values.copy(),
        )

    def nearest_distance(self, vec: np.ndarray) -> float:
        """L1 distance from ``vec`` to the closest stored vector or corner
        scaled to ``vec``'s mass (corners are compared as unit directions)."""
        vec = np.asarray(vec, dtype=np.float64)
        total = vec.sum()
        corners = np.eye(self.dim) * total
        pool = np.vstack([corners, self.vectors]) if self.n_points else corners
        return float(np.min(np.abs(pool - vec).sum(axis=1)))

    def add(self, vec: np.ndarray, value: float, dedup_tol: float = 1e-3) -> bool:
        """Insert unless an existing vector (or scaled corner) is within
        ``dedup_tol`` in L1; returns whether an insertion happened."""
        vec = np.asarray(vec, dtype=np.float64)
        if self.nearest_distance(vec) <= dedup_tol:
            return False
        self.vectors = np.vstack([self.vectors, vec[None, :]])
        self.values = np.append(self.values, float(value))
        return True

    def enforce_cap(self, cap: int) -> None:
        """Keep at most ``cap`` stored points by greedy farthest-point
        selection (deterministic: seeded at the first stored point, ties by
        lowest index)."""
        n = self.n_points
        if n <= cap:
            return
        chosen = [0]
        dist = np.abs(self.vectors - self.vectors[0]).sum(axis=1)
        while len(chosen) < cap:
            j = int(np.argmax(dist))
            chosen.append(j)
            dist = np.minimum(dist, np.abs(self.vectors - self.vectors[j]).sum(axis=1))
        chosen = np.sort(np.asarray(chosen))
        self.vectors = self.vectors[chosen]
        self.values = self.values[chosen]
