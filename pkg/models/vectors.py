# vectors.py
"""
Descriptor math and set statistics.

A face set is summarised by (count, vector sum, sum of squared norms). The mean squared distance
between two sets then needs one dot product instead of a double loop over faces.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np

from models.errors import DimensionMismatch, EmptySet, ZeroVector

ZERO_NORM = 1e-12


def as_matrix(faces, dim: Optional[int] = None) -> np.ndarray:
    """Faces as a float64 (n, dim) array; a single vector becomes one row."""
    matrix = np.asarray(faces, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix.reshape(1, -1)
    if matrix.ndim != 2:
        raise ValueError(f"expected a vector or a matrix, got shape {matrix.shape}")
    if dim is not None and matrix.shape[1] != dim:
        raise DimensionMismatch(dim, matrix.shape[1])
    return matrix


def check_dim(v: np.ndarray, dim: Optional[int]) -> None:
    if dim is not None and v.shape[-1] != dim:
        raise DimensionMismatch(dim, v.shape[-1])


def l2_normalize(v, dim: Optional[int] = None) -> np.ndarray:
    vector = np.asarray(v, dtype=np.float64)
    check_dim(vector, dim)
    norm = np.linalg.norm(vector)
    if norm < ZERO_NORM:
        raise ZeroVector(f"cannot normalize a vector of norm {norm:.3g}")
    return vector / norm


def l2_normalize_rows(faces, dim: Optional[int] = None) -> np.ndarray:
    matrix = as_matrix(faces, dim)
    norms = np.linalg.norm(matrix, axis=1)
    if matrix.shape[0] and norms.min() < ZERO_NORM:
        raise ZeroVector(f"row {int(np.argmin(norms))} has zero norm")
    return matrix / norms[:, np.newaxis]


def sq_euclidean(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape[-1], b.shape[-1])
    diff = a - b
    return float(np.dot(diff, diff))


def row_sqnorms(faces: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", faces, faces)


@dataclass(frozen=True, eq=False)
class FaceSetStats:
    count: int
    vector_sum: np.ndarray
    sqnorm_sum: float

    @classmethod
    def empty(cls, dim: int) -> "FaceSetStats":
        return cls(0, np.zeros(dim), 0.0)

    @classmethod
    def from_faces(cls, faces, dim: Optional[int] = None) -> "FaceSetStats":
        matrix = as_matrix(faces, dim)
        return cls(matrix.shape[0], matrix.sum(axis=0), float(row_sqnorms(matrix).sum()))

    @property
    def dim(self) -> int:
        return self.vector_sum.shape[0]

    @property
    def mean(self) -> np.ndarray:
        if self.count == 0:
            raise EmptySet("mean of an empty face set")
        return self.vector_sum / self.count

    def __add__(self, other: "FaceSetStats") -> "FaceSetStats":
        if other.dim != self.dim:
            raise DimensionMismatch(self.dim, other.dim)
        return FaceSetStats(self.count + other.count,
                            self.vector_sum + other.vector_sum,
                            self.sqnorm_sum + other.sqnorm_sum)

    def add_faces(self, faces) -> "FaceSetStats":
        return self + FaceSetStats.from_faces(faces, self.dim)


def mean_pairwise_sqdist(a: FaceSetStats, b: FaceSetStats) -> float:
    """Mean of ||x - y||^2 over all x in A, y in B, in closed form."""
    if a.count == 0 or b.count == 0:
        raise EmptySet("mean pairwise distance needs two non-empty face sets")
    if a.dim != b.dim:
        raise DimensionMismatch(a.dim, b.dim)
    cross = float(np.dot(a.vector_sum, b.vector_sum)) / (a.count * b.count)
    value = a.sqnorm_sum / a.count + b.sqnorm_sum / b.count - 2.0 * cross
    return max(value, 0.0)


@dataclass(frozen=True, eq=False)
class StackedStats:
    """Stats of many face sets side by side, for one-shot distance rows."""
    counts: np.ndarray
    vector_sums: np.ndarray
    sqnorm_sums: np.ndarray

    @classmethod
    def from_stats(cls, stats: list) -> "StackedStats":
        return cls(np.array([s.count for s in stats], dtype=np.float64),
                   np.stack([s.vector_sum for s in stats]),
                   np.array([s.sqnorm_sum for s in stats], dtype=np.float64))

    def mean_sqdist_to(self, other: FaceSetStats) -> np.ndarray:
        """`mean_pairwise_sqdist(s, other)` for every stacked set s."""
        if other.count == 0:
            raise EmptySet("mean pairwise distance to an empty face set")
        cross = (self.vector_sums @ other.vector_sum) / (self.counts * other.count)
        values = self.sqnorm_sums / self.counts + other.sqnorm_sum / other.count - 2.0 * cross
        return np.maximum(values, 0.0)
