# assignment.py
"""
Minimum-cost bipartite assignment on rectangular cost matrices.

`linear_sum_assignment` finds the optimum value; the returned matching is then made canonical:
among all optimal matchings the one with the lexicographically smallest sorted pair list is
reported, so tracker and labeler results do not depend on solver internals.
"""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from models.errors import EmptyMatrix, NonFiniteCost

Pair = Tuple[int, int]

# Relative slack (times the matrix scale) within which two matchings count as equally good.
TIE_TOLERANCE = 1e-12


@dataclass(frozen=True)
class Assignment:
    pairs: Tuple[Pair, ...]
    total_cost: float


def as_cost_matrix(entries) -> np.ndarray:
    matrix = np.asarray(entries, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] == 0 or matrix.shape[1] == 0:
        raise EmptyMatrix(f"cost matrix must be 2-D and non-empty, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteCost("cost matrix contains NaN or infinite entries")
    return matrix


def solve_min_assignment(entries) -> Assignment:
    matrix = as_cost_matrix(entries)
    rows, cols = linear_sum_assignment(matrix)
    optimum = float(matrix[rows, cols].sum())
    pairs = _canonical_pairs(matrix, optimum)
    total = float(sum(matrix[r, c] for r, c in pairs))
    return Assignment(tuple(pairs), total)


def _optimum(matrix: np.ndarray, rows: Sequence[int], cols: Sequence[int], size: int) -> float:
    if size == 0:
        return 0.0
    if min(len(rows), len(cols)) < size:
        return np.inf
    sub = matrix[np.ix_(rows, cols)]
    r, c = linear_sum_assignment(sub)
    return float(sub[r, c].sum())


def _lower_bounds(matrix: np.ndarray, rest_rows: list, free_cols: np.ndarray, need: int) -> np.ndarray:
    """Lower bound on the optimum of the remaining rows, for every choice of column to take now."""
    bounds = np.zeros(len(free_cols))
    if need == 0:
        return bounds
    if len(rest_rows) < need:
        return np.full(len(free_cols), np.inf)
    sub = matrix[np.ix_(rest_rows, free_cols)]
    if need == len(rest_rows):
        # every remaining row is matched: each pays at least its cheapest other column
        order = np.argsort(sub, axis=1, kind="stable")
        first = sub[np.arange(sub.shape[0]), order[:, 0]]
        if sub.shape[1] > 1:
            second = sub[np.arange(sub.shape[0]), order[:, 1]]
        else:
            second = np.full(sub.shape[0], np.inf)
        bounds += first.sum()
        np.add.at(bounds, order[:, 0], second - first)
    else:
        # every remaining column is matched
        col_min = sub.min(axis=0)
        bounds += col_min.sum() - col_min
    return bounds


def _canonical_pairs(matrix: np.ndarray, optimum: float) -> list:
    n_rows, n_cols = matrix.shape
    size = min(n_rows, n_cols)
    tol = TIE_TOLERANCE * max(1.0, float(np.abs(matrix).max())) * size
    free = np.ones(n_cols, dtype=bool)
    pairs: list = []
    spent = 0.0

    for row in range(n_rows):
        need = size - len(pairs)
        if need == 0:
            break
        rest_rows = list(range(row + 1, n_rows))
        free_cols = np.flatnonzero(free)
        target = optimum - spent
        bounds = matrix[row, free_cols] + _lower_bounds(matrix, rest_rows, free_cols, need - 1)
        for k in np.flatnonzero(bounds <= target + tol):
            col = int(free_cols[k])
            others = free_cols[free_cols != col]
            value = matrix[row, col] + _optimum(matrix, rest_rows, others, need - 1)
            if abs(value - target) <= tol:
                pairs.append((row, col))
                free[col] = False
                spent += float(matrix[row, col])
                break
        # no column works: this row is unmatched in every remaining optimum
    return pairs
