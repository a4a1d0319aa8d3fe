import itertools
import time

import numpy as np
import pytest

from models.assignment import solve_min_assignment
from models.errors import EmptyMatrix, NonFiniteCost


def brute_force(matrix: np.ndarray):
    """Optimal total and the lexicographically smallest optimal sorted pair list."""
    rows, cols = matrix.shape
    best_total, best_pairs = None, None
    if rows <= cols:
        candidates = ([(r, p[r]) for r in range(rows)] for p in itertools.permutations(range(cols), rows))
    else:
        candidates = (sorted((p[c], c) for c in range(cols)) for p in itertools.permutations(range(rows), cols))
    for pairs in candidates:
        total = sum(matrix[r, c] for r, c in pairs)
        if best_total is None or total < best_total or (total == best_total and pairs < best_pairs):
            best_total, best_pairs = total, pairs
    return best_total, best_pairs


# region Tests


def test_square_example():
    result = solve_min_assignment([[4, 1, 3], [2, 0, 5], [3, 2, 2]])
    assert result.total_cost == 5.0
    assert result.pairs == ((0, 1), (1, 0), (2, 2))


def test_rectangular_wide_and_tall():
    wide = solve_min_assignment([[1, 5, 0], [2, 0, 7]])
    assert wide.pairs == ((0, 2), (1, 1))
    assert wide.total_cost == 0.0
    tall = solve_min_assignment([[5], [1], [3]])
    assert tall.pairs == ((1, 0),)
    assert tall.total_cost == 1.0


def test_ties_resolve_to_smallest_pairs():
    result = solve_min_assignment(np.zeros((3, 3)))
    assert result.pairs == ((0, 0), (1, 1), (2, 2))
    tall = solve_min_assignment(np.ones((3, 2)))
    assert tall.pairs == ((0, 0), (1, 1))


def test_matches_brute_force_on_random_integer_matrices():
    rng = np.random.default_rng(7)
    cases = [rng.integers(0, 10, size=(int(rng.integers(1, 8)), int(rng.integers(1, 8)))).astype(float)
             for _ in range(200)]
    expected = [brute_force(m) for m in cases]

    started = time.perf_counter()
    results = [solve_min_assignment(m) for m in cases]
    elapsed = time.perf_counter() - started

    for matrix, result, (total, pairs) in zip(cases, results, expected):
        assert result.total_cost == total
        assert list(result.pairs) == pairs
        assert len(result.pairs) == min(matrix.shape)
    assert elapsed < 1.0


def test_row_shift_keeps_matching():
    rng = np.random.default_rng(8)
    matrix = rng.random((4, 6))
    shifted = matrix + np.array([[3.0], [-1.0], [0.5], [10.0]])
    assert solve_min_assignment(matrix).pairs == solve_min_assignment(shifted).pairs


def test_transpose_has_same_total():
    rng = np.random.default_rng(9)
    matrix = rng.random((5, 3))
    assert solve_min_assignment(matrix).total_cost == pytest.approx(solve_min_assignment(matrix.T).total_cost)


def test_invalid_matrices():
    with pytest.raises(EmptyMatrix):
        solve_min_assignment(np.zeros((0, 3)))
    with pytest.raises(EmptyMatrix):
        solve_min_assignment([1.0, 2.0])
    with pytest.raises(NonFiniteCost):
        solve_min_assignment([[1.0, np.nan]])
    with pytest.raises(NonFiniteCost):
        solve_min_assignment([[np.inf, 1.0]])

# endregion Tests
