"""Two-phase simplex solver against brute-force vertex enumeration."""

import itertools

import numpy as np
import pytest

from centroid.errors import Infeasible, Unbounded
from centroid.simplex_lp import solve_lp


def _vertex_optimum(c, A_ub, b_ub):
    """Brute force: optimum of min c.x over {x >= 0, A_ub x <= b_ub}.

    Enumerates every choice of n active constraints among the inequality
    rows and the nonnegativity bounds.
    """
    n = len(c)
    rows = np.vstack([A_ub, -np.eye(n)])
    rhs = np.concatenate([b_ub, np.zeros(n)])
    best = np.inf
    for idx in itertools.combinations(range(len(rows)), n):
        sub = rows[list(idx)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, rhs[list(idx)])
        if np.min(x) < -1e-9 or np.any(A_ub @ x > b_ub + 1e-9):
            continue
        best = min(best, float(c @ x))
    return best


def test_known_lp():
    x, obj = solve_lp(np.array([-1.0, -1.0]),
                      A_ub=np.array([[1.0, 1.0]]), b_ub=np.array([1.0]))
    assert abs(obj + 1.0) < 1e-12
    assert abs(np.sum(x) - 1.0) < 1e-12


def test_random_inequality_lps_match_vertex_enumeration():
    rng = np.random.default_rng(0)
    for trial in range(20):
        n = int(rng.integers(2, 5))
        m = int(rng.integers(1, 4))
        A_ub = rng.standard_normal((m, n))
        b_ub = rng.uniform(0.5, 2.0, size=m)        # feasible at the origin
        # cap sum x to keep the region bounded
        A_ub = np.vstack([A_ub, np.ones(n)])
        b_ub = np.append(b_ub, rng.uniform(1.0, 3.0))
        c = rng.standard_normal(n)
        x, obj = solve_lp(c, A_ub=A_ub, b_ub=b_ub)
        assert np.min(x) >= -1e-9
        assert np.all(A_ub @ x <= b_ub + 1e-9)
        ref = _vertex_optimum(c, A_ub, b_ub)
        assert abs(obj - ref) < 1e-8 * max(1.0, abs(ref))


def test_equality_constrained_lp():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((2, 5))
    x_true = rng.dirichlet(np.ones(6))[:5]
    y = A @ x_true
    x, obj = solve_lp(np.ones(5), A_eq=A, b_eq=y)
    assert np.min(x) >= -1e-9
    assert np.linalg.norm(A @ x - y) < 1e-9
    assert obj <= np.sum(x_true) + 1e-9  # the feasible x_true is no better


def test_infeasible_raises():
    # x1 <= -1 with x1 >= 0 is impossible
    with pytest.raises(Infeasible):
        solve_lp(np.array([1.0]), A_ub=np.array([[1.0]]), b_ub=np.array([-1.0]))


def test_unbounded_raises():
    with pytest.raises(Unbounded):
        solve_lp(np.array([-1.0, 0.0]),
                 A_ub=np.array([[0.0, 1.0]]), b_ub=np.array([1.0]))


def test_degenerate_cycling_guard():
    # classic degenerate instance; Bland's rule must terminate
    A_ub = np.array([
        [0.5, -5.5, -2.5, 9.0],
        [0.5, -1.5, -0.5, 1.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
    b_ub = np.array([0.0, 0.0, 1.0])
    c = np.array([-10.0, 57.0, 9.0, 24.0])
    x, obj = solve_lp(c, A_ub=A_ub, b_ub=b_ub)
    assert abs(obj + 1.0) < 1e-9  # known optimum x = (1, 0, 1, 0)
