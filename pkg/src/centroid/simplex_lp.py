"""Dense two-phase primal simplex method for small LPs.

Solves   min c^T x   s.t.  A_eq x = b_eq,  A_ub x <= b_ub,  x >= 0.

Phase 1 minimizes the sum of artificial variables; phase 2 optimizes the
original objective over the feasible basis.  Bland's rule guarantees
termination, with a most-negative-reduced-cost fast path tried first.
The problems here have at most a few dozen variables, so everything is a
dense tableau.
"""

import numpy as np

from .errors import Infeasible, Unbounded

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-10


def _pivot(T, basis, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]
    basis[row] = col


def _reduced_costs(T, basis, cost, ncols):
    """r_j = c_j - c_B B^-1 A_j; the basis columns price out to zero."""
    z = cost[:ncols].astype(float).copy()
    for r, j in enumerate(basis):
        if cost[j] != 0.0:
            z -= cost[j] * T[r, :ncols]
    return z


def _solve_from_tableau(T, basis, cost, bland_after=200):
    """Run primal simplex (minimization) to optimality on a feasible tableau.

    Dantzig pricing for the first `bland_after` iterations, then Bland's
    rule to rule out cycling.
    """
    m, w = T.shape
    ncols = w - 1
    z = _reduced_costs(T, basis, cost, ncols)
    it = 0
    while True:
        it += 1
        if it <= bland_after:
            col = int(np.argmin(z))
            if z[col] >= -FEAS_TOL:
                break
        else:
            cand = np.nonzero(z < -FEAS_TOL)[0]
            if len(cand) == 0:
                break
            col = int(cand[0])
        ratios = np.full(m, np.inf)
        pos = T[:, col] > PIVOT_TOL
        ratios[pos] = T[pos, -1] / T[pos, col]
        if not np.any(np.isfinite(ratios)):
            raise Unbounded("LP is unbounded")
        if it <= bland_after:
            row = int(np.argmin(ratios))
        else:
            best = np.min(ratios)
            ties = np.nonzero(np.abs(ratios - best) <= 1e-12)[0]
            row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, basis, row, col)
        z = z - z[col] * T[row, :ncols]
        if it > 20000:
            raise Unbounded("simplex iteration limit hit")
    return z


def solve_lp(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None):
    """Minimize c^T x over x >= 0 with the given constraints.

    Returns (x, objective).  Raises Infeasible / Unbounded.
    """
    c = np.asarray(c, dtype=float).reshape(-1)
    n = len(c)
    rows = []
    rhs = []
    n_slack = 0 if A_ub is None else np.asarray(A_ub).shape[0]
    if A_eq is not None:
        A_eq = np.asarray(A_eq, dtype=float)
        b_eq = np.asarray(b_eq, dtype=float).reshape(-1)
        for i in range(A_eq.shape[0]):
            row = np.zeros(n + n_slack)
            row[:n] = A_eq[i]
            rows.append(row)
            rhs.append(b_eq[i])
    if A_ub is not None:
        A_ub = np.asarray(A_ub, dtype=float)
        b_ub = np.asarray(b_ub, dtype=float).reshape(-1)
        for i in range(A_ub.shape[0]):
            row = np.zeros(n + n_slack)
            row[:n] = A_ub[i]
            row[n + i] = 1.0
            rows.append(row)
            rhs.append(b_ub[i])
    A = np.vstack(rows)
    b = np.array(rhs)
    m = A.shape[0]
    # make all right-hand sides nonnegative
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0
    ntot = A.shape[1]

    # phase 1: artificial basis, minimize the sum of artificials
    T = np.hstack([A, np.eye(m), b[:, None]])
    basis = list(range(ntot, ntot + m))
    cost1 = np.zeros(ntot + m)
    cost1[ntot:] = 1.0
    _solve_from_tableau(T, basis, cost1)
    phase1_obj = sum(T[r, -1] for r in range(m) if basis[r] >= ntot)
    if phase1_obj > 1e-8:
        raise Infeasible(f"phase-1 objective {phase1_obj:.3e}")
    # drive remaining artificials out of the basis
    for r in range(m):
        if basis[r] >= ntot:
            piv = np.nonzero(np.abs(T[r, :ntot]) > PIVOT_TOL)[0]
            if len(piv) > 0:
                _pivot(T, basis, r, int(piv[0]))
    keep = [r for r in range(m) if basis[r] < ntot]
    T = np.hstack([T[keep][:, :ntot], T[keep][:, -1:]])
    basis = [basis[r] for r in keep]

    # phase 2
    cost2 = np.zeros(ntot)
    cost2[:n] = c
    _solve_from_tableau(T, basis, cost2)
    x = np.zeros(ntot)
    for r, j in enumerate(basis):
        x[j] = T[r, -1]
    return x[:n], float(c @ x[:n])
