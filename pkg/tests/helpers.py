"""Shared test helpers: instance generators and brute-force oracles.

Everything here is deliberately independent of the package's own
algorithms (vertex enumeration for LPs, active-set enumeration for the
QP) so it can serve as ground truth.
"""

import itertools

import numpy as np

from centroid import from_basis, sample_uniform_simplex


def qr_basis(N, M, rng):
    """Random orthonormal N x M basis (generically sign-mixed)."""
    Q, _ = np.linalg.qr(rng.standard_normal((N, M)))
    return Q


def mixed_system(N, M, rng):
    return from_basis(qr_basis(N, M, rng))


def nonneg_system(N, M, rng):
    """Entrywise-nonnegative orthonormal basis via disjoint supports."""
    perm = rng.permutation(N)
    groups = np.array_split(perm, M)
    V = np.zeros((N, M))
    for j, g in enumerate(groups):
        w = rng.uniform(0.5, 1.5, size=len(g))
        V[g, j] = w / np.linalg.norm(w)
    return from_basis(V)


def interior_t(sys, rng, margin=0.0):
    """A measurement vector t = V_s^T x for x drawn uniformly in the simplex.

    With margin > 0, resample until every component of t clears it (used
    where the halfspace volume needs componentwise-positive t).
    """
    while True:
        x = sample_uniform_simplex(sys.N, rng)
        t = sys.V_s.T @ x
        if margin == 0.0 or np.all(t > margin):
            return t


def l1_brute(A, y, tol=1e-9):
    """Brute-force nonnegative l1 optimum via basic feasible solutions.

    The minimum of 1^T x over {x >= 0, Ax = y} is attained at a vertex,
    and vertices have at most M nonzero coordinates; enumerate all column
    subsets of size <= M and keep the best feasible candidate objective.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    M, N = A.shape
    best = np.inf
    for size in range(1, M + 1):
        for cols in itertools.combinations(range(N), size):
            sub = A[:, cols]
            x_s, *_ = np.linalg.lstsq(sub, y, rcond=None)
            if np.linalg.norm(sub @ x_s - y) > tol:
                continue
            if np.min(x_s) < -tol:
                continue
            best = min(best, float(np.sum(np.clip(x_s, 0.0, None))))
    if np.linalg.norm(y) <= tol:
        best = min(best, 0.0)
    return best


def qp_oracle(A, y, tol=1e-9):
    """Brute-force simplex-constrained least-norm solution (N <= ~10).

    min ||x||^2 s.t. Ax = y, x >= 0, sum x <= 1, by enumerating every
    active set (zeroed coordinate subset, sum constraint on/off).  Each
    candidate is the minimum-norm solution of the resulting equality
    system; every feasible candidate is feasible for the original
    problem, and the true optimum appears as the candidate of its own
    active set, so the best feasible candidate is the optimum.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    N = A.shape[1]
    best_x, best_n = None, np.inf
    for mask in range(1 << N):
        free = [i for i in range(N) if not (mask >> i) & 1]
        for s in (0, 1):
            if not free:
                x = np.zeros(N)
                if np.linalg.norm(y) <= tol and s == 0:
                    return x
                continue
            C = A[:, free]
            d = y
            if s:
                C = np.vstack([C, np.ones(len(free))])
                d = np.append(y, 1.0)
            x_f, *_ = np.linalg.lstsq(C, d, rcond=None)
            if np.linalg.norm(C @ x_f - d) > tol:
                continue
            x = np.zeros(N)
            x[free] = x_f
            if np.min(x) < -tol or np.sum(x) > 1.0 + tol:
                continue
            n2 = float(x @ x)
            if n2 < best_n:
                best_x, best_n = np.clip(x, 0.0, None), n2
    return best_x
