"""Ground-truth oracles and competitor estimators.

Everything here is deliberately independent of the analytic recursion so
it can serve as a cross-check: a seeded Monte Carlo polytope sampler
(hit-and-run centroid + rejection volume), the single-measurement closed
form, and the l1 / simplex-constrained l2 recovery baselines.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DegenerateConfiguration, InfeasibleT, ShapeError
from .simplex_lp import solve_lp

HIT_AND_RUN_BURN_IN = 1000
HIT_AND_RUN_THIN = 5


@dataclass(frozen=True)
class PolytopeSample:
    """Monte Carlo summary of one intersection polytope."""

    n_samples: int
    centroid_mean: np.ndarray
    centroid_stderr: np.ndarray
    volume_est: float
    volume_stderr: float
    seed: int


def sample_uniform_simplex(N, rng, size=None):
    """Uniform draws from the solid standard simplex {x >= 0, sum x <= 1}.

    Flat-Dirichlet construction: N+1 exponential variates normalized, last
    coordinate dropped.
    """
    n = 1 if size is None else int(size)
    e = rng.exponential(size=(n, N + 1))
    x = e[:, :N] / e.sum(axis=1, keepdims=True)
    return x[0] if size is None else x


def project_simplex(y):
    """Euclidean projection onto {x >= 0, sum x <= 1}.

    If clipping the negatives already lands inside, that is the projection;
    otherwise project onto the probability simplex by the classic
    sort-and-threshold rule (uniform shift of the active coordinates).
    """
    y = np.asarray(y, dtype=float)
    clipped = np.maximum(y, 0.0)
    if clipped.sum() <= 1.0:
        return clipped
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(y) + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


def _zspace_constraints(sys, x_anchor):
    """Polytope constraints in kernel coordinates z (x = x_anchor + V_0 z).

    Returns (G, h) with the polytope equal to {z : G z <= h}.
    """
    N = sys.N
    G = np.vstack([-sys.V_0, np.sum(sys.V_0, axis=0)[None, :]])
    h = np.concatenate([x_anchor, [1.0 - float(np.sum(x_anchor))]])
    return G, h


def _chord(G, h, z, direction):
    """Intersection interval [lo, hi] of the line z + s*direction with Gz<=h."""
    gd = G @ direction
    slack = h - G @ z
    lo, hi = -np.inf, np.inf
    for gi, si in zip(gd, slack):
        if gi > 1e-14:
            hi = min(hi, si / gi)
        elif gi < -1e-14:
            lo = max(lo, si / gi)
        elif si < -1e-9:
            return None
    if lo > hi:
        return None
    return lo, hi


def _interior_point(sys, t):
    """A strictly interior point of P_t in z coordinates, or InfeasibleT."""
    d = sys.V_0.shape[1]
    x0 = sys.V_s @ np.asarray(t, dtype=float)
    G, h = _zspace_constraints(sys, x0)
    # phase-I LP with z split into positive and negative parts plus a
    # margin variable: maximize the uniform slack
    n_ineq = G.shape[0]
    row_norm = np.linalg.norm(G, axis=1)
    row_norm[row_norm == 0.0] = 1.0
    c = np.zeros(2 * d + 1)
    c[-1] = -1.0
    A_ub = np.hstack([G, -G, row_norm[:, None]])
    try:
        sol, _ = solve_lp(c, A_ub=A_ub, b_ub=h)
    except Exception as ex:
        raise InfeasibleT(f"no feasible point for t: {ex}") from ex
    margin = sol[-1]
    if margin <= 1e-12:
        raise InfeasibleT(f"polytope has empty interior (margin {margin:.2e})")
    z = sol[:d] - sol[d:2 * d]
    return x0, G, h, z


def _bounding_box(G, h, z0):
    """Per-axis extents of {Gz <= h} via LPs along each coordinate."""
    d = len(z0)
    lo = np.empty(d)
    hi = np.empty(d)
    for i in range(d):
        e = np.zeros(d)
        e[i] = 1.0
        lim = _chord(G, h, z0, e)
        # chord through an interior point only bounds the axis line, so
        # solve the two support LPs for the true extents
        c = np.zeros(2 * d)
        c[i], c[d + i] = 1.0, -1.0
        zmin, _ = solve_lp(c, A_ub=np.hstack([G, -G]), b_ub=h)
        zmax, _ = solve_lp(-c, A_ub=np.hstack([G, -G]), b_ub=h)
        lo[i] = (zmin[:d] - zmin[d:])[i]
        hi[i] = (zmax[:d] - zmax[d:])[i]
        if lim is not None:
            lo[i] = min(lo[i], z0[i] + lim[0])
            hi[i] = max(hi[i], z0[i] + lim[1])
    return lo, hi


def mc_polytope(sys, t, n_samples, rng, n_chains=64):
    """Monte Carlo centroid and volume of P_t = simplex ∩ {V_s^T x = t}.

    Centroid: parallel hit-and-run chains in the orthonormal kernel
    coordinates (burn-in 1000 steps, thinning 5).  Volume: rejection
    sampling against the axis-aligned bounding box; since V_0 is an
    isometry the z-space Lebesgue measure equals the face measure of the
    polytope.
    """
    seed = int(rng.integers(0, 2**31 - 1))
    local = np.random.default_rng(seed)
    t = np.asarray(t, dtype=float).reshape(-1)
    d = sys.V_0.shape[1]
    if d == 0:
        x = sys.V_s @ t
        return PolytopeSample(n_samples, x, np.zeros(sys.N), 1.0, 0.0, seed)
    x0, G, h, z0 = _interior_point(sys, t)
    lo, hi = _bounding_box(G, h, z0)
    box_vol = float(np.prod(hi - lo))

    # volume by vectorized rejection sampling
    n_acc = 0
    batch = 200_000
    remaining = n_samples
    while remaining > 0:
        nb = min(batch, remaining)
        Z = local.uniform(lo, hi, size=(nb, d))
        n_acc += int(np.sum(np.all(Z @ G.T <= h + 1e-12, axis=1)))
        remaining -= nb
    p = n_acc / n_samples
    volume_est = box_vol * p
    volume_stderr = box_vol * math.sqrt(max(p * (1.0 - p), 0.0) / n_samples)

    # centroid by parallel hit-and-run; the error bar comes from the
    # spread of the independent per-chain means, which stays honest even
    # though consecutive (thinned) samples within a chain are correlated
    chains = min(n_chains, max(2, n_samples // 64))
    Z = np.tile(z0, (chains, 1))
    chain_sum = np.zeros((chains, sys.N))
    n_per_chain = 0
    steps = HIT_AND_RUN_BURN_IN + HIT_AND_RUN_THIN * math.ceil(n_samples / chains)
    for step in range(steps):
        D = local.standard_normal((chains, d))
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        GD = D @ G.T
        slack = h[None, :] - Z @ G.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratios = slack / GD
        his = np.where(GD > 1e-14, ratios, np.inf).min(axis=1)
        los = np.where(GD < -1e-14, ratios, -np.inf).max(axis=1)
        s = los + (his - los) * local.random(chains)
        Z = Z + s[:, None] * D
        if step >= HIT_AND_RUN_BURN_IN and (step - HIT_AND_RUN_BURN_IN) % HIT_AND_RUN_THIN == 0:
            chain_sum += x0[None, :] + Z @ sys.V_0.T
            n_per_chain += 1
    chain_means = chain_sum / n_per_chain
    mean = chain_means.mean(axis=0)
    stderr = chain_means.std(axis=0, ddof=1) / math.sqrt(chains)
    n_kept = n_per_chain * chains
    return PolytopeSample(n_kept, mean, stderr, volume_est, volume_stderr, seed)


def lasserre_slice_volume(a, t, dtype=float):
    """Closed-form slice volume for a single measurement direction.

    vol(simplex ∩ {a.x = t}) for unit a, via the N+1-term rational sum in
    the vertex projections; requires pairwise distinct projections.  Pass
    dtype=np.longdouble for an extended-precision reference value.
    """
    a = np.asarray(a, dtype=dtype).reshape(-1)
    t = dtype(t)
    N = len(a)
    proj = np.append(a, 0.0)
    diffs = proj[None, :] - proj[:, None]
    scale = max(float(np.max(np.abs(proj))), 1.0)
    collisions = [
        (i, j)
        for i in range(N)
        for j in range(i + 1, N + 1)
        if abs(diffs[i, j]) <= 1e-12 * scale
    ]
    if collisions:
        raise DegenerateConfiguration(collisions, "coinciding vertex projections")
    total = dtype(0.0)
    for n in range(N + 1):
        u = t - proj[n]
        if u <= 0.0:
            continue
        denom = np.prod(np.delete(diffs[n], n))
        total += u ** (N - 1) / denom
    return float(max(total / math.factorial(N - 1), 0.0))


def l1_baseline(A, y):
    """Nonnegative l1 recovery: argmin 1^T x s.t. Ax = y, x >= 0."""
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    x, _ = solve_lp(np.ones(A.shape[1]), A_eq=A, b_eq=y)
    return x


def l2_baseline(A, y, tol=1e-10, max_iter=100_000):
    """Simplex-constrained minimum-norm recovery via Dykstra's projections.

    Alternates exact projections onto the simplex and onto the affine set
    {Ax = y}, with Dykstra correction terms, starting from the origin.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    N = A.shape[1]
    AAt = A @ A.T
    try:
        AAt_inv = np.linalg.inv(AAt)
    except np.linalg.LinAlgError as ex:
        raise ConvergenceFailure(f"AA^T singular: {ex}") from ex

    def proj_affine(v):
        return v - A.T @ (AAt_inv @ (A @ v - y))

    x = np.zeros(N)
    p = np.zeros(N)
    q = np.zeros(N)
    for _ in range(max_iter):
        u = project_simplex(x + p)
        p = x + p - u
        x_new = proj_affine(u + q)
        q = u + q - x_new
        if np.linalg.norm(x_new - x) < tol:
            x = x_new
            break
        x = x_new
    else:
        raise ConvergenceFailure(
            "Dykstra did not converge",
            residual=float(np.linalg.norm(A @ x - y)),
        )
    return project_simplex(x)


def emse(X_true, X_est):
    """Empirical mean squared l2 error between paired lists of vectors."""
    X_true = np.asarray(X_true, dtype=float)
    X_est = np.asarray(X_est, dtype=float)
    if X_true.shape != X_est.shape:
        raise ShapeError(f"shape mismatch {X_true.shape} vs {X_est.shape}")
    if X_true.ndim == 1:
        X_true = X_true[None, :]
        X_est = X_est[None, :]
    return float(np.mean(np.sum((X_true - X_est) ** 2, axis=1)))
