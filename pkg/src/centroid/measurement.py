"""Measurement model: reduce (A, y) to the canonical pair (V_s, t).

A full-row-rank matrix A (M x N, M < N) is factored as A = U_s S V_s^T.
All downstream volume/moment machinery only ever sees the orthonormal
basis V_s of the row space and the equivalent measurement t = S^-1 U_s^T y,
which satisfies t = V_s^T x for every x with A x = y.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import RankDeficient, ShapeError

ORTHO_TOL = 1e-10
RECON_TOL = 1e-9
RANK_TOL = 1e-10
NONNEG_TOL = -1e-12

BASIS_NONNEG = "NonnegOrthonormal"
BASIS_MIXED = "Orthonormal"


@dataclass(frozen=True)
class MeasurementSystem:
    """SVD-reduced description of a measurement matrix.

    Immutable; every consumer treats the arrays as read-only.
    """

    A: np.ndarray
    U_s: np.ndarray
    Sigma_s: np.ndarray  # length-M vector of positive singular values
    V_s: np.ndarray      # N x M, orthonormal columns (row space of A)
    V_0: np.ndarray      # N x (N - M), orthonormal columns (kernel of A)
    basis_class: str
    perturbed: bool = False

    @property
    def M(self):
        return self.V_s.shape[1]

    @property
    def N(self):
        return self.V_s.shape[0]

    def validate(self):
        M, N = self.M, self.N
        if not (M < N):
            raise ShapeError(f"need M < N, got M={M}, N={N}")
        if np.linalg.norm(self.V_s.T @ self.V_s - np.eye(M)) > ORTHO_TOL:
            raise ShapeError("V_s columns not orthonormal")
        if np.linalg.norm(self.V_0.T @ self.V_0 - np.eye(N - M)) > ORTHO_TOL:
            raise ShapeError("V_0 columns not orthonormal")
        if np.linalg.norm(self.V_s.T @ self.V_0) > ORTHO_TOL:
            raise ShapeError("V_s not orthogonal to V_0")
        recon = self.U_s @ np.diag(self.Sigma_s) @ self.V_s.T
        rel = np.linalg.norm(recon - self.A) / max(np.linalg.norm(self.A), 1.0)
        if rel > RECON_TOL:
            raise ShapeError(f"A reconstruction error {rel:.2e}")
        return self


def classify_basis(V_s):
    """Nonnegative basis iff no entry falls below the rounding tolerance."""
    return BASIS_NONNEG if float(np.min(V_s)) >= NONNEG_TOL else BASIS_MIXED


def _jacobi_svd(A, tol=1e-14, max_sweeps=60):
    """One-sided Jacobi SVD of A (M x N, M <= N), applied to W = A^T.

    Orthogonalizes the M columns of W by plane rotations; on convergence
    W = V_s * diag(sigma) and the accumulated rotations form U_s.
    """
    W = np.array(A.T, dtype=float, copy=True)  # N x M
    M = W.shape[1]
    U = np.eye(M)
    scale = np.sum(W * W)
    if scale == 0.0:
        raise RankDeficient("zero matrix")
    for _ in range(max_sweeps):
        off = 0.0
        for p in range(M - 1):
            for q in range(p + 1, M):
                wp = W[:, p].copy()
                wq = W[:, q].copy()
                alpha = wp @ wp
                beta = wq @ wq
                gamma = wp @ wq
                off += gamma * gamma
                if abs(gamma) <= tol * math.sqrt(alpha * beta):
                    continue
                zeta = (beta - alpha) / (2.0 * gamma)
                t = math.copysign(1.0, zeta) / (abs(zeta) + math.sqrt(1.0 + zeta * zeta))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                W[:, p] = c * wp - s * wq
                W[:, q] = s * wp + c * wq
                up = U[:, p].copy()
                uq = U[:, q].copy()
                U[:, p] = c * up - s * uq
                U[:, q] = s * up + c * uq
        if off <= (tol * scale) ** 2:
            break
    sigma = np.sqrt(np.sum(W * W, axis=0))
    order = np.argsort(-sigma, kind="stable")
    sigma = sigma[order]
    W = W[:, order]
    U = U[:, order]
    if sigma[-1] <= RANK_TOL * sigma[0]:
        raise RankDeficient(f"singular value ratio {sigma[-1] / sigma[0]:.2e}")
    V = W / sigma
    return U, sigma, V


def _fix_column_signs(V, U):
    """Flip V/U column pairs so each V column has nonnegative sum.

    Ties (zero sum) are broken by forcing the first nonzero entry positive,
    which makes the decomposition deterministic for bitwise-equal inputs.
    """
    V = V.copy()
    U = U.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        s = float(np.sum(col))
        if abs(s) > 1e-12:
            flip = s < 0
        else:
            nz = np.nonzero(np.abs(col) > 1e-14)[0]
            flip = len(nz) > 0 and col[nz[0]] < 0
        if flip:
            V[:, j] = -col
            U[:, j] = -U[:, j]
    return V, U


def _kernel_basis(V_s):
    """Deterministic orthonormal completion of V_s, from identity columns."""
    N, M = V_s.shape
    basis = [V_s[:, j].copy() for j in range(M)]
    out = []
    for i in range(N):
        if len(out) == N - M:
            break
        v = np.zeros(N)
        v[i] = 1.0
        # two rounds of Gram-Schmidt for numerical orthogonality
        for _ in range(2):
            for b in basis:
                v -= (b @ v) * b
        nrm = np.linalg.norm(v)
        if nrm > 1e-8:
            v /= nrm
            basis.append(v)
            out.append(v)
    if len(out) != N - M:
        raise RankDeficient("failed to complete kernel basis")
    V_0 = np.column_stack(out) if out else np.zeros((N, 0))
    return V_0


def decompose(A):
    """Factor A = U_s S V_s^T and classify the row-space basis.

    Raises ShapeError for M >= N and RankDeficient when the smallest
    singular value is below 1e-10 of the largest.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ShapeError("A must be a matrix")
    M, N = A.shape
    if M >= N:
        raise ShapeError(f"need M < N, got {M}x{N}")
    U, sigma, V = _jacobi_svd(A)
    V, U = _fix_column_signs(V, U)
    V_0 = _kernel_basis(V)
    sys = MeasurementSystem(
        A=A,
        U_s=U,
        Sigma_s=sigma,
        V_s=V,
        V_0=V_0,
        basis_class=classify_basis(V),
    )
    return sys.validate()


def from_basis(V_s, perturbed=False):
    """Build a system directly from an orthonormal basis (A := V_s^T)."""
    V_s = np.asarray(V_s, dtype=float)
    N, M = V_s.shape
    if M >= N:
        raise ShapeError(f"need M < N, got basis {N}x{M}")
    sys = MeasurementSystem(
        A=V_s.T.copy(),
        U_s=np.eye(M),
        Sigma_s=np.ones(M),
        V_s=V_s,
        V_0=_kernel_basis(V_s),
        basis_class=classify_basis(V_s),
        perturbed=perturbed,
    )
    return sys.validate()


def equivalent_measurement(sys, y):
    """Map raw measurements y to t = S^-1 U_s^T y (so t = V_s^T x)."""
    y = np.asarray(y, dtype=float).reshape(-1)
    return (sys.U_s.T @ y) / sys.Sigma_s


def feasible_point(sys, t):
    """Minimum-norm solution x0 = V_s t of V_s^T x = t.

    Returns (x0, in_simplex) where the flag reports membership of x0 in
    the standard simplex within 1e-9.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    x0 = sys.V_s @ t
    in_simplex = bool(np.min(x0) >= -1e-9 and np.sum(x0) <= 1.0 + 1e-9)
    return x0, in_simplex


def simplex_vertices(N):
    """Vertices of the standard simplex: e_1..e_N followed by the origin."""
    verts = np.vstack([np.eye(N), np.zeros(N)])
    return verts
