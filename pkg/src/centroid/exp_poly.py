"""Exponential-over-polynomial terms seeding the inverse-Laplace recursion.

Every quantity of interest (slice volume, per-coordinate moments, halfspace
volume) starts as a finite sum of terms

    coeff * exp(-<a, lam>) / prod_n [B lam]_n

in the M Laplace variables lam.  The recursion in `ilt_engine` consumes one
Laplace dimension at a time and stays inside this family, so the term is
the single state type of the whole computation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateConfiguration
from .logspace import LDBL, LOG_ZERO
from .measurement import from_basis, simplex_vertices

ROW_TOL = 1e-9      # relative tolerance for row-proportionality detection
ZERO_COL_TOL = 1e-12

POLE_SIMPLE = "Simple"
POLE_DOUBLE = "DoublePole"
POLE_DEGENERATE = "Degenerate"


@dataclass(frozen=True)
class PoleStructure:
    kind: str
    pair: tuple = None  # row indices of the duplicated pair, when DoublePole


@dataclass(frozen=True)
class ExpPolyTerm:
    """One exp-over-poly summand with a scaled-float coefficient.

    The coefficient is sign * mant * 2**ex2 with mant in [0.5, 1); the
    split exponent gives the same underflow immunity as a log-domain
    scalar while keeping full mantissa precision through long products.
    """

    a: np.ndarray       # shift vector, length m (remaining Laplace dims)
    B: np.ndarray       # r x m denominator matrix
    sign: int           # in {-1, 0, +1}
    mant: np.longdouble = LDBL(0.5)   # coefficient mantissa in [0.5, 1)
    ex2: int = 1                       # coefficient base-2 exponent

    @property
    def coeff_sf(self):
        return (self.sign, self.mant, self.ex2)

    @property
    def logmag(self):
        """log|coeff|, for reporting; not used inside the recursion."""
        if self.sign == 0:
            return LOG_ZERO
        return float(np.log(self.mant) + self.ex2 * np.log(LDBL(2.0)))

    @property
    def ndim(self):
        return len(self.a)

    @property
    def nrows(self):
        return self.B.shape[0]


@dataclass(frozen=True)
class MomentTermSet:
    coordinate: int          # 1-based coordinate index k
    terms: tuple             # 1 simple-pole term + 2N signed double-pole terms


def classify_poles(term):
    """Classify the pole structure of a term's denominator rows.

    Rows are compared after normalization, so positive scaling and row
    permutation do not change the outcome.  A single proportional pair is
    a double pole; zero rows or larger multiplicity groups are degenerate.
    """
    B = np.asarray(term.B, dtype=float) if isinstance(term, ExpPolyTerm) else np.asarray(term, dtype=float)
    r = B.shape[0]
    norms = np.linalg.norm(B, axis=1)
    zero_rows = np.nonzero(norms <= ROW_TOL * max(np.max(norms), 1.0))[0]
    if len(zero_rows) > 0:
        return PoleStructure(POLE_DEGENERATE)
    unit = B / norms[:, None]
    pairs = []
    for p in range(r - 1):
        for q in range(p + 1, r):
            gap = min(np.linalg.norm(unit[p] - unit[q]), np.linalg.norm(unit[p] + unit[q]))
            if gap <= ROW_TOL:
                pairs.append((p, q))
    if not pairs:
        return PoleStructure(POLE_SIMPLE)
    if len(pairs) == 1:
        return PoleStructure(POLE_DOUBLE, pairs[0])
    return PoleStructure(POLE_DEGENERATE)


def _vertex_projections(sys):
    """V_s^T s_n for the N+1 simplex vertices, one row per vertex.

    Computed in extended precision: the root tableaux are built from
    differences of these rows, and rounding them to double would put a
    float64-level error floor under every downstream quantity.
    """
    return simplex_vertices(sys.N).astype(LDBL) @ sys.V_s.astype(LDBL)


def _check_projection_collisions(proj):
    scale = max(float(np.max(np.abs(proj))), 1.0)
    bad = []
    n = proj.shape[0]
    for i in range(n - 1):
        for j in range(i + 1, n):
            if np.linalg.norm(proj[i] - proj[j]) <= ROW_TOL * scale:
                bad.append((i, j))
    if bad:
        raise DegenerateConfiguration(bad, "coinciding vertex projections")


def root_terms_volume(sys):
    """The N+1 root terms of the slice-volume computation.

    Term i carries a = V_s^T s_i and denominator rows V_s^T (s_n - s_i)
    over the other N vertices, with unit coefficient.
    """
    proj = _vertex_projections(sys)
    _check_projection_collisions(proj)
    n_vert = proj.shape[0]
    terms = []
    for i in range(n_vert):
        rows = np.delete(proj, i, axis=0) - proj[i]
        terms.append(ExpPolyTerm(a=proj[i].copy(), B=rows, sign=1))
    return terms


def root_terms_moment(sys, k):
    """Root terms of the k-th moment integral (k is 1-based).

    One simple term (the k-th volume term) plus 2N signed terms, each with
    one duplicated denominator row from the quadratic factor <l, s_k - s_n>.
    """
    if not (1 <= k <= sys.N):
        raise ValueError(f"coordinate k={k} out of range 1..{sys.N}")
    proj = _vertex_projections(sys)
    _check_projection_collisions(proj)
    n_vert = proj.shape[0]
    ki = k - 1
    vol_rows = {
        i: np.delete(proj, i, axis=0) - proj[i] for i in range(n_vert)
    }
    terms = [ExpPolyTerm(a=proj[ki].copy(), B=vol_rows[ki], sign=1)]
    for n in range(n_vert):
        if n == ki:
            continue
        # + exp(-<l, s_n>) / (<l, s_k - s_n> * prod_{n' != n} <l, s_n' - s_n>)
        B_pos = np.vstack([(proj[ki] - proj[n])[None, :], vol_rows[n]])
        terms.append(ExpPolyTerm(a=proj[n].copy(), B=B_pos, sign=1))
        # - exp(-<l, s_k>) / (<l, s_n - s_k> * prod_{n' != k} <l, s_n' - s_k>)
        B_neg = np.vstack([(proj[n] - proj[ki])[None, :], vol_rows[ki]])
        terms.append(ExpPolyTerm(a=proj[ki].copy(), B=B_neg, sign=-1))
    return MomentTermSet(coordinate=k, terms=tuple(terms))


def root_terms_halfspace(sys):
    """Root terms of the halfspace-intersection volume vol(T_t).

    Identical to the slice terms except each denominator gains the M x M
    identity block accounting for the extra 1/prod(lam_m) factor.
    """
    eye = np.eye(sys.M)
    out = []
    for term in root_terms_volume(sys):
        out.append(ExpPolyTerm(a=term.a, B=np.vstack([term.B, eye]), sign=term.sign,
                               mant=term.mant, ex2=term.ex2))
    return out


def perturb_basis(sys, epsilon, seed):
    """Add seeded Gaussian noise of scale epsilon to V_s and re-orthonormalize.

    Used to break degenerate pole configurations; the returned system is
    flagged as perturbed.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    if epsilon == 0:
        return sys
    rng = np.random.default_rng(seed)
    V = sys.V_s + epsilon * rng.standard_normal(sys.V_s.shape)
    # modified Gram-Schmidt, two passes
    for _ in range(2):
        for j in range(V.shape[1]):
            for i in range(j):
                V[:, j] -= (V[:, i] @ V[:, j]) * V[:, i]
            V[:, j] /= np.linalg.norm(V[:, j])
    return from_basis(V, perturbed=True)


def default_perturbation_scale(sys):
    """Fixed policy: epsilon = 1e-4 * max|V_s| entry.

    Smaller scales leave nearly-coincident poles whose partial-fraction
    coefficients grow like the inverse cube of the pole spacing, so float
    rounding swamps the result long before the analytic perturbation bias
    (which is O(epsilon)) becomes visible.
    """
    return 1e-4 * float(np.max(np.abs(sys.V_s)))


def min_projection_spacing(sys):
    """Smallest pairwise distance among the N+1 projected simplex vertices."""
    proj = _vertex_projections(sys)
    n = proj.shape[0]
    best = math.inf
    for i in range(n - 1):
        for j in range(i + 1, n):
            best = min(best, float(np.linalg.norm(proj[i] - proj[j])))
    return best


def evaluate_term_sum(terms, lam):
    """Numerically evaluate sum_i coeff_i exp(-<a_i, lam>) / prod [B_i lam]_n.

    Direct linear-domain evaluation; only used by tests to check the root
    terms against Monte Carlo simplex integrals.
    """
    lam = np.asarray(lam, dtype=float)
    total = 0.0
    for term in terms:
        if term.sign == 0:
            continue
        denom = np.prod(term.B @ lam)
        coeff = float(term.sign * np.ldexp(term.mant, term.ex2))
        total += coeff * math.exp(-(term.a @ lam)) / denom
    return total
