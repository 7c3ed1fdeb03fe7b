"""Dimension-by-dimension inverse Laplace recursion.

Each call to `ilt_step` consumes one Laplace variable and one measurement
coordinate, mapping an exp-over-poly term to a list of child terms in one
fewer dimension.  Depth-M recursion over the root terms plus a terminal
closed form yields vol(P_t), vol(T_t) and the moment integrals.

Rows of B with a (near) zero leading entry are constants for the current
transform; they are set aside before the step and re-concatenated into
every child.  Active rows sharing a pole location (proportional rows) form
a multiplicity-k pole and are expanded by the general higher-order
partial-fraction rule; k = 1 and k = 2 reduce to the familiar simple and
quadratic formulas.
"""

import itertools
import math
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import DegenerateConfiguration, UnhandledPoleOrder, ZeroColumnEntry
from .exp_poly import (
    ExpPolyTerm,
    ZERO_COL_TOL,
    default_perturbation_scale,
    min_projection_spacing,
    perturb_basis,
    root_terms_halfspace,
    root_terms_moment,
    root_terms_volume,
)
from .logspace import (
    LDBL,
    SF_ZERO,
    sf_div,
    sf_ldexp2,
    sf_mul,
    sf_prod_array,
    sf_scale,
    sf_sum,
    sf_to_slog,
    slog_to_float,
)

BOUNDARY_TOL = 1e-12  # half-value band for the threshold gate

SF_ONE = (1, LDBL(0.5), 1)

# x86 extended precision occupies 10 of the 12/16 bytes per element; the
# rest is uninitialized padding that must not leak into byte-level keys
_LD_ITEM = np.dtype(LDBL).itemsize
_LD_VALID = 10 if _LD_ITEM in (12, 16) else _LD_ITEM


def _ld_bytes(arr):
    """Canonical bytes of a longdouble array (padding stripped)."""
    a = np.ascontiguousarray(arr, dtype=LDBL)
    raw = a.reshape(-1).view(np.uint8).reshape(-1, _LD_ITEM)
    return raw[:, :_LD_VALID].tobytes()


def _sort_rows(B):
    """Order denominator rows canonically; the term value is invariant."""
    if B.shape[0] <= 1:
        return B
    order = sorted(range(B.shape[0]), key=lambda i: _ld_bytes(B[i]))
    return B[order]


def _gate(t_cur, a1):
    """Threshold factor: 1 when active, 0.5 on the boundary band, 0 otherwise."""
    u = t_cur - a1
    if u > BOUNDARY_TOL:
        return 1.0
    if u < -BOUNDARY_TOL:
        return 0.0
    return 0.5


def _split_rows(B):
    """Indices of active rows (nonzero leading entry) and set-aside rows."""
    lead = np.abs(B[:, 0]) >= ZERO_COL_TOL
    return np.nonzero(lead)[0], np.nonzero(~lead)[0]


def _pole_groups(tails):
    """Group active rows by pole location (equal normalized tail vectors).

    Rows whose tails agree within 1e-9 relative share a pole in the current
    Laplace variable; the group size is the pole multiplicity.  Returns a
    list of index lists, ordered by first member.
    """
    r = tails.shape[0]
    parent = list(range(r))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for p in range(r - 1):
        for q in range(p + 1, r):
            scale = max(1.0, float(np.linalg.norm(tails[p])), float(np.linalg.norm(tails[q])))
            if np.linalg.norm(tails[p] - tails[q]) <= 1e-9 * scale:
                parent[find(q)] = find(p)
    groups = {}
    for i in range(r):
        groups.setdefault(find(i), []).append(i)
    return [groups[k] for k in sorted(groups, key=lambda k: min(groups[k]))]


@lru_cache(maxsize=None)
def _h_poly(s):
    """h_s = H^(s)/H at the pole, as a polynomial in the power sums S_r.

    H is the product of the other (simple-shifted) pole factors; the
    monomial key is the sorted tuple of S indices, the value an exact
    rational coefficient.  Built from the Leibniz recursion
    h_s = sum_i C(s-1, i) h_i (log H)^(s-i), with
    (log H)^(r) = (-1)^r (r-1)! S_r.
    """
    if s == 0:
        return {(): Fraction(1)}
    out = {}
    for i in range(s):
        r = s - i
        ell = Fraction((-1) ** r * math.factorial(r - 1))
        binom = math.comb(s - 1, i)
        for mono, q in _h_poly(i).items():
            key = tuple(sorted(mono + (r,)))
            out[key] = out.get(key, Fraction(0)) + binom * q * ell
    return out


def ilt_step(term, t_cur):
    """Transform one term over the current measurement coordinate.

    The active rows are grouped by pole location; a group of size k is a
    multiplicity-k pole whose residue expansion

        1 / prod(lam - p_n)  =  sum_g sum_m A_{g,m} / (lam - p_g)^m,
        A_{g,m} = H_g^{(k_g - m)}(p_g) / (k_g - m)!

    is expanded symbolically (see `_h_poly`); each resulting summand stays
    inside the exp-over-poly family.  Returns the list of child terms
    (empty when the branch is inactive); children keep the ordering rule
    "active rows first, set-aside rows appended".
    """
    if term.ndim < 2:
        raise ValueError("ilt_step needs at least 2 remaining dimensions")
    a = term.a
    B = term.B
    gate = _gate(t_cur, a[0])
    if gate == 0.0:
        return []
    active, aside = _split_rows(B)
    if len(active) == 0:
        raise UnhandledPoleOrder("no active denominator row at this layer")
    Bact = B[active]
    Baside_tail = B[aside][:, 1:]
    inv_lead = sf_div(SF_ONE, sf_prod_array(Bact[:, 0]))
    tails = (Bact / Bact[:, [0]])[:, 1:]
    groups = _pole_groups(tails)

    u = t_cur - a[0]
    a_tail = a[1:]
    children = []
    for g in groups:
        cg = tails[g[0]]
        others = [j for j in range(tails.shape[0]) if j not in g]
        d = {j: tails[j] - cg for j in others}
        base = np.array([d[j] for j in others]).reshape(len(others), tails.shape[1])
        a_child = a_tail + u * cg
        k = len(g)
        for m in range(1, k + 1):
            if m >= 2 and u <= 0.0:
                continue  # the (t - a1)_+^(m-1) factor kills this branch
            s = k - m
            coeff_m = sf_mul(term.coeff_sf, inv_lead)
            if m == 1:
                if gate == 0.5:
                    coeff_m = sf_ldexp2(coeff_m, -1)
            else:
                coeff_m = sf_scale(coeff_m, LDBL(u) ** (m - 1) / LDBL(math.factorial(m - 1)))
            sfact = LDBL(math.factorial(s))
            for mono in sorted(_h_poly(s)):
                q = _h_poly(s)[mono]
                w = LDBL(q.numerator) / (LDBL(q.denominator) * sfact)
                coeff = sf_scale(coeff_m, w)
                for jt in itertools.product(others, repeat=len(mono)):
                    extra = [d[j] for j, rep in zip(jt, mono) for _ in range(rep)]
                    rows = np.vstack([base, np.array(extra)]) if extra else base
                    B_child = np.vstack([rows, Baside_tail]) if len(aside) else rows
                    children.append(ExpPolyTerm(
                        a=a_child,
                        B=B_child,
                        sign=coeff[0],
                        mant=coeff[1],
                        ex2=coeff[2],
                    ))
    return children


def terminal_eval(term, t_last):
    """Closed-form value of a one-dimensional term, as a scaled float.

    ILT of exp(-a lam) / prod(b_n lam) is (t-a)_+^{r-1} / ((r-1)! prod b_n);
    repeated b values are harmless here since every pole sits at zero.
    """
    if term.ndim != 1:
        raise ValueError("terminal_eval needs exactly 1 remaining dimension")
    b = term.B[:, 0]
    if np.any(np.abs(b) < ZERO_COL_TOL):
        raise ZeroColumnEntry("zero denominator entry in the final dimension")
    r = len(b)
    u = t_last - term.a[0]
    if r == 1:
        gate = _gate(t_last, term.a[0])
        if gate == 0.0:
            return SF_ZERO
        value = sf_div(term.coeff_sf, sf_prod_array(b))
        if gate == 0.5:
            value = sf_ldexp2(value, -1)
        return value
    if u <= 0.0:
        return SF_ZERO
    denom = sf_scale(sf_prod_array(b), LDBL(math.factorial(r - 1)))
    value = sf_div(term.coeff_sf, denom)
    return sf_scale(value, LDBL(u) ** (r - 1))


PERTURB_SEED = 7  # fixed seed so degenerate inputs resolve reproducibly


class Engine:
    """Caches root terms for one measurement system and evaluates at any t.

    Degenerate configurations (coinciding vertex projections, terms left
    with no usable denominator row) are resolved by the fixed perturbation
    policy: seeded Gaussian noise of scale 1e-4 * max|V_s|, escalating
    tenfold on repeated failure, with a seed search that keeps the
    projected vertices well separated.  Set auto_perturb=False to surface
    the errors instead.
    """

    def __init__(self, sys, auto_perturb=True, max_retries=3):
        self._base = sys
        self.sys = sys
        self.auto_perturb = auto_perturb
        self.max_retries = max_retries
        self._attempt = 0
        self._vol_roots = None
        self._half_roots = None
        self._mom_roots = {}
        self._term_static = {}   # id(root term) -> precomputed terminal parts

    @property
    def perturbed(self):
        return self.sys.perturbed

    def _retry(self, fn):
        while True:
            try:
                return fn()
            except (DegenerateConfiguration, UnhandledPoleOrder):
                if not self.auto_perturb or self._attempt >= self.max_retries:
                    raise
                eps = default_perturbation_scale(self._base) * (10.0 ** self._attempt)
                self.sys = self._spaced_perturbation(eps, self._attempt)
                self._vol_roots = None
                self._half_roots = None
                self._mom_roots = {}
                self._term_static = {}
                self._attempt += 1

    def _spaced_perturbation(self, eps, attempt):
        # reject seeds that leave two projected vertices unluckily close,
        # which would reintroduce the ill-conditioning we perturb to avoid
        best, best_gap = None, -1.0
        for trial in range(8):
            cand = perturb_basis(self._base, eps, seed=PERTURB_SEED + 16 * attempt + trial)
            gap = min_projection_spacing(cand)
            if gap >= 0.2 * eps:
                return cand
            if gap > best_gap:
                best, best_gap = cand, gap
        return best

    @staticmethod
    def _widen(terms):
        # propagate a/B in extended precision: the recursion's subtractions
        # are where engine and compiled network would otherwise drift apart.
        # Root rows are put in canonical order here, once, so the hot
        # evaluation path only sorts the freshly built child terms.
        return [ExpPolyTerm(a=t.a.astype(LDBL), B=_sort_rows(t.B.astype(LDBL)),
                            sign=t.sign, mant=LDBL(t.mant), ex2=t.ex2) for t in terms]

    def _volume_roots(self):
        if self._vol_roots is None:
            self._vol_roots = self._widen(root_terms_volume(self.sys))
        return self._vol_roots

    def _halfspace_roots(self):
        if self._half_roots is None:
            self._half_roots = self._widen(root_terms_halfspace(self.sys))
        return self._half_roots

    def _moment_roots(self, k):
        if k not in self._mom_roots:
            self._mom_roots[k] = self._widen(root_terms_moment(self.sys, k).terms)
        return self._mom_roots[k]

    def _terminal_cached(self, term, t_last):
        """terminal_eval with the t-independent parts cached per root term.

        Same operation order as `terminal_eval`, so the results are
        bit-identical; only worthwhile for M = 1, where the root terms are
        evaluated directly and reused across calls.
        """
        key = id(term)
        cached = self._term_static.get(key)
        if cached is None:
            b = term.B[:, 0]
            if np.any(np.abs(b) < ZERO_COL_TOL):
                raise ZeroColumnEntry("zero denominator entry in the final dimension")
            r = len(b)
            if r == 1:
                base = sf_div(term.coeff_sf, sf_prod_array(b))
            else:
                denom = sf_scale(sf_prod_array(b), LDBL(math.factorial(r - 1)))
                base = sf_div(term.coeff_sf, denom)
            cached = (term.a[0], r, base)
            self._term_static[key] = cached
        a0, r, base = cached
        if r == 1:
            gate = _gate(t_last, a0)
            if gate == 0.0:
                return SF_ZERO
            return sf_ldexp2(base, -1) if gate == 0.5 else base
        u = t_last - a0
        if u <= 0.0:
            return SF_ZERO
        return sf_scale(base, LDBL(u) ** (r - 1))

    def _reduce(self, roots, t):
        t = np.asarray(t, dtype=float).reshape(-1)
        if len(t) != self.sys.M:
            raise ValueError(f"t must have length {self.sys.M}")
        if self.sys.M == 1:
            t0 = t[0]
            return sf_to_slog(sf_sum(
                [self._terminal_cached(term, t0) for term in roots]))
        leaves = []

        def descend(term, depth):
            # canonical row order keeps the float-op sequence aligned with
            # the compiled network, which sorts before hash-consing; root
            # terms (depth 0) are already sorted by _widen
            if depth > 0 and term.B.shape[0] > 1:
                term = ExpPolyTerm(a=term.a, B=_sort_rows(term.B), sign=term.sign,
                                   mant=term.mant, ex2=term.ex2)
            if term.ndim == 1:
                leaves.append(terminal_eval(term, t[depth]))
                return
            for child in ilt_step(term, t[depth]):
                descend(child, depth + 1)

        for root in roots:
            descend(root, 0)
        return sf_to_slog(sf_sum(leaves))

    def volume_signed_log(self, t):
        return self._retry(lambda: self._reduce(self._volume_roots(), t))

    def volume(self, t):
        val = slog_to_float(self.volume_signed_log(t))
        return val if val > -1e-12 else 0.0

    def halfspace_volume(self, t):
        t = np.asarray(t, dtype=float).reshape(-1)
        if np.any(t < 0.0):
            return 0.0
        val = slog_to_float(self._retry(lambda: self._reduce(self._halfspace_roots(), t)))
        return max(val, 0.0)

    def moment_signed_log(self, t, k):
        return self._retry(lambda: self._reduce(self._moment_roots(k), t))

    def moment(self, t, k):
        """Moment mu_k clamped to [0, vol(P_t)]; returns (value, clamp_flag).

        The flag is set when the clamp moved the value by more than 1e-8
        relative to the volume.
        """
        vol = self.volume(t)
        raw = slog_to_float(self.moment_signed_log(t, k))
        clipped = min(max(raw, 0.0), vol)
        flag = abs(clipped - raw) > 1e-8 * max(vol, 1e-300)
        return clipped, flag


def evaluate_volume(sys, t):
    """vol(P_t), clamped at zero; 0 for t outside the image of the simplex."""
    return Engine(sys).volume(t)


def evaluate_moment(sys, t, k):
    """Moment mu_k of the slice polytope (k is 1-based)."""
    value, _ = Engine(sys).moment(t, k)
    return value


def evaluate_volume_halfspace(sys, t):
    """N-dimensional volume of the simplex cut by the halfspaces V_s^T x <= t."""
    return Engine(sys).halfspace_volume(t)
