"""Root-term construction and pole classification."""

import math

import numpy as np
import pytest

from centroid import DegenerateConfiguration, from_basis, sample_uniform_simplex
from centroid.exp_poly import (
    POLE_DEGENERATE,
    POLE_DOUBLE,
    POLE_SIMPLE,
    classify_poles,
    evaluate_term_sum,
    min_projection_spacing,
    perturb_basis,
    root_terms_halfspace,
    root_terms_moment,
    root_terms_volume,
)

from helpers import mixed_system, nonneg_system


def _safe_lambda(terms, rng, M):
    """A Laplace point bounded away from every denominator hyperplane."""
    while True:
        lam = rng.standard_normal(M) * 2.0
        if all(np.min(np.abs(term.B @ lam)) > 0.1 for term in terms):
            return lam


def test_volume_root_structure():
    rng = np.random.default_rng(0)
    sys = mixed_system(5, 2, rng)
    terms = root_terms_volume(sys)
    assert len(terms) == sys.N + 1
    verts = np.vstack([np.eye(5), np.zeros(5)])
    for i, term in enumerate(terms):
        assert np.allclose(term.a, sys.V_s.T @ verts[i])
        assert term.B.shape == (sys.N, sys.M)
        assert term.sign == 1


def test_moment_root_structure():
    rng = np.random.default_rng(1)
    sys = mixed_system(4, 2, rng)
    ts = root_terms_moment(sys, 2)
    assert ts.coordinate == 2
    assert len(ts.terms) == 1 + 2 * sys.N
    signs = [t.sign for t in ts.terms]
    assert signs[0] == 1
    assert signs[1:] == [1, -1] * sys.N
    # the signed pairs carry one extra (duplicated-direction) row
    for t in ts.terms[1:]:
        assert t.B.shape == (sys.N + 1, sys.M)
    with pytest.raises(ValueError):
        root_terms_moment(sys, 0)


def test_halfspace_root_structure():
    rng = np.random.default_rng(2)
    sys = mixed_system(5, 2, rng)
    for term in root_terms_halfspace(sys):
        assert term.B.shape == (sys.N + sys.M, sys.M)
        assert np.allclose(term.B[-sys.M:], np.eye(sys.M))


def test_volume_terms_match_laplace_transform():
    # sum_i coeff_i exp(-<a_i, lam>)/prod[B_i lam] equals the Laplace
    # transform of t -> vol(P_t), i.e. the simplex integral of
    # exp(-<lam, V_s^T x>); check against Monte Carlo
    rng = np.random.default_rng(3)
    sys = mixed_system(5, 2, rng)
    terms = root_terms_volume(sys)
    lam = _safe_lambda(terms, rng, sys.M)
    analytic = evaluate_term_sum(terms, lam)
    X = sample_uniform_simplex(sys.N, rng, size=400_000)
    vals = np.exp(-(X @ sys.V_s) @ lam)
    mc = float(np.mean(vals)) / math.factorial(sys.N)
    se = float(np.std(vals)) / math.sqrt(len(vals)) / math.factorial(sys.N)
    assert abs(analytic - mc) <= 4 * se + 1e-12


def test_moment_terms_match_laplace_transform():
    rng = np.random.default_rng(4)
    sys = nonneg_system(4, 2, rng)
    k = 3
    terms = root_terms_moment(sys, k).terms
    lam = _safe_lambda(terms, rng, sys.M)
    analytic = evaluate_term_sum(terms, lam)
    X = sample_uniform_simplex(sys.N, rng, size=400_000)
    vals = X[:, k - 1] * np.exp(-(X @ sys.V_s) @ lam)
    mc = float(np.mean(vals)) / math.factorial(sys.N)
    se = float(np.std(vals)) / math.sqrt(len(vals)) / math.factorial(sys.N)
    assert abs(analytic - mc) <= 4 * se + 1e-12


def test_classify_poles():
    B = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert classify_poles(B).kind == POLE_SIMPLE
    dbl = np.vstack([B, [2.0, 0.0]])          # positive multiple of row 0
    ps = classify_poles(dbl)
    assert ps.kind == POLE_DOUBLE and ps.pair == (0, 3)
    neg = np.vstack([B, [-3.0, -3.0]])        # negative multiple of row 2
    assert classify_poles(neg).kind == POLE_DOUBLE
    assert classify_poles(np.vstack([B, [0.0, 0.0]])).kind == POLE_DEGENERATE
    triple = np.vstack([dbl, [3.0, 0.0]])
    assert classify_poles(triple).kind == POLE_DEGENERATE
    # invariant under row permutation and positive scaling
    perm = dbl[[3, 1, 0, 2]] * 2.5
    assert classify_poles(perm).kind == POLE_DOUBLE


def test_projection_collision_raises():
    # a = e_3 projects vertices e_1, e_2 and the origin onto the same point
    sys = from_basis(np.array([[0.0], [0.0], [1.0]]))
    with pytest.raises(DegenerateConfiguration) as ei:
        root_terms_volume(sys)
    assert len(ei.value.pairs) >= 1


def test_perturb_basis():
    rng = np.random.default_rng(5)
    sys = mixed_system(5, 2, rng)
    pert = perturb_basis(sys, 1e-4, seed=7)
    assert pert.perturbed
    assert np.linalg.norm(pert.V_s.T @ pert.V_s - np.eye(2)) <= 1e-12
    assert np.linalg.norm(pert.V_s - sys.V_s) <= 1e-2
    assert perturb_basis(sys, 0.0, seed=7) is sys
    with pytest.raises(ValueError):
        perturb_basis(sys, -1.0, seed=7)
    # same seed, same result
    pert2 = perturb_basis(sys, 1e-4, seed=7)
    assert np.array_equal(pert.V_s, pert2.V_s)


def test_min_projection_spacing():
    rng = np.random.default_rng(6)
    sys = mixed_system(5, 2, rng)
    assert min_projection_spacing(sys) > 1e-3
