"""The dimension-by-dimension inverse-Laplace recursion."""

import math
from fractions import Fraction

import numpy as np
import pytest

from centroid import (
    DegenerateConfiguration,
    Engine,
    decompose,
    evaluate_volume,
    from_basis,
    lasserre_slice_volume,
    mc_polytope,
)
from centroid.exp_poly import ExpPolyTerm, root_terms_volume
from centroid.ilt_engine import _gate, _h_poly, ilt_step, terminal_eval
from centroid.logspace import sf_to_float

from helpers import interior_t, mixed_system, nonneg_system

WORKED_A = np.array([
    [0.0, 0.0, 1.0],
    [0.5, 0.866, 0.0],
])
WORKED_T = np.array([0.5, 0.0933])


def worked_volume_closed_form():
    # only the origin's root term survives at this t; its terminal value
    # is t2 * n2^2 / (0.5 * 0.866) with n2 the norm of the second row
    n2sq = 0.5 ** 2 + 0.866 ** 2
    return 0.0933 * n2sq / (0.5 * 0.866)


def test_gate():
    assert _gate(0.5, 0.2) == 1.0
    assert _gate(0.2, 0.5) == 0.0
    assert _gate(0.5, 0.5) == 0.5


def test_h_poly_low_orders():
    # h_s = H^(s)/H as a polynomial in the power sums S_r
    assert _h_poly(0) == {(): Fraction(1)}
    assert _h_poly(1) == {(1,): Fraction(-1)}
    assert _h_poly(2) == {(1, 1): Fraction(1), (2,): Fraction(1)}
    assert _h_poly(3) == {
        (1, 1, 1): Fraction(-1),
        (1, 2): Fraction(-3),
        (3,): Fraction(-2),
    }


def test_worked_example_step_tableau():
    # the origin's root term has a single active row at the first layer;
    # its child is the pure second-coordinate term with a = 0 and
    # B = [0.5; 0.866] (up to row normalization)
    sys = decompose(WORKED_A)
    origin_term = root_terms_volume(sys)[3]
    children = ilt_step(origin_term, WORKED_T[0])
    assert len(children) == 1
    child = children[0]
    assert abs(child.a[0]) <= 1e-3
    vals = sorted(float(v) for v in child.B[:, 0])
    assert np.allclose(vals, [0.5, 0.866], atol=1e-3)
    # terminal closed form: t2 / (1! * 0.5 * 0.866) ~ 0.2155
    value = sf_to_float(terminal_eval(child, WORKED_T[1]))
    assert abs(value - 0.2155) <= 1e-3


def test_worked_example_volume_and_centroid():
    sys = decompose(WORKED_A)
    eng = Engine(sys)
    vol = eng.volume(WORKED_T)
    assert abs(vol - worked_volume_closed_form()) <= 1e-12
    # the slice pins x3 = t1 exactly
    mu3, _ = eng.moment(WORKED_T, 3)
    assert abs(mu3 / vol - 0.5) <= 1e-9


def test_inactive_branch_has_no_children():
    sys = decompose(WORKED_A)
    e3_term = root_terms_volume(sys)[2]      # vertex e_3 projects to (1, 0)
    assert e3_term.a[0] > 0.99
    assert ilt_step(e3_term, WORKED_T[0]) == []


def test_ilt_step_needs_two_dims():
    term = ExpPolyTerm(a=np.array([0.1]), B=np.array([[1.0]]), sign=1)
    with pytest.raises(ValueError):
        ilt_step(term, 0.5)


def test_terminal_eval_simple_and_rectpoly():
    # r = 1: gated constant 1/b
    t1 = ExpPolyTerm(a=np.array([0.2]), B=np.array([[2.0]]), sign=1)
    assert sf_to_float(terminal_eval(t1, 0.5)) == pytest.approx(0.5, rel=1e-15)
    assert sf_to_float(terminal_eval(t1, 0.1)) == 0.0
    # r = 3: (t - a)_+^2 / (2! * prod b)
    t3 = ExpPolyTerm(a=np.array([0.1]), B=np.array([[1.0], [2.0], [4.0]]), sign=1)
    expect = 0.4 ** 2 / (2.0 * 8.0)
    assert sf_to_float(terminal_eval(t3, 0.5)) == pytest.approx(expect, rel=1e-15)


def test_volume_permutation_invariance():
    rng = np.random.default_rng(10)
    sys = mixed_system(5, 2, rng)
    t = interior_t(sys, rng)
    v = evaluate_volume(sys, t)
    perm = rng.permutation(5)
    sys_p = from_basis(sys.V_s[perm])
    v_p = evaluate_volume(sys_p, t)
    assert abs(v - v_p) <= 1e-10 * v


def test_m1_matches_closed_form():
    rng = np.random.default_rng(11)
    for N in (3, 5, 7):
        a = rng.dirichlet(np.ones(N))
        a /= np.linalg.norm(a)
        sys = from_basis(a[:, None])
        for _ in range(5):
            t = float(interior_t(sys, rng)[0])
            ref = lasserre_slice_volume(a, t, dtype=np.longdouble)
            assert evaluate_volume(sys, [t]) == pytest.approx(ref, rel=1e-10)


def test_double_pole_moments_match_monte_carlo():
    # moment root terms carry duplicated rows, exercising the
    # multiplicity-2 pole expansion
    rng = np.random.default_rng(12)
    sys = nonneg_system(4, 2, rng)
    t = interior_t(sys, rng)
    eng = Engine(sys)
    vol = eng.volume(t)
    cen = np.array([eng.moment(t, k)[0] for k in range(1, 5)]) / vol
    mc = mc_polytope(sys, t, 200_000, rng)
    assert abs(vol - mc.volume_est) <= 4 * mc.volume_stderr
    assert np.all(np.abs(cen - mc.centroid_mean) <= 4 * mc.centroid_stderr + 1e-9)


def test_halfspace_volume_limits():
    rng = np.random.default_rng(13)
    sys = mixed_system(4, 2, rng)
    # any negative component -> outside the transform's support
    assert Engine(sys).halfspace_volume([-0.1, 0.5]) == 0.0
    # t beyond every vertex projection -> the whole simplex
    proj = np.vstack([np.eye(4), np.zeros(4)]) @ sys.V_s
    t_big = proj.max(axis=0) + 1.0
    if np.all(t_big > 0):
        full = Engine(sys).halfspace_volume(t_big)
        assert full == pytest.approx(1.0 / math.factorial(4), rel=1e-9)


def test_volume_outside_support_is_zero():
    rng = np.random.default_rng(14)
    sys = mixed_system(5, 2, rng)
    proj = np.vstack([np.eye(5), np.zeros(5)]) @ sys.V_s
    t_out = proj.max(axis=0) + 0.5
    assert abs(Engine(sys).volume(t_out)) <= 1e-9


def test_degenerate_basis_auto_perturbs():
    sys = from_basis(np.array([[0.0], [0.0], [1.0]]))
    with pytest.raises(DegenerateConfiguration):
        Engine(sys, auto_perturb=False).volume([0.5])
    eng = Engine(sys)
    vol = eng.volume([0.5])
    assert eng.perturbed
    # exact slice is the triangle of area 1/8; perturbation bias is O(eps)
    assert abs(vol - 0.125) <= 2e-3


def test_moment_clamped_to_volume():
    rng = np.random.default_rng(15)
    sys = nonneg_system(5, 2, rng)
    t = interior_t(sys, rng)
    eng = Engine(sys)
    vol = eng.volume(t)
    for k in range(1, 6):
        mu, flagged = eng.moment(t, k)
        assert 0.0 <= mu <= vol
        assert not flagged
