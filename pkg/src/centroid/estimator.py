"""MMSE centroid estimator: x_hat = mu / vol(P_t).

Under the uniform prior on the simplex, the conditional mean of x given
the measurements t is the centroid of the intersection polytope, so the
estimate is a ratio of quantities the analytic engine (or the compiled
network) already provides.  Numeric-health policies live here: empty
polytopes raise, underflowing volumes fall back to the l1 baseline, and
estimates that drift off the simplex by rounding are projected back.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyPolytope, InfeasibleT
from .ilt_engine import Engine
from .logspace import LOG_ZERO, slog_to_float
from .measurement import BASIS_MIXED, decompose, equivalent_measurement
from .oracles import _interior_point, l1_baseline, project_simplex

UNDERFLOW_LOG = math.log(1e-300)
FEAS_TOL = 1e-9


@dataclass
class EstimationResult:
    """Centroid estimate with provenance flags.

    When `underflow` is set the volume was too small to divide through
    and x_hat is the l1-baseline fallback; log_volume still reports the
    (possibly tiny) analytic log-volume.
    """

    volume: float
    log_volume: float
    mu: np.ndarray
    x_hat: np.ndarray
    flags: dict = field(default_factory=dict)


def _feasible(sys, t):
    """True when P_t has a nonempty interior (phase-I LP)."""
    try:
        _interior_point(sys, np.asarray(t, dtype=float))
        return True
    except InfeasibleT:
        return False


def centroid_estimate(sys, t, backend="engine", net=None):
    """MMSE estimate for one measurement vector t.

    backend "engine" runs the analytic recursion directly; "network"
    evaluates a compiled network (pass it as `net`, or it is compiled on
    the fly).  Raises EmptyPolytope when t is infeasible.
    """
    t = np.asarray(t, dtype=float).reshape(-1)
    if backend == "engine":
        eng = Engine(sys)
        vol_sl = eng.volume_signed_log(t)
        mu_sl = [eng.moment_signed_log(t, k) for k in range(1, sys.N + 1)]
        perturbed = eng.perturbed
    elif backend == "network":
        if net is None:
            from .network import compile_network
            net = compile_network(sys)
        vol, mu_vals = net.forward(t)
        vol_sl = (0, LOG_ZERO) if vol <= 0.0 else (1, math.log(vol))
        mu_sl = [(0, LOG_ZERO) if v == 0.0 else (1 if v > 0 else -1, math.log(abs(v)))
                 for v in mu_vals]
        perturbed = net.perturbed
    else:
        raise ValueError(f"unknown backend {backend!r}")

    log_vol = float(vol_sl[1]) if vol_sl[0] > 0 else LOG_ZERO
    vol = slog_to_float(vol_sl) if vol_sl[0] > 0 else 0.0
    mu = np.array([max(slog_to_float(s), 0.0) for s in mu_sl])
    flags = {
        "underflow": False,
        "clamped": False,
        "perturbed": bool(perturbed),
        "empirical_basis": sys.basis_class == BASIS_MIXED,
    }

    if log_vol < UNDERFLOW_LOG:
        if vol_sl[0] <= 0 and not _feasible(sys, t):
            raise EmptyPolytope(f"no point of the simplex satisfies V_s^T x = t (t={t})")
        # degenerate-slice fallback: these instances are easy for plain l1
        flags["underflow"] = True
        x_hat = l1_baseline(sys.V_s.T, t)
        return EstimationResult(volume=vol, log_volume=log_vol,
                                mu=mu, x_hat=x_hat, flags=flags)

    # division in the signed-log domain, linear only at the output
    x_hat = np.array([
        slog_to_float((s, lm - vol_sl[1])) if s != 0 else 0.0
        for s, lm in mu_sl
    ])
    residual = max(
        float(np.max(-x_hat)),
        float(np.sum(x_hat) - 1.0),
        float(np.max(np.abs(sys.V_s.T @ x_hat - t))),
    )
    if residual > FEAS_TOL:
        if residual > 1e-6 and not _feasible(sys, t):
            # infeasible t: the analytic sum cancels to rounding noise
            # instead of an exact zero, so the residual is the tell
            raise EmptyPolytope(f"no point of the simplex satisfies V_s^T x = t (t={t})")
        x_hat = project_simplex(x_hat)
        flags["clamped"] = True
    return EstimationResult(volume=vol, log_volume=log_vol,
                            mu=mu, x_hat=x_hat, flags=flags)


def estimate_from_y(A, y, backend="engine", net=None):
    """Full pipeline: decompose A, map y to t, and estimate the centroid."""
    sys = decompose(A)
    t = equivalent_measurement(sys, y)
    return centroid_estimate(sys, t, backend=backend, net=net)
