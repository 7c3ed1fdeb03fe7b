"""Dataset ingestion and synthetic soft-classification data.

Soft-classification vectors live on the probability simplex in K = N+1
dimensions; dropping one (uninformative) component embeds them into the
solid simplex Δ ⊂ R^N that the estimator works over.  Real classifier
outputs are read from CSV; for experiments without a trained classifier,
`peaked_rows` draws temperature-sharpened flat-Dirichlet vectors whose
mean top entry is calibrated to a requested target.
"""

import csv

import numpy as np

from .errors import RowNotOnSimplex

SUM_TOL = 1e-6


def embed_rows(rows):
    """Drop the last column of probability rows: R^{N+1} simplex -> Δ ⊂ R^N."""
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return rows[:, :-1].copy()


def ingest_softmax_csv(path):
    """Read probability rows from CSV and embed them into Δ.

    Each row must be nonnegative and sum to 1 within 1e-6 (such rows are
    renormalized exactly); anything else raises RowNotOnSimplex with the
    offending row index.  Returns an (n, N) array with the last column
    dropped.
    """
    rows = []
    with open(path, newline="") as fh:
        for idx, rec in enumerate(csv.reader(fh)):
            if not rec or all(not c.strip() for c in rec):
                continue
            try:
                vals = np.array([float(c) for c in rec])
            except ValueError as ex:
                raise RowNotOnSimplex(idx, f"row {idx}: non-numeric entry ({ex})") from ex
            if np.any(vals < -SUM_TOL):
                raise RowNotOnSimplex(idx, f"row {idx}: negative probability")
            s = float(vals.sum())
            if abs(s - 1.0) > SUM_TOL:
                raise RowNotOnSimplex(idx, f"row {idx}: sums to {s:.6f}, not 1")
            rows.append(np.clip(vals, 0.0, None) / s)
    if not rows:
        raise RowNotOnSimplex(-1, "no data rows in file")
    width = len(rows[0])
    for idx, r in enumerate(rows):
        if len(r) != width:
            raise RowNotOnSimplex(idx, f"row {idx}: {len(r)} columns, expected {width}")
    return embed_rows(np.vstack(rows))


PROB_FLOOR = 2e-3


def _sharpen(Z, tau):
    P = Z ** (1.0 / tau)
    P /= P.sum(axis=1, keepdims=True)
    # floor entries away from the simplex faces.  Rows collapsed onto a
    # face make the measurement slice degenerate; the slice volume decays
    # like floor^(N-M), so the floor must keep it above the cancellation
    # noise of the analytic sum (~1e-19 of term scale in extended
    # precision) for benchmark-sized problems
    P = np.clip(P, PROB_FLOOR, None)
    return P / P.sum(axis=1, keepdims=True)


def calibrate_temperature(K, mean_top, rng, calib_samples=4000):
    """Temperature tau for which sharpened flat-Dirichlet rows hit the
    requested mean top entry.

    Sharpening p_i ∝ z_i^(1/tau) of flat-Dirichlet draws is monotone:
    tau -> 0 concentrates all mass on the argmax (mean top -> 1), tau = 1
    leaves the flat distribution.  The mean top entry is estimated on a
    fixed set of calibration draws, so bisection sees a smooth monotone
    function of tau.
    """
    if not (0.0 < mean_top < 1.0):
        raise ValueError("mean_top must lie strictly between 0 and 1")
    Z = rng.dirichlet(np.ones(K), size=calib_samples)
    Z = np.clip(Z, 1e-300, None)

    def mean_top_at(tau):
        return float(np.mean(np.max(_sharpen(Z, tau), axis=1)))

    lo, hi = 1e-3, 1.0
    if mean_top <= mean_top_at(hi):
        return hi
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mean_top_at(mid) > mean_top:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def peaked_rows(n, K, mean_top, rng, tau=None):
    """n probability rows over K classes with calibrated peakedness.

    When tau is None it is calibrated (from the same rng stream) so the
    mean top entry matches mean_top; pass an explicit tau to reuse a
    previous calibration.  Returns (rows, tau).
    """
    if tau is None:
        tau = calibrate_temperature(K, mean_top, rng)
    Z = np.clip(rng.dirichlet(np.ones(K), size=n), 1e-300, None)
    return _sharpen(Z, tau), tau
