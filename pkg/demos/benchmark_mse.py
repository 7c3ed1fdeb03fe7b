"""Desk-scale benchmark: centroid estimator vs l1 and l2 baselines.

Draws a fixed Gaussian measurement matrix, samples simplex vectors
uniformly, and compares the empirical mean squared recovery error of the
MMSE centroid estimate against nonnegative l1 minimization and
simplex-constrained least-norm (l2) recovery, across measurement counts.

The same experiment at full scale (N=9, 500 samples, M=1..5) is exposed
as `centroid bench`; this script keeps the runtime to a few seconds.
"""

import time

import numpy as np

from centroid import (
    compile_network,
    decompose,
    emse,
    equivalent_measurement,
    l1_baseline,
    l2_baseline,
    sample_uniform_simplex,
)

rng = np.random.default_rng(0)
N, NS = 7, 150
A_pool = rng.standard_normal((4, N))  # drawn once, fixed across M
X = sample_uniform_simplex(N, rng, size=NS)

print(f"N={N}, {NS} samples, x ~ uniform on the simplex\n")
print(f"{'M':>2} {'centroid':>12} {'l1':>12} {'l2':>12} {'vs l1':>7} {'vs l2':>7}")
for M in (1, 2, 3, 4):
    A = A_pool[:M]
    sys = decompose(A)
    Y = X @ A.T
    T = np.array([equivalent_measurement(sys, y) for y in Y])

    net = compile_network(sys)
    vols, mus = net.forward_batch(T)
    X_cen = np.where(vols[:, None] > 0, mus / np.where(vols[:, None] > 0, vols[:, None], 1.0), 0.0)
    X_l1 = np.array([l1_baseline(A, y) for y in Y])
    X_l2 = np.array([l2_baseline(A, y) for y in Y])

    e_cen, e_l1, e_l2 = emse(X, X_cen), emse(X, X_l1), emse(X, X_l2)
    print(f"{M:>2} {e_cen:>12.5f} {e_l1:>12.5f} {e_l2:>12.5f} "
          f"{e_l1 / e_cen:>6.1f}x {e_l2 / e_cen:>6.1f}x")
