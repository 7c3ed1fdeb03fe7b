"""Cross-check the analytic engine against independent oracles.

Three sanity layers on a random instance:
  1. Monte Carlo: hit-and-run centroid and rejection-sampled volume,
     with the analytic values expected inside the 3-sigma bands.
  2. Cavalieri: integrating the slice volume over all t recovers the
     total simplex volume 1/N!.
  3. Face differentiation: a mixed finite difference of the halfspace
     volume vol(T_t) recovers the slice volume vol(P_t).
"""

import math

import numpy as np

from centroid import Engine, from_basis, mc_polytope, sample_uniform_simplex

rng = np.random.default_rng(42)
N, M = 5, 2
Q, _ = np.linalg.qr(rng.standard_normal((N, M)))
sys = from_basis(Q)
# keep t componentwise positive so the halfspace check below is in the
# region where vol(T_t) is supported
while True:
    x = sample_uniform_simplex(N, rng)
    t = Q.T @ x
    if np.all(t > 0.05):
        break
print(f"random instance: N={N}, M={M}, basis class {sys.basis_class}")

eng = Engine(sys)
vol = eng.volume(t)
centroid = np.array([eng.moment(t, k)[0] for k in range(1, N + 1)]) / vol

mc = mc_polytope(sys, t, 400_000, rng)
zv = (vol - mc.volume_est) / mc.volume_stderr
zc = np.abs(centroid - mc.centroid_mean) / mc.centroid_stderr
print(f"\nvolume   analytic {vol:.6e}   MC {mc.volume_est:.6e} "
      f"(z = {zv:+.2f})")
print(f"centroid max |z| over coordinates: {zc.max():.2f}  (3-sigma band)")

# Cavalieri: 2-D trapezoid over the image of the simplex
verts = np.vstack([np.eye(N), np.zeros(N)])
proj = verts @ Q
lo, hi = proj.min(axis=0), proj.max(axis=0)
n = 401
g1, g2 = np.linspace(lo[0], hi[0], n), np.linspace(lo[1], hi[1], n)
w1 = np.full(n, g1[1] - g1[0]); w1[[0, -1]] *= 0.5
w2 = np.full(n, g2[1] - g2[0]); w2[[0, -1]] *= 0.5
from centroid import compile_network
net = compile_network(sys)
T = np.stack(np.meshgrid(g1, g2, indexing="ij"), axis=-1).reshape(-1, 2)
vols, _ = net.forward_batch(T)
integral = float(np.outer(w1, w2).reshape(-1) @ vols)
print(f"\nCavalieri: integral {integral:.8f}  vs  1/N! = {1 / math.factorial(N):.8f}")

# face differentiation at the same t
h = 1e-4
f = lambda a, b: eng.halfspace_volume([a, b])
fd = (f(t[0] + h, t[1] + h) - f(t[0] + h, t[1] - h)
      - f(t[0] - h, t[1] + h) + f(t[0] - h, t[1] - h)) / (4 * h * h)
print(f"face diff: d^2/dt1 dt2 vol(T_t) = {fd:.6e}  vs  vol(P_t) = {vol:.6e}")
