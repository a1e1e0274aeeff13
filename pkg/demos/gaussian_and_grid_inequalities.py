"""
Checking the inequalities on explicit densities
===============================================

Gaussian pairs use closed forms for D, I and W2.  The perturbed model
has no closed form, so it goes on a grid.
"""

import numpy as np

from lsicert import GaussianDist, certify, perturbed_quadratic, quadratic
from lsicert.dynamics import gibbs_grid
from lsicert.metrics import Axis, GridDist, check_lsi, check_otto_villani, fisher, kl, w2

M = np.array([[1.0, 0.2], [0.2, 1.0]])
spec = quadratic(M)
cert = certify(spec)
q = GaussianDist.from_precision(M)
rng = np.random.default_rng(0)

# LSI with the certified constant: I / (2 c) - D >= 0
for k in range(5):
    A = rng.normal(size=(2, 2))
    p = GaussianDist(rng.normal(size=2), A @ A.T / 2 + 0.3 * np.eye(2))
    print(f"pair {k}: D={kl(p, q):.4f}  I={fisher(p, q):.4f}  LSI slack={check_lsi(p, q, cert.lsi_lower):.4f}")

# Transport inequality at the exact convexity constant is tight for shifts.
lam = np.linalg.eigvalsh(M)[0]
v = np.linalg.eigh(M)[1][:, 0]
shifted = GaussianDist(0.7 * v, q.cov)
print("shift along the soft direction, W2^2 slack:", check_otto_villani(shifted, q, lam))

# Same checks on a grid for a sine-perturbed model.
pert = perturbed_quadratic(M, [(0, 0.1, 1.0), (1, 0.1, 1.0)])
pc = certify(pert)
axes = (Axis(-8, 8, 48),) * 2
qg = gibbs_grid(pert, axes)
pg = GridDist.from_logdensity(axes, lambda x: np.log(np.maximum(qg.weights, 1e-300)) + x @ [0.4, -0.2])
print(f"perturbed model: rho={pc.rho:.4f} delta={pc.delta:.4f}")
print(f"grid: D={kl(pg, qg):.5f} I={fisher(pg, qg):.5f} slack={check_lsi(pg, qg, pc.lsi_lower):.5f}")

# grid vs closed form for a discretized Gaussian
p = GaussianDist([0.5, -0.3], [[0.8, 0.1], [0.1, 1.2]])
ax = (Axis(-7, 7, 40),) * 2
P, Q = GridDist.from_gaussian(p, ax), GridDist.from_gaussian(q, ax)
print(f"D  closed {kl(p, q):.6f}  grid {kl(P, Q):.6f}")
print(f"I  closed {fisher(p, q):.6f}  grid {fisher(P, Q):.6f}")
print(f"W2 closed {w2(p, q):.6f}  grid {w2(P, Q):.6f}  (spacing {ax[0].spacing:.3f})")
