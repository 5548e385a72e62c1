"""
Tail of the restricted resolvent
================================

Fix a symmetric T, randomize the diagonal on a small set Omega_1 and look at
P[ ||R (D_V + T)^-1 R|| > lambda ].  Bounded density makes this ~ 1/lambda.
"""
import numpy as np

from lyapstrip import DisorderSpec
from lyapstrip.schur import (PartitionedOperator, eigen_distance_probe, gaussian_symmetric,
                             restricted_inverse, schur_reduce, wegner_probe)

T = gaussian_symmetric(20, seed=1)
p = PartitionedOperator(T, (0, 5, 10, 15))

# the reduced operator reproduces the restricted inverse
dv = np.random.default_rng(0).uniform(0, 1, 4)
print("Schur vs dense:", np.abs(schur_reduce(p, dv) - restricted_inverse(p, dv)).max())

dist = DisorderSpec.uniform(0, 1)
lambdas = [10, 30, 100, 300, 1000]
est = wegner_probe(p, dist, lambdas, 20000, seed=0, threads=4)
print("lambda  P[>lambda]   95% CI")
for lam, pr, lo, hi in zip(est.grid, est.raw_prob, est.ci_low, est.ci_high):
    print(f"{lam:6g}  {pr:.5f}  [{lo:.5f}, {hi:.5f}]")
print("log-log slope", round(est.slope, 3))

# same question phrased as eigenvalues near zero
kap = eigen_distance_probe(p, dist, [0.001, 0.003, 0.01, 0.03, 0.1], 20000, seed=0, threads=4)
print("P[dist(spec, 0) < kappa] / kappa:", np.round(kap.raw_prob / kap.grid, 2))
print("bound 2 |Omega_1| rho =", 2 * 4 * dist.density_bound)
