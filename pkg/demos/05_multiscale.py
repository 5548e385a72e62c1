"""
Multi-scale bookkeeping at desk scale
=====================================

Good intervals, the resolvent-identity chain across them, one bootstrap
step and the log-space scale schedule.
"""
import math

import numpy as np

from lyapstrip import DisorderSpec, Interval, StripModel, sample_potential
from lyapstrip.msa import (MsaParams, bootstrap_step, chain_bound, classify_intervals,
                           corollary_bound, decay_event_probability, minimal_feasible_log_A,
                           schedule)

model = StripModel(2, 1.0, DisorderSpec.uniform(-6, 6))
M, n = 8, 5
pot = sample_potential(model, Interval(0, n * M), seed=3)
rep = classify_intervals(model, pot, 0.0, M)
print("good intervals", rep.good_indices, "of", rep.n)
print("norms      ", np.round(rep.norms, 3))
print("edge norms ", np.round(rep.edge_norms, 4), "threshold", round(rep.decay_threshold, 4))

cb = chain_bound(model, pot, 0.0, rep)
print(f"direct {cb.direct:.3e} <= bound {cb.bound:.3e} (measured {cb.measured_bound:.3e})")

# one step M -> nM
res = bootstrap_step(MsaParams(M=10 ** 4, delta=0.1, epsilon=0.01, r=10, n=10 ** 3), W=2)
print("bootstrap:", res)

# the schedule only exists in log space
for W in (2, 4, 8):
    la = minimal_feasible_log_A(W)
    sch = schedule(W, log_A=la, stages=10)
    print(f"W={W}: minimal log A {la:.2f}, log N_0 {sch[0].log_N:.4g}, "
          f"log N_9 {sch[9].log_N:.4g}, min delta margin {min(sch.delta_margin()):.3f}")

for W in (2, 3, 4, 8):
    print(f"C^(-W (log W)^4) at C=e, W={W}: {corollary_bound(W, math.e):.4g}")

d = DisorderSpec.uniform(-0.5, 0.5)
est = decay_event_probability(200, 1, 0.0, math.exp(-2.0), d, 1000, seed=0, threads=4)
print("P[||P_a G P_b|| < e^-2] at N=200:", est.probability)
