"""
Barriers and transverse decoupling
==================================

A barrier is a stretch whose Green's function is bounded by e^sqrt(N) and
whose far entries are below e^(-cN).  For column-constant potentials the
strip is W copies of a chain, which makes barriers easy to study.
"""
import numpy as np

from lyapstrip import DisorderSpec, Interval, StripModel, assemble_hamiltonian
from lyapstrip.barrier import (barrier_check, barrier_probability, channel_certificate,
                               lift_potential, perturb_and_check, verify_decoupling)

# a tall constant wall
v = np.full(16, 10.0)
op = assemble_hamiltonian(StripModel(1), lift_potential(v, 1))
for c in (0.4, 0.5):
    cert = barrier_check(op, 0.0, c)
    print(f"c={c}: norm {cert.norm_bound:.4f}, far entry {cert.max_far_entry:.3e}, "
          f"threshold {cert.decay_threshold:.3e}, passed {cert.passed}")
print("largest passing c", round(cert.max_passing_c, 4))

# decoupling: strip solve == W channel solves after a DFT along the ring
rng = np.random.default_rng(1)
v = rng.uniform(-0.5, 0.5, 32)
for W in (1, 3, 8):
    chk = verify_decoupling(StripModel(W), v, 0.3, Interval.of_size(32))
    print(f"W={W}: residual {chk.residual:.2e}, Parseval {chk.parseval_error:.2e}")

# with block norms the strip passes exactly when every channel passes
v = rng.uniform(-6, 6, 20)
strip = barrier_check(assemble_hamiltonian(StripModel(3), lift_potential(v, 3)), 0.2, 0.2, "block")
chan = channel_certificate(v, 3, 0.2, 0.2, decay_mode="block")
print("strip", strip.passed, strip.max_far_block, "| channels", chan.passed, chan.max_far_block)

# barriers survive small perturbations, not large ones
model = StripModel(2)
v = np.full(16, 10.0)
base = barrier_check(assemble_hamiltonian(model, lift_potential(v, 2)), 0.0, 0.4)
c = base.max_passing_c - 0.005  # a marginal barrier
for tol in (0.0, 0.1, 1.0, 10.0):
    print(f"tol {tol:5}: survival {perturb_and_check(model, v, tol, 0.0, c, 200, 0):.3f}")

# how often does a random stretch act as a barrier
d = DisorderSpec.uniform(-10, 10)
for W in (1, 2, 3):
    est = barrier_probability(8, W, 0.0, 0.2, d, 2000, seed=0, threads=4)
    print(f"W={W}: P[barrier] = {est.probability:.4f} [{est.ci_low:.4f}, {est.ci_high:.4f}]")
