"""
Free strip: closed forms against the numerics
=============================================

With no disorder the strip splits into W channels, each a 1D chain at the
shifted energy E' = E - 2cos(2 pi j / W).  Outside the band (|E'| > 2) a
channel decays like exp(-arcosh(|E'| / 2) d).
"""
import numpy as np

from lyapstrip import StripModel, Interval
from lyapstrip.barrier import decoupled_energies
from lyapstrip.resolvent import decay_profile
from lyapstrip.transfer import free_channel_exponents, lyapunov_spectrum, transfer_matrix

# the smallest transfer matrix: W = 1, so the ring contributes D = 2
print(transfer_matrix(StripModel(1, 0.0), [0.0], 5.0))

# W = 2 at E = 5: channel energies 3 and 7
E, W = 5.0, 2
print("channel energies", decoupled_energies(E, W).energies)
exact = free_channel_exponents(E, W)
print("closed form   ", exact)

r = lyapunov_spectrum(StripModel(W, 0.0), E, 10 ** 6)
print("QR estimate   ", r.exponents[:W])
print("stderr        ", r.stderr[:W])
print("sum of all 2W exponents", r.exponents.sum())

# the Green's function sees the slowest channel only
for W, E in [(1, 5.0), (2, 6.0), (3, 7.0)]:
    prof = decay_profile(StripModel(W, 0.0), E, Interval.of_size(100), 1, 0)
    slow = free_channel_exponents(E, W)[-1]
    print(f"W={W} E={E}: fitted rate {prof.fitted_rate:.6f}, slowest channel {slow:.6f}")
