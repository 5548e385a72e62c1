"""Numerical laboratory for Lyapunov exponents and Green's function decay of
the random Schroedinger operator on a strip Z x Z_W."""

__version__ = "0.1.0"

from .errors import (AggregationError, ConfigurationError, InconclusiveError,  # noqa: E402
                     InvalidArgumentError, LyapStripError, NearSingularError,
                     PreconditionError, UnsupportedDisorderError)
from .lattice import (BlockTridiagonalOperator, DisorderSpec, Interval,  # noqa: E402
                      PotentialField, StripModel, assemble_hamiltonian, sample_potential,
                      transverse_laplacian)
from .resolvent import (DecayProfile, GreenBlock, Resolvent, block_norm,  # noqa: E402
                        decay_profile, green_block)
from .schur import (PartitionedOperator, TailEstimate, eigen_distance_probe,  # noqa: E402
                    gaussian_symmetric, schur_reduce, wegner_probe)
from .barrier import (BarrierCertificate, ChannelSet, barrier_check,  # noqa: E402
                      barrier_probability, decoupled_energies, lift_potential,
                      perturb_and_check, verify_decoupling)
from .transfer import (LyapunovResult, lyapunov_spectrum,  # noqa: E402
                       smallest_positive_exponent, transfer_matrix)
from .msa import (GoodIntervalReport, MsaParams, ScaleState, bootstrap_step,  # noqa: E402
                  chain_bound, classify_intervals, corollary_bound,
                  decay_event_probability, schedule)
