"""Numerical laboratory for Landau Hamiltonians with random breather potentials."""

__version__ = "0.1.0"

from .errors import (BoxMismatch, ClusterAmbiguous, ConfigError, ConvergenceFailure,  # noqa: F401
                     FluxTooCoarse, HypothesisFailure, HypothesisViolation, InsufficientData,
                     LandauBreatherError)
from .lattice import (HermitianOperator, TorusGeometry, assemble_free_hamiltonian,  # noqa: F401
                      assemble_random_hamiltonian, make_geometry)
from .model import (DisorderDistribution, DisorderSample, HypothesisCertificate,  # noqa: F401
                    SingleSitePotential, breather_sup_bound, evaluate_breather,
                    make_builtin_potential, sample_disorder, verify_hypotheses)
from .spectral import (LevelProjector, SpectralData, compress, count_in_interval,  # noqa: F401
                       eigendecompose, extract_level_projector)
from .ucp import (EquidistributedSet, TraceBoundInstance, UcpReport, assemble_w,  # noqa: F401
                  check_trace_bound, compute_lambda0, estimate_c1, generate_equidistributed)
from .wegner import IdsEstimate, WegnerExperiment, WegnerReport, run_ids, run_wegner  # noqa: F401
