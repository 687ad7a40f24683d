"""Fidelity estimation via Pauli sampling.

Modules:
  f2          -- binary-symplectic Pauli algebra, FWHT, F2 linear algebra
  states      -- state construction, phase stripping, noise, measurement
  magic       -- l-norms, stabilizer Renyi entropies, variance bounds,
                 hypergraph rank machinery, Haar/Dirichlet closed forms
  samplers    -- l_2a phase-point samplers (exact, phase-state, Dicke,
                 Bell-circuit, MPS)
  estimation  -- alpha-DFE, fan-out FE, nonlinear DFE, aggregation
  tomography  -- MUB-based l2 state tomography
  cli         -- experiment runners (`fidest` entry point)
"""

__version__ = "0.1.0"

from .errors import (CapExceededError, ConfigError, DimensionError,
                     NumericalHealthError)
from .f2 import (CoeffVector, F2Matrix, PauliPoint, apply_pauli,
                 diagonalizing_frame, f2_rank, fwht, pauli_coefficients,
                 pauli_expectation, symplectic_product)
from .states import (DenseState, PhaseFunction, RealMPS, StateVector,
                     TrajectoryMixture, depolarize, dicke_state,
                     exact_fidelity, haar_random, hypergraph_state,
                     measure_computational, mps_to_statevector, phase_state,
                     phase_strip, random_real_mps)

__all__ = [
    "__version__",
    "CapExceededError", "ConfigError", "DimensionError",
    "NumericalHealthError",
    "CoeffVector", "F2Matrix", "PauliPoint", "apply_pauli",
    "diagonalizing_frame", "f2_rank", "fwht", "pauli_coefficients",
    "pauli_expectation", "symplectic_product",
    "DenseState", "PhaseFunction", "RealMPS", "StateVector",
    "TrajectoryMixture", "depolarize", "dicke_state", "exact_fidelity",
    "haar_random", "hypergraph_state", "measure_computational",
    "mps_to_statevector", "phase_state", "phase_strip", "random_real_mps",
]
