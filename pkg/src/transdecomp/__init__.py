"""Transition decomposition of resonance evolution for a square barrier
on the half-line: S-matrix poles, the outgoing Lyapunov operator M+ and
its square root, and backward/forward splitting of evolving states."""

__version__ = "0.1.0"

from .lyapunov import LyapunovOperator, assemble_m, build, toeplitz_expectation
from .numerics import UniformGrid, eigh, newton_complex, psd_sqrt, quad_midpoint
from .resonance import ResonancePole, continued_denominator, find_poles, search_poles
from .scattering import (
    Potential,
    eigenfunction,
    lippmann_schwinger,
    s_matrix,
    solve_coefficients,
    wavenumbers,
)
from .statelab import (
    EnergyState,
    approx_resonance_state,
    decompose,
    density_decomposition,
    evolve,
    heisenberg_decomposition,
    m_expectation_series,
    position_reconstruct,
)
