"""Feasibility of locality-preserving Lindblad steady-state descriptions,
decided by semidefinite programming against a Redfield reference solution."""

from .bath import BathSpec, QuadratureConfig
from .chain import ChainSpec, EnergyEigenbasis, OperatorBasis, build_hamiltonian, diagonalize
from .conic import ConicProblem, ConicSolution, solve
from .family import (
    AffineMapTables,
    LindbladCandidate,
    apply_candidate,
    build_affine_tables,
    tau_pop,
    tau_pop_coh,
)
from .pipeline import SweepConfig, parse_config, run_sweep, solve_point
from .redfield import NessSolution, RedfieldDissipator, build_dissipator, solve_ness
from .sdp import (
    FeasibilityVerdict,
    build_tau_pop_problem,
    build_tau_popcoh_problem,
    hermitian_embedding,
    make_verdict,
    trace_distance,
    trace_distance_bound,
    verify_solution,
)

__version__ = "0.1.0"
