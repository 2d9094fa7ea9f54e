"""Spin-J states for aligning Cartesian reference frames: Fisher information,
anti-coherent state catalogs, Majorana points, cost optimization and
Monte Carlo estimation."""

from .catalog import (
    CatalogState,
    InfeasibleSupportError,
    SolidKind,
    family_state,
    odd_n_variant,
    paper_literal_state,
    platonic_vertices,
    solve_support,
)
from .majorana import PointSet, canonical_align, matched_distance, points_to_state, state_to_points
from .metrology import (
    alignment_cost,
    anticoherence_check,
    attainability_check,
    covariance_matrix,
    fisher_matrix,
    lower_bound,
)
from .optimizer import OptimizerConfig, brute_force_oracle, certify, minimize_cost
from .simulation import (
    MeasurementScheme,
    SimulationReport,
    axis_dispatch,
    basis_z,
    classical_fisher,
    simulate_cartesian,
    simulate_single_axis,
    superposition_pair,
)
from .spin import SpinState, random_state, rotate, rotation_operator, spin_operators

__version__ = "0.1.0"
