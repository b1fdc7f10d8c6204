"""Deterministic pilot-wave simulator of the two-step EPR-B experiment.

An entangled opposite-spin atom pair is sent through two Stern-Gerlach
analyzers, one after the other: atom A is measured first, then atom B in an
analyzer tilted by an angle delta.  Each pair carries hidden variables (a
shared initial position and a spin orientation); trajectories follow the
analytic guidance fields of the pair wave function, and ensembles of pairs
reproduce the quantum predictions: the two-spot spatial quantization, the
invariance of each single-atom density, and the singlet spin correlations.
"""

from .analytic import (
    BranchWeights,
    PlanePoint,
    analyzer_branch_weights,
    conditional_b_after_a,
    deflected_packet,
    effective_wave_a,
    effective_wave_b,
    gaussian_packet,
    marginal_a,
    marginal_b,
    pair_density_after_magnet,
    polarized_beam_marginal,
    spot_separation,
    two_body_wave_after_magnet,
    unpolarized_beam_marginal,
)
from .core import (
    HBAR,
    SINGLET,
    DerivedParams,
    PhysicalConfig,
    SpinOrientation,
    Spinor,
    TwoBodySpinor,
    antisymmetrize_singlet,
    derive_params,
    opposite_orientation,
    orientation_from_spinor,
    rotate_to_analyzer_basis,
    spinor_from_orientation,
    wrap_phi,
)
from .ensemble import (
    EnsembleConfig,
    EnsembleStats,
    Histogram,
    SweepPoint,
    correlation_sweep,
    run_ensemble,
    sample_initials,
    tv_distance,
)
from .trajectory import (
    IntegrationError,
    PairInitialConditions,
    PairTrajectory,
    TrajectorySample,
    classify_outcome,
    integrate_a,
    mirror_spin_b,
    simulate_pair,
    step2_b_trajectory,
    theta_after_magnet,
    theta_in_magnet,
    velocity_after_magnet,
    velocity_in_magnet,
)

__version__ = "0.1.0"

__all__ = [
    "HBAR",
    "SINGLET",
    "BranchWeights",
    "DerivedParams",
    "EnsembleConfig",
    "EnsembleStats",
    "Histogram",
    "IntegrationError",
    "PairInitialConditions",
    "PairTrajectory",
    "PhysicalConfig",
    "PlanePoint",
    "SpinOrientation",
    "Spinor",
    "SweepPoint",
    "TrajectorySample",
    "TwoBodySpinor",
    "analyzer_branch_weights",
    "antisymmetrize_singlet",
    "classify_outcome",
    "conditional_b_after_a",
    "correlation_sweep",
    "deflected_packet",
    "derive_params",
    "effective_wave_a",
    "effective_wave_b",
    "gaussian_packet",
    "integrate_a",
    "marginal_a",
    "marginal_b",
    "mirror_spin_b",
    "opposite_orientation",
    "orientation_from_spinor",
    "pair_density_after_magnet",
    "polarized_beam_marginal",
    "rotate_to_analyzer_basis",
    "run_ensemble",
    "sample_initials",
    "simulate_pair",
    "spinor_from_orientation",
    "spot_separation",
    "step2_b_trajectory",
    "theta_after_magnet",
    "theta_in_magnet",
    "tv_distance",
    "two_body_wave_after_magnet",
    "unpolarized_beam_marginal",
    "velocity_after_magnet",
    "velocity_in_magnet",
    "wrap_phi",
]
