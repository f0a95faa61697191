"""Liouvillian exceptional points of a driven dissipative two-level system.

The package covers the full chain from the master-equation generator to
simulated spectroscopy: construction and spectral analysis of the
4x4 Liouvillian, closed-form and iterative eigensolvers, detection,
location and continuation of second- and third-order exceptional
points, exceptional-line tracing, master-equation and quantum-jump
dynamics, and a simulated measurement pipeline (calibration,
tomography, eigenvalue extraction from time series).
"""

from .core import (
    SystemParams,
    hamiltonian,
    lindblad_rhs,
    liouvillian,
    alpha_decomposition,
    commutator_norm,
    vectorize,
    devectorize,
    check_density_matrix,
)
from .spectral import (
    CubicCoefficients,
    Spectrum,
    characteristic_cubic,
    cubic_from_matrix,
    solve_cubic,
    eigenvalues_closed_form,
    eigen_full,
    liouvillian_spectrum,
    steady_state,
    DegenerateSteadyStateError,
    BranchTrack,
    track_branches,
)
from .epdetect import (
    EPTolerances,
    EPCandidate,
    EPClassification,
    EPTrajectoryPoint,
    ExceptionalLine,
    cubic_discriminant,
    signed_discriminant,
    classify_ep,
    locate_ep2,
    locate_ep3,
    trace_exceptional_lines,
    ep_trajectory_vs_alpha,
    phase_of,
)
from .dynamics import (
    JumpOperatorSet,
    MasterTrajectory,
    McTrajectory,
    jump_operators,
    default_step,
    evolve_master,
    mc_trajectories,
    observable_series,
)
from .expsim import (
    CalibrationCurve,
    DECAY_CALIBRATION,
    DEPHASING_CALIBRATION,
    calibrate_rate,
    RateFit,
    fit_exponential_decay,
    fit_dephasing_rabi,
    apply_rotation,
    MeasurementResult,
    simulate_measurement,
    ReconstructedState,
    reconstruct_state,
    TomographyResult,
    tomography,
    simulate_decay_survival,
    EigenvalueEstimate,
    extract_eigenvalues,
    PanelPoint,
    PanelData,
    run_figure_pipeline,
)

__version__ = "0.1.0"

__all__ = [
    "SystemParams", "hamiltonian", "lindblad_rhs", "liouvillian",
    "alpha_decomposition", "commutator_norm", "vectorize", "devectorize",
    "check_density_matrix",
    "CubicCoefficients", "Spectrum", "characteristic_cubic",
    "cubic_from_matrix", "solve_cubic", "eigenvalues_closed_form",
    "eigen_full", "liouvillian_spectrum", "steady_state",
    "DegenerateSteadyStateError", "BranchTrack", "track_branches",
    "EPTolerances", "EPCandidate", "EPClassification", "EPTrajectoryPoint",
    "ExceptionalLine", "cubic_discriminant", "signed_discriminant",
    "classify_ep", "locate_ep2", "locate_ep3", "trace_exceptional_lines",
    "ep_trajectory_vs_alpha", "phase_of",
    "JumpOperatorSet", "MasterTrajectory", "McTrajectory", "jump_operators",
    "default_step", "evolve_master", "mc_trajectories", "observable_series",
    "CalibrationCurve", "DECAY_CALIBRATION", "DEPHASING_CALIBRATION",
    "calibrate_rate", "RateFit", "fit_exponential_decay",
    "fit_dephasing_rabi", "apply_rotation", "MeasurementResult",
    "simulate_measurement", "ReconstructedState", "reconstruct_state",
    "TomographyResult", "tomography", "simulate_decay_survival",
    "EigenvalueEstimate", "extract_eigenvalues", "PanelPoint", "PanelData",
    "run_figure_pipeline",
    "__version__",
]
