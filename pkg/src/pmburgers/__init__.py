"""Stochastic manifold reduction of a noise-driven Burgers equation.

Full spectral simulation, backward-forward window closures (operational and
closed-form), non-Markovian and averaged reduced systems, and the diagnostic
toolbox that quantifies how much of the unresolved variance a closure
explains.
"""

__version__ = "0.1.0"

from .diagnostics import (
    BimodalityReport,
    DefectReport,
    DistributionDistance,
    PdfEstimate,
    compare_distributions,
    defect_sweep,
    detect_bimodality,
    estimate_pdf,
    parameterization_defect,
    transition_tracking,
    variance_fraction,
)
from .errors import (
    ConfigInvalid,
    DegenerateDenominator,
    EmptyInput,
    NonFiniteError,
    NRViolation,
    PmburgersError,
    StabilityViolation,
)
from .manifold import (
    AnalyticCoefficients,
    PullbackEngine,
    analytic_coefficients,
    analytic_h1,
    averaged_h1,
    backward_leg,
    default_t_past,
    forward_leg,
    pullback_hs,
)
from .model import (
    InteractionTable,
    ModelParams,
    NonResonanceReport,
    Spectrum,
    check_non_resonance,
    eigenfunction_value,
    eigenvalue,
    interaction_coefficient,
)
from .noise import PathWindow, WienerPath
from .reduced import (
    ReducedTrajectory,
    reconstruct_field,
    simulate_reduced,
    step_reduced,
)
from .spde import (
    ModeTrajectory,
    field_value,
    nonlinear_term,
    simulate_spde,
    step_spde,
)
from .config import RunConfig, load_config, load_preset

__all__ = [name for name in dir() if not name.startswith("_")]
