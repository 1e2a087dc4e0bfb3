"""Weak-measurement metrology with Hermite-Gaussian pointer states.

Simulates the joint estimation of a spatial displacement d and momentum
kick k written onto an order-n Hermite-Gaussian pointer by a weakly
coupled, post-selected two-level system.  Provides closed-form and numeric
quantum / classical Fisher information matrices, Cramer-Rao bounds,
maximum-likelihood Monte Carlo ensembles, and a dual balanced-homodyne
readout with its shot-noise precision floors.
"""

__version__ = "0.1.0"

from .errors import (
    FirstOrderValidityWarning,
    NumericalAccuracyWarning,
    NumericalError,
    PhysicsError,
)
from .estimate import (
    EnsembleConfig,
    EnsembleResult,
    ErrorEllipse,
    FitResult,
    SampleBatch,
    covariance_ellipse,
    log_likelihood,
    mle_fit,
    run_ensemble,
    sample_positions,
)
from .fisher import (
    CovarianceBound,
    FisherMatrix,
    cfim_homodyne,
    cfim_mle_analytic,
    cfim_mle_numeric,
    optimal_lo_check,
    qcrb,
    qfim_analytic,
    qfim_numeric,
    sld_commutator_expectation,
    tradeoff_trace,
)
from .homodyne import (
    HomodyneConfig,
    LocalOscillator,
    MinDetectable,
    ShotNoiseResult,
    beam_splitter_lo_pair,
    difference_signals,
    estimate_dk,
    exact_difference_signals,
    lo_state,
    min_detectable,
    optimal_lo_pair,
    port_intensities,
    shot_noise_mc,
)
from .modes import Grid, HGState, hg_wavefunction, hg_wavefunctions, make_grid
from .weak import (
    ExactFinalState,
    ParamVector,
    Selection,
    final_state_exact,
    final_state_first_order,
    nearly_orthogonal_selection,
    position_mean,
    position_variance,
    postselect_probability,
    weak_value,
)

__all__ = [
    "__version__",
    "PhysicsError",
    "NumericalError",
    "FirstOrderValidityWarning",
    "NumericalAccuracyWarning",
    "Grid",
    "HGState",
    "hg_wavefunction",
    "hg_wavefunctions",
    "make_grid",
    "ParamVector",
    "Selection",
    "ExactFinalState",
    "nearly_orthogonal_selection",
    "weak_value",
    "postselect_probability",
    "final_state_first_order",
    "final_state_exact",
    "position_mean",
    "position_variance",
    "FisherMatrix",
    "CovarianceBound",
    "qfim_analytic",
    "qfim_numeric",
    "qcrb",
    "cfim_mle_analytic",
    "cfim_mle_numeric",
    "cfim_homodyne",
    "tradeoff_trace",
    "optimal_lo_check",
    "sld_commutator_expectation",
    "SampleBatch",
    "sample_positions",
    "log_likelihood",
    "FitResult",
    "mle_fit",
    "ErrorEllipse",
    "covariance_ellipse",
    "EnsembleConfig",
    "EnsembleResult",
    "run_ensemble",
    "LocalOscillator",
    "HomodyneConfig",
    "lo_state",
    "beam_splitter_lo_pair",
    "optimal_lo_pair",
    "port_intensities",
    "difference_signals",
    "exact_difference_signals",
    "estimate_dk",
    "ShotNoiseResult",
    "shot_noise_mc",
    "MinDetectable",
    "min_detectable",
]
