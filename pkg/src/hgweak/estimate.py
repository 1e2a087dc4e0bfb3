"""Position-readout Monte Carlo: sampling, likelihood and ML estimation.

Each detected photon contributes one position sample drawn from the
first-order final-pointer density |phi_f(x)|^2.  A trial collects n_samples
positions and fits (d, k) by maximizing the log-likelihood with
Nelder-Mead; an ensemble of trials estimates the covariance of the fit and
compares it with the Cramer-Rao floor of the closed-form information
matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import minimize
from scipy.stats import chi2

from .errors import NumericalError, PhysicsError
from .fisher import cfim_mle_analytic, qcrb
from .modes import hg_wavefunctions, make_grid
from .weak import (
    ParamLike,
    Selection,
    as_params,
    check_first_order_params,
    first_order_coeffs,
    weak_value,
)

# Fit box in scaled units (d / sigma and k * sigma): inside the first-order
# validity region, generous compared to paper-scale truths.
FIT_BOX = 0.05
# Initial simplex leg in scaled units.
SIMPLEX_SCALE = 1e-3
MAX_FIT_ITER = 2000

SeedLike = Union[int, np.random.SeedSequence]

# 2-D one-sigma coverage: P(chi2_2 <= 1).
ELLIPSE_CONFIDENCE_1SIGMA = float(chi2.cdf(1.0, df=2))


@dataclass(frozen=True)
class SampleBatch:
    """Position samples plus the model that generated them."""

    positions: np.ndarray
    seed: object
    n: int
    sigma: float
    a_w: complex

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def count(self) -> int:
        return self.positions.size


def sample_positions(
    n: int,
    sigma: float,
    a_w: complex,
    g: ParamLike,
    count: int,
    seed: SeedLike,
    grid_size: int = 4096,
) -> SampleBatch:
    """Draw `count` positions from the first-order density by inverse CDF.

    The CDF is accumulated on a uniform grid wide enough for order n+1 and
    inverted with linear interpolation; identical seeds give identical
    batches.
    """
    if count < 1:
        raise PhysicsError("count must be >= 1")
    g = check_first_order_params(g, sigma)
    c = first_order_coeffs(int(n), float(sigma), complex(a_w), g.d, g.k)
    c /= np.linalg.norm(c)
    grid = make_grid(int(n) + 1, float(sigma), grid_size)
    modes = hg_wavefunctions(int(n) + 1, float(sigma), grid.points)
    density = np.abs(c @ modes) ** 2
    cdf = cumulative_trapezoid(density, grid.points, initial=0.0)
    cdf /= cdf[-1]
    rng = np.random.default_rng(seed)
    u = rng.uniform(size=int(count))
    positions = np.interp(u, cdf, grid.points)
    return SampleBatch(positions=positions, seed=seed, n=int(n), sigma=float(sigma), a_w=complex(a_w))


def _coeff_matrix(batch: SampleBatch) -> np.ndarray:
    """Mode values phi_0..phi_{n+1} at the sample positions (g-independent)."""
    return hg_wavefunctions(batch.n + 1, batch.sigma, batch.positions)


def _log_likelihood_from_modes(
    batch: SampleBatch, modes: np.ndarray, d: float, k: float
) -> float:
    c = first_order_coeffs(batch.n, batch.sigma, batch.a_w, d, k)
    c /= np.linalg.norm(c)
    density = np.abs(c @ modes) ** 2
    if np.any(density <= 0.0):
        return -np.inf
    return float(np.sum(np.log(density)))


def log_likelihood(batch: SampleBatch, g: ParamLike) -> float:
    """Sum of log densities of the batch under parameters g.

    The normalized mode coefficients make the density integrate to one
    analytically, so no quadrature enters.  Samples at non-positive density
    push the result to -inf.  An empty batch scores 0.
    """
    g = as_params(g)
    if batch.count == 0:
        return 0.0
    return _log_likelihood_from_modes(batch, _coeff_matrix(batch), g.d, g.k)


@dataclass(frozen=True)
class FitResult:
    """Maximum-likelihood point plus convergence diagnostics."""

    d: float
    k: float
    converged: bool
    iterations: int
    boundary_pinned: bool
    degenerate: bool
    log_likelihood: float


def _run_nelder_mead(objective, start: np.ndarray):
    simplex = np.array(
        [start, start + [SIMPLEX_SCALE, 0.0], start + [0.0, SIMPLEX_SCALE]]
    )
    return minimize(
        objective,
        start,
        method="Nelder-Mead",
        bounds=[(-FIT_BOX, FIT_BOX), (-FIT_BOX, FIT_BOX)],
        options={
            "initial_simplex": simplex,
            "xatol": 1e-9,
            "fatol": 1e-8,
            "maxiter": MAX_FIT_ITER,
            "maxfev": 4 * MAX_FIT_ITER,
        },
    )


def mle_fit(batch: SampleBatch, min_count: int = 100) -> FitResult:
    """Maximize the batch log-likelihood over the fit box.

    Works in scaled coordinates (d/sigma, k sigma), starting from the
    origin with a 1e-3 simplex.  A fit that lands on the box edge is
    restarted once from that edge; if it pins again it is flagged rather
    than rejected.  Exceeding the iteration budget raises.
    """
    if batch.count < min_count:
        raise PhysicsError(f"need at least {min_count} samples to fit, got {batch.count}")
    modes = _coeff_matrix(batch)
    sigma = batch.sigma

    def objective(x):
        return -_log_likelihood_from_modes(batch, modes, x[0] * sigma, x[1] / sigma)

    res = _run_nelder_mead(objective, np.zeros(2))
    if not res.success:
        raise NumericalError(
            f"fit did not converge in {MAX_FIT_ITER} iterations: {res.message} "
            f"(nit={res.nit}, nfev={res.nfev}, x={res.x})"
        )
    iterations = int(res.nit)
    pinned = bool(np.any(np.abs(res.x) >= FIT_BOX * (1.0 - 1e-9)))
    if pinned:
        retry = _run_nelder_mead(objective, res.x)
        if retry.success:
            res = retry
            iterations += int(retry.nit)
            pinned = bool(np.any(np.abs(res.x) >= FIT_BOX * (1.0 - 1e-9)))
    return FitResult(
        d=float(res.x[0] * sigma),
        k=float(res.x[1] / sigma),
        converged=bool(res.success),
        iterations=iterations,
        boundary_pinned=pinned,
        degenerate=(batch.n == 0),
        log_likelihood=float(-res.fun),
    )


@dataclass(frozen=True)
class ErrorEllipse:
    """Covariance ellipse: semi-axes, orientation of the major axis, coverage."""

    semi_axes: Tuple[float, float]
    angle: float
    confidence: float


def covariance_ellipse(cov: np.ndarray, confidence: float) -> ErrorEllipse:
    """Ellipse containing the given probability mass of a 2-D Gaussian."""
    if not (0.0 < confidence < 1.0):
        raise PhysicsError("confidence must be in (0, 1)")
    cov = np.asarray(cov, dtype=float).reshape(2, 2)
    r2 = chi2.ppf(confidence, df=2)
    w, v = np.linalg.eigh(cov)
    if w[0] < 0.0:
        raise PhysicsError("covariance must be positive semidefinite")
    major = v[:, 1]
    return ErrorEllipse(
        semi_axes=(float(np.sqrt(w[1] * r2)), float(np.sqrt(w[0] * r2))),
        angle=float(np.arctan2(major[1], major[0])),
        confidence=float(confidence),
    )


@dataclass(frozen=True)
class EnsembleConfig:
    """Repeated-trial study configuration.

    a_w is the weak value of the generating model (a Selection is also
    accepted and collapsed to its weak value); g_true the parameters every
    trial is sampled at; n_samples the post-selected photons per trial.
    Per-trial RNG streams derive from (seed, trial index), so a serial run
    and any parallel partition agree exactly.
    """

    n: int
    sigma: float
    a_w: complex
    g_true: ParamLike
    n_samples: int
    trials: int
    seed: int
    confidence: float = ELLIPSE_CONFIDENCE_1SIGMA
    max_failure_rate: float = 0.01

    def __post_init__(self):
        if isinstance(self.a_w, Selection):
            object.__setattr__(self, "a_w", weak_value(self.a_w))


@dataclass(frozen=True)
class EnsembleResult:
    estimates: np.ndarray  # (trials, 2) fitted (d, k)
    sample_cov: np.ndarray
    theory_cov: Optional[np.ndarray]
    ellipse: Optional[ErrorEllipse]
    theory_singular: bool
    null_direction: Optional[np.ndarray]
    n_failed: int
    n_pinned: int


def trial_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Independent, reproducible stream for one trial."""
    return np.random.SeedSequence(entropy=(int(master_seed), int(index)))


def run_ensemble(config: EnsembleConfig) -> EnsembleResult:
    """Sample-and-fit ensemble; covariance of the estimates vs the
    Cramer-Rao floor of the closed-form readout information.

    Trials whose fit raises are dropped, but more than max_failure_rate of
    them aborts the run.  A single trial cannot define a sample covariance
    and is rejected.
    """
    if config.trials < 2:
        raise PhysicsError("need at least 2 trials for a sample covariance")
    g_true = as_params(config.g_true)
    estimates = []
    n_failed = 0
    n_pinned = 0
    for i in range(config.trials):
        batch = sample_positions(
            config.n,
            config.sigma,
            config.a_w,
            g_true,
            config.n_samples,
            trial_seed(config.seed, i),
        )
        try:
            fit = mle_fit(batch)
        except NumericalError:
            n_failed += 1
            continue
        if fit.boundary_pinned:
            n_pinned += 1
        estimates.append((fit.d, fit.k))
    if n_failed > config.max_failure_rate * config.trials:
        raise NumericalError(
            f"{n_failed}/{config.trials} trials failed to converge "
            f"(budget {config.max_failure_rate:.1%})"
        )
    est = np.asarray(estimates)
    errors = est - [g_true.d, g_true.k]
    sample_cov = np.cov(errors.T, ddof=1)

    info = cfim_mle_analytic(
        config.n, config.sigma, config.a_w, p_success=1.0, n_trials=config.n_samples
    )
    bound = qcrb(info)
    if bound.unbounded:
        return EnsembleResult(
            estimates=est,
            sample_cov=sample_cov,
            theory_cov=None,
            ellipse=None,
            theory_singular=True,
            null_direction=bound.null_direction,
            n_failed=n_failed,
            n_pinned=n_pinned,
        )
    return EnsembleResult(
        estimates=est,
        sample_cov=sample_cov,
        theory_cov=bound.matrix,
        ellipse=covariance_ellipse(bound.matrix, config.confidence),
        theory_singular=False,
        null_direction=None,
        n_failed=n_failed,
        n_pinned=n_pinned,
    )
