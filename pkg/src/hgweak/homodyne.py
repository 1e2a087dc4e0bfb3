"""Dual balanced homodyne readout of the post-selected pointer.

The post-selected signal beam is split 50:50; each half interferes with a
shaped local oscillator occupying the two neighbour orders of the pointer
mode, and the four detected intensities carry (d, k) in their first-order
port imbalances.  This module builds the LO states, evaluates port
intensities exactly or to first order, inverts the linearized difference
signals for (d, k), and runs the shot-noise Monte Carlo that sets the
minimal detectable mirror displacement and tilt.

Photon bookkeeping: A_f = sqrt(N') and A_LO = sqrt(N_LO) are the total
signal / LO amplitudes; each detector sees A_f / sqrt(2) and
A_LO / sqrt(2).  Intensities are mean photon counts, so shot noise has
variance equal to the mean.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np

from .errors import NumericalError, PhysicsError
from .modes import Grid, HGState, coeff_inner, hg_wavefunction, inner_product
from .weak import (
    ParamLike,
    as_params,
    check_first_order_params,
    final_state_exact,
    first_order_coeffs,
    nearly_orthogonal_selection,
    weak_value,
)

# Largest tolerated relative distance between the selection's weak value
# and the idealized -1/eps + i/eps before the linearized signal formulas
# are refused.
IDEAL_WEAK_VALUE_TOL = 0.05
MIN_LO_RATIO = 100.0


@dataclass(frozen=True)
class LocalOscillator:
    """Reference beam on the two neighbour orders of pointer mode n_ref.

    alpha rides on phi_{n_ref - 1}, beta on phi_{n_ref + 1}; the pair is
    unit-norm.  n_ref = 0 admits no alpha component (there is no order -1).
    """

    alpha: complex
    beta: complex
    n_ref: int

    def __post_init__(self):
        if self.n_ref < 0:
            raise PhysicsError("n_ref must be >= 0")
        norm = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if abs(norm - 1.0) > 1e-12:
            raise PhysicsError(f"LO coefficients must be unit norm, got |.|^2 = {norm!r}")
        if self.n_ref == 0 and abs(self.alpha) != 0.0:
            raise PhysicsError("n_ref = 0 leaves no order below the pointer; alpha must be 0")


def lo_state(lo: LocalOscillator, sigma: float = 1.0) -> HGState:
    """The LO as a mode-coefficient state alpha phi_{n-1} + beta phi_{n+1}."""
    coeffs = np.zeros(lo.n_ref + 2, dtype=complex)
    if lo.n_ref >= 1:
        coeffs[lo.n_ref - 1] = lo.alpha
    coeffs[lo.n_ref + 1] = lo.beta
    return HGState(coeffs=coeffs, sigma=sigma)


def beam_splitter_lo_pair(n: int) -> Tuple[LocalOscillator, LocalOscillator]:
    """The quadrature-shifted pair realized with a 50:50 beam splitter.

    LO1 = (phi_{n-1} + i phi_{n+1}) / sqrt(2) and LO2 with the phase on the
    lower order instead.  Undefined at n = 0.
    """
    if n < 1:
        raise PhysicsError("beam-splitter LO pair needs n >= 1 (no order below n = 0)")
    r = 1.0 / np.sqrt(2.0)
    return (
        LocalOscillator(alpha=r, beta=1j * r, n_ref=n),
        LocalOscillator(alpha=1j * r, beta=r, n_ref=n),
    )


def optimal_lo_pair(a_w: complex, n: int) -> Tuple[LocalOscillator, LocalOscillator]:
    """An LO pair saturating the homodyne information tradeoff.

    Weights sqrt(n) : sqrt(n+1) with the relative phase set so that
    Re(A_w^2 conj(alpha) conj(beta)) sits at its most negative value; the
    two members differ by which coefficient carries the phase, which
    cancels the off-diagonal information between the detectors.
    """
    if n < 0:
        raise PhysicsError("mode order must be >= 0")
    if a_w == 0:
        raise PhysicsError("vanishing weak value leaves the LO phase undefined")
    root = np.sqrt(2.0 * n + 1.0)
    a, b = np.sqrt(n) / root, np.sqrt(n + 1.0) / root
    phase = np.exp(1j * (np.angle(a_w**2) - np.pi))
    return (
        LocalOscillator(alpha=a, beta=b * phase, n_ref=n),
        LocalOscillator(alpha=a * phase, beta=b, n_ref=n),
    )


@dataclass(frozen=True)
class HomodyneConfig:
    """Readout geometry and photon budget for the dual homodyne scheme.

    a_f, a_lo: total signal / LO amplitudes in sqrt(photons); epsilon the
    post-selection angle feeding the linearized formulas; lambda0 the
    source wavelength converting a momentum kick to a mirror tilt.
    """

    a_f: float
    a_lo: float
    epsilon: float
    lambda0: float
    sigma: float
    n: int

    def __post_init__(self):
        if not (self.a_f > 0.0 and self.a_lo > 0.0):
            raise PhysicsError("signal and LO amplitudes must be positive")
        if not (0.0 < self.epsilon <= 0.2):
            raise PhysicsError("epsilon must lie in (0, 0.2]")
        if self.lambda0 <= 0.0 or self.sigma <= 0.0:
            raise PhysicsError("lambda0 and sigma must be positive")
        if self.n < 0:
            raise PhysicsError("mode order must be >= 0")
        if self.n_lo < MIN_LO_RATIO * self.n_signal:
            raise PhysicsError(
                f"LO budget N_LO = {self.n_lo:.4g} below {MIN_LO_RATIO:.0f} x N' = "
                f"{self.n_signal:.4g}; the linearized shot-noise formulas assume a "
                "dominant LO"
            )

    @property
    def n_signal(self) -> float:
        return self.a_f**2

    @property
    def n_lo(self) -> float:
        return self.a_lo**2

    @property
    def order_weight(self) -> float:
        """sqrt(n) + sqrt(n+1), the mode-order gain of the scheme."""
        return float(np.sqrt(self.n) + np.sqrt(self.n + 1.0))


FinalLike = Union[HGState, np.ndarray]


def _signal_lo_overlap(
    final: FinalLike, lo: LocalOscillator, sigma: float, grid: Optional[Grid]
) -> Tuple[complex, float]:
    """<phi_f | phi_LO> and ||phi_LO||^2 for coefficient or grid signals."""
    if isinstance(final, HGState):
        return complex(coeff_inner(final, lo_state(lo, final.sigma))), 1.0
    if grid is None:
        raise PhysicsError("grid amplitudes need the grid they live on")
    field = np.asarray(final, dtype=complex)
    lo_field = lo_state(lo, sigma).to_grid(grid)
    return complex(inner_product(field, lo_field, grid)), float(
        np.real(inner_product(lo_field, lo_field, grid))
    )


def port_intensities(
    final: FinalLike,
    lo: LocalOscillator,
    cfg: HomodyneConfig,
    detector: int,
    grid: Optional[Grid] = None,
) -> Tuple[float, float]:
    """Mean photon counts (I+, I-) at the two ports of one detector.

    The detector mixes A_f/sqrt(2) of signal with A_LO/sqrt(2) of LO on a
    balanced splitter: I_pm = ||a phi_f pm l phi_LO||^2 / 2.  `final` is
    either a mode-coefficient state or grid amplitudes (pass the grid),
    the latter exercising no first-order approximation at all.
    """
    if detector not in (1, 2):
        raise PhysicsError("detector must be 1 or 2")
    cross, lo_norm_sq = _signal_lo_overlap(final, lo, cfg.sigma, grid)
    a_det = cfg.a_f / np.sqrt(2.0)
    l_det = cfg.a_lo / np.sqrt(2.0)
    base = 0.5 * (a_det**2 + l_det**2 * lo_norm_sq)
    beat = a_det * l_det * np.real(cross)
    return (float(base + beat), float(base - beat))


def difference_signals(g: ParamLike, cfg: HomodyneConfig) -> Tuple[float, float]:
    """Linearized difference intensities of the two detectors.

    dI_1 = A_f A_LO (sqrt(n) + sqrt(n+1)) (d/2sigma + sigma k) / (sqrt(2) eps)
    and dI_2 the same with the sign of d flipped; the constants assume the
    nearly-orthogonal selection's weak value.
    """
    g = as_params(g)
    u = g.d / (2.0 * cfg.sigma)
    v = cfg.sigma * g.k
    scale = cfg.a_f * cfg.a_lo * cfg.order_weight / (np.sqrt(2.0) * cfg.epsilon)
    return (float(scale * (u + v)), float(scale * (v - u)))


def estimate_dk(
    di_1: float, di_2: float, cfg: HomodyneConfig
) -> Tuple[float, float, float, float]:
    """Invert the linearized difference signals.

    Returns (d_hat, k_hat, delta_hat, theta_hat) where delta = d/2 is the
    mirror displacement and theta = lambda0 k / 8 pi the mirror tilt.
    """
    denom = cfg.a_f * cfg.a_lo * cfg.order_weight
    d_hat = np.sqrt(2.0) * cfg.epsilon * cfg.sigma * (di_1 - di_2) / denom
    k_hat = cfg.epsilon * (di_1 + di_2) / (np.sqrt(2.0) * cfg.sigma * denom)
    return (
        float(d_hat),
        float(k_hat),
        float(0.5 * d_hat),
        float(cfg.lambda0 * k_hat / (8.0 * np.pi)),
    )


def checked_weak_value(cfg: HomodyneConfig) -> complex:
    """Weak value of the sigma_z + 1 selection at cfg.epsilon.

    The linearized signal formulas hard-code the phase of the idealized
    -1/eps + i/eps; refuse configurations drifting more than 5% from it.
    """
    sel = nearly_orthogonal_selection(cfg.epsilon, include_identity=True)
    a_w = weak_value(sel)
    ideal = -1.0 / cfg.epsilon + 1j / cfg.epsilon
    if abs(a_w - ideal) / abs(a_w) > IDEAL_WEAK_VALUE_TOL:
        raise PhysicsError(
            f"weak value {a_w:.6g} departs from the idealized {ideal:.6g} by more "
            "than 5%; linearized formulas do not apply"
        )
    return a_w


def exact_difference_signals(
    g: ParamLike, cfg: HomodyneConfig, grid: Grid
) -> Tuple[float, float]:
    """Difference intensities through the all-orders pointer evolution.

    Signal path with no linearization: eigenbranch evolution, post-selection,
    normalization, then grid inner products against the beam-splitter LO
    pair.  Agrees with difference_signals to first order in (d, k).

    The post-selected state carries the global phase of <f|i>, which a
    phase-locked interferometer never sees: the LO is referenced to the
    carrier mode.  We rotate the amplitudes so the overlap with phi_n is
    real positive, the same gauge the first-order coefficients use (c_n
    = 1), before forming the beats.
    """
    sel = nearly_orthogonal_selection(cfg.epsilon, include_identity=True)
    final = final_state_exact(sel, cfg.n, cfg.sigma, g, grid)
    carrier = hg_wavefunction(cfg.n, cfg.sigma, grid.points)
    ref = inner_product(carrier.astype(complex), final.amplitudes, grid)
    if abs(ref) < 1e-12:
        raise NumericalError(
            "exact final state has no overlap with the carrier mode; the "
            "phase-locked readout model does not apply"
        )
    locked = final.amplitudes * np.exp(-1j * np.angle(ref))
    lo1, lo2 = beam_splitter_lo_pair(cfg.n)
    out = []
    for det, lo in ((1, lo1), (2, lo2)):
        ip, im = port_intensities(locked, lo, cfg, det, grid=grid)
        out.append(ip - im)
    return (float(out[0]), float(out[1]))


# The Monte Carlo keeps the two interfering LO components of each arm in
# slots (alpha, beta) while charging shot noise for the full LO power; at
# n = 0 the alpha slot couples to nothing (order -1 is absent) and the
# detector still pays for all of A_LO, which is what makes the closed-form
# minima with sqrt(0) + sqrt(1) = 1 exact there.
def _bs_pair_components(n: int) -> Tuple[Tuple[complex, complex], Tuple[complex, complex]]:
    r = 1.0 / np.sqrt(2.0)
    if n == 0:
        return ((0.0, 1j * r), (0.0, r))
    return ((r, 1j * r), (1j * r, r))


@dataclass(frozen=True)
class ShotNoiseResult:
    """Per-trial estimates and their spread under shot noise."""

    d_hat: np.ndarray
    k_hat: np.ndarray
    delta_hat: np.ndarray
    theta_hat: np.ndarray
    mean: Tuple[float, float, float, float]
    std: Tuple[float, float, float, float]
    floor_delta: float
    floor_theta: float
    a_w: complex
    noiseless: bool

    def __post_init__(self):
        for name in ("d_hat", "k_hat", "delta_hat", "theta_hat"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


def shot_noise_floor(cfg: HomodyneConfig) -> Tuple[float, float]:
    """Closed-form (delta, theta) precision floors at cfg's photon budget."""
    inv = 1.0 / cfg.n_lo + 1.0 / cfg.n_signal
    delta = cfg.epsilon * cfg.sigma * np.sqrt(inv) / (np.sqrt(2.0) * cfg.order_weight)
    k_floor = cfg.epsilon * np.sqrt(inv) / (np.sqrt(2.0) * cfg.sigma * cfg.order_weight)
    return (float(delta), float(cfg.lambda0 * k_floor / (8.0 * np.pi)))


def shot_noise_mc(
    g_true: ParamLike,
    cfg: HomodyneConfig,
    trials: int,
    seed: Optional[int],
    noiseless: bool = False,
    noise_model: str = "gaussian",
) -> ShotNoiseResult:
    """Monte Carlo of the dual homodyne readout under photon shot noise.

    Each trial perturbs the four port intensities independently (Gaussian
    with variance = mean, or Poisson) and inverts the difference signals.
    Per-trial RNG streams come from (seed, trial index).  `noiseless`
    short-circuits the noise and exposes the pure model bias.
    """
    if trials < 100:
        raise PhysicsError("need at least 100 trials for stable spread estimates")
    if noise_model not in ("gaussian", "poisson"):
        raise PhysicsError(f"unknown noise model {noise_model!r}")
    if seed is None and not noiseless:
        raise PhysicsError("stochastic run needs a seed")
    g = check_first_order_params(g_true, cfg.sigma)
    a_w = checked_weak_value(cfg)

    c = first_order_coeffs(cfg.n, cfg.sigma, a_w, g.d, g.k)
    c /= np.linalg.norm(c)
    low = c[cfg.n - 1] if cfg.n >= 1 else 0.0
    high = c[cfg.n + 1]
    a_det = cfg.a_f / np.sqrt(2.0)
    l_det = cfg.a_lo / np.sqrt(2.0)
    base = 0.5 * (a_det**2 + l_det**2)
    means = []
    for alpha, beta in _bs_pair_components(cfg.n):
        beat = a_det * l_det * np.real(np.conj(alpha) * low + np.conj(beta) * high)
        means.extend([base + beat, base - beat])
    means = np.asarray(means)

    est = np.empty((trials, 4))
    for i in range(trials):
        if noiseless:
            ports = means
        else:
            rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), i)))
            if noise_model == "gaussian":
                ports = means + rng.normal(size=4) * np.sqrt(means)
            else:
                ports = rng.poisson(means).astype(float)
        est[i] = estimate_dk(ports[0] - ports[1], ports[2] - ports[3], cfg)

    floor_delta, floor_theta = shot_noise_floor(cfg)
    return ShotNoiseResult(
        d_hat=est[:, 0],
        k_hat=est[:, 1],
        delta_hat=est[:, 2],
        theta_hat=est[:, 3],
        mean=tuple(float(v) for v in est.mean(axis=0)),
        std=tuple(float(v) for v in est.std(axis=0, ddof=1)),
        floor_delta=floor_delta,
        floor_theta=floor_theta,
        a_w=a_w,
        noiseless=noiseless,
    )


@dataclass(frozen=True)
class MinDetectable:
    """Smallest resolvable mirror displacement / tilt for a photon budget."""

    delta: float
    theta: float
    delta_asymptotic: float
    theta_asymptotic: float


def min_detectable(cfg: HomodyneConfig, n_input: float) -> MinDetectable:
    """Precision floors for N input photons (before post-selection).

    The post-selected count is N' = eps^2 N / 2, giving

        delta_min = (sqrt(2) eps sigma / 2 w) sqrt(1/N_LO + 2/(eps^2 N)),
        theta_min = (lambda0 eps / 8 sqrt(2) pi sigma w) sqrt(same),

    with w = sqrt(n) + sqrt(n+1); the asymptotic forms drop the 1/N_LO term
    and collapse to sigma / (w sqrt(N)) and lambda0 / (8 pi sigma w sqrt(N)).
    """
    if n_input <= 0:
        raise PhysicsError("input photon count must be positive")
    w = cfg.order_weight
    inv = 1.0 / cfg.n_lo + 2.0 / (cfg.epsilon**2 * n_input)
    delta = np.sqrt(2.0) * cfg.epsilon * cfg.sigma * np.sqrt(inv) / (2.0 * w)
    theta = cfg.lambda0 * cfg.epsilon * np.sqrt(inv) / (8.0 * np.sqrt(2.0) * np.pi * cfg.sigma * w)
    return MinDetectable(
        delta=float(delta),
        theta=float(theta),
        delta_asymptotic=float(cfg.sigma / (w * np.sqrt(n_input))),
        theta_asymptotic=float(cfg.lambda0 / (8.0 * np.pi * cfg.sigma * w * np.sqrt(n_input))),
    )
