"""Weakly coupled two-level system with pre/post-selection.

The system couples to the pointer through exp(-i A (d p + k x)) with A a
2x2 Hermitian observable, d a transverse displacement and k a momentum
kick.  After post-selection the pointer is left (to first order in d, k) in

    |phi_f> ~ |phi_n> - (A_w d / 2 sigma + i A_w sigma k) sqrt(n)   |phi_{n-1}>
                      + (A_w d / 2 sigma - i A_w sigma k) sqrt(n+1) |phi_{n+1}>,

with A_w = <f|A|i> / <f|i> the weak value.  The exact (all-orders) final
pointer is built branch by branch over the eigenvectors of A: eigenvalue a
turns exp(-i a (d p + k x)) into the symmetric displacement-plus-phase map

    phi(x)  ->  exp(-i a k (x - a d / 2)) phi(x - a d),

evaluated with a band-limited (FFT) shift on the grid.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .errors import FirstOrderValidityWarning, PhysicsError
from .modes import Grid, HGState, coeff_inner, hg_wavefunction, inner_product, ladder_apply

# Scaled-parameter thresholds for first-order expressions: curvature becomes
# visible around 1e-2 and the expansion is not trusted past 1e-1.
FIRST_ORDER_WARN = 0.01
FIRST_ORDER_REJECT = 0.1

OVERLAP_FLOOR = 1e-12

SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
IDENTITY2 = np.eye(2)


@dataclass(frozen=True)
class ParamVector:
    """Displacement d and momentum kick k estimated jointly."""

    d: float
    k: float

    def __post_init__(self):
        object.__setattr__(self, "d", float(self.d))
        object.__setattr__(self, "k", float(self.k))
        if not (np.isfinite(self.d) and np.isfinite(self.k)):
            raise PhysicsError("parameters must be finite")

    def scaled_magnitude(self, sigma: float) -> float:
        """max(|d|/sigma, |k| sigma), the size that controls first-order validity."""
        return max(abs(self.d) / sigma, abs(self.k) * sigma)


ParamLike = Union[ParamVector, Tuple[float, float]]


def as_params(g: ParamLike) -> ParamVector:
    if isinstance(g, ParamVector):
        return g
    try:
        d, k = g
    except (TypeError, ValueError) as exc:
        raise PhysicsError(f"expected a (d, k) parameter pair, got {g!r}") from exc
    return ParamVector(float(d), float(k))


def check_first_order_params(g: ParamLike, sigma: float) -> ParamVector:
    """Enforce the smallness contract for first-order expressions."""
    g = as_params(g)
    s = g.scaled_magnitude(sigma)
    if s > FIRST_ORDER_REJECT:
        raise PhysicsError(
            f"scaled parameter magnitude {s:.3g} exceeds {FIRST_ORDER_REJECT}; "
            "first-order expressions are invalid here"
        )
    if s > FIRST_ORDER_WARN:
        warnings.warn(
            f"scaled parameter magnitude {s:.3g} above {FIRST_ORDER_WARN}; "
            "first-order results carry visible curvature",
            FirstOrderValidityWarning,
            stacklevel=3,
        )
    return g


@dataclass(frozen=True)
class Selection:
    """Pre-selected state, post-selected state and coupling observable.

    pre and post are unit spinors (C^2), observable is 2x2 Hermitian.
    """

    pre: np.ndarray
    post: np.ndarray
    observable: np.ndarray

    def __post_init__(self):
        pre = np.asarray(self.pre, dtype=complex).reshape(2)
        post = np.asarray(self.post, dtype=complex).reshape(2)
        obs = np.asarray(self.observable, dtype=complex).reshape(2, 2)
        for name, spinor in (("pre", pre), ("post", post)):
            nrm = np.linalg.norm(spinor)
            if abs(nrm - 1.0) > 1e-12:
                raise PhysicsError(f"{name}-selection spinor norm {nrm} != 1 (tol 1e-12)")
        if np.max(np.abs(obs - obs.conj().T)) > 1e-12:
            raise PhysicsError("observable must be Hermitian to 1e-12")
        pre.setflags(write=False)
        post.setflags(write=False)
        obs.setflags(write=False)
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)
        object.__setattr__(self, "observable", obs)


def nearly_orthogonal_selection(epsilon: float, include_identity: bool = False) -> Selection:
    """The standard nearly-orthogonal polarization selection.

    Pre-selects (|H> + |V>)/sqrt(2) and post-selects

        exp(i eps/2) cos(pi/4 + eps/2) |H> - exp(-i eps/2) sin(pi/4 + eps/2) |V>,

    which approaches orthogonality as eps -> 0 and amplifies the weak value
    to A_w ~ -1/eps + i/eps.  The observable is sigma_z, or sigma_z + 1 when
    include_identity is set (the split-detection interferometer couples
    through the latter).
    """
    epsilon = float(epsilon)
    if not (0.0 < epsilon <= 0.5):
        raise PhysicsError(f"epsilon must be in (0, 0.5], got {epsilon}")
    pre = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0)
    half = 0.5 * epsilon
    post = np.array(
        [
            np.exp(1j * half) * np.cos(np.pi / 4.0 + half),
            -np.exp(-1j * half) * np.sin(np.pi / 4.0 + half),
        ]
    )
    obs = SIGMA_Z + IDENTITY2 if include_identity else SIGMA_Z
    return Selection(pre=pre, post=post, observable=obs)


def _overlap(sel: Selection) -> complex:
    return complex(np.vdot(sel.post, sel.pre))


def weak_value(sel: Selection) -> complex:
    """A_w = <f|A|i> / <f|i>.  Rejects vanishing post-selection overlap."""
    ov = _overlap(sel)
    if abs(ov) <= OVERLAP_FLOOR:
        raise PhysicsError("post-selection overlap vanishes; weak value undefined")
    return complex(np.vdot(sel.post, sel.observable @ sel.pre)) / ov


def postselect_probability(sel: Selection) -> float:
    """Success probability |<f|i>|^2 of the post-selection."""
    return abs(_overlap(sel)) ** 2


def first_order_coeffs(n: int, sigma: float, a_w: complex, d: float, k: float) -> np.ndarray:
    """Unnormalized mode coefficients of the first-order final pointer.

    Length n+2 vector: 1 at order n, the ladder-weighted weak-value terms at
    n-1 and n+1.  No validity checks; callers own the smallness contract.
    """
    u = d / (2.0 * sigma)
    v = sigma * k
    c = np.zeros(n + 2, dtype=complex)
    c[n] = 1.0
    if n >= 1:
        c[n - 1] = -(a_w * u + 1j * a_w * v) * np.sqrt(n)
    c[n + 1] = (a_w * u - 1j * a_w * v) * np.sqrt(n + 1.0)
    return c


def final_state_first_order(n: int, sigma: float, a_w: complex, g: ParamLike) -> HGState:
    """Normalized first-order final pointer state for weak value a_w.

    Valid for small scaled parameters (warns above 0.01, rejects above 0.1).
    """
    if n < 0:
        raise PhysicsError("mode order must be >= 0")
    sigma = float(sigma)
    g = check_first_order_params(g, sigma)
    c = first_order_coeffs(int(n), sigma, complex(a_w), g.d, g.k)
    return HGState(c, sigma).normalized()


def _fft_shift(values: np.ndarray, spacing: float, shift: float) -> np.ndarray:
    """Band-limited translation values(x) -> values(x - shift) on a uniform grid."""
    freqs = np.fft.fftfreq(values.size, d=spacing)
    return np.fft.ifft(np.fft.fft(values) * np.exp(-2j * np.pi * freqs * shift))


@dataclass(frozen=True)
class ExactFinalState:
    """Exact post-selected pointer on a grid.

    raw_amplitudes carry the post-selection amplitude (squared norm equals
    the success probability); amplitudes are the normalized field.
    """

    amplitudes: np.ndarray
    raw_amplitudes: np.ndarray
    success_probability: float


def final_state_exact(
    sel: Selection, n: int, sigma: float, g: ParamLike, grid: Grid
) -> ExactFinalState:
    """All-orders final pointer via eigenbranch evolution of the coupling.

    For each eigenpair (a, |v_a>) of the observable the pointer picks up
    exp(-i a k (x - a d / 2)) phi_n(x - a d), weighted by <f|v_a><v_a|i>.
    Shifts use FFT interpolation, so |a d| must stay well inside the grid.
    """
    g = as_params(g)
    sigma = float(sigma)
    base = hg_wavefunction(int(n), sigma, grid.points)
    evals, evecs = np.linalg.eigh(sel.observable)
    max_shift = float(np.max(np.abs(evals)) * abs(g.d))
    if max_shift > 0.1 * grid.extent:
        raise PhysicsError(
            f"eigenbranch shift {max_shift:.3g} exceeds 10% of the grid extent "
            f"{grid.extent:.3g}; enlarge the grid"
        )
    raw = np.zeros(grid.size, dtype=complex)
    for a, vec in zip(evals, evecs.T):
        weight = np.vdot(sel.post, vec) * np.vdot(vec, sel.pre)
        if weight == 0.0:
            continue
        shifted = _fft_shift(base.astype(complex), grid.spacing, a * g.d)
        phase = np.exp(-1j * a * g.k * (grid.points - 0.5 * a * g.d))
        raw += weight * phase * shifted
    p_success = float(np.real(inner_product(raw, raw, grid)))
    if p_success <= OVERLAP_FLOOR**2:
        raise PhysicsError("post-selection probability vanishes; no final state")
    return ExactFinalState(
        amplitudes=raw / np.sqrt(p_success),
        raw_amplitudes=raw,
        success_probability=p_success,
    )


StateOrField = Union[HGState, np.ndarray]


def _moments(state: StateOrField, grid: Grid | None) -> Tuple[float, float]:
    """(mean, second moment) of position for a normalized state."""
    if isinstance(state, HGState):
        nrm = state.norm()
        if abs(nrm - 1.0) > 1e-8:
            raise PhysicsError(f"state norm {nrm} != 1; normalize first")
        xs = ladder_apply("position", state)
        mean = np.real(coeff_inner(state, xs))
        second = np.real(coeff_inner(xs, xs))
        return float(mean), float(second)
    if grid is None:
        raise PhysicsError("grid is required for amplitude-array states")
    amps = np.asarray(state)
    nrm2 = np.real(inner_product(amps, amps, grid))
    if abs(nrm2 - 1.0) > 1e-8:
        raise PhysicsError(f"field norm^2 {nrm2} != 1; normalize first")
    dens = np.real(np.conj(amps) * amps)
    mean = float(np.sum(grid.weights * grid.points * dens))
    second = float(np.sum(grid.weights * grid.points**2 * dens))
    return mean, second


def position_mean(state: StateOrField, grid: Grid | None = None) -> float:
    """<x> for an HGState (ladder algebra) or grid amplitudes (quadrature)."""
    mean, _ = _moments(state, grid)
    return mean


def position_variance(state: StateOrField, grid: Grid | None = None) -> float:
    """<x^2> - <x>^2, same input conventions as position_mean."""
    mean, second = _moments(state, grid)
    return second - mean**2
