"""Quantum and classical Fisher information for the (d, k) pair.

Conventions: a FisherMatrix stores the per-trial 2x2 matrix together with
the effective number of post-selected trials; the total information is
trials * m.  For the pure final pointer the quantum Fisher information
matrix is the Fubini-Study form

    Q_ij = 4 Re <d_i phi | d_j phi> - 4 Re( <d_i phi|phi> <phi|d_j phi> ),

which for the first-order pointer of order n closes to

    Q = (2n+1) |A_w|^2 diag(1 / sigma^2, 4 sigma^2).

Position-readout (maximum-likelihood) and dual-homodyne classical matrices
are provided in closed form and as numerical pipelines so each route can
check the other.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple, Union

import numpy as np

from .errors import NumericalAccuracyWarning, PhysicsError
from .modes import Grid, HGState, coeff_inner, hg_derivatives, hg_wavefunctions, inner_product
from .weak import ParamLike, as_params, first_order_coeffs

FISHER_KINDS = ("quantum", "classical-mle", "classical-homodyne")

DEFAULT_FD_STEP = 1e-5
# Relative disagreement between the default step and a 10x coarser one that
# triggers an accuracy warning.
FD_CHECK_TOL = 1e-2

State = Union[HGState, np.ndarray]
StateMap = Callable[[Tuple[float, float]], State]


@dataclass(frozen=True)
class FisherMatrix:
    """Per-trial 2x2 information matrix with its trial weighting.

    m        symmetric positive-semidefinite matrix, (d, k) ordering
    trials   effective sample count (post-selection already folded in)
    kind     one of 'quantum', 'classical-mle', 'classical-homodyne'
    """

    m: np.ndarray
    trials: float
    kind: str

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float).reshape(2, 2)
        if np.max(np.abs(m - m.T)) > 1e-12 * max(1.0, np.max(np.abs(m))):
            raise PhysicsError("information matrix must be symmetric")
        m = 0.5 * (m + m.T)
        eigs = np.linalg.eigvalsh(m)
        if eigs[0] < -1e-9 * max(np.trace(m), 1e-300):
            raise PhysicsError(f"information matrix has negative eigenvalue {eigs[0]:.3e}")
        if self.kind not in FISHER_KINDS:
            raise PhysicsError(f"kind must be one of {FISHER_KINDS}, got {self.kind!r}")
        if not np.isfinite(self.trials) or self.trials <= 0.0:
            raise PhysicsError("trials must be positive")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "trials", float(self.trials))

    @property
    def total(self) -> np.ndarray:
        """Information accumulated over all trials."""
        return self.trials * self.m


@dataclass(frozen=True)
class CovarianceBound:
    """Cramer-Rao covariance floor.

    When the information matrix is singular the bound is unbounded along
    null_direction and matrix is None.
    """

    matrix: Optional[np.ndarray]
    unbounded: bool = False
    null_direction: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.matrix is not None:
            m = np.asarray(self.matrix, dtype=float).reshape(2, 2)
            if np.linalg.eigvalsh(m)[0] < -1e-12 * max(1.0, np.trace(m)):
                raise PhysicsError("covariance bound must be positive semidefinite")
            m.setflags(write=False)
            object.__setattr__(self, "matrix", m)
        elif not self.unbounded:
            raise PhysicsError("finite bound requires a matrix")


def qfim_analytic(
    n: int, sigma: float, a_w: complex, p_success: float = 1.0, n_trials: float = 1.0
) -> FisherMatrix:
    """Closed-form quantum Fisher information of the first-order pointer.

    Per trial: diag((2n+1)|A_w|^2 / sigma^2, 4 (2n+1)|A_w|^2 sigma^2);
    trials = p_success * n_trials.
    """
    if n < 0:
        raise PhysicsError("mode order must be >= 0")
    sigma = float(sigma)
    scale = (2.0 * n + 1.0) * abs(complex(a_w)) ** 2
    m = np.diag([scale / sigma**2, 4.0 * scale * sigma**2])
    return FisherMatrix(m=m, trials=float(p_success) * float(n_trials), kind="quantum")


def _state_dot(a: State, b: State, grid: Optional[Grid]) -> complex:
    if isinstance(a, HGState) and isinstance(b, HGState):
        return coeff_inner(a, b)
    if isinstance(a, HGState) or isinstance(b, HGState):
        raise PhysicsError("state_map must return a consistent representation")
    if grid is None:
        raise PhysicsError("grid is required when state_map returns amplitude arrays")
    return inner_product(np.asarray(a), np.asarray(b), grid)


def _state_sub(a: State, b: State, scale: float) -> State:
    if isinstance(a, HGState):
        n = max(a.coeffs.size, b.coeffs.size)
        ca = np.zeros(n, dtype=complex)
        cb = np.zeros(n, dtype=complex)
        ca[: a.coeffs.size] = a.coeffs
        cb[: b.coeffs.size] = b.coeffs
        return HGState((ca - cb) * scale, a.sigma)
    return (np.asarray(a) - np.asarray(b)) * scale


def _derivative_states(
    state_map: StateMap, g0: ParamLike, step: float, grid: Optional[Grid]
) -> Tuple[State, State, State]:
    """Central-difference derivative states (d phi/dd, d phi/dk) at g0."""
    g0 = as_params(g0)
    center = state_map((g0.d, g0.k))
    if abs(abs(_state_dot(center, center, grid)) - 1.0) > 1e-6:
        raise PhysicsError("state_map must return normalized states")
    shifts = [(step, 0.0), (0.0, step)]
    derivs = []
    for dd, dk in shifts:
        plus = state_map((g0.d + dd, g0.k + dk))
        minus = state_map((g0.d - dd, g0.k - dk))
        for s in (plus, minus):
            if abs(abs(_state_dot(s, s, grid)) - 1.0) > 1e-6:
                raise PhysicsError("state_map must return normalized states")
        derivs.append(_state_sub(plus, minus, 0.5 / step))
    return center, derivs[0], derivs[1]


def _qfim_from_map(
    state_map: StateMap, g0: ParamLike, step: float, grid: Optional[Grid]
) -> np.ndarray:
    center, dphi_d, dphi_k = _derivative_states(state_map, g0, step, grid)
    derivs = (dphi_d, dphi_k)
    a = [_state_dot(center, dv, grid) for dv in derivs]  # <phi|d_i phi>
    m = np.zeros((2, 2))
    for i in range(2):
        for j in range(2):
            gij = _state_dot(derivs[i], derivs[j], grid)
            m[i, j] = 4.0 * np.real(gij) - 4.0 * np.real(np.conj(a[i]) * a[j])
    return 0.5 * (m + m.T)


def qfim_numeric(
    state_map: StateMap,
    g0: ParamLike,
    step: float = DEFAULT_FD_STEP,
    grid: Optional[Grid] = None,
    check: bool = True,
) -> FisherMatrix:
    """Per-trial quantum Fisher information by central differences.

    state_map takes (d, k) and returns a normalized HGState or a normalized
    complex amplitude array on `grid`.  A 10x coarser step is evaluated as a
    cross-check; disagreement beyond 1% raises NumericalAccuracyWarning.
    """
    m = _qfim_from_map(state_map, g0, step, grid)
    if check:
        coarse = _qfim_from_map(state_map, g0, 10.0 * step, grid)
        scale = max(float(np.max(np.abs(m))), 1e-300)
        if np.max(np.abs(m - coarse)) > FD_CHECK_TOL * scale:
            warnings.warn(
                "finite-difference information matrix differs by more than "
                f"{FD_CHECK_TOL:.0%} between steps {step:g} and {10 * step:g}",
                NumericalAccuracyWarning,
                stacklevel=2,
            )
    return FisherMatrix(m=m, trials=1.0, kind="quantum")


def qcrb(f: FisherMatrix) -> CovarianceBound:
    """Cramer-Rao covariance bound: inverse of the total information.

    A singular matrix yields an unbounded result carrying the null
    direction instead of raising.
    """
    total = f.total
    det = total[0, 0] * total[1, 1] - total[0, 1] * total[1, 0]
    scale = float(np.linalg.norm(total))
    if det <= 1e-12 * scale**2:
        w, v = np.linalg.eigh(total)
        return CovarianceBound(matrix=None, unbounded=True, null_direction=v[:, 0])
    inv = np.array([[total[1, 1], -total[0, 1]], [-total[1, 0], total[0, 0]]]) / det
    return CovarianceBound(matrix=inv)


def cfim_mle_analytic(
    n: int, sigma: float, a_w: complex, p_success: float = 1.0, n_trials: float = 1.0
) -> FisherMatrix:
    """Closed-form classical Fisher information of the position readout.

    Per trial:
        [ (2n+1) Re(A_w)^2 / sigma^2      2 Re(A_w) Im(A_w)            ]
        [ 2 Re(A_w) Im(A_w)               4 (2n+1) Im(A_w)^2 sigma^2   ]
    Singular at n = 0 (the two parameters steer the density along a single
    direction there).
    """
    if n < 0:
        raise PhysicsError("mode order must be >= 0")
    sigma = float(sigma)
    a_w = complex(a_w)
    re, im = a_w.real, a_w.imag
    tn = 2.0 * n + 1.0
    m = np.array(
        [
            [tn * re**2 / sigma**2, 2.0 * re * im],
            [2.0 * re * im, 4.0 * tn * im**2 * sigma**2],
        ]
    )
    return FisherMatrix(m=m, trials=float(p_success) * float(n_trials), kind="classical-mle")


def first_order_density_terms(
    n: int, sigma: float, a_w: complex, grid: Grid
) -> Dict[str, np.ndarray]:
    """Pointwise pieces of the linearized position density.

    Returns base phi_n^2, and the g-independent partial derivatives
    dP/dd = -2 Re(A_w) phi_n' phi_n and dP/dk = 2 Im(A_w) x phi_n^2.
    """
    modes = hg_wavefunctions(n, sigma, grid.points)
    dmodes = hg_derivatives(n, sigma, grid.points)
    phi = modes[n]
    dphi = dmodes[n]
    return {
        "base": phi**2,
        "dP_dd": -2.0 * a_w.real * dphi * phi,
        "dP_dk": 2.0 * a_w.imag * grid.points * phi**2,
    }


def cfim_mle_numeric(
    n: int, sigma: float, a_w: complex, g0: ParamLike, grid: Grid
) -> FisherMatrix:
    """Per-trial position-readout information by quadrature of (dP)^2 / P.

    The density is the linearized one, P = phi_n^2 + dP/dd * d + dP/dk * k;
    it must be non-negative on the grid (points with P < 1e-300 are excluded,
    the integrand limit is finite there because dP shares the phi_n factor).
    """
    g0 = as_params(g0)
    a_w = complex(a_w)
    terms = first_order_density_terms(int(n), float(sigma), a_w, grid)
    p = terms["base"] + terms["dP_dd"] * g0.d + terms["dP_dk"] * g0.k
    if np.any(p < 0.0):
        bad = grid.points[p < 0.0]
        raise PhysicsError(
            f"linearized density is negative on [{bad.min():.4g}, {bad.max():.4g}]; "
            "parameters are outside the first-order validity range"
        )
    mask = p > 1e-300
    grads = (terms["dP_dd"][mask], terms["dP_dk"][mask])
    w = grid.weights[mask]
    pm = p[mask]
    m = np.empty((2, 2))
    for i in range(2):
        for j in range(i, 2):
            m[i, j] = m[j, i] = float(np.sum(w * grads[i] * grads[j] / pm))
    return FisherMatrix(m=m, trials=1.0, kind="classical-mle")


LOPair = Tuple[complex, complex]


def _homodyne_port_intensities(
    n: int,
    sigma: float,
    a_w: complex,
    los: Tuple[LOPair, LOPair],
    a_f_det: float,
    a_lo_det: float,
    g: Tuple[float, float],
) -> np.ndarray:
    """Intensities of the four mixing ports for the normalized first-order
    pointer, in photon-count units.  LO order-(n-1) components must vanish
    at n = 0."""
    d, k = g
    c = first_order_coeffs(n, sigma, a_w, d, k)
    c = c / np.linalg.norm(c)
    c_lower = c[n - 1] if n >= 1 else 0.0
    c_upper = c[n + 1]
    out = np.empty(4)
    for det, (alpha, beta) in enumerate(los):
        if n == 0 and alpha != 0.0:
            raise PhysicsError("order n-1 local-oscillator component undefined at n = 0")
        lo_norm2 = abs(alpha) ** 2 + abs(beta) ** 2
        cross = np.conj(alpha) * c_lower + np.conj(beta) * c_upper
        base = 0.5 * (a_f_det**2 + a_lo_det**2 * lo_norm2)
        signal = a_f_det * a_lo_det * np.real(cross)
        out[2 * det] = base + signal
        out[2 * det + 1] = base - signal
    return out


def cfim_homodyne(
    n: int,
    sigma: float,
    a_w: complex,
    lo1: LOPair,
    lo2: LOPair,
    n_trials: float,
    n_lo: float,
    p_success: float,
    g0: ParamLike = (0.0, 0.0),
    step: float = DEFAULT_FD_STEP,
) -> FisherMatrix:
    """Classical information of dual homodyne detection on the final pointer.

    lo1 and lo2 are the (alpha, beta) mode weights of the two local
    oscillators (unit norm, components on orders n-1 and n+1).  Each
    detector receives the post-selected pointer with amplitude
    sqrt(p_success * n_trials / 2) and its LO with sqrt(n_lo / 2); photons
    land on the four mixing ports with multinomial statistics, so the total
    information is sum over ports of (d_i I)(d_j I) / I with I the port
    intensity in photon counts.  Stored per trial (divided by the
    post-selected count).
    """
    for alpha, beta in (lo1, lo2):
        if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-12:
            raise PhysicsError("local oscillator weights must have unit norm")
    n_prime = float(p_success) * float(n_trials)
    if n_prime <= 0.0:
        raise PhysicsError("post-selected photon number must be positive")
    if n_lo < 100.0 * n_prime:
        raise PhysicsError(
            "local oscillator must dominate: n_lo >= 100 * p_success * n_trials"
        )
    g0 = as_params(g0)
    a_f_det = np.sqrt(n_prime / 2.0)
    a_lo_det = np.sqrt(float(n_lo) / 2.0)
    los = (
        (complex(lo1[0]), complex(lo1[1])),
        (complex(lo2[0]), complex(lo2[1])),
    )

    def intensities(g):
        return _homodyne_port_intensities(
            int(n), float(sigma), complex(a_w), los, a_f_det, a_lo_det, g
        )

    center = intensities((g0.d, g0.k))
    if np.any(center <= 0.0):
        raise PhysicsError("port intensities must be positive")
    grads = []
    for dd, dk in ((step, 0.0), (0.0, step)):
        plus = intensities((g0.d + dd, g0.k + dk))
        minus = intensities((g0.d - dd, g0.k - dk))
        grads.append((plus - minus) / (2.0 * step))
    m = np.empty((2, 2))
    for i in range(2):
        for j in range(i, 2):
            m[i, j] = m[j, i] = float(np.sum(grads[i] * grads[j] / center))
    return FisherMatrix(m=m / n_prime, trials=n_prime, kind="classical-homodyne")


def tradeoff_trace(f: FisherMatrix, q: FisherMatrix) -> float:
    """Tr(F Q^{-1}) comparing a classical matrix against the quantum one.

    Both matrices must carry the same trial normalization; the trace is
    computed from the per-trial matrices.
    """
    if abs(f.trials - q.trials) > 1e-9 * max(f.trials, q.trials):
        raise PhysicsError(
            f"trial normalizations differ ({f.trials} vs {q.trials}); "
            "rebuild the matrices with matching counts"
        )
    det = q.m[0, 0] * q.m[1, 1] - q.m[0, 1] * q.m[1, 0]
    if det <= 1e-12 * float(np.linalg.norm(q.m)) ** 2:
        raise PhysicsError("quantum information matrix is singular")
    q_inv = np.array([[q.m[1, 1], -q.m[0, 1]], [-q.m[1, 0], q.m[0, 0]]]) / det
    return float(np.trace(f.m @ q_inv))


def optimal_lo_check(
    lo: LOPair, a_w: complex, n: int, tol: float = 1e-9
) -> Tuple[bool, Dict[str, object]]:
    """Test whether an LO saturates the homodyne information tradeoff.

    The two conditions are a phase alignment,
        Re(A_w^2 conj(alpha) conj(beta)) = -|A_w alpha| |A_w beta|,
    and the weight ratio |alpha| / |beta| = sqrt(n) / sqrt(n+1).
    Returns (ok, residuals); the phase residual is relative to the
    |A_w|^2 |alpha beta| scale, the ratio residual to the unit weight
    scale.  At n = 0 an LO with beta = 0 is degenerate (it would live
    entirely in the undefined order -1), reported as not optimal.
    """
    alpha, beta = complex(lo[0]), complex(lo[1])
    a_w = complex(a_w)
    if abs(a_w) <= 0.0:
        raise PhysicsError("weak value must be nonzero")
    weight = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(weight - 1.0) > 1e-12:
        raise PhysicsError("local oscillator weights must have unit norm")
    if n == 0 and abs(beta) == 0.0:
        return False, {
            "phase_residual": float("nan"),
            "ratio_residual": float("nan"),
            "explanation": "degenerate at n = 0: all weight sits in the undefined order -1",
        }
    scale = abs(a_w) ** 2 * max(abs(alpha) * abs(beta), 1e-30)
    phase_res = (
        abs(
            np.real(a_w**2 * np.conj(alpha) * np.conj(beta))
            + abs(a_w * alpha) * abs(a_w * beta)
        )
        / scale
    )
    ratio_res = abs(abs(alpha) * np.sqrt(n + 1.0) - abs(beta) * np.sqrt(float(n)))
    ok = bool(phase_res <= tol and ratio_res <= tol)
    return ok, {"phase_residual": float(phase_res), "ratio_residual": float(ratio_res)}


def sld_commutator_expectation(
    state_map: StateMap,
    g0: ParamLike,
    step: float = DEFAULT_FD_STEP,
    grid: Optional[Grid] = None,
) -> complex:
    """<phi|[L_d, L_k]|phi> with pure-state logarithmic derivatives
    L_i = 2 (|d_i phi><phi| + |phi><d_i phi|), derivatives by central
    differences.

    Expanding in the overlaps a_i = <phi|d_i phi> and
    G_ij = <d_i phi|d_j phi>, the expectation reduces to

        4 (a_d conj(a_k) - a_k conj(a_d) + G_dk - G_kd),

    an anti-Hermitian (purely imaginary) number.  For families generated by
    a displacement pair it equals 8i Im G_dk, which carries the canonical
    x-p commutator and is generally nonzero.
    """
    center, dphi_d, dphi_k = _derivative_states(state_map, g0, step, grid)
    a_d = _state_dot(center, dphi_d, grid)
    a_k = _state_dot(center, dphi_k, grid)
    g_dk = _state_dot(dphi_d, dphi_k, grid)
    g_kd = _state_dot(dphi_k, dphi_d, grid)
    return 4.0 * (a_d * np.conj(a_k) - a_k * np.conj(a_d) + g_dk - g_kd)
