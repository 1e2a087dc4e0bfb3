"""Hermite-Gaussian transverse modes on a 1-D position grid.

The mode of order n with beam half-width sigma is

    phi_n(x) = (2 pi sigma^2)^(-1/4) (2^n n!)^(-1/2) H_n(x / (sqrt(2) sigma))
               * exp(-x^2 / (4 sigma^2)),

with H_n the physicists' Hermite polynomial.  The modes are orthonormal,
have zero mean and position variance (2n+1) sigma^2, and obey the ladder
relations

    x phi_n      = sigma [ sqrt(n) phi_{n-1} + sqrt(n+1) phi_{n+1} ],
    d/dx phi_n   = (1 / 2 sigma) [ sqrt(n) phi_{n-1} - sqrt(n+1) phi_{n+1} ].

Mode evaluation uses the normalized three-term recurrence (the ladder
relation solved for phi_{n+1}) instead of explicit 2^n n! factors, so it
stays in range for every supported order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import NumericalError, PhysicsError

# Orders above this are outside the supported contract (recurrence accuracy
# and default grid extents are only validated up to here).
MAX_ORDER = 64

DEFAULT_GRID_SIZE = 4096
MIN_GRID_SIZE = 256

ArrayLike = Union[float, np.ndarray]


def _check_order(n: int, what: str = "mode order") -> int:
    if not isinstance(n, (int, np.integer)):
        raise PhysicsError(f"{what} must be an integer, got {n!r}")
    if n < 0:
        raise PhysicsError(f"{what} must be >= 0, got {n}")
    if n > MAX_ORDER:
        raise PhysicsError(f"{what} {n} exceeds supported maximum {MAX_ORDER}")
    return int(n)


def _check_sigma(sigma: float) -> float:
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise PhysicsError(f"beam width sigma must be positive, got {sigma}")
    return sigma


def hermite_poly(n: int, y: ArrayLike) -> ArrayLike:
    """Physicists' Hermite polynomial H_n(y) by the three-term recurrence

        H_{n+1}(y) = 2 y H_n(y) - 2 n H_{n-1}(y).

    Accepts scalars or arrays.  Supported for n <= MAX_ORDER.
    """
    n = _check_order(n, "polynomial degree")
    y = np.asarray(y, dtype=float)
    h_prev = np.ones_like(y)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * y
    for m in range(1, n):
        h, h_prev = 2.0 * y * h - 2.0 * m * h_prev, h
    return h if h.ndim else float(h)


def hg_wavefunctions(n_max: int, sigma: float, x: ArrayLike) -> np.ndarray:
    """Stack of modes phi_0 .. phi_{n_max} evaluated at x.

    Returns an array of shape (n_max + 1,) + shape(x).  Uses the normalized
    recurrence phi_{n+1} = (x/sigma phi_n - sqrt(n) phi_{n-1}) / sqrt(n+1),
    which keeps amplitudes O(1) at every order.
    """
    n_max = _check_order(n_max)
    sigma = _check_sigma(sigma)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((n_max + 1,) + x.shape, dtype=float)
    out[0] = (2.0 * np.pi * sigma**2) ** (-0.25) * np.exp(-(x**2) / (4.0 * sigma**2))
    if n_max >= 1:
        xs = x / sigma
        out[1] = xs * out[0]
        for m in range(1, n_max):
            out[m + 1] = (xs * out[m] - np.sqrt(m) * out[m - 1]) / np.sqrt(m + 1)
    return out


def hg_wavefunction(n: int, sigma: float, x: ArrayLike) -> ArrayLike:
    """Mode phi_n(x) for beam width sigma.  Scalar in, scalar out."""
    scalar = np.isscalar(x) or np.ndim(x) == 0
    vals = hg_wavefunctions(n, sigma, x)[-1]
    return float(vals[0]) if scalar else vals


def hg_derivatives(n_max: int, sigma: float, x: ArrayLike) -> np.ndarray:
    """Stack of d/dx phi_0 .. d/dx phi_{n_max} via the ladder relation."""
    n_max = _check_order(n_max)
    modes = hg_wavefunctions(n_max + 1, sigma, x)
    out = np.empty_like(modes[:-1])
    for n in range(n_max + 1):
        lower = np.sqrt(n) * modes[n - 1] if n >= 1 else 0.0
        out[n] = (lower - np.sqrt(n + 1) * modes[n + 1]) / (2.0 * sigma)
    return out


@dataclass(frozen=True)
class Grid:
    """Uniform position grid with trapezoid quadrature weights.

    points   strictly increasing abscissae
    weights  positive quadrature weights (same length)
    extent   half-width of the covered interval, in length units
    """

    points: np.ndarray
    weights: np.ndarray
    extent: float

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        wts = np.asarray(self.weights, dtype=float)
        if pts.ndim != 1 or wts.shape != pts.shape:
            raise PhysicsError("grid points and weights must be matching 1-D arrays")
        if not np.all(np.diff(pts) > 0.0):
            raise PhysicsError("grid points must be strictly increasing")
        if not np.all(wts > 0.0):
            raise PhysicsError("grid weights must be positive")
        pts.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", wts)
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def size(self) -> int:
        return self.points.size

    @property
    def spacing(self) -> float:
        return float(self.points[1] - self.points[0])


def make_grid(n_max: int, sigma: float, size: int = DEFAULT_GRID_SIZE) -> Grid:
    """Grid sized to hold modes up to order n_max at beam width sigma.

    The half-width is L * sigma with L = max(10, 5 sqrt(2 n_max + 1)), i.e.
    at least five position standard deviations of the highest mode.  The
    construction is rejected if any mode up to n_max fails the quadrature
    normalization check at 1e-10.
    """
    n_max = _check_order(n_max)
    sigma = _check_sigma(sigma)
    size = int(size)
    if size < MIN_GRID_SIZE:
        raise PhysicsError(f"grid size must be >= {MIN_GRID_SIZE}, got {size}")
    half_width = max(10.0, 5.0 * np.sqrt(2.0 * n_max + 1.0)) * sigma
    points = np.linspace(-half_width, half_width, size)
    h = points[1] - points[0]
    weights = np.full(size, h)
    weights[0] = weights[-1] = 0.5 * h
    grid = Grid(points=points, weights=weights, extent=half_width)

    modes = hg_wavefunctions(n_max, sigma, points)
    norms = modes**2 @ weights
    worst = float(np.max(np.abs(norms - 1.0)))
    if worst > 1e-10:
        raise NumericalError(
            f"grid of {size} points cannot normalize modes up to n={n_max} "
            f"(worst deviation {worst:.3e} > 1e-10); increase size"
        )
    return grid


def inner_product(a: np.ndarray, b: np.ndarray, grid: Grid) -> complex:
    """Quadrature inner product <a|b> = sum_j w_j conj(a_j) b_j."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != (grid.size,) or b.shape != (grid.size,):
        raise PhysicsError(
            f"amplitude arrays must match the grid ({grid.size} points); "
            f"got shapes {a.shape} and {b.shape}"
        )
    return complex(np.sum(grid.weights * np.conj(a) * b))


@dataclass(frozen=True)
class HGState:
    """A pointer state as coefficients over the mode basis.

    coeffs[m] multiplies phi_m; sigma is the basis beam width.  States are
    immutable; normalization is explicit via normalized().
    """

    coeffs: np.ndarray
    sigma: float

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))
        if c.ndim != 1 or c.size == 0:
            raise PhysicsError("coeffs must be a non-empty 1-D array")
        if c.size - 1 > MAX_ORDER:
            raise PhysicsError(f"state involves orders above {MAX_ORDER}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "sigma", _check_sigma(self.sigma))

    @property
    def m_max(self) -> int:
        return self.coeffs.size - 1

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def normalized(self) -> "HGState":
        nrm = self.norm()
        if nrm <= 1e-300:
            raise PhysicsError("cannot normalize a null state")
        return HGState(self.coeffs / nrm, self.sigma)

    def to_grid(self, grid: Grid) -> np.ndarray:
        """Complex amplitudes sum_m c_m phi_m(x_j) on the grid."""
        modes = hg_wavefunctions(self.m_max, self.sigma, grid.points)
        return self.coeffs @ modes


def coeff_inner(a: HGState, b: HGState) -> complex:
    """Basis-coefficient inner product <a|b>; shorter vectors are padded."""
    if abs(a.sigma - b.sigma) > 1e-12 * max(a.sigma, b.sigma):
        raise PhysicsError("states live on different beam widths")
    n = max(a.coeffs.size, b.coeffs.size)
    ca = np.zeros(n, dtype=complex)
    cb = np.zeros(n, dtype=complex)
    ca[: a.coeffs.size] = a.coeffs
    cb[: b.coeffs.size] = b.coeffs
    return complex(np.vdot(ca, cb))


LADDER_OPS = ("position", "derivative")


def ladder_apply(op: str, state: HGState) -> HGState:
    """Apply x or d/dx to a state through the ladder relations.

    Returns an (unnormalized) state extended by one order; coefficients
    beyond the new maximum are exactly zero because x and d/dx only couple
    neighbouring orders.
    """
    if op not in LADDER_OPS:
        raise PhysicsError(f"op must be one of {LADDER_OPS}, got {op!r}")
    c = state.coeffs
    m = np.arange(c.size, dtype=float)
    out = np.zeros(c.size + 1, dtype=complex)
    if op == "position":
        # to order m+1 from m, and to order m-1 from m
        out[1:] += state.sigma * np.sqrt(m + 1.0) * c
        out[:-2] += state.sigma * np.sqrt(m[1:]) * c[1:]
    else:
        out[1:] -= np.sqrt(m + 1.0) / (2.0 * state.sigma) * c
        out[:-2] += np.sqrt(m[1:]) / (2.0 * state.sigma) * c[1:]
    return HGState(out, state.sigma)
