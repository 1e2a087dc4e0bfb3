"""Information matrices: quantum, position-readout, homodyne, and the bounds."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from hgweak.errors import PhysicsError
from hgweak.fisher import (
    CovarianceBound,
    FisherMatrix,
    cfim_homodyne,
    cfim_mle_analytic,
    cfim_mle_numeric,
    first_order_density_terms,
    optimal_lo_check,
    qcrb,
    qfim_analytic,
    qfim_numeric,
    sld_commutator_expectation,
    tradeoff_trace,
)
from hgweak.homodyne import beam_splitter_lo_pair, optimal_lo_pair
from hgweak.modes import hg_derivatives, hg_wavefunctions, make_grid
from hgweak.weak import (
    final_state_exact,
    final_state_first_order,
    nearly_orthogonal_selection,
    weak_value,
)

EPS = 0.01
SEL = nearly_orthogonal_selection(EPS)
AW = weak_value(SEL)
IDEAL = -1.0 / EPS + 1j / EPS


def test_fisher_matrix_validation():
    with pytest.raises(PhysicsError):
        FisherMatrix(m=np.array([[1.0, 0.5], [0.2, 1.0]]), trials=1.0, kind="quantum")
    with pytest.raises(PhysicsError):
        FisherMatrix(m=np.diag([1.0, -2.0]), trials=1.0, kind="quantum")
    with pytest.raises(PhysicsError):
        FisherMatrix(m=np.eye(2), trials=1.0, kind="bogus")
    with pytest.raises(PhysicsError):
        FisherMatrix(m=np.eye(2), trials=0.0, kind="quantum")
    f = FisherMatrix(m=np.eye(2), trials=3.0, kind="quantum")
    assert_allclose(f.total, 3.0 * np.eye(2))
    with pytest.raises(ValueError):
        f.m[0, 0] = 7.0


def test_qfim_analytic_closed_form():
    for n, sigma in ((0, 1.0), (2, 0.7), (5, 1.9)):
        q = qfim_analytic(n, sigma, AW)
        scale = (2 * n + 1) * abs(AW) ** 2
        assert q.m[0, 0] == pytest.approx(scale / sigma**2, rel=1e-14)
        assert q.m[1, 1] == pytest.approx(4 * scale * sigma**2, rel=1e-14)
        assert q.m[0, 1] == 0.0
    # factor 2n+1 between orders, exactly
    q1, q0 = qfim_analytic(1, 1.0, AW).m, qfim_analytic(0, 1.0, AW).m
    assert_allclose(
        [q1[0, 0] / q0[0, 0], q1[1, 1] / q0[1, 1]], [3.0, 3.0], rtol=1e-14
    )
    q = qfim_analytic(2, 1.0, AW, p_success=5e-5, n_trials=1e7)
    assert q.trials == pytest.approx(500.0)


def test_qfim_numeric_first_order_map():
    n, sigma = 2, 1.0

    def state(g):
        return final_state_first_order(n, sigma, AW, g)

    q = qfim_numeric(state, (0.0, 0.0))
    ref = qfim_analytic(n, sigma, AW).m
    # finite-difference overlap curvature is good to ~1e-5 relative
    assert_allclose(q.m, ref, rtol=5e-5, atol=1e-8)


def test_qfim_numeric_exact_map():
    n, sigma = 1, 1.0
    grid = make_grid(n + 2, sigma)

    def state(g):
        return final_state_exact(SEL, n, sigma, g, grid).amplitudes

    q = qfim_numeric(state, (0.0, 0.0), grid=grid, check=False)
    ref = qfim_analytic(n, sigma, AW).m
    assert np.max(np.abs(q.m - ref) / np.abs(ref).max()) < 0.01


def test_qcrb_inverse_and_singular():
    f = FisherMatrix(m=np.array([[4.0, 1.0], [1.0, 2.0]]), trials=10.0, kind="quantum")
    b = qcrb(f)
    assert not b.unbounded
    assert_allclose(b.matrix @ f.total, np.eye(2), atol=1e-12)
    singular = cfim_mle_analytic(0, 1.0, AW)
    b0 = qcrb(singular)
    assert b0.unbounded and b0.matrix is None
    null = b0.null_direction
    expect = np.array([2.0 * AW.imag, -AW.real])
    expect = expect / np.linalg.norm(expect)
    assert min(np.linalg.norm(null - expect), np.linalg.norm(null + expect)) < 1e-9


def test_covariance_bound_validation():
    with pytest.raises(PhysicsError):
        CovarianceBound(matrix=np.diag([1.0, -1.0]))
    with pytest.raises(PhysicsError):
        CovarianceBound(matrix=None, unbounded=False)


def test_cfim_mle_closed_form_and_numeric():
    n, sigma = 3, 0.8
    f = cfim_mle_analytic(n, sigma, AW)
    re, im = AW.real, AW.imag
    assert f.m[0, 0] == pytest.approx((2 * n + 1) * re**2 / sigma**2, rel=1e-14)
    assert f.m[0, 1] == pytest.approx(2 * re * im, rel=1e-14)
    assert f.m[1, 1] == pytest.approx(4 * (2 * n + 1) * im**2 * sigma**2, rel=1e-14)
    grid = make_grid(n + 1, sigma)
    fn = cfim_mle_numeric(n, sigma, AW, (0.0, 0.0), grid)
    assert_allclose(fn.m, f.m, rtol=1e-6)


def test_density_terms_match_finite_differences():
    n, sigma = 2, 1.0
    grid = make_grid(n + 1, sigma)
    terms = first_order_density_terms(n, sigma, AW, grid)
    modes = hg_wavefunctions(n, sigma, grid.points)
    derivs = hg_derivatives(n, sigma, grid.points)
    assert_allclose(terms["base"], modes[n] ** 2, rtol=1e-12)
    assert_allclose(terms["dP_dd"], -2 * AW.real * derivs[n] * modes[n], rtol=1e-12)
    step = 1e-7
    plus = np.abs(final_state_first_order(n, sigma, AW, (step, 0.0)).to_grid(grid)) ** 2
    minus = np.abs(final_state_first_order(n, sigma, AW, (-step, 0.0)).to_grid(grid)) ** 2
    assert_allclose((plus - minus) / (2 * step), terms["dP_dd"], atol=2e-4)


def test_tradeoff_trace_identity_and_guards():
    rng = np.random.default_rng(11)
    for _ in range(50):
        n = int(rng.integers(0, 9))
        sigma = float(rng.uniform(0.3, 3.0))
        a = complex(rng.normal(), rng.normal()) * 10 ** rng.uniform(-1, 2)
        f = cfim_mle_analytic(n, sigma, a)
        q = qfim_analytic(n, sigma, a)
        assert abs(tradeoff_trace(f, q) - 1.0) < 1e-12
    f = cfim_mle_analytic(1, 1.0, AW, n_trials=2.0)
    q = qfim_analytic(1, 1.0, AW, n_trials=3.0)
    with pytest.raises(PhysicsError):
        tradeoff_trace(f, q)


def test_homodyne_cfim_beam_splitter_closed_form():
    # per trial the Eq. (22) pair gives (w^2 / 2(2n+1)) * Q/2 with
    # w = sqrt(n) + sqrt(n+1); the finite LO and difference step leave
    # deviations at the 1e-5 level
    for n in (1, 3, 5):
        lo1, lo2 = beam_splitter_lo_pair(n)
        f = cfim_homodyne(
            n, 1.0, IDEAL, (lo1.alpha, lo1.beta), (lo2.alpha, lo2.beta),
            n_trials=500.0, n_lo=1e12, p_success=1.0,
        )
        w2 = (np.sqrt(n) + np.sqrt(n + 1.0)) ** 2
        pred = w2 / (2 * (2 * n + 1)) * qfim_analytic(n, 1.0, IDEAL).m / 2
        assert np.max(np.abs(f.m - pred)) / np.max(pred) < 1e-4
        assert f.kind == "classical-homodyne"
        assert f.trials == pytest.approx(500.0)


def test_homodyne_cfim_guards():
    lo1, lo2 = beam_splitter_lo_pair(1)
    with pytest.raises(PhysicsError):
        cfim_homodyne(1, 1.0, IDEAL, (0.9, 0.1), (lo2.alpha, lo2.beta),
                      n_trials=10.0, n_lo=1e6, p_success=1.0)
    with pytest.raises(PhysicsError):
        cfim_homodyne(1, 1.0, IDEAL, (lo1.alpha, lo1.beta), (lo2.alpha, lo2.beta),
                      n_trials=100.0, n_lo=500.0, p_success=1.0)


def test_optimal_lo_pair_saturates_tradeoff():
    for n in (0, 1, 4):
        lo1, lo2 = optimal_lo_pair(AW, n)
        for lo in (lo1, lo2):
            ok, res = optimal_lo_check((lo.alpha, lo.beta), AW, n)
            assert ok, res
        f = cfim_homodyne(
            n, 1.0, AW, (lo1.alpha, lo1.beta), (lo2.alpha, lo2.beta),
            n_trials=500.0, n_lo=1e12, p_success=1.0,
        )
        q = qfim_analytic(n, 1.0, AW, n_trials=500.0)
        assert tradeoff_trace(f, q) == pytest.approx(1.0, abs=2e-4)


def test_beam_splitter_pair_fails_ratio_condition():
    lo1, _ = beam_splitter_lo_pair(2)
    ok, res = optimal_lo_check((lo1.alpha, lo1.beta), IDEAL, 2)
    assert not ok
    assert res["phase_residual"] < 1e-12
    expect = (np.sqrt(3.0) - np.sqrt(2.0)) / np.sqrt(2.0)
    assert res["ratio_residual"] == pytest.approx(expect, rel=1e-12)


def test_optimal_lo_check_degenerate_n0():
    ok, res = optimal_lo_check((1.0, 0.0), IDEAL, 0)
    assert not ok
    assert "degenerate" in res["explanation"]


def test_homodyne_trace_bounded_by_one():
    rng = np.random.default_rng(23)
    for _ in range(50):
        n = int(rng.integers(0, 7))
        a = complex(rng.normal(), rng.normal()) * 10 ** rng.uniform(0, 2)
        if abs(a) < 1e-3:
            a = 1.0 + 1j
        los = []
        for _ in range(2):
            v = rng.normal(size=4)
            z = np.array([v[0] + 1j * v[1], v[2] + 1j * v[3]])
            if n == 0:
                z[0] = 0.0
            z = z / np.linalg.norm(z)
            los.append((complex(z[0]), complex(z[1])))
        npr = float(rng.uniform(10.0, 1000.0))
        f = cfim_homodyne(n, 1.0, a, los[0], los[1],
                          n_trials=npr, n_lo=1e4 * npr, p_success=1.0)
        q = qfim_analytic(n, 1.0, a, n_trials=npr)
        assert tradeoff_trace(f, q) <= 1.0 + 1e-9


def test_sld_commutator_is_nonzero():
    # the two displacement generators do not commute on the pointer; the
    # closed form is -4i |A_w|^2 independent of n
    n = 1

    def state(g):
        return final_state_first_order(n, 1.0, AW, g)

    val = sld_commutator_expectation(state, (0.0, 0.0))
    assert abs(val.real) < 1e-6 * abs(val)
    assert val.imag == pytest.approx(-4.0 * abs(AW) ** 2, rel=1e-4)
    grid = make_grid(n + 2, 1.0)

    def state_ex(g):
        return final_state_exact(SEL, n, 1.0, g, grid).amplitudes

    val_ex = sld_commutator_expectation(state_ex, (0.0, 0.0), grid=grid)
    assert val_ex.imag == pytest.approx(-4.0 * abs(AW) ** 2, rel=1e-4)
