import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dimbreak.coefficients import CoefficientSet
from dimbreak.errors import DomainError, NoSolitonError
from dimbreak.soliton import (Grid1D, StarProfiles, build_line_wave, build_soliton, ds_residual,
                              nls_residual, odd_antiderivative, zeta)
from dimbreak.strip_bvp import uniform_y


@pytest.fixture(scope="module")
def grid(coeffs):
    return Grid1D(40.0 * math.sqrt(coeffs.A1), 2048)


def test_peak_and_half_width(coeffs, grid):
    prof = build_soliton(coeffs, grid)
    amp = math.sqrt(2.0 / coeffs.A5)
    assert prof.amp == amp
    x_half = math.sqrt(coeffs.A1) * math.acosh(2.0)
    assert zeta(np.array([0.0, x_half]), prof.amp, prof.width) == pytest.approx([amp, 0.5 * amp],
                                                                              rel=1e-14)


def test_mean_flow_slope_at_origin(coeffs, grid):
    prof = build_soliton(coeffs, grid)
    psi_x0 = prof.psi_coeff * prof.amp**2
    assert psi_x0 == pytest.approx(-coeffs.A4 * 2.0 / (coeffs.one_minus_inv_alpha0 * coeffs.A5),
                                   rel=1e-14)


def test_analytic_residuals_vanish(coeffs, grid):
    prof = build_soliton(coeffs, grid)
    assert nls_residual(prof, coeffs, grid) < 1e-12
    r1, r2 = ds_residual(prof, coeffs, grid)
    assert r1 < 1e-10 and r2 < 1e-10


def test_fd_residual_order(coeffs):
    L = 40.0 * math.sqrt(coeffs.A1)
    res = [nls_residual(build_soliton(coeffs, Grid1D(L, n)), coeffs, Grid1D(L, n), "fd")
           for n in (1025, 2049, 4097)]
    orders = [math.log2(res[i] / res[i + 1]) for i in range(2)]
    assert all(abs(o - 2.0) < 0.1 for o in orders)


def test_perturbation_detected(coeffs, grid):
    prof = build_soliton(coeffs, grid).scaled(1.01)
    assert ds_residual(prof, coeffs, grid)[0] > 1e-4


def test_zero_profile(coeffs, grid):
    prof = build_soliton(coeffs, grid).scaled(0.0)
    assert nls_residual(prof, coeffs, grid) == 0.0


def test_sign_branches_agree(coeffs, grid):
    a = nls_residual(build_soliton(coeffs, grid, 1), coeffs, grid, "fd")
    b = nls_residual(build_soliton(coeffs, grid, -1), coeffs, grid, "fd")
    assert a == b


def test_decoupled_mean_flow(coeffs, grid):
    c0 = CoefficientSet(sigma=coeffs.sigma, A1=coeffs.A1, A2=coeffs.A2, A3=coeffs.A3, A4=0.0,
                        A5=coeffs.A3, one_minus_inv_alpha0=coeffs.one_minus_inv_alpha0)
    prof = build_soliton(c0, grid)
    assert np.all(prof.psi_x_star == 0.0)
    assert ds_residual(prof, c0, grid)[0] == pytest.approx(nls_residual(prof, c0, grid), abs=1e-15)


def test_no_soliton_for_negative_a5(coeffs, grid):
    bad = CoefficientSet(sigma=coeffs.sigma, A1=coeffs.A1, A2=coeffs.A2, A3=-1.0, A4=0.0, A5=-1.0,
                         one_minus_inv_alpha0=coeffs.one_minus_inv_alpha0)
    with pytest.raises(NoSolitonError):
        build_soliton(bad, grid)


def test_grid_validation():
    with pytest.raises(DomainError):
        Grid1D(1.0, 8)
    with pytest.raises(DomainError):
        Grid1D(1.0, 33, bc="periodic")
    with pytest.raises(DomainError):
        Grid1D(-1.0, 64)


@settings(max_examples=20, deadline=None)
@given(st.integers(16, 400), st.booleans())
def test_grid_reflection(n, periodic):
    if periodic and n % 2:
        n += 1
    g = Grid1D(3.0, n, "periodic" if periodic else "decay-truncated")
    r = g.reflect_index()
    xr = g.x[r]
    if periodic:
        assert np.allclose(np.where(np.arange(n) == 0, -xr, xr), -g.x, atol=1e-14)
    else:
        assert np.array_equal(xr, -g.x)


def test_line_wave_values_and_parity(params, coeffs, pcoeffs):
    p = params.with_eps(0.05)
    L = 40.0 * math.sqrt(coeffs.A1) / p.eps
    lw = build_line_wave(p, coeffs, pcoeffs, Grid1D(L, 4001), uniform_y(33))
    mid = 2000
    assert lw.eta1[mid] == pytest.approx(p.eps * math.sqrt(2.0 / coeffs.A5), rel=1e-14)
    assert np.array_equal(lw.eta1, lw.eta1[::-1])
    assert np.max(np.abs(lw.phi1 + lw.phi1[::-1])) < 1e-15
    assert np.max(np.abs(lw.phi + lw.phi[::-1])) < 1e-12


def test_antiderivative_error_is_second_order(coeffs):
    errs = []
    for n in (801, 1601):
        g = Grid1D(20.0 * math.sqrt(coeffs.A1), n)
        z2 = zeta(g.x, math.sqrt(2 / coeffs.A5), math.sqrt(coeffs.A1)) ** 2
        exact = 2 * math.sqrt(coeffs.A1) / coeffs.A5 * np.tanh(g.x / math.sqrt(coeffs.A1))
        errs.append(np.max(np.abs(odd_antiderivative(z2, g.x) - exact)))
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_phi1_harmonic_profile(params, coeffs, pcoeffs):
    p = params.with_eps(0.05)
    sp_ = StarProfiles(p, coeffs, pcoeffs)
    x = np.linspace(-30, 30, 61)
    y = np.linspace(0, 1, 11)
    assert np.all(sp_.phi_y(x, np.array([0.0])) == 0.0)
    p1, _ = sp_.phi_parts(x, y)
    prof = np.cosh(p.mu0 * y) / math.sinh(p.mu0)
    k = np.argmax(np.abs(p1[:, -1]))
    assert np.allclose(p1[k] / p1[k, -1], prof / prof[-1], rtol=1e-13)


def test_star_derivatives_match_finite_differences(params, coeffs, pcoeffs):
    p = params.with_eps(0.05)
    sp_ = StarProfiles(p, coeffs, pcoeffs)
    x = np.linspace(-40, 40, 201)
    y = np.linspace(0, 1, 9)
    d = 1e-5
    fd_eta = (sp_.eta(x + d) - sp_.eta(x - d)) / (2 * d)
    assert np.max(np.abs(fd_eta - sp_.eta_x(x))) < 1e-9
    P = lambda xx, yy: sum(sp_.phi_parts(xx, yy))  # noqa: E731
    fd_px = (P(x + d, y) - P(x - d, y)) / (2 * d)
    fd_py = (P(x, y + d) - P(x, y - d)) / (2 * d)
    assert np.max(np.abs(fd_px - sp_.phi_x(x, y))) < 1e-9
    assert np.max(np.abs(fd_py - sp_.phi_y(x, y))) < 1e-9


def test_linear_free_surface_residual_scales_quadratically(params, coeffs, pcoeffs):
    """eta*_1, Phi*_1 satisfy the flat linear kinematic and Bernoulli relations up to O(eps^2)."""
    res = []
    for eps in (0.04, 0.02):
        p = params.with_eps(eps)
        sp_ = StarProfiles(p, coeffs, pcoeffs)
        L = 20.0 / eps
        x = np.linspace(-L, L, 20001)
        h = x[1] - x[0]
        Z = zeta(eps * x, sp_.amp, sp_.width)
        eta1 = eps * Z * np.cos(p.mu0 * x)
        phi1_top = eps * Z * np.sin(p.mu0 * x) * (np.cosh(p.mu0) / math.sinh(p.mu0))
        phi1y_top = eps * Z * np.sin(p.mu0 * x) * p.mu0
        eta_x = np.gradient(eta1, h)
        kin = phi1y_top + eta_x
        eta_xx = np.gradient(eta_x, h)
        ber = p.alpha0 * eta1 - p.beta0 * eta_xx - np.gradient(phi1_top, h)
        res.append(max(np.max(np.abs(kin)), np.max(np.abs(ber))))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.15)
