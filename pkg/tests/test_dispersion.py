import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dimbreak.dispersion import (alpha0_beta0, check_min, dispersion_curve, g_eps,
                                 lambda_second_derivative, params_from_tau, tau_of_mu)
from dimbreak.errors import DomainError

from conftest import TAU_SWEEP

# (mu0, alpha0, beta0, A1, A2) from a 40-digit mpmath solve that imposes g0 = d/dmu g0 = 0
# through numerical differentiation of mu coth mu (independent of the closed forms)
ORACLE = {
    0.05: (4.4615111231380391638, 2.2366577974998674119, 0.1118328898749933706,
           0.10998629602156746367, 0.22419906116085920559),
    0.10: (3.0811884834025716389, 1.5872809862359621409, 0.15872809862359621409,
           0.14100154121880195801, 0.32592078739341261954),
    0.20: (1.8665694277372069227, 1.153952384097888973, 0.2307904768195777946,
           0.13458684670756480797, 0.56199754179732313795),
    0.30: (0.86571642341115144818, 1.0108821331209170572, 0.30326463993627511715,
           0.05424999396996163238, 1.6520697652604589388),
}


@pytest.mark.parametrize("tau", sorted(ORACLE))
def test_params_match_high_precision_oracle(tau):
    p = params_from_tau(tau)
    mu, a, b, _, _ = ORACLE[tau]
    assert p.mu0 == pytest.approx(mu, rel=1e-12)
    assert p.alpha0 == pytest.approx(a, rel=1e-12)
    assert p.beta0 == pytest.approx(b, rel=1e-12)


@pytest.mark.parametrize("tau", sorted(ORACLE))
def test_curvatures_match_oracle(tau):
    p = params_from_tau(tau)
    d = check_min(p)
    assert 0.5 * d["second_derivative"] == pytest.approx(ORACLE[tau][3], rel=1e-5)
    assert 0.5 * lambda_second_derivative(p) == pytest.approx(ORACLE[tau][4], rel=1e-5)


def test_small_mu_limit():
    a, b = alpha0_beta0(1e-4)
    assert a == pytest.approx(1.0, abs=1e-8)
    assert b == pytest.approx(1.0 / 3.0, abs=1e-8)


def test_large_mu_limit():
    a, b = alpha0_beta0(50.0)
    assert a / 50.0 == pytest.approx(0.5, rel=1e-12)
    assert b * 50.0 == pytest.approx(0.5, rel=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.05, 20.0))
def test_sigma_identity(mu):
    a, b = alpha0_beta0(mu)
    assert math.tanh(mu) * (a + b * mu * mu) == pytest.approx(mu, rel=1e-12)


def test_tau_limits():
    assert params_from_tau(0.3333).mu0 < 0.05
    mus = [params_from_tau(t).mu0 for t in (0.05, 0.02, 0.01)]
    assert mus[0] < mus[1] < mus[2] and mus[2] > 9.0


@settings(max_examples=25, deadline=None)
@given(st.floats(0.02, 0.32))
def test_tau_roundtrip(tau):
    p = params_from_tau(tau)
    assert tau_of_mu(p.mu0) == pytest.approx(tau, rel=1e-10)
    assert params_from_tau(tau_of_mu(p.mu0)).mu0 == pytest.approx(p.mu0, abs=1e-10)
    assert abs(p.beta0 - tau * p.alpha0) < 1e-12


@pytest.mark.parametrize("tau", [0.0, 1.0 / 3.0, 0.5, -0.1, float("nan")])
def test_tau_out_of_range(tau):
    with pytest.raises(DomainError):
        params_from_tau(tau)


@pytest.mark.parametrize("tau", TAU_SWEEP)
def test_minimum_diagnostics(tau):
    d = check_min(params_from_tau(tau))
    assert abs(d["g_at_min"]) < 1e-10
    assert abs(d["first_derivative"]) < 1e-6


def test_special_values(params):
    assert g_eps(params.mu0, 0.0, params) == pytest.approx(0.0, abs=1e-10)
    p = params.with_eps(0.1)
    lam = 0.7
    assert g_eps(0.0, lam, p) == pytest.approx(p.alpha0 + 0.01 + p.beta0 * lam**2, rel=1e-14)
    with pytest.raises(DomainError):
        g_eps(0.0, 0.0, params)


@settings(max_examples=60, deadline=None)
@given(st.floats(-6, 6), st.floats(-6, 6))
def test_evenness(mu, lam):
    p = params_from_tau(0.2, eps=0.05)
    if mu * mu + lam * lam < 1e-200:
        return
    g = g_eps(mu, lam, p)
    assert g_eps(-mu, lam, p) == g
    assert g_eps(mu, -lam, p) == g


def test_eps_shift_is_exact(params):
    mus = np.linspace(0.1, 5.0, 50)
    d = g_eps(mus, 0.3, params.with_eps(0.1)) - g_eps(mus, 0.3, params)
    assert np.allclose(d, 0.01, rtol=0, atol=1e-15)


def test_curve_single_interior_minimum(params):
    rows = dispersion_curve(params, (0.1, 3 * params.mu0), 101)
    g = np.array([r.g for r in rows])
    k = int(np.argmin(g))
    assert 0 < k < 100
    assert np.all(np.diff(g[:k + 1]) < 0) and np.all(np.diff(g[k:]) > 0)
    assert abs(rows[k].mu - params.mu0) < 3 * params.mu0 / 100


def test_curve_degenerate_range(params):
    rows = dispersion_curve(params, (params.mu0, params.mu0), 2)
    assert rows[0] == rows[1]
    assert abs(rows[0].g) < 1e-10


def test_coercive_bound_measured(params):
    """c ((mu - mu0)^2 + lam^2 + eps^2) <= g <= (1/c)(...) near the minimum, with c measured."""
    p = params.with_eps(0.05)
    mu = np.linspace(params.mu0 - 0.5, params.mu0 + 0.5, 41)
    lam = np.linspace(0.0, 1.0, 21)
    M, Lm = np.meshgrid(mu, lam)
    ratio = g_eps(M, Lm, p) / ((M - params.mu0) ** 2 + Lm**2 + p.eps**2)
    c = min(ratio.min(), 1.0 / ratio.max())
    assert c > 0.05
