import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dimbreak.errors import DomainError, SymmetryError
from dimbreak.soliton import StarProfiles
from dimbreak.wave_synthesis import even_envelope, synthesize

K0 = 1.467069200676896


@pytest.fixture(scope="module")
def setup(params, coeffs, pcoeffs):
    p = params.with_eps(0.05)
    X = np.linspace(-20, 20, 801)
    mode = {"x": X, "zeta1": 0.3 / np.cosh(X / 2.0) ** 2}
    return p, StarProfiles(p, coeffs, pcoeffs), mode


def test_zero_amplitude_is_line_wave(setup):
    p, star, mode = setup
    w = synthesize(p, star, mode, 0.0, 16, K0)
    assert np.array_equal(w.eta, np.repeat(star.eta(np.abs(w.x))[:, None], 16, axis=1))


@settings(max_examples=15, deadline=None)
@given(st.floats(-1.0, 1.0), st.integers(2, 64))
def test_symmetric_in_x_and_z(setup, s, nz):
    p, star, mode = setup
    assert synthesize(p, star, mode, s, nz, K0, nx=201).parity_defect() == 0.0


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 1.0), st.integers(2, 40))
def test_transverse_mean_is_line_wave(setup, s, nz):
    p, star, mode = setup
    w = synthesize(p, star, mode, s, nz, K0, nx=101)
    assert np.allclose(w.eta.mean(axis=1), star.eta(np.abs(w.x)), atol=1e-14)


def test_period_and_peak(setup):
    p, star, mode = setup
    w = synthesize(p, star, mode, 0.5, 32, K0)
    assert w.meta["transverse_period"] == pytest.approx(2 * math.pi / (0.05 * K0), rel=1e-15)
    assert w.z[1] - w.z[0] == pytest.approx(w.meta["transverse_period"] / 32, rel=1e-14)
    mid = len(w.x) // 2
    assert w.eta[mid, 0] - star.eta(0.0) == pytest.approx(0.5 * 0.05, rel=1e-12)
    assert w.eta[:, 0].max() > star.eta(w.x).max()


def test_envelope_unit_peak_and_support(setup):
    env = even_envelope(setup[2])
    assert env(np.array([0.0]))[0] == pytest.approx(1.0)
    assert env(np.array([25.0, -25.0])).tolist() == [0.0, 0.0]


def test_odd_mode_rejected():
    X = np.linspace(-5, 5, 101)
    with pytest.raises(SymmetryError):
        even_envelope({"x": X, "zeta1": np.tanh(X) / np.cosh(X)})


def test_argument_guards(setup):
    p, star, mode = setup
    with pytest.raises(DomainError):
        synthesize(p, star, mode, 0.1, 1, K0)
    with pytest.raises(DomainError):
        synthesize(p, star, mode, 0.1, 8, 0.0)
    with pytest.raises(DomainError):
        synthesize(p, star, mode, float("nan"), 8, K0)
    with pytest.raises(DomainError):
        even_envelope({"x": np.arange(10.0), "zeta1": np.ones(10)})
    with pytest.raises(DomainError):
        even_envelope({"zeta1": np.ones(10)})


def test_rows_layout(setup):
    p, star, mode = setup
    w = synthesize(p, star, mode, 0.2, 4, K0, nx=5)
    rows = w.rows()
    assert rows.shape == (20, 3)
    assert rows[1, 0] == rows[0, 0] and rows[1, 1] == w.z[1]
