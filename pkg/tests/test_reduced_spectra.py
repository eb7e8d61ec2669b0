import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from dimbreak import reduced_spectra as rs
from dimbreak.errors import BracketError, DomainError, SpectralStructureError
from dimbreak.soliton import Grid1D

# k0 at tau0 = 0.2 from a separate Richardson-extrapolated run (n = 4096 .. 16384)
K0_REFERENCE = 1.467069200676896


@pytest.fixture(scope="module")
def dimbreak(coeffs, reduced_grid):
    return rs.find_k0(coeffs, reduced_grid)


@pytest.mark.parametrize("c, expected", [(2, [0.0]), (6, [-3.0, 0.0])])
def test_sech2_bound_states(coeffs, reduced_grid, c, expected):
    # -d^2 - l(l+1) sech^2 has bound states -m^2, m = 1..l, in the scaled variable
    r = rs.schrodinger_spectrum(c, coeffs, reduced_grid, count=len(expected) + 1)
    scaled = r.eigenvalues * coeffs.A2
    assert scaled[:len(expected)] == pytest.approx(expected, abs=1e-3)
    assert scaled[len(expected)] > 1.0
    assert r.neg_count == len(expected)


def test_schrodinger_parity_split(coeffs, reduced_grid):
    ev = rs.schrodinger_spectrum(6, coeffs, reduced_grid, count=1, parity="even").eigenvalues[0]
    od = rs.schrodinger_spectrum(6, coeffs, reduced_grid, count=1, parity="odd").eigenvalues[0]
    full = rs.schrodinger_spectrum(6, coeffs, reduced_grid, count=2).eigenvalues
    assert ev == pytest.approx(full[0], abs=1e-12)
    assert od == pytest.approx(full[1], abs=1e-12)


def test_schrodinger_refinement_table(coeffs):
    g = Grid1D(40.0 * math.sqrt(coeffs.A1), 4097)
    r = rs.schrodinger_spectrum(6, coeffs, g, count=2, refine=2)
    assert [t[0] for t in r.refinement] == [1025, 2049, 4097]


def test_schrodinger_guards(coeffs):
    with pytest.raises(DomainError):
        rs.schrodinger_spectrum(3, coeffs, Grid1D(40.0 * math.sqrt(coeffs.A1), 2048))
    with pytest.raises(DomainError):
        rs.schrodinger_spectrum(2, coeffs, Grid1D(5.0, 2048))
    with pytest.raises(DomainError):
        rs.schrodinger_spectrum(2, coeffs, Grid1D(40.0 * math.sqrt(coeffs.A1), 512))


@pytest.mark.parametrize("n", [7, 8, 33])
@pytest.mark.parametrize("parity", ["even", "odd"])
def test_parity_basis_orthonormal(n, parity):
    P = rs.parity_basis(n, parity).toarray()
    assert np.allclose(P.T @ P, np.eye(P.shape[1]), atol=1e-15)
    s = 1.0 if parity == "even" else -1.0
    assert np.allclose(P[::-1], s * P, atol=1e-15)
    assert P.shape[1] == (n + 1) // 2 if parity == "even" else n // 2


def test_difference_matrices():
    D1 = rs.d1_matrix(9, 0.5)
    assert abs(D1 + D1.T).max() == 0.0
    D2 = rs.d2_matrix(9, 0.5)
    assert abs(D2 - D2.T).max() == 0.0


def test_assembly_weighted_symmetric(coeffs, reduced_grid):
    asm = rs.assemble_Btilde(coeffs, reduced_grid, "full")
    assert asm.weighted_asymmetry() < 1e-14
    S = asm.symmetrized()
    assert abs(S - S.T).max() < 1e-10 * abs(S).max()


def test_assembly_independent_of_k(coeffs, reduced_grid):
    a = rs.assemble_Btilde(coeffs, reduced_grid, "fixR", k=0.3).matrix
    b = rs.assemble_Btilde(coeffs, reduced_grid, "fixR", k=2.7).matrix
    assert (a != b).nnz == 0


def test_fixR_basis_commutes_with_operator(coeffs, reduced_grid):
    asm = rs.assemble_Btilde(coeffs, reduced_grid, "full")
    P = rs.fixR_basis(reduced_grid.n)
    proj = P @ P.T
    assert abs(proj @ asm.matrix - asm.matrix @ proj).max() < 1e-10 * abs(asm.matrix).max()


def test_k0_value(dimbreak):
    assert dimbreak.k0 == pytest.approx(K0_REFERENCE, rel=1e-3)
    assert dimbreak.k_eps == pytest.approx(dimbreak.k0, abs=1e-9)
    assert dimbreak.neg_count == 1


def test_k0_mode_parity(dimbreak):
    p = dimbreak.parity
    assert p["zeta1_even"] < 1e-10
    assert p["psi_odd"] < 1e-10
    assert p["zeta2_norm"] < 1e-10
    assert p["kappa_full"] == pytest.approx(p["kappa_fixR"], abs=1e-8)


def test_shifted_operator_singular(coeffs, reduced_grid, dimbreak):
    asm = rs.assemble_Btilde(coeffs, reduced_grid, "fixR")
    S = asm.symmetrized()
    S = 0.5 * (S + S.T) + dimbreak.k0**2 * sp.identity(S.shape[0])
    w = rs.lowest_eigenpairs(rs.OperatorAssembly(S.tocsr(), np.ones(S.shape[0]), reduced_grid,
                                                 "fixR"), 1, shift=-0.5)[0]
    assert abs(w[0]) < 1e-6


def test_mode_unit_norm(coeffs, reduced_grid, dimbreak):
    m = dimbreak.mode
    h = reduced_grid.h
    nrm = h * (np.sum(m["zeta1"] ** 2) + np.sum(m["zeta2"] ** 2)
               + 2.0 / coeffs.A2 * np.sum(m["psi"] ** 2))
    assert nrm == pytest.approx(1.0, rel=1e-10)


def test_too_coarse_grid_fails_structure_check(coeffs):
    with pytest.raises(SpectralStructureError):
        rs.find_k0(coeffs, Grid1D(40.0 * math.sqrt(coeffs.A1), 64))


def test_refinement_order(coeffs):
    L = 40.0 * math.sqrt(coeffs.A1)
    r = rs.find_k0(coeffs, Grid1D(L, 4096), refine_ns=[1024, 2048, 4096])
    assert r.richardson_order == pytest.approx(2.0, abs=0.1)


def test_witness_matches_closed_form(coeffs, reduced_grid):
    q = rs.quadratic_form_witness(coeffs, reduced_grid)
    assert q < 0
    assert q == pytest.approx(rs.witness_closed_form(coeffs), rel=1e-3)


def test_decoupled_mean_flow_reduces_to_schrodinger(coeffs, reduced_grid):
    n = reduced_grid.n
    asm = rs.assemble_Btilde(coeffs, reduced_grid, "full", A4=0.0,
                             potential_scale=3.0 * coeffs.A5)
    assert abs(asm.matrix[:n, 2 * n:]).max() == 0.0
    assert abs(asm.matrix[2 * n:, :n]).max() == 0.0
    ref = rs.schrodinger_matrix(6, coeffs, reduced_grid)
    assert abs(asm.matrix[:n, :n] - ref).max() < 1e-12 * abs(ref).max()
    ref2 = rs.schrodinger_matrix(2, coeffs, reduced_grid)
    assert abs(asm.matrix[n:2 * n, n:2 * n] - ref2).max() < 1e-12 * abs(ref2).max()


def test_coercivity_on_sample(coeffs, reduced_grid):
    r = rs.coercivity_check(coeffs, reduced_grid, trials=40)
    assert r.min_quotient > 0.0
    assert r.quotient_w0 < 0.0


def test_coercivity_reproducible(coeffs, reduced_grid):
    a = rs.coercivity_check(coeffs, reduced_grid, trials=3, seed=7)
    b = rs.coercivity_check(coeffs, reduced_grid, trials=3, seed=7)
    assert a.min_quotient == b.min_quotient


def test_bracket_errors():
    with pytest.raises(BracketError):
        rs.kappa_root_solve(lambda k: -1.0, 2.0, 1.0)
    with pytest.raises(BracketError):
        rs.kappa_root_solve(lambda k: 1.0, 0.5, 2.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 5.0))
def test_root_solve_recovers_constant_kappa(k0):
    k = rs.kappa_root_solve(lambda _: -k0 * k0, k0 / 4, 4 * k0)
    assert k == pytest.approx(k0, abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(0.1, 2.0))
def test_richardson_order_exact_power(p, c):
    hs = [0.4, 0.2, 0.1]
    vals = [1.0 + c * h**p for h in hs]
    assert rs.richardson_order(hs, vals) == pytest.approx(p, abs=1e-8)


def test_zero_mode_is_sech(coeffs):
    g = Grid1D(40.0 * math.sqrt(coeffs.A1), 4096)
    v = rs.schrodinger_spectrum(2, coeffs, g, count=1).eigenvectors[:, 0]
    s = 1.0 / np.cosh(g.x / math.sqrt(coeffs.A1))
    assert abs(v @ s) / (np.linalg.norm(v) * np.linalg.norm(s)) > 1 - 1e-6


def test_even_restriction_keeps_only_ground_state(coeffs, reduced_grid):
    r = rs.schrodinger_spectrum(6, coeffs, reduced_grid, count=2, parity="even")
    assert r.neg_count == 1
    assert r.eigenvalues[0] * coeffs.A2 == pytest.approx(-3.0, rel=1e-3)
