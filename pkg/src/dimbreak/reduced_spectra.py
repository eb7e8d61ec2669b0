"""Reduced envelope operators C01, C02, B~ and A on a truncated grid, and the wavenumber k0."""

from dataclasses import dataclass, field
import math

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq
from scipy.sparse.linalg import eigsh

from .errors import (AssemblyError, BracketError, CoercivityError, DiscretizationError,
                     DomainError, SpectralStructureError)
from .soliton import Grid1D, zeta

DEFAULT_SEED = 0x5EED


def _check_grid(grid, coeffs, min_L=25.0, min_n=1024):
    if grid.bc != "decay-truncated":
        raise DomainError("reduced operators use decay-truncated grids")
    if grid.L < min_L * math.sqrt(coeffs.A1) * (1 - 1e-12) or grid.n < min_n:
        raise DomainError(
            f"grid too small: need L >= {min_L} sqrt(A1) = {min_L * math.sqrt(coeffs.A1):.4g} "
            f"and n >= {min_n}, got L = {grid.L:.4g}, n = {grid.n}")


def d2_matrix(n, h):
    """Three-point second difference with homogeneous Dirichlet ghost values."""
    e = np.ones(n)
    return sp.diags([e[:-1], -2.0 * e, e[:-1]], [-1, 0, 1], format="csr") / (h * h)


def d1_matrix(n, h):
    """Centered first difference, skew-symmetric by construction."""
    e = np.ones(n - 1)
    return sp.diags([-e, e], [-1, 1], format="csr") / (2.0 * h)


def parity_basis(n, parity):
    """Orthonormal basis (n x m sparse) of grid functions with u(-x) = +-u(x)."""
    half = n // 2
    rows, cols, vals = [], [], []
    s = 1.0 if parity == "even" else -1.0
    r = 1.0 / math.sqrt(2.0)
    col = 0
    for i in range(half):
        j = n - 1 - i
        rows += [i, j]
        cols += [col, col]
        vals += [r, s * r]
        col += 1
    if n % 2 and parity == "even":
        rows.append(half)
        cols.append(col)
        vals.append(1.0)
        col += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, col))


def _star(coeffs, grid):
    return zeta(grid.x, math.sqrt(2.0 / coeffs.A5), math.sqrt(coeffs.A1))


def _sech2(coeffs, grid):
    return np.cosh(grid.x / math.sqrt(coeffs.A1)) ** -2.0


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray = field(repr=False)
    neg_count: int
    delta_ess: float
    refinement: list = field(default_factory=list)
    grid: Grid1D = None


def schrodinger_matrix(c, coeffs, grid):
    """A2^{-1}(1 - A1 d^2 - c sech^2(x/sqrt(A1))) as a sparse matrix."""
    n = grid.n
    a2i = 1.0 / coeffs.A2
    pot = c * _sech2(coeffs, grid)
    return (a2i * (sp.identity(n) - coeffs.A1 * d2_matrix(n, grid.h) - sp.diags(pot))).tocsr()


def _tridiag_lowest(mat, count):
    d = mat.diagonal()
    e = mat.diagonal(1)
    m = len(d)
    count = min(count, m)
    w, v = eigh_tridiagonal(d, e, select="i", select_range=(0, count - 1))
    return w, v


def schrodinger_spectrum(c, coeffs, grid, count=4, parity=None, refine=0, delta=None):
    """Lowest eigenvalues of the sech^2 Schrodinger operator with potential strength c."""
    if c not in (2, 6):
        raise DomainError("potential strength must be 2 or 6")
    _check_grid(grid, coeffs)
    if delta is None:
        delta = (1.0 / coeffs.A2) / 10.0

    def solve(g):
        m = schrodinger_matrix(c, coeffs, g)
        if parity is not None:
            P = parity_basis(g.n, parity)
            w, v = _tridiag_lowest((P.T @ m @ P).tocsr(), count)
            v = P @ v
        else:
            w, v = _tridiag_lowest(m, count)
        # grid-function eigenvectors normalized in the h-weighted L2 metric
        v = v / math.sqrt(g.h)
        return w, v

    w, v = solve(grid)
    table = []
    if refine:
        levels = [Grid1D(grid.L, (grid.n - 1) // 2**k + 1) for k in range(refine, 0, -1)]
        for g in levels:
            table.append((g.n, solve(g)[0]))
        table.append((grid.n, w))
        for j in range(len(w)):
            seq = np.array([t[1][j] for t in table])
            dif = np.diff(seq)
            if not (np.all(dif <= 1e-12) or np.all(dif >= -1e-12)):
                raise DiscretizationError(f"non-monotone refinement of eigenvalue {j}: {seq}")
    # the discrete eigenvalue counting is relative to delta below the essential edge
    neg = int(np.sum(w < delta))
    return SpectrumResult(eigenvalues=w, eigenvectors=v, neg_count=neg, delta_ess=delta,
                          refinement=table, grid=grid)


@dataclass
class OperatorAssembly:
    matrix: sp.csr_matrix = field(repr=False)
    weight: np.ndarray = field(repr=False)
    grid: Grid1D
    symmetry: str
    basis: sp.csr_matrix = field(default=None, repr=False)

    @property
    def size(self):
        return self.matrix.shape[0]

    def symmetrized(self):
        """W^{1/2} M W^{-1/2}, symmetric when W M is."""
        s = np.sqrt(self.weight)
        return (sp.diags(s) @ self.matrix @ sp.diags(1.0 / s)).tocsr()

    def weighted_asymmetry(self):
        WM = sp.diags(self.weight) @ self.matrix
        diff = WM - WM.T
        mmax = abs(self.matrix).max()
        return (abs(diff).max() if diff.nnz else 0.0) / mmax


def _assemble_full(coeffs, grid, A4=None, potential_scale=None):
    n, h = grid.n, grid.h
    A4 = coeffs.A4 if A4 is None else A4
    a2i = 1.0 / coeffs.A2
    om = coeffs.one_minus_inv_alpha0
    zs = _star(coeffs, grid)
    D2 = d2_matrix(n, h)
    D1 = d1_matrix(n, h)
    I = sp.identity(n, format="csr")
    p1 = (2.0 * coeffs.A3 + coeffs.A5) if potential_scale is None else potential_scale
    B11 = a2i * (I - coeffs.A1 * D2 - p1 * sp.diags(zs * zs))
    B13 = 4.0 * a2i * A4 * sp.diags(zs) @ D1
    B22 = a2i * (I - coeffs.A1 * D2 - coeffs.A5 * sp.diags(zs * zs))
    B31 = -2.0 * A4 * D1 @ sp.diags(zs)
    B33 = -om * D2
    M = sp.bmat([[B11, None, B13], [None, B22, None], [B31, None, B33]], format="csr")
    w = np.concatenate([np.ones(2 * n), np.full(n, 2.0 * a2i)])
    return M, w


def fixR_basis(n):
    Pe = parity_basis(n, "even")
    Po = parity_basis(n, "odd")
    return sp.block_diag([Pe, Po, Po], format="csr")


def assemble_Btilde(coeffs, grid, symmetry="fixR", k=None, A4=None, potential_scale=None,
                    check_grid=True):
    """Assemble B~_{0,k} on components (zeta1, zeta2, psi); the operator does not depend on k."""
    if check_grid:
        _check_grid(grid, coeffs)
    M, w = _assemble_full(coeffs, grid, A4=A4, potential_scale=potential_scale)
    asm = OperatorAssembly(matrix=M, weight=w, grid=grid, symmetry="full")
    if asm.weighted_asymmetry() > 1e-10:
        raise AssemblyError(f"weighted symmetry violated: {asm.weighted_asymmetry():.3e}")
    if symmetry == "full":
        return asm
    if symmetry != "fixR":
        raise DomainError(f"unknown symmetry {symmetry!r}")
    P = fixR_basis(grid.n)
    # P has orthonormal columns and commutes with the blockwise-constant metric
    Mr = (P.T @ M @ P).tocsr()
    npsi = grid.n // 2
    wr = np.concatenate([np.ones(P.shape[1] - npsi), np.full(npsi, 2.0 / coeffs.A2)])
    return OperatorAssembly(matrix=Mr, weight=wr, grid=grid, symmetry="fixR", basis=P)


def lowest_eigenpairs(asm, count=6, shift=None):
    """Lowest eigenpairs of the weighted-symmetric assembly, W-orthonormal eigenvectors."""
    S = asm.symmetrized()
    S = 0.5 * (S + S.T)
    if shift is None:
        # Gershgorin lower bound, nudged down so the shifted matrix is definite
        d = S.diagonal()
        r = np.asarray(abs(S).sum(axis=1)).ravel() - np.abs(d)
        shift = float(np.min(d - r)) - 1.0
    v0 = np.ones(S.shape[0])
    w, v = eigsh(S.tocsc(), k=count, sigma=shift, which="LM", v0=v0, tol=0.0)
    order = np.argsort(w)
    w, v = w[order], v[:, order]
    # back to the original variables; columns are W-orthonormal in the h-weighted sense
    u = v / np.sqrt(asm.weight)[:, None]
    u /= math.sqrt(asm.grid.h)
    for j in range(u.shape[1]):
        i = np.argmax(np.abs(u[:, j]))
        if u[i, j] < 0:
            u[:, j] = -u[:, j]
    return w, u


def btilde_spectrum(coeffs, grid, symmetry="fixR", count=6):
    asm = assemble_Btilde(coeffs, grid, symmetry, check_grid=False)
    w, u = lowest_eigenpairs(asm, count)
    de = coeffs.delta_ess
    return SpectrumResult(eigenvalues=w, eigenvectors=u, neg_count=int(np.sum(w < -de)),
                          delta_ess=de, grid=grid)


@dataclass
class DimensionBreakingResult:
    k0: float
    k_eps: float
    kappa_min: float
    mode: dict = field(repr=False)
    parity: dict
    kmin: float
    kmax: float
    eigenvalues: np.ndarray = field(repr=False)
    neg_count: int = 1
    delta_ess: float = 0.0
    refinement: list = field(default_factory=list)
    richardson_order: float = None


def split_components(u, n, symmetry, basis=None):
    if symmetry == "fixR":
        u = basis @ u
    return u[:n], u[n:2 * n], u[2 * n:]


def asymmetry(f, parity):
    s = 1.0 if parity == "even" else -1.0
    nrm = np.linalg.norm(f)
    if nrm == 0.0:
        return 0.0
    return float(np.linalg.norm(f - s * f[::-1]) / nrm)


def richardson_order(hs, vals):
    """Observed order p in v(h) = v0 + C h^p from three levels with arbitrary spacings."""
    h1, h2, h3 = hs
    v1, v2, v3 = vals
    d12, d23 = v1 - v2, v2 - v3
    if d23 == 0.0 or d12 / d23 <= 0.0:
        return float("nan")
    ratio = d12 / d23

    def f(p):
        return (h1**p - h2**p) / (h2**p - h3**p) - ratio

    try:
        return float(brentq(f, 0.1, 12.0, xtol=1e-14))
    except ValueError:
        return float("nan")


def find_k0(coeffs, grid, count=6, kmin=None, kmax=None, refine_ns=None, symmetry="fixR"):
    """Unique negative eigenvalue -k0^2 of B~ below -delta_ess, with parity and refinement data."""
    asm = assemble_Btilde(coeffs, grid, symmetry, check_grid=False)
    w, u = lowest_eigenpairs(asm, count)
    de = coeffs.delta_ess
    neg = int(np.sum(w < -de))
    if neg != 1:
        raise SpectralStructureError(
            f"expected exactly one eigenvalue below -delta_ess = {-de:.4g}, found {neg}: {w}")
    kappa = float(w[0])
    k0 = math.sqrt(-kappa)
    z1, z2, psi = split_components(u[:, 0], grid.n, asm.symmetry, asm.basis)
    # the full assembly's mode carries the parity information; in Fix R it is exact
    full = assemble_Btilde(coeffs, grid, "full", check_grid=False) if symmetry == "fixR" else asm
    wf, uf = lowest_eigenpairs(full, count)
    neg_full = int(np.sum(wf < -de))
    if neg_full != 1:
        raise SpectralStructureError(
            f"full assembly has {neg_full} eigenvalues below -delta_ess = {-de:.4g}: {wf}")
    f1, f2, fp = split_components(uf[:, 0], grid.n, "full")
    parity = {"zeta1_even": asymmetry(f1, "even"), "psi_odd": asymmetry(fp, "odd"),
              "zeta2_norm": float(np.linalg.norm(f2) / max(np.linalg.norm(uf[:, 0]), 1e-300)),
              "kappa_full": float(wf[0]), "kappa_fixR": kappa}
    table = []
    order = None
    if refine_ns:
        for nn in refine_ns:
            g = Grid1D(grid.L, nn)
            a = assemble_Btilde(coeffs, g, "fixR", check_grid=False)
            table.append({"n": nn, "h": g.h, "kappa_min": float(lowest_eigenpairs(a, 2)[0][0])})
        if len(table) >= 3:
            t = table[-3:]
            order = richardson_order([r["h"] for r in t], [r["kappa_min"] for r in t])
            vals = [r["kappa_min"] for r in table]
            d = np.diff(vals)
            if not (np.all(d < 0) or np.all(d > 0)):
                raise DiscretizationError(f"non-monotone refinement of kappa_min: {vals}")
    kmin = k0 / 4.0 if kmin is None else kmin
    kmax = 4.0 * k0 if kmax is None else kmax
    k_eps = kappa_root_solve(lambda k: kappa, kmin, kmax)
    return DimensionBreakingResult(
        k0=k0, k_eps=k_eps, kappa_min=kappa, mode={"zeta1": z1, "zeta2": z2, "psi": psi, "x": grid.x},
        parity=parity, kmin=kmin, kmax=kmax, eigenvalues=w, neg_count=neg, delta_ess=de,
        refinement=table, richardson_order=order)


def kappa_root_solve(kappa_fn, kmin, kmax, tol=1e-10, max_iter=200):
    """Bisection for kappa(k) + k^2 = 0 on [kmin, kmax]."""
    if not (0 <= kmin < kmax):
        raise BracketError(f"invalid bracket [{kmin}, {kmax}]")

    def f(k):
        return kappa_fn(k) + k * k

    fa, fb = f(kmin), f(kmax)
    if fa == 0.0:
        return float(kmin)
    if fb == 0.0:
        return float(kmax)
    if (fa < 0) == (fb < 0):
        raise BracketError(f"kappa(k) + k^2 has no sign change on [{kmin}, {kmax}]")
    a, b = float(kmin), float(kmax)
    for _ in range(max_iter):
        if b - a < tol:
            break
        m = 0.5 * (a + b)
        fm = f(m)
        if fm == 0.0:
            return m
        if (fm < 0) == (fa < 0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def quadratic_form_witness(coeffs, grid, test=("sech", "zero")):
    """Weighted quadratic form of the (zeta1, psi) block of B~ on a test pair."""
    n, h = grid.n, grid.h
    asm = assemble_Btilde(coeffs, grid, "full")
    sech = np.cosh(grid.x / math.sqrt(coeffs.A1)) ** -1.0
    funcs = {"sech": sech, "zero": np.zeros(n)}
    z1, psi = funcs[test[0]], funcs[test[1]]
    u = np.concatenate([z1, np.zeros(n), psi])
    return float(h * np.dot(asm.weight * u, asm.matrix @ u))


def witness_closed_form(coeffs):
    return -16.0 * math.sqrt(coeffs.A1) * coeffs.A3 / (3.0 * coeffs.A2 * coeffs.A5)


def assemble_A(coeffs, grid):
    """Auxiliary operator A_{0,k} on (zeta1 even, zeta2 odd, phi even), full grid."""
    _check_grid(grid, coeffs)
    n, h = grid.n, grid.h
    a2i = 1.0 / coeffs.A2
    om = coeffs.one_minus_inv_alpha0
    zs = _star(coeffs, grid)
    D2 = d2_matrix(n, h)
    I = sp.identity(n, format="csr")
    A11 = a2i * (I - coeffs.A1 * D2 - (2 * coeffs.A3 + coeffs.A5) * sp.diags(zs * zs))
    A13 = 4.0 * a2i * coeffs.A4 * sp.diags(zs)
    A22 = a2i * (I - coeffs.A1 * D2 - coeffs.A5 * sp.diags(zs * zs))
    A31 = 2.0 * coeffs.A4 * sp.diags(zs)
    A33 = om * I
    M = sp.bmat([[A11, None, A13], [None, A22, None], [A31, None, A33]], format="csr")
    w = np.concatenate([np.ones(2 * n), np.full(n, 2.0 * a2i)])
    return OperatorAssembly(matrix=M, weight=w, grid=grid, symmetry="full")


def _smooth_probe(rng, grid, parity, width_scale):
    n = grid.n
    x = grid.x
    noise = rng.standard_normal(n)
    # low-pass filter and window so the probe is smooth and localized
    k = np.fft.rfftfreq(n, d=grid.h) * 2 * np.pi
    cut = rng.uniform(0.5, 8.0) / width_scale
    f = np.fft.irfft(np.fft.rfft(noise) * np.exp(-(k / cut) ** 2), n)
    ell = rng.uniform(0.3, 6.0) * width_scale
    f *= np.exp(-(x / ell) ** 2)
    s = 1.0 if parity == "even" else -1.0
    return 0.5 * (f + s * f[::-1])


@dataclass
class CoercivityResult:
    min_quotient: float
    seed: int
    trials: int
    quotient_w0: float
    argmin: np.ndarray = field(repr=False, default=None)


def coercivity_check(coeffs, grid, trials=1000, seed=DEFAULT_SEED, count=4, raise_on_fail=True):
    """Minimum of <<A v, v>> / <<w, w>> over random Fix-R probes w orthogonal to w0."""
    n, h = grid.n, grid.h
    A = assemble_A(coeffs, grid)
    B = assemble_Btilde(coeffs, grid, "full")
    w_eig, u = lowest_eigenpairs(B, count)
    w0 = u[:, 0]
    Wb = B.weight
    D1 = d1_matrix(n, h)

    def to_v(w):
        return np.concatenate([w[:2 * n], D1 @ w[2 * n:]])

    def quotient(w):
        v = to_v(w)
        return float(np.dot(A.weight * v, A.matrix @ v) / np.dot(Wb * w, w))

    q0 = quotient(w0)
    rng = np.random.default_rng(seed)
    wsc = math.sqrt(coeffs.A1)
    best, arg = np.inf, None
    for _ in range(trials):
        w = np.concatenate([_smooth_probe(rng, grid, "even", wsc),
                            _smooth_probe(rng, grid, "odd", wsc),
                            _smooth_probe(rng, grid, "odd", wsc)])
        w -= (np.dot(Wb * w, w0) * h) * w0
        q = quotient(w)
        if q < best:
            best, arg = q, w
    if raise_on_fail and not best > 0.0:
        raise CoercivityError(f"non-positive Rayleigh quotient {best:.4g} (seed {seed})", arg)
    return CoercivityResult(min_quotient=best, seed=seed, trials=trials, quotient_w0=q0, argmin=arg)


def aux_quotient_V(coeffs, grid, v):
    """<<A v, v>> / <<v, v>> in the metric of the auxiliary operator's space."""
    A = assemble_A(coeffs, grid)
    return float(np.dot(A.weight * v, A.matrix @ v) / np.dot(A.weight * v, v))
