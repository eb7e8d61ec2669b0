"""Discretized linearized spatial-dynamics operator L about the line solitary wave.

The state is u = (eta, omega, Gamma, xi). Writing r = (eta, Gamma) and p = (omega, xi), the
operator has the form

    L (r, p) = (M^{-1} P p, M^{-1} K r)

where K is the Hessian of the quadratic energy of the eta/Gamma equations (with the boundary
condition Gamma_y = B_l(eta, Gamma) imposed weakly), P is the per-column Hessian of the
omega/xi energy and M holds quadrature weights. x is periodic with high-order centered
differences; y uses Legendre-Gauss-Lobatto collocation.
"""

from dataclasses import dataclass, field
import math
import time

import numpy as np
import scipy.sparse as sp
from numpy.polynomial import legendre as npleg
from scipy.sparse.linalg import splu

from .errors import DomainError, SearchFailure


def lgl_nodes(n):
    """Legendre-Gauss-Lobatto nodes, weights and differentiation matrix on [0, 1]."""
    if n < 3:
        raise DomainError("need at least 3 LGL nodes")
    N = n - 1
    cN = np.zeros(N + 1)
    cN[N] = 1.0
    inner = npleg.legroots(npleg.legder(cN))
    t = np.concatenate([[-1.0], np.sort(inner), [1.0]])
    PN = npleg.legval(t, cN)
    w = 2.0 / (N * (N + 1) * PN**2)
    D = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                D[i, j] = PN[i] / (PN[j] * (t[i] - t[j]))
    D[0, 0] = -N * (N + 1) / 4.0
    D[N, N] = N * (N + 1) / 4.0
    return 0.5 * (t + 1.0), 0.5 * w, 2.0 * D


def central_weights(order):
    """Coefficients c_k, d_k (k = 1..m) of the order-2m central first and second differences."""
    m = order // 2
    if order % 2 or m < 1:
        raise DomainError("difference order must be a positive even integer")
    f = math.factorial
    c = [(-1) ** (k + 1) * 2.0 * f(m) ** 2 / (k * f(m - k) * f(m + k)) for k in range(1, m + 1)]
    d = [(-1) ** (k + 1) * 2.0 * f(m) ** 2 / (k * k * f(m - k) * f(m + k)) for k in range(1, m + 1)]
    return np.array(c), np.array(d)


def periodic_d1(n, h, order):
    c, _ = central_weights(order)
    rows, cols, vals = [], [], []
    i = np.arange(n)
    for k, ck in enumerate(c, start=1):
        for s in (k, -k):
            rows.append(i)
            cols.append((i + s) % n)
            vals.append(np.full(n, np.sign(s) * ck / (2.0 * h)))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def periodic_d2(n, h, order):
    _, d = central_weights(order)
    i = np.arange(n)
    rows, cols, vals = [i], [i], [np.full(n, -2.0 * d.sum() / h**2)]
    for k, dk in enumerate(d, start=1):
        for s in (k, -k):
            rows.append(i)
            cols.append((i + s) % n)
            vals.append(np.full(n, dk / h**2))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n, n))


def d1_symbol(mu, h, order):
    c, _ = central_weights(order)
    k = np.arange(1, len(c) + 1)
    return np.sum(c * np.sin(np.multiply.outer(mu, k) * h), axis=-1) / h


def d2_symbol(mu, h, order):
    """Returns s with D2 e^{i mu x} = -s e^{i mu x}."""
    _, d = central_weights(order)
    k = np.arange(1, len(d) + 1)
    return np.sum(d * 2.0 * (1.0 - np.cos(np.multiply.outer(mu, k) * h)), axis=-1) / h**2


@dataclass(frozen=True)
class StripGrid:
    nx: int
    Lx: float
    ny: int
    order: int = 12

    def __post_init__(self):
        if self.nx < 16 or self.nx % 2:
            raise DomainError("nx must be even and >= 16")
        if self.ny < 3:
            raise DomainError("ny must be >= 3")

    @property
    def h(self):
        return 2.0 * self.Lx / self.nx

    @property
    def x(self):
        return (np.arange(self.nx) - self.nx // 2) * self.h

    def reflect_index(self):
        return (self.nx - np.arange(self.nx)) % self.nx

    def to_dict(self):
        return {"nx": self.nx, "Lx": self.Lx, "ny": self.ny, "order": self.order,
                "h": self.h, "y": "legendre-gauss-lobatto"}


def default_strip_grid(coeffs, eps, ny=17, order=12, h_target=0.22, Lx_factor=30.0):
    Lx = Lx_factor * math.sqrt(coeffs.A1) / eps
    nx = 2 ** int(math.ceil(math.log2(2.0 * Lx / h_target)))
    return StripGrid(nx=nx, Lx=Lx, ny=ny, order=order)


@dataclass
class StateVector:
    eta: np.ndarray
    omega: np.ndarray
    gamma: np.ndarray
    xi: np.ndarray

    def flat(self):
        nx = len(self.eta)
        r = np.concatenate([self.eta[:, None], self.gamma], axis=1).reshape(-1)
        p = np.concatenate([self.omega[:, None], self.xi], axis=1).reshape(-1)
        return np.concatenate([r, p])

    @classmethod
    def from_flat(cls, v, nx, ny):
        n = nx * (ny + 1)
        r = v[:n].reshape(nx, ny + 1)
        p = v[n:].reshape(nx, ny + 1)
        return cls(eta=r[:, 0].copy(), omega=p[:, 0].copy(), gamma=r[:, 1:].copy(),
                   xi=p[:, 1:].copy())


@dataclass
class LinearOperatorHandle:
    K: sp.csr_matrix = field(repr=False)
    Pblocks: np.ndarray = field(repr=False)
    Nblocks: np.ndarray = field(repr=False)
    mass: np.ndarray = field(repr=False)
    grid: StripGrid
    eps: float
    bc_mode: str = "weak Neumann: Gamma_y = B_l(eta, Gamma) as natural condition on y = 0, 1"
    asymmetry: float = 0.0
    star_fields: dict = field(default=None, repr=False)
    beta0: float = 0.0

    @property
    def nr(self):
        return self.grid.nx * (self.grid.ny + 1)

    def _blockmul(self, blocks, v):
        nx, m = self.grid.nx, self.grid.ny + 1
        return np.einsum("ijk,ik->ij", blocks, v.reshape(nx, m)).reshape(-1)

    def apply_flat(self, v):
        nr = self.nr
        r, p = v[:nr], v[nr:]
        top = self._blockmul(self.Pblocks, p) / self.mass
        bot = (self.K @ r) / self.mass
        return np.concatenate([top, bot])

    def apply(self, u):
        g = self.grid
        return StateVector.from_flat(self.apply_flat(u.flat()), g.nx, g.ny)

    def N_matrix(self):
        return block_diag_sparse(self.Nblocks)

    def reverser(self, v):
        nr = self.nr
        return np.concatenate([v[:nr], -v[nr:]])

    def symplectic(self, v1, v2):
        """Omega(u1, u2) = int (omega2 eta1 - eta2 omega1) + int int (xi2 Gamma1 - Gamma2 xi1)."""
        nr = self.nr
        r1, p1, r2, p2 = v1[:nr], v1[nr:], v2[:nr], v2[nr:]
        return np.sum(self.mass * (p2 * r1 - r2 * p1))

    def fixR_basis(self):
        return fix_r_basis(self.grid)

    def reflect(self, v):
        """R: (eta, omega, Gamma, xi)(x) -> (eta, omega, -Gamma, -xi)(-x)."""
        g = self.grid
        m = g.ny + 1
        idx = g.reflect_index()
        sign = np.concatenate([[1.0], -np.ones(g.ny)])
        nr = self.nr
        r = v[:nr].reshape(g.nx, m)[idx] * sign
        p = v[nr:].reshape(g.nx, m)[idx] * sign
        return np.concatenate([r.reshape(-1), p.reshape(-1)])


def block_diag_sparse(blocks):
    nb, m, _ = blocks.shape
    base = np.arange(nb)[:, None, None] * m
    rows = base + np.arange(m)[None, :, None] + np.zeros((1, 1, m), dtype=int)
    cols = base + np.arange(m)[None, None, :] + np.zeros((1, m, 1), dtype=int)
    return sp.csr_matrix((blocks.reshape(-1), (rows.reshape(-1), cols.reshape(-1))),
                         shape=(nb * m, nb * m))


def fix_r_basis(grid):
    """Orthonormal basis of r = (eta even, Gamma odd) in the interleaved ordering."""
    nx, m = grid.nx, grid.ny + 1
    idx = grid.reflect_index()
    rows, cols, vals = [], [], []
    col = 0
    r2 = 1.0 / math.sqrt(2.0)
    for i in range(nx):
        j = idx[i]
        if j < i:
            continue
        for comp in range(m):
            s = 1.0 if comp == 0 else -1.0
            if j == i:
                if s > 0:
                    rows.append(i * m + comp)
                    cols.append(col)
                    vals.append(1.0)
                    col += 1
            else:
                rows += [i * m + comp, j * m + comp]
                cols += [col, col]
                vals += [r2, s * r2]
                col += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(nx * m, col))


def _star_on_grid(star, grid, y):
    x = grid.x
    if star is None or star.eps == 0.0:
        z1 = np.zeros(grid.nx)
        z2 = np.zeros((grid.nx, len(y)))
        return {"eta": z1, "eta_x": z1, "phi_x": z2, "phi_y": z2}
    idx = grid.reflect_index()
    # x = -Lx is its own mirror on the periodic grid, so odd fields must vanish there
    even = lambda f: 0.5 * (f + f[idx])  # noqa: E731
    odd = lambda f: 0.5 * (f - f[idx])  # noqa: E731
    return {"eta": even(star.eta(x)), "eta_x": odd(star.eta_x(x)),
            "phi_x": even(star.phi_x(x, y)), "phi_y": odd(star.phi_y(x, y))}


def assemble_L(params, star, grid, check_symmetry=True):
    """Assemble K, P and M for the discretized L at the given line-wave profiles."""
    if star is not None and abs(star.eps - params.eps) > 1e-15:
        raise DomainError(f"profiles built at eps = {star.eps} but params carry eps = {params.eps}")
    nx, ny, h = grid.nx, grid.ny, grid.h
    m = ny + 1
    y, wy, Dy = lgl_nodes(ny)
    sf = _star_on_grid(star, grid, y)
    es, esx = sf["eta"], sf["eta_x"]
    px, py = sf["phi_x"].reshape(-1), sf["phi_y"].reshape(-1)
    one = 1.0 + es
    if np.any(one <= 0.0):
        raise DomainError("1 + eta* must stay positive")
    a0, b0 = params.alpha0, params.beta0
    e2 = params.eps**2

    nr = nx * m
    ii = np.arange(nx)
    E_eta = sp.csr_matrix((np.ones(nx), (ii, ii * m)), shape=(nx, nr))
    gi = (ii[:, None] * m + 1 + np.arange(ny)[None, :]).reshape(-1)
    E_gam = sp.csr_matrix((np.ones(nx * ny), (np.arange(nx * ny), gi)), shape=(nx * ny, nr))
    D1 = periodic_d1(nx, h, grid.order)
    D2 = periodic_d2(nx, h, grid.order)
    Iy = sp.identity(ny, format="csr")
    Ix = sp.identity(nx, format="csr")
    lift = sp.kron(Ix, sp.csr_matrix(np.ones((ny, 1))), format="csr")
    top = sp.kron(Ix, sp.csr_matrix(([1.0], ([0], [ny - 1])), shape=(1, ny)), format="csr")

    eta_op = E_eta
    etax_op = D1 @ E_eta
    etag = lift @ E_eta
    etaxg = lift @ etax_op
    gx = sp.kron(D1, Iy, format="csr") @ E_gam
    gy = sp.kron(Ix, sp.csr_matrix(Dy), format="csr") @ E_gam

    Y = np.tile(y, nx)
    W2 = h * np.tile(wy, nx)
    rep = lambda v: np.repeat(v, ny)  # noqa: E731
    es_g, esx_g, one_g = rep(es), rep(esx), rep(one)

    terms_line = [
        (eta_op, eta_op, np.full(nx, a0 + e2)),
        (etax_op, etax_op, b0 * ((1.0 + esx**2) ** -1.5 - 1.0)),
    ]
    grid_terms = [
        (gy, gy, np.ones(nx * ny)),
        # -F1 Gamma'_x
        (gx, gx, es_g),
        (gx, etag, px),
        (gx, etaxg, -Y * py),
        (gx, gy, -Y * esx_g),
        # -F3 Gamma'_y
        (gy, gx, -Y * esx_g),
        (gy, etaxg, -Y * px + 2.0 * Y**2 * esx_g * py / one_g),
        (gy, gy, -es_g / one_g + Y**2 * esx_g**2 / one_g),
        (gy, etag, -(py / one_g**2) * (1.0 + Y**2 * esx_g**2)),
        # eta' int T0
        (etag, gx, px),
        (etag, gy, -(py / one_g**2) * (1.0 + Y**2 * esx_g**2)),
        (etag, etag, py**2 * (1.0 + Y**2 * esx_g**2) / one_g**3),
        (etag, etaxg, -Y**2 * esx_g * py**2 / one_g**2),
        # -eta'_x int T1
        (etaxg, gx, -Y * py),
        (etaxg, gy, -Y * px + 2.0 * Y**2 * esx_g * py / one_g),
        (etaxg, etaxg, Y**2 * py**2 / one_g),
        (etaxg, etag, -Y**2 * py**2 * esx_g / one_g**2),
    ]
    B = sp.csr_matrix((nr, nr))
    for A, C, c in terms_line:
        B = B + A.T @ sp.diags(h * c) @ C
    for A, C, c in grid_terms:
        if np.any(c != 0.0):
            B = B + A.T @ sp.diags(W2 * c) @ C
    # constant-coefficient second-order parts with the symmetric D2 (no grid-scale null modes)
    B = B - b0 * h * (E_eta.T @ D2 @ E_eta)
    B = B - h * (E_gam.T @ sp.kron(D2, sp.diags(wy), format="csr") @ E_gam)
    # surface coupling: -Gamma_x|_1 eta' + eta_x Gamma'|_1
    B = B - h * (E_eta.T @ D1 @ top @ E_gam) + h * ((top @ E_gam).T @ D1 @ E_eta)
    B = B.tocsr()
    asym = 0.0
    if check_symmetry:
        d = (B - B.T).tocsr()
        asym = (abs(d).max() if d.nnz else 0.0) / abs(B).max()
    K = (0.5 * (B + B.T)).tocsr()
    K.eliminate_zeros()

    # omega/xi energy: 0.5 [c W^2 + sum_j w_j xi_j^2 / (1 + eta*)], W = omega + sum_j w_j a_j xi_j
    cc = np.sqrt(1.0 + esx**2) / b0
    a = (y[None, :] * sf["phi_y"]) / one[:, None]
    v = np.concatenate([np.ones((nx, 1)), wy[None, :] * a], axis=1)
    P = cc[:, None, None] * v[:, :, None] * v[:, None, :]
    diag = np.concatenate([np.zeros((nx, 1)), wy[None, :] / one[:, None]], axis=1)
    P[:, np.arange(m), np.arange(m)] += diag
    P *= h
    mass = h * np.tile(np.concatenate([[1.0], wy]), nx)
    Mb = mass.reshape(nx, m)
    Nb = Mb[:, :, None] * np.linalg.inv(P) * Mb[:, None, :]
    Nb = 0.5 * (Nb + np.transpose(Nb, (0, 2, 1)))
    return LinearOperatorHandle(K=K, Pblocks=P, Nblocks=Nb, mass=mass, grid=grid,
                                eps=params.eps, asymmetry=asym, star_fields=sf, beta0=b0)


def h1_term(handle, omega, xi):
    """h1(omega, xi) = c (omega + (1+eta*)^{-1} int y Phi*_y xi dy) - omega / beta0."""
    g = handle.grid
    y, wy, _ = lgl_nodes(g.ny)
    sf = handle.star_fields
    one = 1.0 + sf["eta"]
    c = np.sqrt(1.0 + sf["eta_x"] ** 2) / handle.beta0
    W = omega + (xi * (y[None, :] * sf["phi_y"])) @ wy / one
    return c * W - omega / handle.beta0


def random_probe(rng, handle):
    v = rng.standard_normal(2 * handle.nr) + 1j * rng.standard_normal(2 * handle.nr)
    return v


def reverser_check(handle, trials=50, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        v = random_probe(rng, handle)
        Lv = handle.apply_flat(v)
        d = handle.reverser(Lv) + handle.apply_flat(handle.reverser(v))
        worst = max(worst, float(np.linalg.norm(d) / np.linalg.norm(Lv)))
    return worst


def symplectic_check(handle, trials=50, seed=1):
    """max |Omega(L u1, u2) + Omega(u1, L u2)| / (||L u1|| ||u2|| + ||u1|| ||L u2||) (mass-weighted)."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    sw = np.sqrt(np.concatenate([handle.mass, handle.mass]))
    for _ in range(trials):
        u1 = rng.standard_normal(2 * handle.nr)
        u2 = rng.standard_normal(2 * handle.nr)
        L1, L2 = handle.apply_flat(u1), handle.apply_flat(u2)
        s = handle.symplectic(L1, u2) + handle.symplectic(u1, L2)
        scale = (np.linalg.norm(sw * L1) * np.linalg.norm(sw * u2)
                 + np.linalg.norm(sw * u1) * np.linalg.norm(sw * L2))
        worst = max(worst, float(abs(s) / scale))
    return worst


def linearity_check(handle, seed=2):
    """Superposition defect relative to ||u|| + ||v|| and relative to ||Lu|| + ||Lv||.

    The first figure carries a factor ||L|| of rounding, so it scales with the grid.
    """
    rng = np.random.default_rng(seed)
    u, v = random_probe(rng, handle), random_probe(rng, handle)
    a, b = 0.7 - 0.2j, -1.3 + 0.5j
    Lu, Lv = handle.apply_flat(u), handle.apply_flat(v)
    d = np.linalg.norm(handle.apply_flat(a * u + b * v) - a * Lu - b * Lv)
    return {"relative": float(d / (np.linalg.norm(u) + np.linalg.norm(v))),
            "operator_scaled": float(d / (np.linalg.norm(Lu) + np.linalg.norm(Lv))),
            "operator_gain": float(max(np.linalg.norm(Lu) / np.linalg.norm(u),
                                       np.linalg.norm(Lv) / np.linalg.norm(v)))}


def flat_symbol(handle, k_index, lam):
    """Schur complement of K + lam^2 N onto eta for the Fourier mode e^{i mu_k x}, divided by h.

    At eps = 0 this approximates g_0(mu, lam) for the discrete wavenumbers of the stencils.
    """
    g = handle.grid
    nx, m, h = g.nx, g.ny + 1, g.h
    mu = 2.0 * np.pi * k_index / (nx * h)
    phase = np.exp(1j * mu * g.x)
    N = handle.N_matrix()
    A = handle.K + lam**2 * N
    cols = []
    for comp in range(m):
        v = np.zeros((nx, m), dtype=complex)
        v[:, comp] = phase
        Av = (A @ v.reshape(-1)).reshape(nx, m)
        cols.append(Av[0] / phase[0])
    S = np.array(cols).T
    s = S[0, 0] - S[0, 1:] @ np.linalg.solve(S[1:, 1:], S[1:, 0])
    return mu, float((s / h).real)


@dataclass
class EigenSearchResult:
    lam: complex
    residual: float
    mode: np.ndarray = field(repr=False)
    iterations: int
    ritz: list
    target: float
    timings: dict
    fix_r: bool
    mode_asymmetry: float


def _shift_solver(handle, sigma, basis=None, refine=1):
    """Returns a solver for (L - i sigma) u = b via the real symmetric system (K + sigma^2 N)."""
    N = handle.N_matrix()
    A = (handle.K + sigma**2 * N).tocsc()
    if basis is not None:
        A = (basis.T @ A @ basis).tocsc()
    lu = splu(A, permc_spec="MMD_AT_PLUS_A")
    nr = handle.nr
    mass = handle.mass
    Pinv = np.linalg.inv(handle.Pblocks)

    def solve_reduced(rhs):
        x = lu.solve(rhs)
        for _ in range(refine):
            x = x + lu.solve(rhs - A @ x)
        return x

    def solve_real(rhs):
        if basis is None:
            return solve_reduced(rhs)
        return basis @ solve_reduced(basis.T @ rhs)

    def solve(b):
        br, bp = b[:nr], b[nr:]
        rhs = mass * bp + 1j * sigma * (N @ br)
        r = solve_real(np.ascontiguousarray(rhs.real)) + 1j * solve_real(np.ascontiguousarray(rhs.imag))
        p = handle._blockmul(Pinv, mass * (br + 1j * sigma * r))
        return np.concatenate([r, p])

    return solve


def imaginary_eigenvalue_search(handle, target, restrict_fixR=False, tol=1e-8, max_iter=500,
                                ritz_count=2):
    """Shift-invert power iteration for the eigenvalue of L nearest i * target."""
    if not target > 0:
        raise DomainError("target must be positive")
    t0 = time.perf_counter()
    basis = fix_r_basis(handle.grid) if restrict_fixR else None
    try:
        solve = _shift_solver(handle, target, basis)
    except RuntimeError as exc:
        raise SearchFailure(f"sparse factorization failed: {exc}") from exc
    t1 = time.perf_counter()
    v = np.ones(2 * handle.nr, dtype=complex)
    if restrict_fixR:
        v = 0.5 * (v + handle.reflect(v))
    v /= np.linalg.norm(v)
    shift = 1j * target
    lam = shift
    res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        w = solve(v)
        if restrict_fixR:
            w = 0.5 * (w + handle.reflect(w))
        theta = np.vdot(v, w)
        if theta == 0 or not np.all(np.isfinite(w)):
            raise SearchFailure("shifted solve broke down", {"iteration": it})
        v = w / np.linalg.norm(w)
        Lv = handle.apply_flat(v)
        lam = np.vdot(v, Lv)
        res = float(np.linalg.norm(Lv - lam * v))
        if res < tol:
            break
    t2 = time.perf_counter()
    if not res < tol:
        raise SearchFailure(f"no convergence in {max_iter} iterations (residual {res:.3e})",
                            {"residual": res, "lambda": complex(lam), "iterations": it})
    # two nearest Ritz values from a short subspace iteration on the same shifted operator
    ritz = _ritz_pair(handle, solve, v, shift, restrict_fixR, ritz_count)
    t3 = time.perf_counter()
    ph = v[np.argmax(np.abs(v))]
    vn = v * (abs(ph) / ph)
    asym = float(np.linalg.norm(handle.reflect(vn) - vn) / np.linalg.norm(vn))
    return EigenSearchResult(lam=complex(lam), residual=res, mode=vn, iterations=it, ritz=ritz,
                             target=float(target),
                             timings={"factorize": t1 - t0, "iterate": t2 - t1, "ritz": t3 - t2},
                             fix_r=restrict_fixR, mode_asymmetry=asym)


def _ritz_pair(handle, solve, v, shift, restrict_fixR, count, sweeps=8):
    rng = np.random.default_rng(0)
    Q = [v]
    for _ in range(count - 1):
        w = rng.standard_normal(v.size) + 0j
        if restrict_fixR:
            w = 0.5 * (w + handle.reflect(w))
        Q.append(w)
    Q = np.linalg.qr(np.array(Q).T)[0]
    for _ in range(sweeps):
        Q = np.linalg.qr(np.array([solve(q) for q in Q.T]).T)[0]
    H = Q.conj().T @ np.array([handle.apply_flat(q) for q in Q.T]).T
    vals = np.linalg.eigvals(H)
    return sorted((complex(z) for z in vals), key=lambda z: abs(z - shift))


def instability_report(params, k_eps):
    if not k_eps > 0:
        raise DomainError("k_eps must be positive")
    eps = params.eps
    freq = eps * k_eps
    period = math.inf if freq == 0 else 2.0 * math.pi / freq
    return {
        "tau0": params.tau0, "eps": eps, "k_eps": k_eps,
        "transverse_frequency": freq,
        "unstable_period_threshold": period,
        "statement": ("line wave is transversely linearly unstable to perturbations with "
                      f"transverse period above {period:.6g}; bifurcating modulated waves have "
                      f"transverse frequency {freq:.6g} + O(|s|^2)"),
    }
