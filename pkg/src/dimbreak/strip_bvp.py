"""Green's function of -d^2/dy^2 + q^2 on [0, 1] with Neumann data, modal solves and the Gamma fixed point."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.linalg import solve_banded

from .errors import DivergenceError, DomainError, OracleError, SingularModeError

SERIES_Q = 1e-3


def _hyp_ratio(a, b, q, sa, sb):
    """f(a) g(b) / sinh(q) for a, b >= 0 with a + b <= q; f, g = cosh (+1) or sinh (-1)."""
    den = -np.expm1(-2.0 * q)
    return 0.5 * (np.exp(a + b - q) + sb * np.exp(a - b - q) + sa * np.exp(b - a - q)
                  + sa * sb * np.exp(-a - b - q)) / den


def green_regular(q, y, yt):
    """Series for G - 1/q^2 to O(q^2); accurate to ~q^4 for q below SERIES_Q."""
    lo = np.minimum(y, yt)
    m = 1.0 - np.maximum(y, yt)
    P = 0.5 * (lo * lo + m * m)
    Q = (lo**4 + m**4) / 24.0 + 0.25 * lo * lo * m * m
    return (P - 1.0 / 6.0) + q * q * (Q - P / 6.0 + 7.0 / 360.0)


def green_eval(q, y, yt, regular=False):
    """G(q; y, yt) = cosh(q min) cosh(q (1 - max)) / (q sinh q).

    With regular=True the bounded part G - 1/q^2 is returned, computed without cancellation
    for q below SERIES_Q.
    """
    q = float(q)
    if not q >= 0.0 or not math.isfinite(q):
        raise DomainError(f"q must be finite and >= 0, got {q!r}")
    if q == 0.0:
        raise SingularModeError("G is singular at q = 0")
    y, yt = np.broadcast_arrays(np.asarray(y, dtype=float), np.asarray(yt, dtype=float))
    if q < SERIES_Q:
        reg = green_regular(q, y, yt)
        out = reg if regular else 1.0 / (q * q) + reg
    else:
        lo = np.minimum(y, yt)
        hi = np.maximum(y, yt)
        out = _hyp_ratio(q * lo, q * (1.0 - hi), q, 1.0, 1.0) / q
        if regular:
            out = out - 1.0 / (q * q)
    return out if out.ndim else float(out)


def _green_pieces(q, y):
    """Kernel matrices on the node grid, lower (yt <= y) and upper (yt >= y) branches.

    Returns (G_lo, G_up, Gyt_lo, Gyt_up); the yt-derivative jumps by one across the diagonal.
    """
    Y = y[:, None]
    T = y[None, :]
    a_lo = q * np.minimum(T, Y)          # q yt on the lower branch
    b_lo = q * (1.0 - np.maximum(T, Y))  # q (1 - y)
    a_up = q * np.minimum(T, Y)          # q y on the upper branch
    b_up = q * (1.0 - np.maximum(T, Y))  # q (1 - yt)
    if q < SERIES_Q:
        G = 1.0 / (q * q) + green_regular(q, Y, T)
        G_lo = G_up = G
        # derivative of the series in yt, leading terms are exact polynomials
        Gyt_lo = T + q * q * (T**3 / 6.0 + T * (1 - Y) ** 2 / 2.0 - T / 6.0)
        Gyt_up = -(1.0 - T) - q * q * ((1 - T) ** 3 / 6.0 + (1 - T) * Y * Y / 2.0 - (1 - T) / 6.0)
    else:
        G_lo = _hyp_ratio(a_lo, b_lo, q, 1.0, 1.0) / q
        G_up = _hyp_ratio(a_up, b_up, q, 1.0, 1.0) / q
        Gyt_lo = _hyp_ratio(a_lo, b_lo, q, -1.0, 1.0)
        Gyt_up = -_hyp_ratio(a_up, b_up, q, 1.0, -1.0)
    return G_lo, G_up, Gyt_lo, Gyt_up


def _piece_weights(m, h):
    """Composite Newton-Cotes weights for m equal intervals of width h (Simpson, 3/8 tail)."""
    w = np.zeros(m + 1)
    if m == 0:
        return w
    if m == 1:
        w[:] = 0.5 * h
        return w
    ns = m if m % 2 == 0 else m - 3
    for k in range(0, ns, 2):
        w[k:k + 3] += np.array([1.0, 4.0, 1.0]) * h / 3.0
    if m % 2:
        w[ns:ns + 4] += np.array([1.0, 3.0, 3.0, 1.0]) * 3.0 * h / 8.0
    return w


def split_weights(ny):
    """Weights (ny x ny) for integrating over [0, y_i] and [y_i, 1] separately."""
    h = 1.0 / (ny - 1)
    Wlo = np.zeros((ny, ny))
    Wup = np.zeros((ny, ny))
    for i in range(ny):
        Wlo[i, :i + 1] = _piece_weights(i, h)
        Wup[i, i:] = _piece_weights(ny - 1 - i, h)
    return Wlo, Wup


def simpson_weights(ny):
    return _piece_weights(ny - 1, 1.0 / (ny - 1))


def uniform_y(ny):
    if ny < 3 or ny % 2 == 0:
        raise DomainError(f"ny must be odd and >= 3 for Simpson quadrature, got {ny}")
    return np.linspace(0.0, 1.0, ny)


@dataclass
class ModalBvpProblem:
    mu: float
    lam: float
    rhs: np.ndarray
    neumann_top: complex = 0.0
    neumann_bottom: complex = 0.0

    @property
    def q(self):
        return math.hypot(self.mu, self.lam)


def cumulative_split(g, h):
    """I[..., i] = integral of g from y_0 to y_i by Simpson panels with a 3/8 tail for odd i."""
    g = np.asarray(g)
    n = g.shape[-1]
    out = np.zeros(g.shape, dtype=np.result_type(g, float))
    if n < 2:
        return out
    panels = (h / 3.0) * (g[..., 0:n - 2:2] + 4.0 * g[..., 1:n - 1:2] + g[..., 2:n:2])
    S = np.concatenate([np.zeros(g.shape[:-1] + (1,)), np.cumsum(panels, axis=-1)], axis=-1)
    out[..., 0::2] = S[..., :(n + 1) // 2]
    if n > 2:
        # quadratic through y_0, y_1, y_2 integrated over the first interval only
        out[..., 1] = (h / 12.0) * (5.0 * g[..., 0] + 8.0 * g[..., 1] - g[..., 2])
    else:
        out[..., 1] = 0.5 * h * (g[..., 0] + g[..., 1])
    if n > 3:
        i = np.arange(3, n, 2)
        tail = (3.0 * h / 8.0) * (g[..., i - 3] + 3.0 * g[..., i - 2] + 3.0 * g[..., i - 1] + g[..., i])
        out[..., 3::2] = S[..., (i - 3) // 2] + tail
    return out


def _dense_solve(q, y, f, top, p3):
    Wlo, Wup = split_weights(len(y))
    G_lo, G_up, Gt_lo, Gt_up = _green_pieces(q, y)
    out = (Wlo * G_lo + Wup * G_up) @ f + green_eval(q, y, 1.0) * top
    if p3 is not None:
        out = out + (Wlo * Gt_lo + Wup * Gt_up) @ p3
    return out


SEPARABLE_QMAX = 300.0


def green_solve(q, y, f, top=0.0, p3=None):
    """int G f dyt + G(y, 1) top (+ int G_yt p3 dyt) along the last axis, for one q or an array of q.

    q broadcasts against the leading axes of f; quadrature splits at yt = y so the kink of G
    does not degrade the composite rule.
    """
    f = np.asarray(f)
    q = np.asarray(q, dtype=float)
    if np.any(q == 0.0):
        raise SingularModeError("q = 0 mode is excluded from Green solves")
    h = y[1] - y[0]
    qq = q[..., None]
    top = np.asarray(top)[..., None] if np.ndim(top) else top
    big = q > SEPARABLE_QMAX
    qs = np.where(qq > SEPARABLE_QMAX, 1.0, qq)
    cy = np.cosh(qs * y)
    c1y = np.cosh(qs * (1.0 - y))
    shq = np.sinh(qs)

    def up(g):
        return cumulative_split(g[..., ::-1], h)[..., ::-1]

    out = (c1y * cumulative_split(cy * f, h) + cy * up(c1y * f)) / (qs * shq)
    out = out + (cy / (qs * shq)) * top
    if p3 is not None:
        p3 = np.asarray(p3)
        sy = np.sinh(qs * y)
        s1y = np.sinh(qs * (1.0 - y))
        out = out + (c1y * cumulative_split(sy * p3, h) - cy * up(s1y * p3)) / shq
    if np.any(big):
        if q.ndim == 0:
            return _dense_solve(float(q), y, f, top, p3)
        for k in zip(*np.nonzero(big)):
            out[k] = _dense_solve(float(q[k]), y, f[k], top[k] if np.ndim(top) else top,
                                  None if p3 is None else p3[k])
    return out


def solve_modal_bvp(problem, ny=None):
    """Green-function quadrature solution of one modal Neumann problem on a uniform y grid."""
    rhs = np.asarray(problem.rhs)
    ny = len(rhs) if ny is None else ny
    if problem.neumann_bottom != 0:
        raise DomainError("the bottom flux is zero in this problem class")
    if problem.q == 0.0:
        raise SingularModeError("q = 0 mode is excluded from Green solves")
    return green_solve(problem.q, uniform_y(ny), rhs, problem.neumann_top)


def fd_oracle_solve(problem, ny=None):
    """Second-order tridiagonal solve of -u'' + q^2 u = rhs, u'(0) = 0, u'(1) = top."""
    rhs = np.asarray(problem.rhs, dtype=complex)
    ny = len(rhs) if ny is None else ny
    if len(rhs) != ny:
        raise DomainError("rhs length must equal ny")
    q = problem.q
    if q == 0.0:
        raise SingularModeError("q = 0 makes the Neumann problem singular")
    h = 1.0 / (ny - 1)
    ab = np.zeros((3, ny))
    ab[1, :] = 2.0 / h**2 + q * q
    ab[0, 1:] = -1.0 / h**2
    ab[2, :-1] = -1.0 / h**2
    ab[0, 1] = -2.0 / h**2   # ghost u_{-1} = u_1
    ab[2, -2] = -2.0 / h**2  # ghost u_{N+1} = u_{N-1} + 2 h top
    b = rhs.copy()
    b[-1] += 2.0 * problem.neumann_top / h
    try:
        u = solve_banded((1, 1), ab.astype(complex), b)
    except np.linalg.LinAlgError as exc:
        raise OracleError(f"tridiagonal oracle failed: {exc}") from exc
    if not np.all(np.isfinite(u)):
        raise OracleError("tridiagonal oracle produced non-finite values")
    return u


def random_modal_problems(count=20, ny=2049, seed=0x5EED):
    """Seeded modal problems with q in [0.2, 4], polynomial-plus-exponential forcing and a top flux."""
    rng = np.random.default_rng(seed)
    y = uniform_y(ny)
    out = []
    for _ in range(count):
        q = rng.uniform(0.2, 4.0)
        c = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        rhs = c[0] + c[1] * y + c[2] * y**2 + c[3] * np.exp(rng.uniform(-2.0, 2.0) * y)
        top = complex(*rng.standard_normal(2))
        out.append(ModalBvpProblem(mu=0.6 * q, lam=0.8 * q, rhs=rhs, neumann_top=top))
    return out


def oracle_discrepancy(problems):
    """Worst relative l2 gap between the Green-quadrature and tridiagonal solutions."""
    worst = 0.0
    for pr in problems:
        a = solve_modal_bvp(pr)
        b = fd_oracle_solve(pr)
        worst = max(worst, float(np.linalg.norm(a - b) / np.linalg.norm(b)))
    return worst


def dy4(f, h, axis=-1):
    """Fourth-order finite-difference derivative along a uniform axis (one-sided at the ends)."""
    f = np.moveaxis(np.asarray(f), axis, -1)
    d = np.empty_like(f)
    d[..., 2:-2] = (f[..., :-4] - 8 * f[..., 1:-3] + 8 * f[..., 3:-1] - f[..., 4:]) / (12 * h)
    c0 = np.array([-25, 48, -36, 16, -3]) / (12 * h)
    c1 = np.array([-3, -10, 18, -6, 1]) / (12 * h)
    d[..., 0] = f[..., :5] @ c0
    d[..., 1] = f[..., :5] @ c1
    d[..., -1] = -(f[..., -5:][..., ::-1] @ c0)
    d[..., -2] = -(f[..., -5:][..., ::-1] @ c1)
    return np.moveaxis(d, -1, axis)


@dataclass
class StripField:
    values: np.ndarray = field(repr=False)
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)

    @property
    def nx(self):
        return len(self.x)

    @property
    def ny(self):
        return len(self.y)


@dataclass
class GammaSolveResult:
    gamma: StripField
    iterations: int
    increments: list
    ratios: list


class StripSolver:
    """Fourier-in-x / Green-in-y solver for Gamma on a periodic x grid."""

    def __init__(self, x, ny, lam):
        self.x = np.asarray(x, dtype=float)
        self.nx = len(self.x)
        self.h = self.x[1] - self.x[0]
        self.mu = 2.0 * np.pi * np.fft.fftfreq(self.nx, d=self.h)
        self.lam = float(lam)
        self.y = uniform_y(ny)
        self.ny = ny
        self.hy = self.y[1] - self.y[0]
        self.wy = simpson_weights(ny)
        self.q = np.hypot(self.mu, self.lam)

    def dx(self, f):
        return np.fft.ifft(1j * self.mu[:, None] * np.fft.fft(f, axis=0), axis=0)

    def dy(self, f):
        return dy4(f, self.hy, axis=1)

    def G1(self, P1, P2, P3, p):
        """Apply G_1 with the (x, y) samples P1, P2, P3 and the surface datum p(x)."""
        mu, lam = self.mu[:, None], self.lam
        rhs = np.zeros((self.nx, self.ny), dtype=complex)
        if P1 is not None:
            rhs -= 1j * mu * np.fft.fft(P1, axis=0)
        if P2 is not None:
            rhs -= 1j * lam * np.fft.fft(P2, axis=0)
        P3h = np.fft.fft(P3, axis=0) if P3 is not None else None
        top = -1j * self.mu * np.fft.fft(p) if p is not None else np.zeros(self.nx, complex)
        return self._solve(rhs, top, P3h)

    def G2(self, P):
        return self._solve(np.fft.fft(P, axis=0), np.zeros(self.nx, complex), None)

    def _solve(self, rhs, top, p3):
        out = np.zeros((self.nx, self.ny), dtype=complex)
        ok = self.q > 0.0
        out[ok] = green_solve(self.q[ok], self.y, rhs[ok], top[ok],
                              None if p3 is None else p3[ok])
        return np.fft.ifft(out, axis=0)

    def l2(self, f):
        return math.sqrt(self.h * float(np.sum(np.abs(f) ** 2 @ self.wy)))

    def h1(self, f):
        return math.sqrt(self.l2(f) ** 2 + self.l2(self.dx(f)) ** 2 + self.l2(self.dy(f)) ** 2)

    def estimate_norm(self, f):
        """Discrete ||grad f||_1 + lambda ||f||_1 + lambda^2 ||f||_0."""
        fx, fy = self.dx(f), self.dy(f)
        grad = math.sqrt(self.h1(fx) ** 2 + self.h1(fy) ** 2)
        return grad + self.lam * self.h1(f) + self.lam**2 * self.l2(f)


def f_terms(solver, eta, gamma, star_fields):
    """F1, F2, F3 of the Gamma boundary-value problem for given eta(x), Gamma(x, y)."""
    es, esx, px, py = star_fields
    y = solver.y[None, :]
    lam = solver.lam
    eta = eta[:, None]
    eta_x = np.fft.ifft(1j * solver.mu * np.fft.fft(eta[:, 0]))[:, None]
    gx = solver.dx(gamma)
    gy = solver.dy(gamma)
    es_, esx_ = es[:, None], esx[:, None]
    one = 1.0 + es_
    F1 = -es_ * gx - px * eta + y * py * eta_x + y * esx_ * gy
    F2 = -1j * lam * es_ * gamma + 1j * lam * y * py * eta
    F3 = (y * (esx_ * gx + px * eta_x) + es_ * gy / one + py * eta / one**2
          + y**2 * esx_**2 * py * eta / one**2 - y**2 * esx_**2 * gy / one
          - 2.0 * y**2 * esx_ * py * eta_x / one)
    return F1, F2, F3


def solve_gamma(eta, lam, x, ny, star=None, forcing=None, tol=1e-12, max_iter=50):
    """Fixed-point solve Gamma = G1(F1, F2, F3, eta) + G2(forcing) on a periodic x grid.

    `eta` holds x samples (complex allowed). `star` is a StarProfiles instance or None for eps = 0.
    """
    solver = StripSolver(x, ny, lam)
    eta = np.asarray(eta, dtype=complex)
    if star is None or star.eps == 0.0:
        zero = np.zeros((solver.nx, ny))
        fields = (np.zeros(solver.nx), np.zeros(solver.nx), zero, zero)
        eps = 0.0
    else:
        fields = (star.eta(solver.x), star.eta_x(solver.x),
                  star.phi_x(solver.x, solver.y), star.phi_y(solver.x, solver.y))
        eps = star.eps
    extra = solver.G2(forcing) if forcing is not None else 0.0
    gamma = np.zeros((solver.nx, ny), dtype=complex)
    if eps == 0.0:
        # the star fields vanish, so F1 = F2 = F3 = 0 and one application is exact
        F1, F2, F3 = f_terms(solver, eta, gamma, fields)
        gamma = solver.G1(F1, F2, F3, eta) + extra
        return GammaSolveResult(gamma=StripField(gamma, solver.x, solver.y), iterations=1,
                                increments=[solver.estimate_norm(gamma)], ratios=[])
    increments, ratios = [], []
    it = 0
    bad = 0
    for it in range(1, max_iter + 1):
        F1, F2, F3 = f_terms(solver, eta, gamma, fields)
        new = solver.G1(F1, F2, F3, eta) + extra
        d = solver.estimate_norm(new - gamma)
        nn = solver.estimate_norm(new)
        gamma = new
        rel = d / nn if nn > 0 else 0.0
        if increments:
            r = d / increments[-1] if increments[-1] > 0 else 0.0
            ratios.append(r)
            bad = bad + 1 if r >= 1.0 else 0
            if bad >= 3:
                raise DivergenceError(
                    f"fixed point does not contract at eps = {eps}: ratios {ratios[-3:]}",
                    eps=eps, ratios=ratios)
        increments.append(d)
        if rel < tol or (it > 1 and d == 0.0):
            break
    return GammaSolveResult(gamma=StripField(gamma, solver.x, solver.y), iterations=it,
                            increments=increments, ratios=ratios)


def chi_mask(mu, mu0, delta):
    """Sharp spectral cutoff onto |mu| in [mu0 - delta, mu0 + delta]."""
    return (np.abs(np.abs(mu) - mu0) <= delta).astype(float)


def gamma1_deviation(params, coeffs, eps, k0, ny=33, L=None, h_target=0.25, delta=None):
    """L2 norm on the strip of Gamma^(1)(eta1) minus its leading-order form.

    eta1 = (eps/2) zeta*(eps x) e^{i mu0 x} + c.c. projected by the cutoff chi; lambda = eps k0.
    """
    mu0 = params.mu0
    delta = mu0 / 4.0 if delta is None else delta
    if L is None:
        L = 40.0 * math.sqrt(coeffs.A1) / eps
    nx = 2 ** int(math.ceil(math.log2(2 * L / h_target)))
    h = 2 * L / nx
    x = (np.arange(nx) - nx // 2) * h
    amp, w = math.sqrt(2.0 / coeffs.A5), math.sqrt(coeffs.A1)
    eta1 = eps * amp / np.cosh(eps * x / w) * np.cos(mu0 * x)
    mu = 2.0 * np.pi * np.fft.fftfreq(nx, d=h)
    eh = np.fft.fft(eta1) * chi_mask(mu, mu0, delta)
    lam = eps * k0
    y = uniform_y(ny)
    wy = simpson_weights(ny)
    lead_y = np.cosh(mu0 * y) / math.sinh(mu0)
    dev = np.zeros((nx, ny), dtype=complex)
    for k in np.nonzero(eh)[0]:
        q = math.hypot(mu[k], lam)
        g1 = green_eval(q, y, 1.0)
        dev[k] = (-1j * mu[k] * g1 + 1j * np.sign(mu[k]) * lead_y) * eh[k]
    dev = np.fft.ifft(dev, axis=0)
    return math.sqrt(h * float(np.sum(np.abs(dev) ** 2 @ wy)))


def fit_exponent(eps_values, norms):
    p = np.polyfit(np.log(eps_values), np.log(norms), 1)
    return float(p[0])
