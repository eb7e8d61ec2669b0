"""Solitary solutions of the envelope equations and the second-order line-wave profiles."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .errors import DomainError, NoSolitonError


@dataclass(frozen=True)
class Grid1D:
    L: float
    n: int
    bc: str = "decay-truncated"
    x: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 16:
            raise DomainError(f"grid needs n >= 16, got {self.n}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise DomainError(f"grid half-length must be positive, got {self.L}")
        if self.bc == "decay-truncated":
            x = np.linspace(-self.L, self.L, self.n)
            x = 0.5 * (x - x[::-1])  # exact antisymmetry
        elif self.bc == "periodic":
            if self.n % 2:
                raise DomainError("periodic grids use an even point count")
            j = np.arange(self.n) - self.n // 2
            x = j * self.h
        else:
            raise DomainError(f"unknown boundary tag {self.bc!r}")
        object.__setattr__(self, "x", x)

    @property
    def h(self):
        if self.bc == "periodic":
            return 2.0 * self.L / self.n
        return 2.0 * self.L / (self.n - 1)

    def reflect_index(self):
        """Index map i -> index of -x_i."""
        i = np.arange(self.n)
        if self.bc == "periodic":
            return (self.n - i) % self.n
        return self.n - 1 - i


@dataclass(frozen=True)
class SolitonProfile:
    """zeta*(X) = amp sech(X / width) with the mean-flow derivative psi_X = psi_coeff zeta*^2."""

    amp: float
    width: float
    psi_coeff: float
    X: np.ndarray = field(repr=False, compare=False)

    @property
    def zeta_star(self):
        return zeta(self.X, self.amp, self.width)

    @property
    def xi_star(self):
        return self.X * self.zeta_star

    @property
    def psi_x_star(self):
        return self.psi_coeff * self.zeta_star**2

    def scaled(self, factor):
        return SolitonProfile(self.amp * factor, self.width, self.psi_coeff, self.X)


def _sech(t):
    # 1/cosh overflows to 0 gracefully, which is what the tails need
    with np.errstate(over="ignore"):
        return 1.0 / np.cosh(t)


def zeta(X, amp, width):
    return amp * _sech(np.asarray(X) / width)


def zeta_x(X, amp, width):
    t = np.asarray(X) / width
    return -(amp / width) * _sech(t) * np.tanh(t)


def zeta_xx(X, amp, width):
    s = _sech(np.asarray(X) / width)
    return (amp / width**2) * (s - 2.0 * s**3)


def build_soliton(coeffs, grid, sign=1):
    if coeffs.A5 <= 0.0 or coeffs.A1 <= 0.0:
        raise NoSolitonError(f"no sech solution: A1 = {coeffs.A1}, A5 = {coeffs.A5}")
    if sign not in (1, -1):
        raise DomainError("sign must be +1 or -1")
    amp = sign * math.sqrt(2.0 / coeffs.A5)
    psi_coeff = -coeffs.A4 / coeffs.one_minus_inv_alpha0
    return SolitonProfile(amp=amp, width=math.sqrt(coeffs.A1), psi_coeff=psi_coeff, X=grid.x)


def _fd_second(u, h):
    """Three-point second difference with zero values outside the grid."""
    up = np.concatenate(([0.0], u, [0.0]))
    return (up[2:] - 2.0 * up[1:-1] + up[:-2]) / (h * h)


def _fd_first(u, h):
    up = np.concatenate(([0.0], u, [0.0]))
    return (up[2:] - up[:-2]) / (2.0 * h)


def nls_residual(profile, coeffs, grid, method="analytic"):
    """sup |zeta - A1 zeta'' - A5 zeta^3| on the grid."""
    z = profile.zeta_star
    if method == "analytic":
        zxx = zeta_xx(profile.X, profile.amp, profile.width)
    elif method == "fd":
        zxx = _fd_second(z, grid.h)
    else:
        raise DomainError(f"unknown method {method!r}")
    r = z - coeffs.A1 * zxx - coeffs.A5 * z**3
    return float(np.max(np.abs(r)))


def ds_residual(profile, coeffs, grid, method="analytic"):
    """Sup-norm residuals of both z-independent envelope equations for (zeta*, psi)."""
    z = profile.zeta_star
    px = profile.psi_x_star
    if method == "analytic":
        zx = zeta_x(profile.X, profile.amp, profile.width)
        zxx = zeta_xx(profile.X, profile.amp, profile.width)
        pxx = 2.0 * profile.psi_coeff * z * zx
        z2x = 2.0 * z * zx
    elif method == "fd":
        zxx = _fd_second(z, grid.h)
        pxx = _fd_first(px, grid.h)
        z2x = _fd_first(z * z, grid.h)
    else:
        raise DomainError(f"unknown method {method!r}")
    r1 = z - coeffs.A1 * zxx - coeffs.A3 * z**3 + 4.0 * coeffs.A4 * z * px
    r2 = -coeffs.one_minus_inv_alpha0 * pxx - coeffs.A4 * z2x
    return float(np.max(np.abs(r1))), float(np.max(np.abs(r2)))


class StarProfiles:
    """Analytic evaluation of eta*_1 + eta*_2 and Phi*_1 + Phi*_2 and their first derivatives.

    The C0 and C3 contributions are omitted (taken as zero).
    """

    def __init__(self, params, coeffs, pcoeffs, sign=1):
        self.eps = float(params.eps)
        self.mu = params.mu0
        self.amp = sign * math.sqrt(2.0 / coeffs.A5)
        self.width = math.sqrt(coeffs.A1)
        self.pc = pcoeffs
        self.sign = sign

    def _env(self, x):
        X = self.eps * np.asarray(x, dtype=float)
        return zeta(X, self.amp, self.width), zeta_x(X, self.amp, self.width)

    def antiderivative_zeta2(self, X):
        """Closed-form odd antiderivative of zeta*^2 in the slow variable."""
        return self.amp**2 * self.width * np.tanh(np.asarray(X) / self.width)

    def eta_parts(self, x):
        e, mu, pc = self.eps, self.mu, self.pc
        Z, _ = self._env(x)
        eta1 = e * Z * np.cos(mu * x)
        eta2 = -pc.C1 * e**2 * Z**2 * np.cos(2 * mu * x) - pc.C2 * e**2 * Z**2
        return eta1, eta2

    def eta(self, x):
        a, b = self.eta_parts(x)
        return a + b

    def eta_x(self, x):
        e, mu, pc = self.eps, self.mu, self.pc
        Z, Zp = self._env(x)
        c, s = np.cos(mu * x), np.sin(mu * x)
        c2, s2 = np.cos(2 * mu * x), np.sin(2 * mu * x)
        d1 = e**2 * Zp * c - e * mu * Z * s
        d2 = (-pc.C1 * e**2 * (2 * e * Z * Zp * c2 - 2 * mu * Z**2 * s2)
              - 2 * pc.C2 * e**3 * Z * Zp)
        return d1 + d2

    def _y_factors(self, y):
        mu, pc = self.mu, self.pc
        y = np.asarray(y, dtype=float)
        shm = math.sinh(mu)
        sh2m = math.sinh(2 * mu)
        Y1 = np.cosh(mu * y) / shm
        Y1p = mu * np.sinh(mu * y) / shm
        Y2 = mu * y * np.sinh(mu * y) / (2 * shm) - pc.C5 * np.cosh(2 * mu * y) / sh2m
        Y2p = (mu * (np.sinh(mu * y) + mu * y * np.cosh(mu * y)) / (2 * shm)
               - 2 * mu * pc.C5 * np.sinh(2 * mu * y) / sh2m)
        return Y1, Y1p, Y2, Y2p

    def phi_parts(self, x, y, antiderivative=None):
        """(Phi*_1, Phi*_2) on the tensor grid x[:, None], y[None, :]."""
        e, mu, pc = self.eps, self.mu, self.pc
        x = np.asarray(x, dtype=float)
        Z, _ = self._env(x)
        Y1, _, Y2, _ = self._y_factors(y)
        if antiderivative is None:
            antiderivative = self.antiderivative_zeta2(e * x)
        p1 = (e * Z * np.sin(mu * x))[:, None] * Y1[None, :]
        S2 = e**2 * Z**2 * np.sin(2 * mu * x)
        p2 = S2[:, None] * Y2[None, :] - (pc.C4 * e * antiderivative)[:, None]
        return p1, p2

    def phi_x(self, x, y):
        e, mu, pc = self.eps, self.mu, self.pc
        Z, Zp = self._env(x)
        Y1, _, Y2, _ = self._y_factors(y)
        c, s = np.cos(mu * x), np.sin(mu * x)
        d1 = (e**2 * Zp * s + e * mu * Z * c)[:, None] * Y1[None, :]
        S2x = e**2 * (2 * e * Z * Zp * np.sin(2 * mu * x) + 2 * mu * Z**2 * np.cos(2 * mu * x))
        d2 = S2x[:, None] * Y2[None, :] - (pc.C4 * e**2 * Z**2)[:, None]
        return d1 + d2

    def phi_y(self, x, y):
        e, mu = self.eps, self.mu
        Z, _ = self._env(x)
        _, Y1p, _, Y2p = self._y_factors(y)
        d1 = (e * Z * np.sin(mu * x))[:, None] * Y1p[None, :]
        d2 = (e**2 * Z**2 * np.sin(2 * mu * x))[:, None] * Y2p[None, :]
        return d1 + d2


@dataclass(frozen=True)
class LineWaveProfile:
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)
    eta1: np.ndarray = field(repr=False)
    eta2: np.ndarray = field(repr=False)
    phi1: np.ndarray = field(repr=False)
    phi2: np.ndarray = field(repr=False)
    eps: float
    star: StarProfiles = field(repr=False, compare=False)

    @property
    def eta(self):
        return self.eta1 + self.eta2

    @property
    def phi(self):
        return self.phi1 + self.phi2


def odd_antiderivative(f, x):
    """Cumulative trapezoid of f over x, shifted so the result vanishes at x = 0."""
    F = cumulative_trapezoid(f, x, initial=0.0)
    return F - np.interp(0.0, x, F)


def build_line_wave(params, coeffs, pcoeffs, xgrid, ygrid, sign=1):
    if not params.eps > 0.0:
        raise DomainError("line-wave profiles need eps > 0")
    star = StarProfiles(params, coeffs, pcoeffs, sign=sign)
    x = xgrid.x if isinstance(xgrid, Grid1D) else np.asarray(xgrid, dtype=float)
    y = np.asarray(ygrid, dtype=float)
    X = params.eps * x
    Z2 = zeta(X, star.amp, star.width) ** 2
    anti = odd_antiderivative(Z2, X)
    eta1, eta2 = star.eta_parts(x)
    phi1, phi2 = star.phi_parts(x, y, antiderivative=anti)
    return LineWaveProfile(x=x, y=y, eta1=eta1, eta2=eta2, phi1=phi1, phi2=phi2,
                           eps=params.eps, star=star)
