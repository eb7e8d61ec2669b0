"""Linear dispersion relation and the bifurcation point (mu0, alpha0, beta0)."""

from dataclasses import dataclass, replace
import math

import numpy as np

from ._hyper import csch2, q_coth_q, sinh_minus_x
from .errors import DomainError, RootIsolationError


@dataclass(frozen=True)
class FluidParams:
    tau0: float
    mu0: float
    alpha0: float
    beta0: float
    eps: float = 0.0

    @property
    def sigma(self):
        return math.tanh(self.mu0)

    def with_eps(self, eps):
        if not (eps >= 0.0 and math.isfinite(eps)):
            raise DomainError(f"eps must be finite and >= 0, got {eps!r}")
        return replace(self, eps=float(eps))

    def to_dict(self):
        return {"tau0": self.tau0, "mu0": self.mu0, "alpha0": self.alpha0,
                "beta0": self.beta0, "eps": self.eps}


@dataclass(frozen=True)
class DispersionSample:
    mu: float
    lam: float
    q: float
    g: float


def alpha0_beta0(mu0):
    """Return (alpha0, beta0) on the curve of minima parameterized by mu0 > 0."""
    mu0 = float(mu0)
    if not (math.isfinite(mu0) and mu0 > 0.0):
        raise DomainError(f"mu0 must be finite and positive, got {mu0!r}")
    if mu0 > 300.0:
        # sinh overflows past ~710; the csch^2 terms are below 1e-260 here
        return 0.5 * mu0, 0.5 / mu0
    c2 = csch2(mu0)
    alpha = 0.5 * mu0 * mu0 * c2 + 0.5 * mu0 / math.tanh(mu0)
    # beta0 = (sinh 2mu - 2mu) / (4 mu sinh^2 mu); the numerator cancels for small mu
    beta = float(sinh_minus_x(2.0 * mu0)) * c2 / (4.0 * mu0)
    return float(alpha), float(beta)


def tau_of_mu(mu0):
    a, b = alpha0_beta0(mu0)
    return b / a


def params_from_tau(tau0, eps=0.0, mu_lo=1e-3, mu_hi=50.0, nscan=400, tol=1e-13):
    """Locate mu0 with beta0/alpha0 = tau0 by a scan followed by bisection."""
    tau0 = float(tau0)
    if not (0.0 < tau0 < 1.0 / 3.0):
        raise DomainError(f"tau0 must lie in (0, 1/3), got {tau0!r}")
    if not (eps >= 0.0 and math.isfinite(eps)):
        raise DomainError(f"eps must be finite and >= 0, got {eps!r}")
    mus = np.geomspace(mu_lo, mu_hi, nscan)
    f = np.array([tau_of_mu(m) - tau0 for m in mus])
    s = np.sign(f)
    changes = np.nonzero(s[:-1] * s[1:] < 0)[0]
    exact = np.nonzero(f == 0.0)[0]
    if len(changes) + len(exact) != 1:
        raise RootIsolationError(
            f"expected one sign change of beta0/alpha0 - tau0 on [{mu_lo}, {mu_hi}], "
            f"found {len(changes) + len(exact)}")
    if len(exact):
        mu0 = float(mus[exact[0]])
    else:
        i = int(changes[0])
        a, b = float(mus[i]), float(mus[i + 1])
        fa = f[i]
        while b - a >= tol:
            m = 0.5 * (a + b)
            if m <= a or m >= b:
                break
            fm = tau_of_mu(m) - tau0
            if fm == 0.0:
                a = b = m
                break
            if (fm < 0) == (fa < 0):
                a, fa = m, fm
            else:
                b = m
        mu0 = 0.5 * (a + b)
    alpha, beta = alpha0_beta0(mu0)
    # pin beta0 = tau0 * alpha0 exactly; the bisection leaves a ~1e-14 gap otherwise
    return FluidParams(tau0=tau0, mu0=mu0, alpha0=alpha, beta0=tau0 * alpha, eps=float(eps))


def g_eps(mu, lam, params):
    """g_eps(mu, lambda) = alpha0 + eps^2 + beta0 q^2 - (mu^2/q^2) q coth q."""
    mu = np.abs(np.asarray(mu, dtype=float))
    lam = np.abs(np.asarray(lam, dtype=float))
    mu, lam = np.broadcast_arrays(mu, lam)
    q2 = mu * mu + lam * lam
    if np.any(q2 == 0.0):
        raise DomainError("g_eps is undefined at (mu, lambda) = (0, 0)")
    q = np.sqrt(q2)
    g = params.alpha0 + params.eps**2 + params.beta0 * q2 - (mu * mu / q2) * q_coth_q(q)
    return g if g.ndim else float(g)


def _g0_extended(mu, lam, params):
    """g_0 in extended precision, for difference quotients whose steps would drown in rounding."""
    ld = np.longdouble
    mu, lam = ld(mu), ld(lam)
    q2 = mu * mu + lam * lam
    q = np.sqrt(q2)
    return (ld(params.alpha0) + ld(params.beta0) * q2
            - (mu * mu / q2) * q * np.cosh(q) / np.sinh(q))


def check_min(params, h=1e-5):
    """Central-difference diagnostics of g_0(., 0) at mu0."""
    mu0 = params.mu0
    gm, g0, gp = (_g0_extended(m, 0.0, params) for m in (mu0 - h, mu0, mu0 + h))
    return {
        "g_at_min": float(g_eps(mu0, 0.0, params.with_eps(0.0))),
        "first_derivative": float((gp - gm) / (2 * np.longdouble(h))),
        "second_derivative": float((gp - 2 * g0 + gm) / np.longdouble(h) ** 2),
    }


def lambda_second_derivative(params, h=1e-5):
    """Central-difference d^2/dlambda^2 of g_0(mu0, .) at lambda = 0 (g is even in lambda)."""
    g0 = _g0_extended(params.mu0, 0.0, params)
    gp = _g0_extended(params.mu0, h, params)
    return float(2 * (gp - g0) / np.longdouble(h) ** 2)


def dispersion_curve(params, mu_range, n, lam=0.0):
    if n < 2:
        raise DomainError("n must be >= 2")
    mus = np.linspace(float(mu_range[0]), float(mu_range[1]), int(n))
    gs = np.atleast_1d(g_eps(mus, lam, params))
    qs = np.sqrt(mus * mus + lam * lam)
    return [DispersionSample(float(m), float(lam), float(q), float(g))
            for m, q, g in zip(mus, qs, gs)]
