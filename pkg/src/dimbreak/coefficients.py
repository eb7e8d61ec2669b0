"""Closed-form model constants A1..A5, the second-order profile constants and B1..B3."""

from dataclasses import dataclass, asdict
import math
from typing import Optional

from .dispersion import FluidParams, g_eps
from .errors import ResonanceError, SingularCoefficientError


@dataclass(frozen=True)
class CoefficientSet:
    sigma: float
    A1: float
    A2: float
    A3: float
    A4: float
    A5: float
    one_minus_inv_alpha0: float

    @property
    def A3_positive(self):
        return self.A3 > 0.0

    @property
    def positive(self):
        return self.A1 > 0.0 and self.A5 > 0.0 and self.one_minus_inv_alpha0 > 0.0

    @property
    def A2inv(self):
        return 1.0 / self.A2

    @property
    def delta_ess(self):
        return min(1.0 / self.A2, self.one_minus_inv_alpha0) / 10.0

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class ProfileCoefficients:
    C1: float
    C2: float
    C4: float
    C5: float
    B1: float
    B2: float
    B3: float
    g0_at_2mu0: float
    C0: Optional[float] = None
    C3: Optional[float] = None

    def to_dict(self):
        return asdict(self)


def A3_denominator(params):
    s = math.tanh(params.mu0)
    mu, a, b = params.mu0, params.alpha0, params.beta0
    return a * s * s - b * mu * mu * (3.0 - s * s)


def compute_coefficients(params: FluidParams) -> CoefficientSet:
    mu, a, b = params.mu0, params.alpha0, params.beta0
    s = math.tanh(mu)
    sh = math.sinh(mu)
    A1 = b + (1.0 - mu / s) / (sh * sh)
    A2 = 1.0 / (mu * s)
    den = A3_denominator(params)
    if abs(den) < 1e-14:
        raise SingularCoefficientError(
            f"A3 denominator alpha0 sigma^2 - beta0 mu0^2 (3 - sigma^2) = {den:.3e} vanishes")
    s2 = s * s
    num = (1.0 - s2) * (9.0 - s2) * a + b * mu * mu * (3.0 - s2) * (7.0 - s2)
    A3 = -mu**3 / (8.0 * s**3) * (
        num / den + 8.0 * s2 - 2.0 * mu / (a * s) * (1.0 - s2) ** 2 - 3.0 * b * mu * s**3)
    A4 = mu * (a * math.sinh(2.0 * mu) + mu) / (4.0 * a * sh * sh)
    om = 1.0 - 1.0 / a
    A5 = A3 + 4.0 * A4 * A4 / om
    return CoefficientSet(sigma=s, A1=A1, A2=A2, A3=A3, A4=A4, A5=A5, one_minus_inv_alpha0=om)


def profile_coefficients(params: FluidParams, coeffs: CoefficientSet,
                         resonance_tol=1e-12) -> ProfileCoefficients:
    mu, a = params.mu0, params.alpha0
    g2 = float(g_eps(2.0 * mu, 0.0, params.with_eps(0.0)))
    if g2 <= resonance_tol:
        raise ResonanceError(f"g0(2 mu0, 0) = {g2:.3e} is not positive")
    sh2 = math.sinh(mu) ** 2
    s2m = math.sinh(2.0 * mu)
    c2m = math.cosh(2.0 * mu)
    C1 = mu * mu * (c2m + 2.0) / (4.0 * sh2 * g2)
    C2 = mu * (s2m + mu) / (4.0 * sh2 * (a - 1.0))
    C4 = mu * (a * s2m + mu) / (4.0 * sh2 * (a - 1.0))
    C5 = C1 + mu * s2m / (4.0 * sh2)
    B1 = mu * mu * (c2m + 2.0) / (2.0 * g2 * sh2)
    B2 = mu * mu / (2.0 * a * sh2)
    B3 = coeffs.A4 / a
    return ProfileCoefficients(C1=C1, C2=C2, C4=C4, C5=C5, B1=B1, B2=B2, B3=B3, g0_at_2mu0=g2)
