"""Leading-order surfaces of the line solitary wave and its transversely modulated companion."""

from dataclasses import dataclass, field
import math

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError, SymmetryError

SYMMETRY_TOL = 1e-6


@dataclass
class WaveSurface:
    x: np.ndarray
    z: np.ndarray
    eta: np.ndarray = field(repr=False)
    meta: dict

    def parity_defect(self):
        """max deviation from eta(x, z) = eta(-x, z) = eta(x, -z) on the sampled grid."""
        ex = np.max(np.abs(self.eta - self.eta[::-1, :]))
        zi = (-np.arange(len(self.z))) % len(self.z)
        ez = np.max(np.abs(self.eta - self.eta[:, zi]))
        return float(max(ex, ez))

    def rows(self):
        X, Z = np.meshgrid(self.x, self.z, indexing="ij")
        return np.column_stack([X.ravel(), Z.ravel(), self.eta.ravel()])


def _mode_arrays(mode):
    if hasattr(mode, "mode"):
        mode = mode.mode
    try:
        X = np.asarray(mode["x"], dtype=float)
        z1 = np.asarray(mode["zeta1"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise DomainError("mode needs 'x' and 'zeta1' samples") from exc
    if X.shape != z1.shape or X.size < 4:
        raise DomainError("mode samples are inconsistent")
    return X, z1


def even_envelope(mode):
    """Cubic interpolant of zeta1 scaled to unit peak; raises SymmetryError for a non-even mode."""
    X, z1 = _mode_arrays(mode)
    order = np.argsort(X)
    X, z1 = X[order], z1[order]
    if not np.allclose(X, -X[::-1], atol=1e-12 * max(1.0, np.abs(X).max())):
        raise DomainError("mode grid must be symmetric about X = 0")
    peak = z1[np.argmax(np.abs(z1))]
    if peak == 0.0:
        raise DomainError("mode vanishes identically")
    z1 = z1 / peak
    defect = np.max(np.abs(z1 - z1[::-1]))
    if defect > SYMMETRY_TOL:
        raise SymmetryError(f"zeta1 is not even (defect {defect:.3e})")
    spline = CubicSpline(X, 0.5 * (z1 + z1[::-1]))
    lo, hi = X[0], X[-1]

    def env(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        inside = (t >= lo) & (t <= hi)
        out[inside] = spline(t[inside])
        return out

    return env


def synthesize(params, profiles, mode, s, nz, k_eps, x=None, Lx=None, nx=801):
    """eta_s(x, z) = eta*_eps(x) + s eps Re[zeta1(eps x) e^{i mu0 x}] cos(eps k_eps z), one z-period."""
    eps = params.eps
    if not eps > 0:
        raise DomainError("eps must be positive")
    if not k_eps > 0:
        raise DomainError("k_eps must be positive")
    if nz < 2:
        raise DomainError("nz must be at least 2")
    if not math.isfinite(s):
        raise DomainError("s must be finite")
    env = even_envelope(mode)
    if x is None:
        if Lx is None:
            Lx = 10.0 / eps
        x = np.linspace(-Lx, Lx, nx)
    x = np.asarray(x, dtype=float)
    base = profiles.eta(np.abs(x))
    carrier = env(eps * np.abs(x)) * np.cos(params.mu0 * np.abs(x))
    period = 2.0 * math.pi / (eps * k_eps)
    j = np.arange(nz)
    z = j * period / nz
    cz = np.cos(2.0 * math.pi * np.minimum(j, nz - j) / nz)
    eta = base[:, None] + s * eps * carrier[:, None] * cz[None, :]
    meta = {"tau0": params.tau0, "eps": eps, "leading_order_amplitude": s, "k_eps": k_eps,
            "transverse_period": period, "nz": nz, "nx": len(x)}
    return WaveSurface(x=x, z=z, eta=eta, meta=meta)
