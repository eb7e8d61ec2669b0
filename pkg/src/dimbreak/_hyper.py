"""Hyperbolic helpers that stay accurate for small and moderately large arguments."""

import numpy as np


def sinh_minus_x(t):
    """sinh(t) - t without cancellation near t = 0."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    small = np.abs(t) < 1.0
    ts = t[small]
    # Taylor series t^3/3! + t^5/5! + ...; 12 terms reach below 1e-17 on |t| < 1
    term = ts**3 / 6.0
    acc = term.copy()
    t2 = ts * ts
    for k in range(2, 14):
        term = term * t2 / ((2 * k) * (2 * k + 1))
        acc = acc + term
    out[small] = acc
    tl = t[~small]
    out[~small] = np.sinh(tl) - tl
    return out if out.ndim else float(out)


def coth(x):
    return 1.0 / np.tanh(x)


def csch2(x):
    s = np.sinh(x)
    return 1.0 / (s * s)


def q_coth_q(q):
    """q coth q, with the even Taylor series 1 + q^2/3 - q^4/45 below q = 1e-4."""
    q = np.asarray(q, dtype=float)
    aq = np.abs(q)
    out = np.empty_like(aq)
    small = aq < 1e-4
    qs = aq[small] ** 2
    out[small] = 1.0 + qs / 3.0 - qs * qs / 45.0
    big = ~small
    out[big] = aq[big] / np.tanh(aq[big])
    return out if out.ndim else float(out)
