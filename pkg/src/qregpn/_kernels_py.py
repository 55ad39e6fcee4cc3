"""Pure NumPy versions of the elementwise kernels.

These mirror the compiled ``_kernels`` extension one for one and are used
whenever the extension is unavailable (or ``QREG_PURE=1`` is set).
"""

import numpy as np


def soft_threshold(z, t):
    z = np.asarray(z, dtype=float)
    return np.sign(z) * np.maximum(np.abs(z) - t, 0.0)


def project_simplex(z):
    z = np.asarray(z, dtype=float)
    n = z.shape[0]
    u = np.sort(z)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, n + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[rho - 1] / rho
    return np.maximum(z - theta, 0.0)


def logistic_terms(u, b):
    """Return (sum_i log(1 + exp(-b_i u_i)), s) with s_i = sigmoid(-b_i u_i)."""
    t = -np.asarray(b, dtype=float) * np.asarray(u, dtype=float)
    loss = np.logaddexp(0.0, t).sum()
    s = np.empty_like(t)
    pos = t >= 0
    e = np.exp(-t[pos])
    s[pos] = 1.0 / (1.0 + e)
    e = np.exp(t[~pos])
    s[~pos] = e / (1.0 + e)
    return float(loss), s


def student_t_terms(u, nu):
    """Return (sum log(1+u^2/nu), psi'(u), psi''(u))."""
    u = np.asarray(u, dtype=float)
    u2 = u * u
    den = nu + u2
    val = np.log1p(u2 / nu).sum()
    return float(val), 2.0 * u / den, 2.0 * (nu - u2) / (den * den)
