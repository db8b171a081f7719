"""Pure numpy implementations of the inner kernels.

Mirrors ``_kernels.pyx`` exactly; used when the compiled module is missing.
"""
import numpy as np
from scipy.signal import lfilter

ZERO_MAGNITUDE = 1e-300


def unimodular_update(a, u):
    """Return ``a / |a|`` entrywise, keeping ``u`` where ``|a|`` underflows."""
    mag = np.abs(a)
    ok = mag >= ZERO_MAGNITUDE
    out = np.array(u, dtype=np.complex128, copy=True)
    out[ok] = a[ok] / mag[ok]
    return out


def block_sum(x, n_s):
    x = np.asarray(x)
    return x.reshape(-1, n_s).sum(axis=1)


def block_repeat(x, n_s):
    return np.repeat(np.asarray(x), n_s)


def ar1_recursion(eps, rho, scale):
    """Stationary AR(1): ``x0 = scale*e0``, ``x_n = rho*x_{n-1} + sqrt(1-rho^2)*scale*e_n``."""
    eps = np.asarray(eps, dtype=np.float64)
    if eps.size == 0:
        return eps.copy()
    gain = np.sqrt(1.0 - rho * rho) * scale
    x = np.empty_like(eps)
    x[0] = scale * eps[0]
    if eps.size > 1:
        x[1:], _ = lfilter([gain], [1.0, -rho], eps[1:], zi=[rho * x[0]])
    return x


def separable_mm(b, w, c0, tol, max_iters):
    """MM iterations ``c <- phase(b + w*c)`` until the step norm is <= tol.

    Returns ``(c, iterations, last_step_norm)``.
    """
    c = np.array(c0, dtype=np.complex128, copy=True)
    step = np.inf
    it = 0
    while it < max_iters:
        c_new = unimodular_update(b + w * c, c)
        step = float(np.linalg.norm(c_new - c))
        c = c_new
        it += 1
        if step <= tol:
            break
    return c, it, step
