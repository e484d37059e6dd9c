"""Central finite-difference helpers with per-coordinate step scaling."""

import numpy as np


def steps(x, h=1e-6, relative=True):
    """Per-coordinate step sizes h*(1+|x_k|) (or constant h)."""
    x = np.asarray(x, dtype=float)
    if relative:
        return h * (1.0 + np.abs(x))
    return np.full(x.shape, h)


def jacobian(f, x, h=1e-6, relative=True):
    """Central-difference Jacobian of a vector (or matrix) valued function.

    Returns an array of shape f(x).shape + (len(x),).
    """
    x = np.asarray(x, dtype=float)
    hk = steps(x, h, relative)
    f0 = np.asarray(f(x))
    out = np.zeros(f0.shape + (x.size,))
    for k in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[k] += hk[k]
        xm[k] -= hk[k]
        out[..., k] = (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * hk[k])
    return out


def gradient(f, x, h=1e-6, relative=True):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    hk = steps(x, h, relative)
    out = np.zeros(x.size)
    for k in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[k] += hk[k]
        xm[k] -= hk[k]
        out[k] = (f(xp) - f(xm)) / (2.0 * hk[k])
    return out
