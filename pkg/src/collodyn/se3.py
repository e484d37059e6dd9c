"""SE(3) helpers used by the discretized-rod kinematics.

Twists and strains are 6-vectors ordered (angular, linear).  All scalar
coefficient functions are written as analytic functions of ``theta**2`` so
that every routine in this module also accepts complex arguments; this is
what makes complex-step differentiation through the rod kinematics exact.
"""

import numpy as np

__all__ = [
    "hat3",
    "adjoint",
    "big_adjoint",
    "big_adjoint_inverse",
    "exp_se3",
    "tangent_operator",
    "exp_se3_batch",
    "tangent_operator_batch",
    "big_adjoint_inverse_batch",
]

_SERIES_CUTOFF = 1e-6


def hat3(w):
    """3x3 skew matrix of a 3-vector."""
    out = np.zeros((3, 3), dtype=np.result_type(w.dtype, float))
    out[0, 1], out[0, 2] = -w[2], w[1]
    out[1, 0], out[1, 2] = w[2], -w[0]
    out[2, 0], out[2, 1] = -w[1], w[0]
    return out


def adjoint(x):
    """Little adjoint ad_x of a twist x = (k, p)."""
    out = np.zeros((6, 6), dtype=np.result_type(x.dtype, float))
    K = hat3(x[:3])
    out[:3, :3] = K
    out[3:, 3:] = K
    out[3:, :3] = hat3(x[3:])
    return out


def big_adjoint(R, t):
    """Adjoint of the SE(3) element (R, t) acting on (angular, linear) twists."""
    out = np.zeros((6, 6), dtype=np.result_type(R.dtype, float))
    out[:3, :3] = R
    out[3:, 3:] = R
    out[3:, :3] = hat3(t) @ R
    return out


def big_adjoint_inverse(R, t):
    """Adjoint of (R, t)^-1, i.e. of (R^T, -R^T t)."""
    Rt = R.T
    return big_adjoint(Rt, -(Rt @ t))


def _sincc(x):
    """sin(sqrt(x))/sqrt(x), analytic in x."""
    x = np.asarray(x)
    if abs(x) < _SERIES_CUTOFF:
        return 1.0 - x / 6.0 + x * x / 120.0 - x ** 3 / 5040.0
    s = np.sqrt(x)
    return np.sin(s) / s


def _coscc(x):
    """(1 - cos(sqrt(x)))/x, analytic in x."""
    x = np.asarray(x)
    if abs(x) < _SERIES_CUTOFF:
        return 0.5 - x / 24.0 + x * x / 720.0 - x ** 3 / 40320.0
    return (1.0 - np.cos(np.sqrt(x))) / x


def _vcoeff(x):
    """(sqrt(x) - sin(sqrt(x)))/x**1.5, analytic in x."""
    x = np.asarray(x)
    if abs(x) < _SERIES_CUTOFF:
        return 1.0 / 6.0 - x / 120.0 + x * x / 5040.0 - x ** 3 / 362880.0
    s = np.sqrt(x)
    return (s - np.sin(s)) / (x * s)


def exp_se3(x):
    """Exponential of the twist x = (k, p); returns (R, t).

    R = exp(hat(k)) by Rodrigues, t = V(k) p with the standard left
    Jacobian V of SO(3).
    """
    k, p = x[:3], x[3:]
    t2 = k @ k
    K = hat3(k)
    K2 = K @ K
    eye = np.eye(3, dtype=K.dtype)
    R = eye + _sincc(t2) * K + _coscc(t2) * K2
    V = eye + _coscc(t2) * K + _vcoeff(t2) * K2
    return R, V @ p


def tangent_operator(x):
    """T(x) = integral_0^1 exp(-u ad_x) du in closed form.

    Propagates geometric Jacobians across an interval of constant strain:
    if J' = -ad_xi J + B with xi, B constant over a step of length delta,
    then J(delta) = Ad(exp(delta xi))^-1 J(0) + delta T(delta xi) B.

    The closed form follows from the minimal polynomial
    ad_x^5 = -2 theta^2 ad_x^3 - theta^4 ad_x with theta = |k|.
    """
    A = adjoint(x)
    t2 = x[:3] @ x[:3]
    if abs(t2) < _SERIES_CUTOFF:
        a1 = -0.5 + t2 * t2 / 720.0
        a2 = 1.0 / 6.0 - t2 * t2 / 5040.0
        a3 = -1.0 / 24.0 + t2 / 360.0 - t2 * t2 / 13440.0
        a4 = 1.0 / 120.0 - t2 / 2520.0 + t2 * t2 / 120960.0
    else:
        th = np.sqrt(t2)
        s, c = np.sin(th), np.cos(th)
        a1 = (th * s + 4.0 * c - 4.0) / (2.0 * t2)
        a2 = (th * (c + 4.0) - 5.0 * s) / (2.0 * t2 * th)
        a3 = (th * s / 2.0 + c - 1.0) / (t2 * t2)
        a4 = (th * (c + 2.0) - 3.0 * s) / (2.0 * t2 * t2 * th)
    A2 = A @ A
    out = a1 * A + a2 * A2 + a3 * (A2 @ A) + a4 * (A2 @ A2)
    out[np.diag_indices(6)] += 1.0
    return out


# -- batched variants (leading axis over twists), used by the rod assembly --


def _hat3_batch(w):
    out = np.zeros(w.shape[:-1] + (3, 3), dtype=np.result_type(w.dtype, float))
    out[..., 0, 1], out[..., 0, 2] = -w[..., 2], w[..., 1]
    out[..., 1, 0], out[..., 1, 2] = w[..., 2], -w[..., 0]
    out[..., 2, 0], out[..., 2, 1] = -w[..., 1], w[..., 0]
    return out


def _series_or_trig(t2, series_coeffs, trig):
    """Evaluate an even analytic coefficient function elementwise.

    ``series_coeffs`` are the Taylor coefficients in t2 near zero;
    ``trig(theta, t2)`` evaluates the closed form away from it.
    """
    t2 = np.asarray(t2)
    small = np.abs(t2) < _SERIES_CUTOFF
    if not small.any():
        return trig(np.sqrt(t2), t2)
    out = np.empty(t2.shape, dtype=t2.dtype)
    x = t2[small]
    acc = np.zeros_like(x)
    for c in reversed(series_coeffs):
        acc = acc * x + c
    out[small] = acc
    big = ~small
    if np.any(big):
        xb = t2[big]
        out[big] = trig(np.sqrt(xb), xb)
    return out


def _batch_coeffs(t2):
    """The four tangent-operator coefficients, elementwise over t2."""
    a1 = _series_or_trig(
        t2,
        [-0.5, 0.0, 1.0 / 720.0, -1.0 / 20160.0],
        lambda th, x: (th * np.sin(th) + 4.0 * np.cos(th) - 4.0) / (2.0 * x),
    )
    a2 = _series_or_trig(
        t2,
        [1.0 / 6.0, 0.0, -1.0 / 5040.0, 1.0 / 181440.0],
        lambda th, x: (th * (np.cos(th) + 4.0) - 5.0 * np.sin(th)) / (2.0 * x * th),
    )
    a3 = _series_or_trig(
        t2,
        [-1.0 / 24.0, 1.0 / 360.0, -1.0 / 13440.0],
        lambda th, x: (th * np.sin(th) / 2.0 + np.cos(th) - 1.0) / (x * x),
    )
    a4 = _series_or_trig(
        t2,
        [1.0 / 120.0, -1.0 / 2520.0, 1.0 / 120960.0],
        lambda th, x: (th * (np.cos(th) + 2.0) - 3.0 * np.sin(th)) / (2.0 * x * x * th),
    )
    return a1, a2, a3, a4


def exp_se3_batch(x):
    """Batched exp_se3 for x of shape (K, 6); returns R (K,3,3), t (K,3)."""
    k, p = x[..., :3], x[..., 3:]
    t2 = np.einsum("...i,...i->...", k, k)
    K = _hat3_batch(k)
    K2 = K @ K
    f1 = _series_or_trig(
        t2,
        [1.0, -1.0 / 6.0, 1.0 / 120.0, -1.0 / 5040.0],
        lambda th, x2: np.sin(th) / th,
    )
    f2 = _series_or_trig(
        t2,
        [0.5, -1.0 / 24.0, 1.0 / 720.0, -1.0 / 40320.0],
        lambda th, x2: (1.0 - np.cos(th)) / x2,
    )
    f3 = _series_or_trig(
        t2,
        [1.0 / 6.0, -1.0 / 120.0, 1.0 / 5040.0, -1.0 / 362880.0],
        lambda th, x2: (th - np.sin(th)) / (x2 * th),
    )
    eye = np.eye(3, dtype=K.dtype)
    R = eye + f1[..., None, None] * K + f2[..., None, None] * K2
    V = eye + f2[..., None, None] * K + f3[..., None, None] * K2
    return R, np.einsum("...ij,...j->...i", V, p)


def tangent_operator_batch(x):
    """Batched tangent_operator for x of shape (K, 6); returns (K, 6, 6)."""
    dtype = np.result_type(x.dtype, float)
    K = x.shape[0]
    A = np.zeros((K, 6, 6), dtype=dtype)
    Khat = _hat3_batch(x[:, :3])
    A[:, :3, :3] = Khat
    A[:, 3:, 3:] = Khat
    A[:, 3:, :3] = _hat3_batch(x[:, 3:])
    t2 = np.einsum("ki,ki->k", x[:, :3], x[:, :3])
    a1, a2, a3, a4 = _batch_coeffs(t2)
    A2 = A @ A
    A3 = A2 @ A
    out = (
        a1[:, None, None] * A
        + a2[:, None, None] * A2
        + a3[:, None, None] * A3
        + a4[:, None, None] * (A2 @ A2)
    )
    out[:, np.arange(6), np.arange(6)] += 1.0
    return out


def big_adjoint_inverse_batch(R, t):
    """Batched Adjoint of (R, t)^-1 for R (K,3,3), t (K,3)."""
    Rt = np.swapaxes(R, -1, -2)
    tt = -np.einsum("kij,kj->ki", Rt, t)
    out = np.zeros(R.shape[:-2] + (6, 6), dtype=R.dtype)
    out[:, :3, :3] = Rt
    out[:, 3:, 3:] = Rt
    out[:, 3:, :3] = _hat3_batch(tt) @ Rt
    return out
