"""Quadrature on bands and gaps after the substitution ``t = mid + half*cos(theta)``.

The substitution turns the inverse square-root endpoint singularities of
``1/sqrt((t - a)(b - t))`` into a smooth integrand in theta, after which a
Gauss-Legendre rule on ``[0, pi]`` converges spectrally.
"""

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=64)
def _gl_theta(n):
    x, w = np.polynomial.legendre.leggauss(n)
    theta = 0.5 * np.pi * (x + 1.0)
    weights = 0.5 * np.pi * w
    theta.setflags(write=False)
    weights.setflags(write=False)
    return theta, weights


def gl_theta(n: int):
    """Gauss-Legendre nodes and weights on ``[0, pi]``."""
    return _gl_theta(int(n))


def interval_rule(a: float, b: float, n: int):
    """Nodes ``t``, angles ``theta`` and d(theta)-weights for ``[a, b]``."""
    theta, w = gl_theta(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    t = mid - half * np.cos(theta)
    return t, theta, w


def sqrt_factor_product(t, endpoints, scale, exclude=()):
    """``prod_e sqrt((t - e) / scale)`` with principal square roots.

    For complex ``t`` the product over all endpoints of a band union is the
    branch of ``sqrt(R)/scale**(g+1)`` that is analytic off the bands and
    positive on the far right.  Real ``t`` is promoted with a ``+0j``
    imaginary part, i.e. the boundary value from the upper half-plane.
    """
    t = np.asarray(t)
    if not np.iscomplexobj(t):
        t = t.astype(complex)
    out = np.ones(t.shape, dtype=complex)
    skip = set(exclude)
    for i, e in enumerate(endpoints):
        if i in skip:
            continue
        out = out * np.sqrt((t - e) / scale)
    return out


def abs_factor_product(t, endpoints, scale, exclude=()):
    """``prod_e sqrt(|t - e| / scale)`` over the endpoints not excluded."""
    t = np.asarray(t, dtype=float)
    logs = np.zeros(t.shape)
    skip = set(exclude)
    for i, e in enumerate(endpoints):
        if i in skip:
            continue
        logs = logs + 0.5 * np.log(np.abs(t - e) / scale)
    return np.exp(logs)
