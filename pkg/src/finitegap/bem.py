"""Boundary-element solver for logarithmic potentials on a band union.

An independent cross-check for :mod:`finitegap.potential`: the unknown
measure is piecewise constant on cosine-graded panels, collocated at panel
midpoints, with log-kernel panel integrals done in closed form.  It converges
only algebraically, so use it with tolerances around 1e-4.
"""

from __future__ import annotations

import math

import numpy as np

from .intervals import IntervalSet


def _panels(E: IntervalSet, n: int):
    edges = []
    for l, r in E.bands:
        th = np.linspace(0.0, np.pi, n + 1)
        x = 0.5 * (l + r) - 0.5 * (r - l) * np.cos(th)
        edges.append(np.column_stack([x[:-1], x[1:]]))
    return np.vstack(edges)


def _log_panel(z, a, b):
    """``int_a^b log|z - t| dt / (b - a)`` for all (z, panel) pairs."""
    z = np.asarray(z, dtype=complex)[:, None]

    def xlogx(u):
        out = np.zeros(u.shape)
        nz = u != 0
        out[nz] = np.real(u[nz] * np.log(u[nz]))
        return out

    val = xlogx(z - a) - xlogx(z - b) - (b - a)
    return val / (b - a)


class BEMSolver:
    """Solve ``int log|x - t| dnu(t) + c = f(x)`` on E with ``nu(E) = 1``."""

    def __init__(self, E: IntervalSet, panels_per_band: int = 400):
        self.E = E
        p = _panels(E, panels_per_band)
        self.a, self.b = p[:, 0], p[:, 1]
        self.mid = 0.5 * (self.a + self.b)
        m = len(self.mid)
        K = np.zeros((m + 1, m + 1))
        K[:m, :m] = _log_panel(self.mid, self.a, self.b)
        K[:m, m] = 1.0
        K[m, :m] = 1.0
        self._lu = np.linalg.inv(K)

    def _solve(self, f):
        rhs = np.concatenate([f, [1.0]])
        sol = self._lu @ rhs
        return sol[:-1], sol[-1]

    def capacity(self) -> float:
        _, c = self._solve(np.zeros(len(self.mid)))
        return math.exp(-c)

    def green(self, z, w) -> float:
        """``G(z, w) = -log|z - w| + int log|z - t| dnu_w + c_w``."""
        nu, c = self._solve(np.log(np.abs(self.mid - complex(w))))
        pot = _log_panel(np.array([complex(z)]), self.a, self.b)[0] @ nu
        return float(-math.log(abs(complex(z) - complex(w))) + pot + c)

    def green_infinity(self, z) -> float:
        nu, c = self._solve(np.zeros(len(self.mid)))
        pot = _log_panel(np.array([complex(z)]), self.a, self.b)[0] @ nu
        return float(pot + c)
