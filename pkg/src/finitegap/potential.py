"""Potential theory of finite-gap sets.

For ``E`` with bands ``[alpha_j, beta_j]``, ``j = 0..g``, put
``R(t) = prod_j (t - alpha_j)(t - beta_j)``.  The equilibrium measure is

    dmu_E = |q(t)| / (pi * sqrt|R(t)|) dt,

with ``q`` monic of degree ``g`` fixed by ``int_gap q / sqrt|R| = 0`` on every
gap.  The Green's function with pole at infinity is ``G(z) = Re int q/sqrt(R)``
taken from any band endpoint, and the Green's function with a finite pole
``w`` comes from the normalized third-kind differential on ``y**2 = R(t)``.

Internally ``q`` is stored in the Chebyshev basis of the hull ``[b0, a0]``
and all square-root products are divided by ``scale = diam/4`` per factor,
which keeps large genus from overflowing.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate, optimize

from .errors import BoundaryValueError, DegenerateGeometryError, SingularityError, ValidationError
from .intervals import IntervalSet
from .quadrature import abs_factor_product, interval_rule, sqrt_factor_product

DEFAULT_ORDER = 128
MAX_ORDER = 1024
CAPACITY_TOL = 1e-10
_QUAD = dict(epsabs=1e-14, epsrel=1e-13, limit=400)


@dataclass(frozen=True)
class FrequencyVector:
    omegas: tuple

    def __post_init__(self):
        object.__setattr__(self, "omegas", tuple(float(w) % 1.0 for w in self.omegas))

    def __len__(self):
        return len(self.omegas)

    def torus_distance(self, T: int) -> float:
        """``max_j ||T * omega_j||`` (distance to the nearest integer)."""
        if not self.omegas:
            return 0.0
        v = T * np.asarray(self.omegas)
        return float(np.max(np.abs(v - np.round(v))))


@dataclass(frozen=True, eq=False)
class EquilibriumData:
    set: IntervalSet
    gap_zeros: tuple
    capacity: float
    band_measures: tuple
    quadrature_order: int
    coef: np.ndarray
    gap_matrix: np.ndarray

    @property
    def genus(self):
        return self.set.genus

    @property
    def scale(self):
        return self.set.diam / 4.0

    @property
    def center(self):
        return 0.5 * (self.set.left + self.set.right)

    def q_scaled(self, t):
        """``q(t) / scale**g`` (complex or real input)."""
        s = (np.asarray(t) - self.center) / (2.0 * self.scale)
        k = 2.0 if self.genus else 1.0
        return k * C.chebval(s, self.coef)

    def q(self, t):
        return self.q_scaled(t) * self.scale ** self.genus

    def density(self, x):
        """Equilibrium density ``dmu_E/dx`` (zero off E)."""
        x = np.asarray(x, dtype=float)
        ends = self.set.endpoints
        val = np.abs(self.q_scaled(x)) / (np.pi * self.scale * abs_factor_product(x, ends, self.scale))
        inside = np.zeros(x.shape, dtype=bool)
        for l, r in self.set.bands:
            inside |= (x > l) & (x < r)
        return np.where(inside, val, 0.0)

    def band_rule(self, j, n=None):
        """Nodes and weights of ``dmu_E`` restricted to band ``j``."""
        n = n or self.quadrature_order
        l, r = self.set.bands[j]
        t, _, w = interval_rule(l, r, n)
        ends = self.set.endpoints
        dens = np.abs(self.q_scaled(t)) / (np.pi * abs_factor_product(t, ends, self.scale, (2 * j, 2 * j + 1)))
        return t, w * dens

    def to_json(self):
        return {
            "capacity": self.capacity,
            "gap_zeros": list(self.gap_zeros),
            "band_measures": list(self.band_measures),
        }


def _cheb_basis(s, g):
    return C.chebvander(s, g)


def _gap_matrix(E: IntervalSet, n: int):
    """Rows: gaps; columns: ``int_gap T_i(s(t)) / sqrt|R(t)| dt`` up to a row factor."""
    g = E.genus
    ends = E.endpoints
    scale = E.diam / 4.0
    center = 0.5 * (E.left + E.right)
    A = np.zeros((g, g + 1))
    for k in range(g):
        a, b = E.bands[k][1], E.bands[k + 1][0]
        t, _, w = interval_rule(a, b, n)
        rest = abs_factor_product(t, ends, scale, (2 * k + 1, 2 * k + 2))
        V = _cheb_basis((t - center) / (2.0 * scale), g)
        A[k] = (w / rest) @ V
    return A


def _solve_numerator(E: IntervalSet, n: int):
    g = E.genus
    A = _gap_matrix(E, n)
    if g == 0:
        return np.array([1.0]), A
    M = A[:, :g]
    rhs = -A[:, g]
    try:
        d = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateGeometryError("equilibrium system is singular") from exc
    if not np.all(np.isfinite(d)) or np.linalg.cond(M) > 1e15:
        raise DegenerateGeometryError("equilibrium system is numerically singular")
    return np.concatenate([d, [1.0]]), A


def _log_potential(eq: EquilibriumData, z, n=None):
    z = np.asarray(z, dtype=complex)
    total = np.zeros(z.shape)
    for j in range(len(eq.set.bands)):
        t, w = eq.band_rule(j, n)
        total = total + np.log(np.abs(z[..., None] - t)) @ w
    return total


def _solve(E: IntervalSet, n: int):
    coef, A = _solve_numerator(E, n)
    scale = E.diam / 4.0
    ends = E.endpoints
    k = 2.0 if E.genus else 1.0
    center = 0.5 * (E.left + E.right)
    masses = []
    for j, (l, r) in enumerate(E.bands):
        t, _, w = interval_rule(l, r, n)
        dens = k * np.abs(C.chebval((t - center) / (2.0 * scale), coef))
        dens /= np.pi * abs_factor_product(t, ends, scale, (2 * j, 2 * j + 1))
        masses.append(float(w @ dens))
    zeros = []
    for kk in range(E.genus):
        a, b = E.bands[kk][1], E.bands[kk + 1][0]
        f = lambda t: C.chebval((t - center) / (2.0 * scale), coef)
        fa, fb = f(a), f(b)
        if not fa * fb < 0:
            raise DegenerateGeometryError(f"density numerator has no sign change in gap {kk}")
        zeros.append(optimize.brentq(f, a, b, xtol=1e-15 * max(1.0, abs(a), abs(b)), rtol=1e-15))
    eq = EquilibriumData(E, tuple(zeros), 1.0, tuple(masses), n, coef, A)
    x_star = E.right + E.diam
    log_cap = float(_log_potential(eq, x_star)) - _green_real(eq, _Differential.infinity(eq), x_star)
    return EquilibriumData(E, tuple(zeros), math.exp(log_cap), tuple(masses), n, coef, A)


def equilibrium(E: IntervalSet, order: int | None = None) -> EquilibriumData:
    """Solve the equilibrium problem on ``E``.

    With ``order`` given, that many Gauss-Legendre nodes are used per band and
    gap.  Otherwise the order starts at 128 and doubles until the capacity
    moves by less than 1e-10 (capped at 1024).
    """
    if order is not None:
        if order < 16:
            raise ValidationError("quadrature order must be at least 16")
        return _solve(E, int(order))
    n = DEFAULT_ORDER
    eq = _solve(E, n)
    while n < MAX_ORDER:
        n *= 2
        nxt = _solve(E, n)
        done = abs(nxt.capacity - eq.capacity) < CAPACITY_TOL
        eq = nxt
        if done:
            break
    return eq


def capacity(eq: EquilibriumData) -> float:
    return eq.capacity


# --------------------------------------------------------------------------
# Line integrals of abelian differentials


class _Differential:
    """``F(t) = pref * num(t) / Pi(t)`` with ``Pi = prod sqrt((t - e)/scale)``.

    ``Re int F dt`` from a band endpoint is single-valued off E once the
    gap integrals of F vanish, which both normalizations below enforce.
    """

    def __init__(self, eq, num, pref, poles=()):
        self.eq = eq
        self.num = num
        self.pref = pref
        self.poles = tuple(poles)

    @classmethod
    def infinity(cls, eq):
        return cls(eq, eq.q_scaled, 1.0 / eq.scale)

    def F(self, t):
        t = np.asarray(t, dtype=complex)
        return self.pref * self.num(t) / sqrt_factor_product(t, self.eq.set.endpoints, self.eq.scale)

    def F_sqrt(self, t, e_index, side):
        """``F(t) * sqrt|t - e|`` for real t on the given side (+1 or -1) of ``e``."""
        t = np.asarray(t, dtype=float)
        e = self.eq.set.endpoints[e_index]
        sc = self.eq.scale
        rest = sqrt_factor_product(t, self.eq.set.endpoints, sc, (e_index,))
        phase = 1.0 if side > 0 else 1j
        return self.pref * self.num(t + 0j) * math.sqrt(sc) / (rest * phase)


def _quad(*args, **kwargs):
    # roundoff warnings are expected when the integral is already at machine precision
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(*args, **kwargs)


def _re(v):
    return float(np.real(v))


def _from_endpoint(diff: _Differential, e_index: int, x: float) -> float:
    """``Re int_e^x F dt`` along the real axis; the segment must avoid E and poles."""
    E = diff.eq.set
    e = E.endpoints[e_index]
    if x == e:
        return 0.0
    d = E.diam
    direction = 1.0 if x > e else -1.0
    near = e + direction * min(abs(x - e), d)
    f = lambda t: _re(diff.F_sqrt(t, e_index, direction))
    if direction > 0:
        val = _quad(f, e, near, weight="alg", wvar=(-0.5, 0.0), **_QUAD)[0]
    else:
        val = -_quad(f, near, e, weight="alg", wvar=(0.0, -0.5), **_QUAD)[0]
    if near != x:
        # long tail in a logarithmic variable: t = e + direction * exp(u)
        g = lambda u: _re(diff.F(e + direction * math.exp(u))) * math.exp(u) * direction
        val += _quad(g, math.log(abs(near - e)), math.log(abs(x - e)), **_QUAD)[0]
    return val


def _to_infinity(diff: _Differential, e_index: int, direction: float) -> float:
    """``Re int_e^{direction*inf} F dt``; requires ``F = O(t**-2)``."""
    E = diff.eq.set
    e = E.endpoints[e_index]
    near = e + direction * E.diam
    val = _from_endpoint(diff, e_index, near)
    f = lambda t: _re(diff.F(t))
    if direction > 0:
        val += _quad(f, near, np.inf, **_QUAD)[0]
    else:
        val -= _quad(f, -np.inf, near, **_QUAD)[0]
    return val


def _green_real(eq: EquilibriumData, diff: _Differential, x: float) -> float:
    """``Re int F dt`` from E to the real point ``x`` along an admissible route."""
    E = eq.set
    if E.contains(x):
        return 0.0
    real_poles = [p.real for p in diff.poles if p.imag == 0.0]
    k = E.gap_index(x)
    n_ends = len(E.endpoints)
    if k is not None:
        a, b = E.bands[k][1], E.bands[k + 1][0]
        ia, ib = 2 * k + 1, 2 * k + 2
        blocked_left = any(a < p < x for p in real_poles)
        blocked_right = any(x < p < b for p in real_poles)
        use_left = x <= 0.5 * (a + b)
        if blocked_left:
            use_left = False
        elif blocked_right:
            use_left = True
        return _from_endpoint(diff, ia if use_left else ib, x)
    a0, b0 = E.right, E.left
    if x > a0:
        if any(a0 < p < x for p in real_poles):
            return _to_infinity(diff, 0, -1.0) - _tail_to(diff, x, +1.0)
        return _from_endpoint(diff, n_ends - 1, x)
    if any(x < p < b0 for p in real_poles):
        return _to_infinity(diff, n_ends - 1, +1.0) - _tail_to(diff, x, -1.0)
    return _from_endpoint(diff, 0, x)


def _tail_to(diff, x, direction):
    """``Re int_x^{direction*inf} F dt`` for x outside the hull."""
    f = lambda t: _re(diff.F(t))
    if direction > 0:
        return _quad(f, x, np.inf, **_QUAD)[0]
    return _quad(f, -np.inf, x, **_QUAD)[0]


def _vertical(diff: _Differential, x0: float, y: float, d: float) -> float:
    """``Re int_{x0}^{x0 + i y} F dt`` for ``y > 0``."""
    f = lambda s: _re(1j * diff.F(complex(x0, s)))
    lim = min(y, d)
    val = _quad(f, 0.0, lim, **_QUAD)[0]
    if y > lim:
        g = lambda u: _re(1j * diff.F(complex(x0, math.exp(u)))) * math.exp(u)
        val += _quad(g, math.log(lim), math.log(y), **_QUAD)[0]
    return val


def _green_path(eq: EquilibriumData, diff: _Differential, z: complex) -> float:
    """``Re int F dt`` from E to ``z`` with ``Im z > 0``."""
    E = eq.set
    d = E.diam
    x0 = z.real
    clearance = 1e-3 * d
    for p in diff.poles:
        # keep the vertical segment away from poles of F
        if abs(p.real - x0) < clearance and -clearance < p.imag < z.imag + clearance:
            x0 = p.real + (clearance if x0 >= p.real else -clearance)
    base = 0.0 if E.contains(x0) else _green_real(eq, diff, x0)
    if x0 == z.real:
        return base + _vertical(diff, x0, z.imag, d)
    # straight segment from the shifted base to z
    dz = z - x0
    f = lambda s: _re(diff.F(x0 + s * dz) * dz)
    return base + _quad(f, 0.0, 1.0, **_QUAD)[0]


def green_infinity(eq: EquilibriumData, z) -> float:
    """``G(z) = G(z, infinity)``; zero on E."""
    z = complex(z)
    diff = _Differential.infinity(eq)
    if z.imag == 0.0:
        return max(_green_real(eq, diff, z.real), 0.0)
    if z.imag < 0:
        z = z.conjugate()
    return _green_path(eq, diff, z)


def log_potential_green(eq: EquilibriumData, z) -> float:
    """``int log|z - t| dmu_E(t) - log cap``; accurate away from E only."""
    return float(_log_potential(eq, complex(z))) - math.log(eq.capacity)


class _ThirdKind(_Differential):
    """Third-kind differential with residue +1 at w, normalized to zero real gap periods."""

    def __init__(self, eq: EquilibriumData, w: complex):
        self.w = w
        ends = eq.set.endpoints
        sc = eq.scale
        self.pi_w = complex(sqrt_factor_product(np.array(w, dtype=complex), ends, sc))
        g = eq.genus
        self.d = np.zeros(0)
        if g:
            rhs = np.array([self._gap_integral(eq, k) for k in range(g)])
            M = eq.gap_matrix[:, :g]
            self.d = np.linalg.solve(M, -rhs)
        poles = (w,) if w.imag == 0.0 else (w, w.conjugate())
        super().__init__(eq, self._numerator, 1.0, poles)

    def _pole_part(self, t):
        w = self.w
        if w.imag == 0.0:
            return self.pi_w / (t - w)
        return 0.5 * (self.pi_w / (t - w) + np.conj(self.pi_w) / (t - np.conj(w)))

    def _numerator(self, t):
        t = np.asarray(t, dtype=complex)
        eq = self.eq
        s = (t - eq.center) / (2.0 * eq.scale)
        poly = C.chebval(s, self.d) if len(self.d) else 0.0
        return self._pole_part(t) + poly

    def _gap_integral(self, eq, k):
        E = eq.set
        a, b = E.bands[k][1], E.bands[k + 1][0]
        t, _, wts = interval_rule(a, b, eq.quadrature_order)
        rest = lambda x: abs_factor_product(x, E.endpoints, eq.scale, (2 * k + 1, 2 * k + 2))
        w = self.w
        if w.imag == 0.0 and a < w.real < b:
            # principal value: PV int_0^pi dtheta / (t - w) vanishes, so subtract the pole
            g = lambda x: np.real(self.pi_w) / rest(x)
            return float(wts @ ((g(t) - g(np.array(w.real))) / (t - w.real)))
        return float(wts @ (np.real(self._pole_part(t + 0j)) / rest(t)))


def _check_off_E(E, z, name):
    z = complex(z)
    if z.imag == 0.0 and E.contains(z.real):
        raise BoundaryValueError(f"{name}={z.real} lies on the set")
    return z


def green_two_point(eq: EquilibriumData, z, w) -> float:
    """Green's function ``G(z, w)`` of the complement of E with pole at ``w``."""
    E = eq.set
    z = _check_off_E(E, z, "z")
    w = _check_off_E(E, w, "w")
    if z == w:
        raise SingularityError("z and w coincide")
    if z.imag < 0 or (z.imag == 0.0 and w.imag < 0):
        z, w = z.conjugate(), w.conjugate()
    diff = _ThirdKind(eq, w)
    explicit = 0.0
    if w.imag != 0.0:
        explicit = -0.5 * math.log(abs(z - w) / abs(z - w.conjugate()))
    if z.imag == 0.0:
        return explicit - _green_real(eq, diff, z.real)
    return explicit - _green_path(eq, diff, z)


def harmonic_frequencies(eq: EquilibriumData) -> FrequencyVector:
    """``omega_j`` = equilibrium mass of the bands right of gap j, mod 1."""
    m = eq.band_measures
    return FrequencyVector(tuple(math.fsum(m[j + 1:]) for j in range(eq.genus)))


def _real_points_off_E(E, points):
    out = []
    for x in points:
        x = float(x)
        if E.contains(x):
            raise BoundaryValueError(f"point {x} lies on the set")
        out.append(x)
    return out


def greens_sum(eq: EquilibriumData, points) -> float:
    """``sum_l G(x_l)`` over real points off E."""
    pts = _real_points_off_E(eq.set, points)
    return math.fsum(green_infinity(eq, x) for x in pts)


def carleson_sum(eq: EquilibriumData, points, executor=None) -> float:
    """``sup_l sum_{j != l} G(y_j, y_l)``."""
    pts = _real_points_off_E(eq.set, points)
    if len(set(pts)) != len(pts):
        raise ValidationError("duplicate points")
    if len(pts) < 2:
        return 0.0
    rows = carleson_rows(eq, pts, executor)
    return max(rows)


def carleson_rows(eq, pts, executor=None):
    def row(l):
        return math.fsum(green_two_point(eq, pts[j], pts[l]) for j in range(len(pts)) if j != l)

    if executor is None:
        return [row(l) for l in range(len(pts))]
    return list(executor.map(row, range(len(pts))))


def rescale_to_unit_capacity(E: IntervalSet, eq: EquilibriumData | None = None):
    """Affine image of E with capacity 1, scaled about the hull midpoint.

    Returns ``(E1, scale, shift)`` with ``E1 = scale * E + shift``.
    """
    eq = eq or equilibrium(E)
    s = 1.0 / eq.capacity
    mid = 0.5 * (E.left + E.right)
    shift = mid * (1.0 - s)
    return E.affine(s, shift), s, shift


def green_grid_csv(eq: EquilibriumData, xs, ys) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["x", "y", "G"])
    for y in ys:
        for x in xs:
            z = complex(x, y)
            if y == 0 and eq.set.contains(x):
                val = 0.0
            else:
                val = green_infinity(eq, z)
            w.writerow([repr(float(x)), repr(float(y)), repr(val)])
    return buf.getvalue()
