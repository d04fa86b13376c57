"""Spectral measures on ``E`` plus finitely many gap masses, and their
Stieltjes functions ``r(z) = c + int dsigma(x)/(x - z)``.

The absolutely continuous part lives on each band ``[l, r]`` as a theta
weight ``omega(theta) = w(t) dt/dtheta`` with ``t = mid - half*cos(theta)``.
For the weights used here (endpoint exponents +-1/2 and their transforms)
omega is smooth on ``[0, pi]``, so Gauss-Legendre in theta is spectrally
accurate.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate, optimize

from .errors import (
    BoundaryValueError,
    BracketingError,
    PlacementError,
    ValidationError,
)
from .intervals import IntervalSet
from .quadrature import gl_theta, interval_rule

log = logging.getLogger(__name__)

DEFAULT_ORDER = 256
BOUNDARY_ZERO_TOL = 1e-10
WEIGHT_KINDS = ("equilibrium", "generalized-jacobi", "sigma0-phase", "table", "tau-transform")


def _quad(f, a, b, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        return integrate.quad(f, a, b, epsabs=1e-15, epsrel=1e-13, limit=500, **kw)[0]


def _one_minus_cos(theta):
    return 2.0 * np.sin(0.5 * theta) ** 2


def _one_plus_cos(theta):
    return 2.0 * np.cos(0.5 * theta) ** 2


# --------------------------------------------------------------------------
# Weight specifications


@dataclass(frozen=True, eq=False)
class WeightSpec:
    """Description of the a.c. part.

    ``generalized-jacobi`` params: ``exponents`` (one ``[e_left, e_right]``
    pair, or one per band, entries +-1/2), optional ``coefficients``
    (Chebyshev series of a smooth positive factor on each band, in the band
    variable ``s in [-1, 1]``) and ``constant``.  ``sigma0-phase`` params:
    ``X`` and ``Xtau``.  ``table`` params: ``x`` and ``w`` samples, linearly
    interpolated.  ``normalization`` rescales to the given total a.c. mass.
    """

    kind: str
    params: dict = field(default_factory=dict)
    normalization: float | None = None

    def __post_init__(self):
        if self.kind not in WEIGHT_KINDS:
            raise ValidationError(f"unknown weight kind {self.kind!r}")
        if self.normalization is not None and not self.normalization > 0:
            raise ValidationError("normalization must be positive")
        if self.kind == "generalized-jacobi":
            ex = np.asarray(self.params.get("exponents", [0.5, 0.5]), dtype=float)
            if not np.all(np.isin(ex, (-0.5, 0.5))):
                raise ValidationError("endpoint exponents must be +-1/2")

    def to_json(self):
        if self.kind == "tau-transform":
            raise ValidationError("derived weights are exported as tables")
        params = {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.params.items()}
        out = {"kind": self.kind, **params}
        if self.normalization is not None:
            out["normalization"] = self.normalization
        return out


def semicircle(normalization=1.0):
    """Endpoint exponents +1/2 on every band; on [-2, 2] this is sqrt(4-x^2)/(2 pi)."""
    return WeightSpec("generalized-jacobi", {"exponents": [0.5, 0.5]}, normalization)


def arcsine(normalization=1.0):
    """Endpoint exponents -1/2 on every band; on [-2, 2] this is 1/(pi sqrt(4-x^2))."""
    return WeightSpec("generalized-jacobi", {"exponents": [-0.5, -0.5]}, normalization)


def equilibrium_weight(normalization=None):
    return WeightSpec("equilibrium", {}, normalization)


class _ThetaWeight:
    """Resolved weight: ``omega_j(theta)`` per band with node caching."""

    def __init__(self, bands: IntervalSet):
        self.bands = bands
        self._cache = {}
        self.factor = 1.0

    def raw(self, j, theta):
        raise NotImplementedError

    def theta(self, j, theta):
        return self.factor * self.raw(j, np.asarray(theta, dtype=float))

    def nodes(self, j, n):
        key = (j, n)
        if key not in self._cache:
            l, r = self.bands.bands[j]
            t, th, w = interval_rule(l, r, n)
            self._cache[key] = (t, th, w, self.theta(j, th))
        return self._cache[key]

    def normalize(self, mass, n):
        raw = math.fsum(float(w @ om) for j in range(len(self.bands.bands)) for _, _, w, om in [self.nodes(j, n)])
        self.factor *= mass / raw
        self._cache.clear()

    def density(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape)
        for j, (l, r) in enumerate(self.bands.bands):
            m = (x > l) & (x < r)
            if np.any(m):
                mid, half = 0.5 * (l + r), 0.5 * (r - l)
                th = np.arccos(np.clip((mid - x[m]) / half, -1.0, 1.0))
                out[m] = self.theta(j, th) / (half * np.sin(th))
        return out


class _JacobiWeight(_ThetaWeight):
    def __init__(self, bands, params):
        super().__init__(bands)
        nb = len(bands.bands)
        ex = np.asarray(params.get("exponents", [0.5, 0.5]), dtype=float)
        self.exponents = np.broadcast_to(ex.reshape(-1, 2), (nb, 2)) if ex.size == 2 else ex.reshape(nb, 2)
        co = params.get("coefficients", [1.0])
        if co and not isinstance(co[0], (list, tuple)):
            co = [co] * nb
        self.coefficients = [np.asarray(c, dtype=float) for c in co]
        if len(self.coefficients) != nb:
            raise ValidationError("one coefficient list per band is required")
        self.constant = float(params.get("constant", 1.0))

    def raw(self, j, theta):
        l, r = self.bands.bands[j]
        half = 0.5 * (r - l)
        e1, e2 = self.exponents[j]
        smooth = C.chebval(-np.cos(theta), self.coefficients[j])
        return (
            self.constant
            * smooth
            * half ** (e1 + e2 + 1.0)
            * _one_minus_cos(theta) ** (e1 + 0.5)
            * _one_plus_cos(theta) ** (e2 + 0.5)
        )


class _EquilibriumWeight(_ThetaWeight):
    def __init__(self, bands):
        from .potential import equilibrium

        super().__init__(bands)
        self.eq = equilibrium(bands)

    def raw(self, j, theta):
        from .quadrature import abs_factor_product

        l, r = self.bands.bands[j]
        t = 0.5 * (l + r) - 0.5 * (r - l) * np.cos(theta)
        eq = self.eq
        rest = abs_factor_product(t, self.bands.endpoints, eq.scale, (2 * j, 2 * j + 1))
        return np.abs(eq.q_scaled(t)) / (np.pi * rest)


class _Sigma0Weight(_ThetaWeight):
    """Density ``|r0(x + i0)| / pi`` of the reference measure."""

    def __init__(self, bands, X, Xtau):
        super().__init__(bands)
        self.X = np.asarray(X, dtype=float)
        self.Xtau = np.asarray(Xtau, dtype=float)

    def raw(self, j, theta):
        l, r = self.bands.bands[j]
        t = 0.5 * (l + r) - 0.5 * (r - l) * np.cos(theta)
        val = 0.5 * (r - l) * _one_plus_cos(theta) / np.pi
        for k, (a, b) in enumerate(self.bands.bands):
            if k != j:
                val = val * np.sqrt(np.abs((t - b) / (t - a)))
        for x, xt in zip(self.X, self.Xtau):
            val = val * np.abs((t - xt) / (t - x))
        return val


class _TableWeight(_ThetaWeight):
    def __init__(self, bands, params):
        super().__init__(bands)
        self.x = np.asarray(params["x"], dtype=float)
        self.w = np.asarray(params["w"], dtype=float)
        if self.x.shape != self.w.shape or self.x.size < 2 or np.any(np.diff(self.x) <= 0):
            raise ValidationError("table weight needs increasing x samples matching w")

    def raw(self, j, theta):
        l, r = self.bands.bands[j]
        half = 0.5 * (r - l)
        t = 0.5 * (l + r) - half * np.cos(theta)
        return np.interp(t, self.x, self.w, left=0.0, right=0.0) * half * np.sin(theta)


class _TauWeight(_ThetaWeight):
    """``omega / |r(t + i0)|**2``: density of the transformed measure."""

    def __init__(self, parent: "StieltjesFunction"):
        super().__init__(parent.measure.bands)
        self.parent = parent

    def raw(self, j, theta):
        theta = np.asarray(theta, dtype=float)
        l, r = self.bands.bands[j]
        t = 0.5 * (l + r) - 0.5 * (r - l) * np.cos(theta)
        bv = self.parent.boundary_value(t, band=j)
        return self.parent.weight.theta(j, theta) / np.abs(bv) ** 2


# --------------------------------------------------------------------------
# Measures


@dataclass(frozen=True, eq=False)
class SpectralMeasure:
    bands: IntervalSet | None
    weight: WeightSpec | None
    masses: tuple = ()

    @cached_property
    def resolved(self) -> _ThetaWeight | None:
        if self.bands is None or self.weight is None:
            return None
        ws = self.weight
        if ws.kind == "generalized-jacobi":
            w = _JacobiWeight(self.bands, ws.params)
        elif ws.kind == "equilibrium":
            w = _EquilibriumWeight(self.bands)
        elif ws.kind == "sigma0-phase":
            w = _Sigma0Weight(self.bands, ws.params.get("X", ()), ws.params.get("Xtau", ()))
        elif ws.kind == "table":
            w = _TableWeight(self.bands, ws.params)
        else:
            w = _TauWeight(ws.params["parent"])
        if ws.normalization is not None:
            w.normalize(ws.normalization, DEFAULT_ORDER)
        return w

    @property
    def genus(self):
        return -1 if self.bands is None else self.bands.genus

    def ac_mass(self, n=DEFAULT_ORDER) -> float:
        w = self.resolved
        if w is None:
            return 0.0
        return math.fsum(float(wt @ om) for j in range(len(self.bands.bands)) for *_, wt, om in [w.nodes(j, n)])

    def total_mass(self, n=DEFAULT_ORDER) -> float:
        return self.ac_mass(n) + math.fsum(m for _, m in self.masses)

    def density(self, x):
        x = np.asarray(x, dtype=float)
        if self.resolved is None:
            return np.zeros(x.shape)
        return self.resolved.density(x)

    def support_radius(self) -> float:
        pts = [abs(x) for x, _ in self.masses]
        if self.bands is not None:
            pts += [abs(self.bands.left), abs(self.bands.right)]
        return max(pts) if pts else 0.0


def build_measure(bands: IntervalSet | None, weight: WeightSpec | None, masses=()) -> SpectralMeasure:
    """Validate and assemble ``sigma = w dx on E + sum m_l delta_{x_l}``."""
    ms = []
    for x, m in masses:
        x, m = float(x), float(m)
        if not (math.isfinite(x) and math.isfinite(m)):
            raise ValidationError("mass locations and sizes must be finite")
        if not m > 0:
            raise ValidationError(f"point mass at {x} must be positive, got {m}")
        if bands is not None and bands.contains(x):
            raise PlacementError(f"mass point on support: {x} lies on E")
        ms.append((x, m))
    ms.sort()
    if any(a[0] == b[0] for a, b in zip(ms, ms[1:])):
        raise PlacementError("point masses must have distinct locations")
    if bands is None and weight is not None:
        raise ValidationError("an a.c. weight needs bands")
    if bands is None and not ms:
        raise ValidationError("empty measure")
    return SpectralMeasure(bands, weight, tuple(ms))


# --------------------------------------------------------------------------
# Stieltjes function


class StieltjesFunction:
    """``r(z) = constant + int dsigma(x) / (x - z)``.

    The default constant 1 gives the normalization ``r(inf) = 1``; the
    transformed function ``-1/r`` is represented with constant -1.
    """

    def __init__(self, measure: SpectralMeasure, quadrature_order: int = DEFAULT_ORDER, constant: float = 1.0):
        self.measure = measure
        self.quadrature_order = int(quadrature_order)
        self.constant = float(constant)
        self.weight = measure.resolved
        self._mx = np.array([x for x, _ in measure.masses])
        self._mm = np.array([m for _, m in measure.masses])

    # ---- integrals against the a.c. part
    def _near(self, z, j):
        l, r = self.measure.bands.bands[j]
        half = 0.5 * (r - l)
        d = abs(z.imag) if l <= z.real <= r else min(abs(z - l), abs(z - r))
        return d < 0.25 * half

    def _ac(self, z, power=1):
        """``int w(t) / (t - z)**power dt`` for complex array z off E."""
        if self.weight is None:
            return np.zeros(z.shape, dtype=complex)
        out = np.zeros(z.shape, dtype=complex)
        n = self.quadrature_order
        for j in range(len(self.measure.bands.bands)):
            t, th, w, om = self.weight.nodes(j, n)
            near = np.array([self._near(zz, j) for zz in z.ravel()], dtype=bool).reshape(z.shape)
            far = ~near
            if np.any(far):
                out[far] += ((w * om) / (t - z[far][:, None]) ** power).sum(axis=1)
            for idx in zip(*np.nonzero(near)):
                out[idx] += self._ac_adaptive(z[idx], j, power)
        return out

    def _ac_adaptive(self, z, j, power):
        l, r = self.measure.bands.bands[j]
        mid, half = 0.5 * (l + r), 0.5 * (r - l)
        om = lambda th: self.weight.theta(j, np.array([th]))[0]
        f = lambda th: om(th) / (mid - half * math.cos(th) - z) ** power
        re = _quad(lambda th: f(th).real, 0.0, math.pi)
        im = 0.0 if z.imag == 0.0 else _quad(lambda th: f(th).imag, 0.0, math.pi)
        return complex(re, im)

    def _check_off_support(self, z):
        bands = self.measure.bands
        for zz in np.atleast_1d(z).ravel():
            if zz.imag == 0.0:
                if bands is not None and bands.contains(zz.real):
                    raise BoundaryValueError(f"r evaluated on the support at {zz.real}")
                if np.any(self._mx == zz.real):
                    raise BoundaryValueError(f"r evaluated at a point mass {zz.real}")

    def __call__(self, z):
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        self._check_off_support(z)
        val = self.constant + self._ac(z, 1)
        if self._mx.size:
            val = val + (self._mm / (self._mx - z[:, None])).sum(axis=1)
        return complex(val[0]) if scalar else val

    def derivative(self, z):
        """``r'(z) = int dsigma / (x - z)**2``."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        self._check_off_support(z)
        val = self._ac(z, 2)
        if self._mx.size:
            val = val + (self._mm / (self._mx - z[:, None]) ** 2).sum(axis=1)
        return complex(val[0]) if scalar else val

    def total_mass(self):
        return self.measure.total_mass(self.quadrature_order)

    # ---- boundary values on E
    def _pv_own_band(self, j, x):
        """``PV int_band w(t)/(t - x) dt`` by pole subtraction in theta."""
        l, r = self.measure.bands.bands[j]
        mid, half = 0.5 * (l + r), 0.5 * (r - l)
        thx = np.arccos(np.clip((mid - x) / half, -1.0, 1.0))
        omx = self.weight.theta(j, thx)
        out = np.empty(x.shape)
        pending = np.ones(x.shape, dtype=bool)
        n = self.quadrature_order
        while np.any(pending):
            th, w = gl_theta(n)
            gap = np.min(np.abs(th[None, :] - thx[pending][:, None]), axis=1)
            ok = gap > 1e-6
            idx = np.nonzero(pending)[0][ok]
            if idx.size:
                t = mid - half * np.cos(th)
                om = self.weight.theta(j, th)
                num = om[None, :] - omx[idx][:, None]
                out[idx] = (w * num / (t[None, :] - x[idx][:, None])).sum(axis=1)
                pending[idx] = False
            n += 1
        return out

    def boundary_value(self, x, band=None):
        """``r(x + i0)`` for x in the interior of a band."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        bands = self.measure.bands
        if bands is None:
            raise BoundaryValueError("measure has no bands")
        out = np.empty(x.shape, dtype=complex)
        if band is None:
            idx = np.array([bands.band_index(v) if bands.band_index(v) is not None else -1 for v in x])
        else:
            idx = np.full(x.shape, band)
        if np.any(idx < 0):
            raise BoundaryValueError("boundary value requested off E")
        n = self.quadrature_order
        for j in np.unique(idx):
            m = idx == j
            xs = x[m]
            re = np.full(xs.shape, self.constant)
            if self._mx.size:
                re = re + (self._mm / (self._mx - xs[:, None])).sum(axis=1)
            for k in range(len(bands.bands)):
                if k == j:
                    re = re + self._pv_own_band(j, xs)
                else:
                    t, _, w, om = self.weight.nodes(k, n)
                    re = re + (w * om / (t - xs[:, None])).sum(axis=1)
            im = np.pi * self.weight.density(xs)
            out[m] = re + 1j * im
        return out

    # ---- real-line structure
    def _endpoint_limit(self, e, side):
        """Limit of r at band endpoint e approached from ``side`` (+1 right, -1 left)."""
        bands = self.measure.bands
        val = self.constant
        if self._mx.size:
            val += float(np.sum(self._mm / (self._mx - e)))
        n = self.quadrature_order
        scale = max(float(np.max(np.abs(self.weight.nodes(j, n)[3]))) for j in range(len(bands.bands)))
        for j, (l, r) in enumerate(bands.bands):
            if e not in (l, r):
                t, _, w, om = self.weight.nodes(j, n)
                val += float(w @ (om / (t - e)))
                continue
            at_left = e == l
            th0 = 1e-6 if at_left else math.pi - 1e-6
            if self.weight.theta(j, np.array([th0]))[0] > 1e-8 * scale:
                return math.inf if at_left else -math.inf
            mid, half = 0.5 * (l + r), 0.5 * (r - l)
            f = lambda th: self.weight.theta(j, np.array([th]))[0] / (mid - half * math.cos(th) - e)
            val += _quad(f, 0.0, math.pi)
        return val

    def _value_real(self, x):
        return self(complex(x, 0.0)).real

    def _breakpoints(self):
        pts = []
        if self.measure.bands is not None:
            for l, r in self.measure.bands.bands:
                pts.append((l, "band_left"))
                pts.append((r, "band_right"))
        for x in self._mx:
            pts.append((float(x), "pole"))
        return sorted(pts)

    def real_structure(self):
        """Off-support intervals with their limits and the zero of r in each.

        Returns a list of dicts ``{lo, hi, left, right, zero, boundary}`` where
        ``zero`` is the interior zero (or None) and ``boundary`` is an endpoint
        at which r vanishes (or None).
        """
        pts = self._breakpoints()
        ivals = []
        prev = (-math.inf, "inf")
        for p in pts + [(math.inf, "inf")]:
            if prev[1] != "band_left" or p[1] != "band_right":
                if prev[0] < p[0]:
                    ivals.append((prev, p))
            prev = p
        out = []
        for (lo, klo), (hi, khi) in ivals:
            if klo == "band_left" and khi == "band_right":
                continue
            left = self._limit(lo, klo, +1)
            right = self._limit(hi, khi, -1)
            entry = dict(lo=lo, hi=hi, left=left, right=right, zero=None, boundary=None)
            if abs(left) < BOUNDARY_ZERO_TOL:
                entry["boundary"] = lo
                log.info("boundary zero of r at %r; no mass emitted", lo)
            elif abs(right) < BOUNDARY_ZERO_TOL:
                entry["boundary"] = hi
                log.info("boundary zero of r at %r; no mass emitted", hi)
            elif left < 0 < right:
                entry["zero"] = self._find_zero(lo, hi, left, right)
            out.append(entry)
        return out

    def _limit(self, x, kind, side):
        if kind == "inf":
            return self.constant
        if kind == "pole":
            return -math.inf if side > 0 else math.inf
        return self._endpoint_limit(x, side)

    def _find_zero(self, lo, hi, left, right):
        a = self._inner_point(lo, hi, left, -1)
        b = self._inner_point(hi, lo, right, +1)

        def f(x):
            # band endpoints carry their one-sided limits
            if x == lo:
                return left
            if x == hi:
                return right
            return self._value_real(x)

        return optimize.brentq(f, a, b, xtol=1e-15 * max(1.0, abs(a), abs(b)), rtol=1e-15, maxiter=500)

    def _inner_point(self, end, other, limit, sign):
        """A point strictly inside the interval where r has the sign ``sign``."""
        f = self._value_real
        if math.isfinite(end) and math.isfinite(limit):
            return end
        both = math.isfinite(end) and math.isfinite(other)
        span = abs(other - end) if both else max(1.0, abs(end) if math.isfinite(end) else abs(other))
        for k in range(1, 80):
            if not math.isfinite(end):
                x = other + (2.0**k) * span * (1.0 if end > 0 else -1.0)
            else:
                step = span * 2.0**-k
                x = end + (step if other > end else -step)
            if x != end and np.sign(f(x)) == sign:
                return x
        raise BracketingError(f"could not bracket the zero of r next to {end}")

    def zeros(self):
        return [e["zero"] for e in self.real_structure() if e["zero"] is not None]

    def tau(self) -> "StieltjesFunction":
        """Stieltjes function of ``-1/r`` (constant ``-1/c``)."""
        return StieltjesFunction(tau_transform_measure(self), self.quadrature_order, -1.0 / self.constant)


def stieltjes_eval(r: StieltjesFunction, z):
    return r(z)


def tau_transform_measure(r: StieltjesFunction) -> SpectralMeasure:
    """Measure of ``-1/r``: density ``w/|r(x+i0)|**2`` and masses ``1/r'`` at the zeros of r."""
    zs = r.zeros()
    masses = []
    for z0 in zs:
        d = r.derivative(complex(z0, 0.0)).real
        if not d > 0:
            raise BracketingError(f"nonpositive derivative at zero {z0}")
        masses.append((z0, 1.0 / d))
    m = r.measure
    weight = None if m.bands is None else WeightSpec("tau-transform", {"parent": r})
    return SpectralMeasure(m.bands, weight, tuple(masses))


# --------------------------------------------------------------------------
# The reference measure sigma_0


def _check_interlacing(bands: IntervalSet, X, Xtau):
    if len(X) != len(Xtau):
        raise PlacementError("X and Xtau must have equal length")
    pairs = sorted(zip(X, Xtau))
    for x, xt in pairs:
        if bands.contains(x) or bands.contains(xt):
            raise PlacementError("points of X and Xtau must lie off E")
        if not x < xt:
            raise PlacementError(f"zero {xt} is not to the right of pole {x}")
        if any(l < xt and r > x for l, r in bands.bands) or any(x < l < xt for l, _ in bands.bands):
            raise PlacementError(f"pole {x} and zero {xt} are separated by a band")
    for (x1, t1), (x2, _) in zip(pairs, pairs[1:]):
        if not t1 < x2:
            raise PlacementError("pole/zero pairs are not interlacing")
    return pairs


def r0_eval(bands: IntervalSet, X, Xtau, z):
    """``prod (z - x^tau)/(z - x) * prod_bands sqrt((z - right)/(z - left))``."""
    z = np.asarray(z, dtype=complex)
    val = np.ones(z.shape, dtype=complex)
    for l, r in bands.bands:
        val = val * np.sqrt((z - r) / (z - l))
    for x, xt in zip(X, Xtau):
        val = val * (z - xt) / (z - x)
    return val


def make_sigma0(bands: IntervalSet, X=(), Xtau=()) -> SpectralMeasure:
    """Reference measure whose Stieltjes function is ``r0`` (phase pi/2 on E)."""
    pairs = _check_interlacing(bands, list(X), list(Xtau))
    X = [p[0] for p in pairs]
    Xtau = [p[1] for p in pairs]
    masses = []
    for l, x in enumerate(X):
        s = 1.0
        for a, b in bands.bands:
            s *= math.sqrt((x - b) / (x - a))
        for m, (xm, xtm) in enumerate(zip(X, Xtau)):
            if m != l:
                s *= (x - xtm) / (x - xm)
        masses.append((x, (Xtau[l] - x) * s))
    weight = WeightSpec("sigma0-phase", {"X": tuple(X), "Xtau": tuple(Xtau)})
    return build_measure(bands, weight, masses)


# --------------------------------------------------------------------------
# Identities


def contour_mass(r: StieltjesFunction, K: int = 64) -> float:
    """``p0**2`` from ``-(1/2 pi i) oint (r - c) dz`` on a circle around the support."""
    R = 2.0 * (r.measure.support_radius() + 1.0)
    phi = 2.0 * np.pi * np.arange(K) / K
    z = R * np.exp(1j * phi)
    vals = r(z) - r.constant
    return float(np.real(-np.mean(vals * z)))


def mass_balance_residual(r: StieltjesFunction) -> float:
    """``|sum sigma_l + (1/pi) int_E Im r(x+i0) dx - p0**2|``."""
    m = r.measure
    ac = 0.0
    if m.bands is not None:
        n = r.quadrature_order
        for j, (l, rr) in enumerate(m.bands.bands):
            t, th, w, _ = r.weight.nodes(j, n)
            im = r.boundary_value(t, band=j).imag
            ac += float(w @ (im * 0.5 * (rr - l) * np.sin(th))) / np.pi
    total = math.fsum([m_ for _, m_ in m.masses] + [ac])
    return abs(total - contour_mass(r))


@dataclass(frozen=True, eq=False)
class PhaseFunction:
    """``f = pi`` on the intervals where r < 0 off E, ``arg r(x+i0)`` on E, else 0."""

    r: StieltjesFunction
    pi_intervals: tuple
    samples: tuple = ()

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.zeros(x.shape)
        for a, b in self.pi_intervals:
            out[(x > a) & (x < b)] = np.pi
        bands = self.r.measure.bands
        if bands is not None:
            on = np.array([bands.contains(v) and not any(v in bd for bd in bands.bands) for v in x], dtype=bool)
            if np.any(on):
                out[on] = np.angle(self.r.boundary_value(x[on]))
        return out


def exp_representation(r: StieltjesFunction, x_grid=None) -> PhaseFunction:
    if abs(r.constant - 1.0) > 0:
        raise ValidationError("the exponential representation needs r(inf) = 1")
    ivals = []
    for e in r.real_structure():
        lo, hi = e["lo"], e["hi"]
        if e["zero"] is not None:
            ivals.append((lo, e["zero"]))
        elif e["boundary"] is None and e["right"] < 0:
            ivals.append((lo, hi))
        elif e["boundary"] == hi:
            ivals.append((lo, hi))
    if any(not (math.isfinite(a) and math.isfinite(b)) for a, b in ivals):
        raise ValidationError("r is negative on an unbounded interval")
    f = PhaseFunction(r, tuple(ivals))
    if x_grid is not None:
        f = PhaseFunction(r, tuple(ivals), tuple(map(float, f(np.asarray(x_grid)))))
    return f


def exp_eval(f: PhaseFunction, z, n=None) -> complex:
    """``exp{(1/pi) int f(x)/(x - z) dx}``."""
    z = complex(z)
    val = 1.0 + 0j
    for a, b in f.pi_intervals:
        val *= (b - z) / (a - z)
    r = f.r
    bands = r.measure.bands
    if bands is not None:
        n = n or r.quadrature_order
        s = 0.0 + 0j
        for j, (l, rr) in enumerate(bands.bands):
            t, th, w = interval_rule(l, rr, n)
            u = np.angle(r.boundary_value(t, band=j))
            s += np.sum(w * u * 0.5 * (rr - l) * np.sin(th) / (t - z))
        val *= np.exp(s / np.pi)
    return complex(val)


def szego_integral(measure: SpectralMeasure, eq) -> float:
    """``int_E log w(x) dmu_E(x)``; ``-inf`` when w vanishes on a set of positive length."""
    w = measure.resolved
    if w is None:
        return -math.inf
    E = measure.bands
    total = 0.0
    probe = np.linspace(0.0, np.pi, 1026)[1:-1]
    for j, (l, r) in enumerate(E.bands):
        half = 0.5 * (r - l)
        mid = 0.5 * (l + r)
        if np.any(w.theta(j, probe) <= 0.0):
            return -math.inf

        def f(th, j=j):
            t = mid - half * math.cos(th)
            dens = w.theta(j, np.array([th]))[0] / (half * math.sin(th))
            mu = float(eq.density(np.array([t]))[0]) * half * math.sin(th)
            return math.log(dens) * mu

        total += _quad(f, 0.0, math.pi)
    return total


# --------------------------------------------------------------------------
# Serialization


def weight_from_json(obj) -> WeightSpec:
    obj = dict(obj)
    kind = obj.pop("kind", None)
    norm = obj.pop("normalization", None)
    if kind == "semicircle":
        if obj:
            raise ValidationError(f"unknown weight fields {sorted(obj)}")
        return semicircle(1.0 if norm is None else norm)
    if kind == "arcsine":
        if obj:
            raise ValidationError(f"unknown weight fields {sorted(obj)}")
        return arcsine(1.0 if norm is None else norm)
    allowed = {
        "equilibrium": set(),
        "generalized-jacobi": {"exponents", "coefficients", "constant"},
        "sigma0": {"X", "Xtau"},
        "sigma0-phase": {"X", "Xtau"},
        "table": {"x", "w"},
    }
    if kind not in allowed:
        raise ValidationError(f"unknown weight kind {kind!r}")
    extra = set(obj) - allowed[kind]
    if extra:
        raise ValidationError(f"unknown weight fields {sorted(extra)}")
    return WeightSpec("sigma0-phase" if kind == "sigma0" else kind, obj, norm)


def measure_from_json(obj) -> SpectralMeasure:
    from .intervals import set_from_json

    if isinstance(obj, str):
        obj = json.loads(obj)
    extra = set(obj) - {"bands", "cantor", "weight", "masses"}
    if extra:
        raise ValidationError(f"unknown measure fields {sorted(extra)}")
    bands = None
    if "bands" in obj or "cantor" in obj:
        bands = set_from_json({k: obj[k] for k in ("bands", "cantor") if k in obj})
    masses = [tuple(m) for m in obj.get("masses", [])]
    wobj = obj.get("weight")
    if wobj is not None and wobj.get("kind") == "sigma0":
        return make_sigma0(bands, wobj.get("X", ()), wobj.get("Xtau", ()))
    weight = None if wobj is None else weight_from_json(wobj)
    return build_measure(bands, weight, masses)


def measure_to_json(measure: SpectralMeasure, table_points: int = 513) -> dict:
    out = {"masses": [[x, m] for x, m in measure.masses]}
    if measure.bands is not None:
        out["bands"] = [[l, r] for l, r in measure.bands.bands]
    if measure.weight is not None:
        if measure.weight.kind == "tau-transform":
            xs = _density_grid(measure, table_points)
            out["weight"] = {"kind": "table", "x": xs.tolist(), "w": measure.density(xs).tolist()}
        else:
            out["weight"] = measure.weight.to_json()
    return out


def _density_grid(measure, points_per_band):
    xs = []
    for l, r in measure.bands.bands:
        th = np.linspace(0.0, np.pi, points_per_band)[1:-1]
        xs.append(0.5 * (l + r) - 0.5 * (r - l) * np.cos(th))
    return np.concatenate(xs)


def density_csv(measure: SpectralMeasure, points_per_band: int = 201) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["x", "w"])
    if measure.bands is not None:
        xs = _density_grid(measure, points_per_band)
        for x, w in zip(xs, measure.density(xs)):
            wr.writerow([repr(float(x)), repr(float(w))])
    return buf.getvalue()
