"""Finite-n diagnostics for the asymptotics of recurrence coefficients.

Everything here is a pure function of coefficients, potential-theory data
and measures: Widom factors, almost-period scans against the harmonic
frequencies, single-interval Szego checks, root asymptotics and the
sensitivity of the tail of the coefficients to added gap masses.
"""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import InsufficientDepthError, PlacementError, UnsupportedError, ValidationError
from .jacobi import JacobiCoefficients, eval_polys, jacobi_coefficients
from .measures import SpectralMeasure, build_measure
from .potential import EquilibriumData, FrequencyVector, green_infinity, harmonic_frequencies

SMALL_TORUS_DISTANCE = 0.05
DEFAULT_T_MAX = 12

__all__ = [
    "AlmostPeriodDiagnostics",
    "AsymptoticsReport",
    "FrequencyVector",
    "SzegoCheck",
    "almost_period_scan",
    "argmin_agreement",
    "build_report",
    "frequency_vector",
    "nth_root_check",
    "point_mass_stability",
    "ratio_along_almost_periods",
    "szego_reference_check",
    "widom_factors",
]


def widom_factors(c: JacobiCoefficients, cap: float) -> np.ndarray:
    """``W_n = p_0 ... p_n / cap**n`` for every available n."""
    if not cap > 0:
        raise ValidationError("capacity must be positive")
    n = np.arange(c.p.size)
    return np.exp(np.cumsum(np.log(c.p)) - n * math.log(cap))


def frequency_vector(eq: EquilibriumData) -> FrequencyVector:
    return harmonic_frequencies(eq)


@dataclass(frozen=True)
class AlmostPeriodDiagnostics:
    burn_in: int
    candidate_periods: tuple

    def to_json(self):
        return {
            "burn_in": self.burn_in,
            "candidate_periods": [
                {"T": T, "torus_distance": d, "sup_deviation_p": dp, "sup_deviation_q": dq}
                for T, d, dp, dq in self.candidate_periods
            ],
        }


def almost_period_scan(
    c: JacobiCoefficients, omega: FrequencyVector, burn_in: int | None = None, T_max: int = DEFAULT_T_MAX
) -> AlmostPeriodDiagnostics:
    """Sup deviations ``|p_{m+T} - p_m|``, ``|q_{m+T} - q_m|`` over ``m >= burn_in``."""
    N = c.N
    burn_in = N // 2 if burn_in is None else int(burn_in)
    if N < burn_in + T_max + 10:
        raise InsufficientDepthError(f"N={N} is too small for burn_in={burn_in} and T_max={T_max}")
    rows = []
    for T in range(1, T_max + 1):
        m = np.arange(burn_in, N - T)
        dp = float(np.max(np.abs(c.p[m + T] - c.p[m])))
        dq = float(np.max(np.abs(c.q[m + T] - c.q[m])))
        rows.append((T, omega.torus_distance(T), dp, dq))
    return AlmostPeriodDiagnostics(burn_in, tuple(rows))


def argmin_agreement(diag: AlmostPeriodDiagnostics, tie_tol: float = 1e-9) -> bool:
    """Whether the T minimizing the p-deviation is among the T of minimal torus distance."""
    rows = diag.candidate_periods
    dmin = min(r[1] for r in rows)
    best = {r[0] for r in rows if r[1] <= dmin + tie_tol}
    T_dev = min(rows, key=lambda r: r[2])[0]
    return T_dev in best


# --------------------------------------------------------------------------
# Single interval


@dataclass(frozen=True)
class SzegoCheck:
    point: complex
    observed: complex
    predicted: complex
    error: float

    def to_json(self):
        return {
            "point": [self.point.real, self.point.imag],
            "observed": [self.observed.real, self.observed.imag],
            "predicted": [self.predicted.real, self.predicted.imag],
            "error": self.error,
        }


def _single_band(measure: SpectralMeasure):
    if measure.bands is None or measure.bands.genus != 0:
        raise UnsupportedError("Szego reference check needs a single interval")
    if measure.masses:
        raise UnsupportedError("Szego reference check needs a measure without atoms")
    return measure.bands.bands[0]


def szego_function(measure: SpectralMeasure, zeta) -> complex:
    """Outer function D with ``|D(e^{it})|**2 = 4 pi |sin t| sigma'(2 cos t)`` after
    mapping the band affinely onto [-2, 2]."""
    _single_band(measure)
    w = measure.resolved
    zeta = complex(zeta)

    def log_rho(t):
        # with x = 2 cos t on [-2, 2] the band angle is pi - t and rho = 2 pi omega
        return math.log(2.0 * math.pi * float(w.theta(0, np.array([math.pi - t]))[0]))

    def kernel(t):
        e = complex(math.cos(t), math.sin(t))
        # the weight is even in t, so fold (-pi, 0) onto (0, pi)
        return (e + zeta) / (e - zeta) + (e.conjugate() + zeta) / (e.conjugate() - zeta)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        re = integrate.quad(lambda t: kernel(t).real * log_rho(t), 0.0, math.pi, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
        im = integrate.quad(lambda t: kernel(t).imag * log_rho(t), 0.0, math.pi, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
    return complex(np.exp(complex(re, im) / (4.0 * math.pi)))


def closed_form_szego_function(kind: str, zeta, mass: float = 1.0) -> complex:
    """D for the unit-mass semicircle, unit-mass arcsine and the mass-2 reference measure."""
    zeta = complex(zeta)
    if kind == "semicircle":
        return math.sqrt(mass) * (1 - zeta**2)
    if kind == "arcsine":
        return math.sqrt(2.0 * mass) + 0j
    if kind == "sigma0":
        return math.sqrt(2.0) * (1 - zeta)
    raise ValidationError(f"no closed form for {kind!r}")


def _weight_kind(measure: SpectralMeasure):
    w = measure.weight
    if w is None:
        return None
    if w.kind == "sigma0-phase" and not w.params.get("X"):
        return "sigma0"
    if w.kind == "generalized-jacobi" and not w.params.get("coefficients"):
        ex = np.asarray(w.params.get("exponents", [0.5, 0.5]), dtype=float).ravel()
        if np.all(ex == 0.5):
            return "semicircle"
        if np.all(ex == -0.5):
            return "arcsine"
    return None


def szego_reference_check(c: JacobiCoefficients, measure: SpectralMeasure, zetas, n: int, closed_form: bool = True):
    """``|P_n(x(zeta)) zeta**n D(zeta) - 1|`` with ``x(zeta)`` the affine image of ``zeta + 1/zeta``.

    Returns the per-point checks and ``|W_n - D(0)|``.
    """
    l, r = _single_band(measure)
    mid, quarter = 0.5 * (l + r), 0.25 * (r - l)
    kind = _weight_kind(measure) if closed_form else None
    mass = measure.total_mass()

    def D(z):
        if kind is not None:
            return closed_form_szego_function(kind, z, mass)
        return szego_function(measure, z)

    checks = []
    for zeta in zetas:
        zeta = complex(zeta)
        if not 0 < abs(zeta) < 1:
            raise ValidationError("zeta must lie in the punctured unit disk")
        x = mid + quarter * (zeta + 1.0 / zeta)
        obs = complex(eval_polys(c, x, n)[n]) * zeta**n
        pred = 1.0 / D(zeta)
        checks.append(SzegoCheck(zeta, obs, pred, abs(obs * D(zeta) - 1.0)))
    W = widom_factors(c, quarter)
    return checks, abs(W[n] - D(0.0).real)


def nth_root_check(c: JacobiCoefficients, eq: EquilibriumData, z, n: int) -> float:
    """``|(1/n) log|P_n(z)| - G(z)|``."""
    if n < 1:
        raise ValidationError("n must be positive")
    P = eval_polys(c, complex(z), n)[n]
    return abs(math.log(abs(P)) / n - green_infinity(eq, z))


def ratio_along_almost_periods(c: JacobiCoefficients, eq: EquilibriumData, omega, z, burn_in: int, T: int) -> float:
    """``sup_{n >= burn_in} |log|P_{n+T}(z) / P_n(z)| - T G(z)|``."""
    top = c.N if c.p.size > c.N else c.N - 1
    if burn_in + T > top:
        raise InsufficientDepthError("not enough coefficients for this burn-in and period")
    logs = np.log(np.abs(eval_polys(c, complex(z), top)))
    G = green_infinity(eq, z)
    n = np.arange(burn_in, top - T + 1)
    return float(np.max(np.abs(logs[n + T] - logs[n] - T * G)))


def point_mass_stability(base: SpectralMeasure, mass, N: int, burn_in: int):
    """``(sup |dp_n|, sup |dq_n|)`` over ``n >= burn_in`` after adding ``m delta_x``."""
    x, m = float(mass[0]), float(mass[1])
    if base.bands is not None and base.bands.contains(x):
        raise PlacementError(f"mass point {x} lies on E")
    if m == 0.0:
        return 0.0, 0.0
    c0 = jacobi_coefficients(base, N)
    pert = build_measure(base.bands, base.weight, list(base.masses) + [(x, m)])
    c1 = jacobi_coefficients(pert, N)
    return tail_deviation(c0, c1, burn_in)


def tail_deviation(c0: JacobiCoefficients, c1: JacobiCoefficients, burn_in: int):
    dp = float(np.max(np.abs(c0.p[burn_in:] - c1.p[burn_in:])))
    dq = float(np.max(np.abs(c0.q[burn_in:] - c1.q[burn_in:])))
    return dp, dq


# --------------------------------------------------------------------------
# Report


@dataclass(frozen=True, eq=False)
class AsymptoticsReport:
    widom_factors: np.ndarray
    frequency: FrequencyVector
    diagnostics: AlmostPeriodDiagnostics | None
    szego_checks: tuple = ()
    notes: dict = field(default_factory=dict)

    def to_json(self):
        return {
            "widom_factors": [float(w) for w in self.widom_factors],
            "frequency": list(self.frequency.omegas),
            "diagnostics": None if self.diagnostics is None else self.diagnostics.to_json(),
            "szego_checks": [s.to_json() for s in self.szego_checks],
            "notes": self.notes,
        }


DEFAULT_ZETAS = (0.5, 0.5j, -0.3 + 0.4j)


def build_report(
    measure: SpectralMeasure,
    c: JacobiCoefficients,
    eq: EquilibriumData,
    burn_in: int | None = None,
    T_max: int = DEFAULT_T_MAX,
    zetas=DEFAULT_ZETAS,
    szego_n: int | None = None,
) -> AsymptoticsReport:
    W = widom_factors(c, eq.capacity)
    omega = frequency_vector(eq)
    notes = {"N": c.N, "capacity": eq.capacity}
    diag = None
    b = c.N // 2 if burn_in is None else burn_in
    if c.N >= b + T_max + 10:
        diag = almost_period_scan(c, omega, b, T_max)
        notes["argmin_agreement"] = argmin_agreement(diag)
    else:
        notes["almost_period_scan"] = "skipped: N too small"
    checks = ()
    if eq.genus == 0 and not measure.masses:
        n = min(30, c.N - 1) if szego_n is None else szego_n
        checks, werr = szego_reference_check(c, measure, zetas, n)
        checks = tuple(checks)
        notes["szego_n"] = n
        notes["widom_limit_error"] = werr
    if c.residual is not None:
        notes["orthonormality_residual"] = c.residual
    return AsymptoticsReport(W, omega, diag, checks, notes)


def sequences_csv(c: JacobiCoefficients, W) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "p_n", "q_n", "W_n"])
    for n in range(c.p.size):
        q = repr(float(c.q[n])) if n < c.q.size else ""
        w.writerow([n, repr(float(c.p[n])), q, repr(float(W[n]))])
    return buf.getvalue()


def widom_csv(W) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "W_n"])
    for n, val in enumerate(W):
        w.writerow([n, repr(float(val))])
    return buf.getvalue()


def gnuplot_blocks(blocks: dict) -> str:
    """One commented, blank-line separated block per named column table."""
    out = []
    for name, (header, rows) in blocks.items():
        out.append(f"# {name}\n# " + " ".join(header))
        out.extend(" ".join(repr(float(v)) if not isinstance(v, int) else str(v) for v in row) for row in rows)
        out.append("\n")
    return "\n".join(out)
