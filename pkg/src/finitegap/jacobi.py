"""Jacobi recurrence coefficients of spectral measures.

Orthonormal polynomials obey

    z P_n = p_n P_{n-1} + q_n P_n + p_{n+1} P_{n+1},    p_0 P_0 = 1,

with ``p_0**2`` the total mass.  Coefficients come from a quadrature
discretization of the measure followed by Lanczos with full
reorthogonalization, which is backward stable where moment methods are not.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, RankExhaustedError, ValidationError
from .measures import SpectralMeasure, StieltjesFunction

ORTHO_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class JacobiCoefficients:
    """``p = (p_0, ..., p_N)`` and ``q = (q_0, ..., q_{N-1})``.

    A finite Jacobi matrix (measure with exactly N atoms) has ``len(p) == N``.
    """

    p: np.ndarray
    q: np.ndarray
    residual: float | None = field(default=None, compare=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        q = np.asarray(self.q, dtype=float)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)
        if q.size < 1:
            raise ValidationError("need at least one recurrence step")
        if p.size not in (q.size, q.size + 1):
            raise ValidationError("p must have len(q) or len(q) + 1 entries")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(q))):
            raise ValidationError("coefficients must be finite")
        if np.any(p <= 0):
            raise ValidationError("off-diagonal coefficients must be positive")

    @property
    def N(self):
        return self.q.size

    def to_json(self):
        return {"p": self.p.tolist(), "q": self.q.tolist()}


@dataclass(frozen=True, eq=False)
class DiscretizedMeasure:
    nodes: np.ndarray
    weights: np.ndarray
    source: SpectralMeasure | None = None

    @property
    def mass(self):
        return math.fsum(self.weights)


def discretize(measure: SpectralMeasure, nodes_per_band: int) -> DiscretizedMeasure:
    """Theta Gauss-Legendre rule on each band plus one exact node per atom."""
    if nodes_per_band < 8:
        raise ValidationError("nodes_per_band must be at least 8")
    xs, ws = [], []
    w = measure.resolved
    if w is not None:
        for j in range(len(measure.bands.bands)):
            t, _, wt, om = w.nodes(j, int(nodes_per_band))
            xs.append(t)
            ws.append(wt * om)
    for x, m in measure.masses:
        xs.append(np.array([x]))
        ws.append(np.array([m]))
    x = np.concatenate(xs)
    wt = np.concatenate(ws)
    keep = wt > 0
    return DiscretizedMeasure(x[keep], wt[keep], measure)


def _dot(a, b, compensated):
    if not compensated:
        return float(a @ b)
    # exact products split into head and tail, then an exactly rounded sum
    prod = a * b
    sa = a * 134217729.0
    ah = sa - (sa - a)
    al = a - ah
    sb = b * 134217729.0
    bh = sb - (sb - b)
    bl = b - bh
    err = ((ah * bh - prod) + ah * bl + al * bh) + al * bl
    return math.fsum(np.concatenate([prod, err]))


def recurrence_coefficients(d: DiscretizedMeasure, N: int, compensated: bool = False) -> JacobiCoefficients:
    """Lanczos on ``diag(nodes)`` with start vector ``sqrt(weights)``."""
    x = np.asarray(d.nodes, dtype=float)
    w = np.asarray(d.weights, dtype=float)
    n = x.size
    if N < 1 or N > n:
        raise ValidationError(f"N={N} must lie in [1, {n}] for this discretization")
    p0 = math.sqrt(math.fsum(w))
    V = np.zeros((N + 1, n))
    V[0] = np.sqrt(w) / p0
    p = [p0]
    q = []
    scale = max(1.0, float(np.max(np.abs(x))))
    for k in range(N):
        u = x * V[k]
        qk = _dot(V[k], u, compensated)
        q.append(qk)
        u = u - qk * V[k]
        if k:
            u = u - p[k] * V[k - 1]
        for _ in range(2):
            u = u - V[: k + 1].T @ (V[: k + 1] @ u)
        if k == n - 1:
            break
        pk = math.sqrt(_dot(u, u, compensated))
        if pk <= 1e-13 * scale:
            raise RankExhaustedError(f"Lanczos breakdown at index {k + 1}", index=k + 1)
        p.append(pk)
        V[k + 1] = u / pk
    return JacobiCoefficients(np.array(p), np.array(q))


def eval_polys(c: JacobiCoefficients, z, n: int) -> np.ndarray:
    """``P_0(z), ..., P_n(z)`` stacked along the first axis."""
    if n < 0 or n > c.N or (n == c.N and c.p.size == c.N):
        raise ValidationError(f"degree {n} exceeds the available coefficients")
    z = np.asarray(z, dtype=complex if np.iscomplexobj(z) else float)
    out = np.empty((n + 1,) + z.shape, dtype=z.dtype)
    out[0] = 1.0 / c.p[0]
    if n >= 1:
        out[1] = (z - c.q[0]) * out[0] / c.p[1]
    for k in range(1, n):
        out[k + 1] = ((z - c.q[k]) * out[k] - c.p[k] * out[k - 1]) / c.p[k + 1]
    return out


def divided_difference_integrals(c: JacobiCoefficients, y, n: int) -> np.ndarray:
    """``D_k(y) = int (P_k(x) - P_k(y)) / (x - y) dsigma(x)`` for k = 0..n.

    Follows from the recurrence and ``int P_k dsigma = p_0 delta_{k0}``.
    """
    P = eval_polys(c, y, n)
    y = np.asarray(y, dtype=P.dtype)
    D = np.zeros_like(P)
    if n >= 1:
        D[1] = c.p[0] / c.p[1] * np.ones_like(y)
    for k in range(1, n):
        D[k + 1] = ((y - c.q[k]) * D[k] - c.p[k] * D[k - 1]) / c.p[k + 1]
    return D


def second_kind_eval(measure, c: JacobiCoefficients, z, n: int) -> np.ndarray:
    """``h_k(z) = int P_k(x) / (z - x) dsigma(x)`` for k = 0..n.

    Miller's backward recurrence from the deepest available index, scaled so
    that ``h_0 = (r(inf) - r(z)) / p_0``.
    """
    r = measure if isinstance(measure, StieltjesFunction) else StieltjesFunction(measure)
    z = complex(z)
    h0 = (r.constant - r(z)) / c.p[0]
    M = c.N - 1
    if c.p.size <= M + 1:
        M -= 1
    if n > M - 1:
        raise ValidationError(f"need more than {n + 1} coefficients for second-kind functions up to {n}")
    h = np.zeros(M + 2, dtype=complex)
    h[M] = 1.0
    for k in range(M, 0, -1):
        h[k - 1] = ((z - c.q[k]) * h[k] - c.p[k + 1] * h[k + 1]) / c.p[k]
        if abs(h[k - 1]) > 1e200:
            h *= 1e-200
    return h0 * h[: n + 1] / h[0]


def tau_transform_jacobi(c: JacobiCoefficients, inverse: bool = False) -> JacobiCoefficients:
    """Rank-one update ``J + e e^T`` with ``e = (p_0, 0, ...)``: only q_0 changes."""
    q = c.q.copy()
    q[0] = q[0] - c.p[0] ** 2 if inverse else q[0] + c.p[0] ** 2
    return JacobiCoefficients(c.p.copy(), q)


@dataclass(frozen=True)
class TauPolyReport:
    gram_residual: float
    inverse_error: float


def tau_polys(c: JacobiCoefficients, y, n: int) -> np.ndarray:
    """``P^tau_k(y) = P_k(y) - int (P_k(x) - P_k(y)) / (x - y) dsigma``."""
    return eval_polys(c, y, n) - divided_difference_integrals(c, y, n)


def tau_transform_polys(measure: SpectralMeasure, c: JacobiCoefficients, N: int, nodes_per_band: int | None = None) -> TauPolyReport:
    """Check that the mapped system is orthonormal for the transformed measure.

    Also reconstructs ``P_k`` from ``P^tau_k`` through the inverse map with
    the transformed coefficients, on sample points across the hull.
    """
    r = StieltjesFunction(measure)
    rt = r.tau()
    d = discretize(rt.measure, nodes_per_band or max(8 * N, 64))
    V = tau_polys(c, d.nodes, N)
    G = (V * d.weights) @ V.T
    gram = float(np.max(np.abs(G - np.eye(N + 1))))
    ct = tau_transform_jacobi(c)
    lo, hi = _hull(measure)
    ys = np.linspace(lo, hi, 10)
    back = tau_polys(c, ys, N) + divided_difference_integrals(ct, ys, N)
    inv = float(np.max(np.abs(back - eval_polys(c, ys, N))))
    return TauPolyReport(gram, inv)


def _hull(measure):
    pts = [x for x, _ in measure.masses]
    if measure.bands is not None:
        pts += [measure.bands.left, measure.bands.right]
    return min(pts), max(pts)


def orthonormality_residual(d: DiscretizedMeasure, c: JacobiCoefficients, N: int) -> float:
    """``max |<P_n, P_m> - delta_nm|`` over ``0 <= n, m <= N`` in ``L2(d)``.

    At atoms off the bands forward evaluation amplifies coefficient rounding
    by roughly ``exp(n G(x))``, so for such measures this is a pessimistic
    figure.
    """
    V = eval_polys(c, d.nodes, N)
    G = (V * d.weights) @ V.T
    return float(np.max(np.abs(G - np.eye(N + 1))))


def _coefficient_change(a: JacobiCoefficients, b: JacobiCoefficients) -> float:
    return float(max(np.max(np.abs(a.p - b.p)), np.max(np.abs(a.q - b.q))))


def jacobi_coefficients(measure: SpectralMeasure, N: int, nodes_per_band: int | None = None, tol: float = ORTHO_TOL) -> JacobiCoefficients:
    """Coefficients with automatic node refinement.

    The rule starts at 8N nodes per band and doubles up to 64N until the
    polynomials are orthonormal to ``tol`` on a rule twice as fine.  If that
    fails, the Lanczos sweep is repeated with compensated inner products.
    """
    if measure.resolved is None:
        d = discretize(measure, 8)
        return JacobiCoefficients(*_astuple(recurrence_coefficients(d, N)), residual=0.0)
    if nodes_per_band is not None:
        d = discretize(measure, nodes_per_band)
        c = recurrence_coefficients(d, N)
        res = orthonormality_residual(discretize(measure, 2 * nodes_per_band), c, N)
        return JacobiCoefficients(c.p, c.q, residual=res)
    n = max(8 * N, 16)
    cap = max(64 * N, 16)
    while True:
        d = discretize(measure, n)
        c = recurrence_coefficients(d, N)
        fine = discretize(measure, 2 * n)
        res = orthonormality_residual(fine, c, N)
        if res < tol:
            return JacobiCoefficients(c.p, c.q, residual=res)
        # with atoms off the bands the residual is ill-conditioned; accept
        # coefficients that no longer move under refinement
        if measure.masses and _coefficient_change(c, recurrence_coefficients(fine, N)) < tol:
            return JacobiCoefficients(c.p, c.q, residual=res)
        if n >= cap:
            break
        n *= 2
    c = recurrence_coefficients(d, N, compensated=True)
    res = orthonormality_residual(discretize(measure, 2 * n), c, N)
    if res < tol:
        return JacobiCoefficients(c.p, c.q, residual=res)
    raise NumericalError(f"orthonormality residual {res:.3g} stalls above {tol:g}")


def _astuple(c):
    return c.p, c.q


# --------------------------------------------------------------------------
# Import / export


def coefficients_csv(c: JacobiCoefficients) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "p_n", "q_n"])
    for n in range(c.p.size):
        q = repr(float(c.q[n])) if n < c.q.size else ""
        w.writerow([n, repr(float(c.p[n])), q])
    return buf.getvalue()


def coefficients_from_csv(text: str) -> JacobiCoefficients:
    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or set(rows[0]) != {"n", "p_n", "q_n"}:
        raise ValidationError("coefficient CSV needs columns n,p_n,q_n")
    p = [float(r["p_n"]) for r in rows]
    q = [float(r["q_n"]) for r in rows if r["q_n"] not in ("", None)]
    return JacobiCoefficients(np.array(p), np.array(q))


def coefficients_from_json(obj) -> JacobiCoefficients:
    if isinstance(obj, str):
        obj = json.loads(obj)
    if set(obj) - {"p", "q"}:
        raise ValidationError("coefficient JSON needs exactly the fields p and q")
    return JacobiCoefficients(np.array(obj["p"], dtype=float), np.array(obj["q"], dtype=float))
