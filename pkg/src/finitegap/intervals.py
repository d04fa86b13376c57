"""Compact real sets given as finite unions of closed bands.

A set ``E = [b0, a0] minus the open gaps (a_j, b_j)`` is stored as its ordered
list of bands.  Cantor-type sets enter through their finite generations.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InsufficientDepthError, ValidationError

MERGE_TOL = 1e-14


@dataclass(frozen=True)
class IntervalSet:
    """Disjoint, strictly increasing closed bands ``((l0, r0), (l1, r1), ...)``."""

    bands: tuple

    def __init__(self, bands):
        pairs = sorted((float(l), float(r)) for l, r in bands)
        if not pairs:
            raise ValidationError("an interval set needs at least one band")
        for l, r in pairs:
            if not (math.isfinite(l) and math.isfinite(r)) or not l < r:
                raise ValidationError(f"invalid band [{l}, {r}]")
        tol = MERGE_TOL * (pairs[-1][1] - pairs[0][0])
        merged = [pairs[0]]
        for l, r in pairs[1:]:
            pl, pr = merged[-1]
            if l <= pr + tol:
                merged[-1] = (pl, max(pr, r))
            else:
                merged.append((l, r))
        object.__setattr__(self, "bands", tuple(merged))

    @property
    def left(self) -> float:
        return self.bands[0][0]

    @property
    def right(self) -> float:
        return self.bands[-1][1]

    @property
    def diam(self) -> float:
        return self.right - self.left

    @property
    def genus(self) -> int:
        """Number of bounded gaps."""
        return len(self.bands) - 1

    @property
    def endpoints(self) -> np.ndarray:
        return np.array([e for band in self.bands for e in band])

    def contains(self, x, tol=0.0) -> bool:
        x = float(x)
        return any(l - tol <= x <= r + tol for l, r in self.bands)

    def band_index(self, x):
        """Index of the band containing ``x``, or None."""
        for i, (l, r) in enumerate(self.bands):
            if l <= x <= r:
                return i
        return None

    def gap_index(self, x):
        """Index ``k`` of the gap ``(r_k, l_{k+1})`` containing ``x``, or None."""
        for k in range(self.genus):
            if self.bands[k][1] < x < self.bands[k + 1][0]:
                return k
        return None

    def affine(self, scale: float, shift: float) -> "IntervalSet":
        """Image of the set under ``x -> scale * x + shift``."""
        pts = [(scale * l + shift, scale * r + shift) for l, r in self.bands]
        return IntervalSet([(min(a, b), max(a, b)) for a, b in pts])

    def to_json(self) -> dict:
        return {"bands": [[l, r] for l, r in self.bands]}


@dataclass(frozen=True)
class CantorSpec:
    l0: float
    kappas: tuple
    origin: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))
        if not self.l0 > 0:
            raise ValidationError("l0 must be positive")
        for k in self.kappas:
            if not 0.0 < k < 1.0:
                raise ValidationError(f"removal fraction {k} outside (0, 1)")

    def band_length(self, generation: int) -> float:
        length = self.l0
        for k in self.kappas[:generation]:
            length = 0.5 * (1.0 - k) * length
        return length


@dataclass(frozen=True)
class HomogeneityGrid:
    """Sampling descriptor for :func:`homogeneity_eta`.

    x samples are band endpoints and midpoints plus ``x_per_band`` equispaced
    interior points per band; rho samples are ``n_rho`` log-spaced values in
    ``[diam * 2**-rho_octaves, diam]``, augmented by every breakpoint
    ``|x - endpoint|`` of the intersection length when ``breakpoints`` is set.
    """

    x_per_band: int = 0
    n_rho: int = 64
    rho_octaves: int = 20
    breakpoints: bool = True

    def to_json(self):
        return {
            "x_per_band": self.x_per_band,
            "n_rho": self.n_rho,
            "rho_octaves": self.rho_octaves,
            "breakpoints": self.breakpoints,
        }


@dataclass(frozen=True)
class HomogeneityReport:
    eta_estimate: float
    worst_x: float
    worst_rho: float
    sample_grid: dict = field(default_factory=dict)


def make_cantor(spec: CantorSpec, generation: int) -> IntervalSet:
    """Generation-``n`` truncation of the Cantor set ``E(l0; kappa_1, ...)``."""
    if generation < 0:
        raise ValidationError("generation must be nonnegative")
    if generation > len(spec.kappas):
        raise InsufficientDepthError(
            f"generation {generation} needs {generation} removal fractions, "
            f"spec has {len(spec.kappas)}"
        )
    bands = [(spec.origin, spec.origin + spec.l0)]
    for k in spec.kappas[:generation]:
        nxt = []
        for a, b in bands:
            child = 0.5 * (1.0 - k) * (b - a)
            nxt.append((a, a + child))
            nxt.append((b - child, b))
        bands = nxt
    return IntervalSet(bands)


def total_length(E: IntervalSet) -> float:
    return math.fsum(r - l for l, r in E.bands)


def gaps(E: IntervalSet):
    """Bounded gaps ``[(a_j, b_j), ...]`` left to right and the hull ``(b0, a0)``."""
    gs = [(E.bands[k][1], E.bands[k + 1][0]) for k in range(E.genus)]
    return gs, (E.left, E.right)


def _intersection_length(E: IntervalSet, lo, hi):
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    total = np.zeros(np.broadcast(lo, hi).shape)
    for l, r in E.bands:
        total += np.clip(np.minimum(hi, r) - np.maximum(lo, l), 0.0, None)
    return total


def local_density(E: IntervalSet, x: float, rho: float) -> float:
    """``|(x - rho, x + rho) & E| / rho``."""
    if not rho > 0:
        raise ValidationError("rho must be positive")
    return float(_intersection_length(E, x - rho, x + rho) / rho)


def _grid_points(E: IntervalSet, grid: HomogeneityGrid):
    xs = []
    for l, r in E.bands:
        xs.extend([l, r, 0.5 * (l + r)])
        if grid.x_per_band:
            xs.extend(np.linspace(l, r, grid.x_per_band + 2)[1:-1])
    return np.unique(np.array(xs))


def homogeneity_eta(E: IntervalSet, grid: HomogeneityGrid | None = None) -> HomogeneityReport:
    """Minimum of :func:`local_density` over a sample grid of ``(x, rho)``.

    The intersection length is piecewise linear in ``rho`` with breakpoints at
    ``|x - endpoint|``, so with ``breakpoints`` enabled the minimum over rho in
    ``[diam * 2**-rho_octaves, diam]`` is exact for each sampled x.
    """
    grid = grid or HomogeneityGrid()
    diam = E.diam
    xs = _grid_points(E, grid)
    base = diam * np.logspace(-grid.rho_octaves, 0, grid.n_rho, base=2.0)
    ends = E.endpoints
    rmin = diam * 2.0 ** (-grid.rho_octaves)
    best = (math.inf, None, None)
    for x in xs:
        rhos = base
        if grid.breakpoints:
            bp = np.abs(ends - x)
            bp = bp[(bp >= rmin) & (bp <= diam)]
            rhos = np.concatenate([base, bp])
        ratio = _intersection_length(E, x - rhos, x + rhos) / rhos
        i = int(np.argmin(ratio))
        if ratio[i] < best[0]:
            best = (float(ratio[i]), float(x), float(rhos[i]))
    return HomogeneityReport(best[0], best[1], best[2], grid.to_json())


def sodin_criterion(E: IntervalSet) -> float:
    """``sup_j sum_{k != j} sqrt(l_j l_k) / rho_{j,k}`` over the bounded gaps.

    The outer term ``k = 0`` uses the formal length 1 and the distance from
    gap j to the hull endpoints.
    """
    gs, (b0, a0) = gaps(E)
    if not gs:
        return 0.0
    a = np.array([g[0] for g in gs])
    b = np.array([g[1] for g in gs])
    lengths = b - a
    best = 0.0
    for j in range(len(gs)):
        dist = np.maximum(a - b[j], a[j] - b)
        mask = np.arange(len(gs)) != j
        s = np.sum(np.sqrt(lengths[j] * lengths[mask]) / dist[mask])
        s += math.sqrt(lengths[j]) / min(a[j] - b0, a0 - b[j])
        best = max(best, float(s))
    return best


def set_from_json(obj) -> IntervalSet:
    """Parse ``{"bands": [[l, r], ...]}`` or ``{"cantor": {...}}``."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if isinstance(obj, list):
        return IntervalSet(obj)
    if not isinstance(obj, dict):
        raise ValidationError("set spec must be an object")
    if set(obj) == {"bands"}:
        return IntervalSet(obj["bands"])
    if set(obj) == {"cantor"}:
        c = obj["cantor"]
        unknown = set(c) - {"l0", "origin", "kappas", "generation"}
        if unknown:
            raise ValidationError(f"unknown cantor fields {sorted(unknown)}")
        spec = CantorSpec(c["l0"], tuple(c["kappas"]), c.get("origin", 0.0))
        return make_cantor(spec, int(c.get("generation", len(spec.kappas))))
    raise ValidationError("set spec needs exactly one of 'bands' or 'cantor'")


def cantor_to_json(spec: CantorSpec, generation: int) -> dict:
    return {
        "cantor": {
            "l0": spec.l0,
            "origin": spec.origin,
            "kappas": list(spec.kappas),
            "generation": generation,
        }
    }


def power_kappas(generations: int, base: float = 4.0) -> tuple:
    """The removal fractions ``kappa_j = base**-j``, j = 1..generations."""
    return tuple(base ** -j for j in range(1, generations + 1))


def bands_array(E: IntervalSet | Sequence) -> np.ndarray:
    return np.array(E.bands if isinstance(E, IntervalSet) else E, dtype=float)
