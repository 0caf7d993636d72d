"""S-concave envelope of the tail transform G and its density H.

``G(a) = int_a^1 F^{-1}_{|Z|}`` is piecewise linear in ``a``.  After the
change of variable ``t = S(a)`` the S-concave envelope of G becomes the
ordinary least concave majorant of ``g(t) = G(S^{-1}(t))``, and the
density H of the envelope (``G_env(a) = int_a^1 H sigma``) is the slope of
that majorant read back at ``t = S(u)``.

Because S is concave, S^{-1} is concave too, so ``g`` is convex between the
images of consecutive quantile breakpoints.  A convex arc lies under its
chord, hence the majorant only ever touches the breakpoint images: the hull
of those finitely many points is the exact envelope for every distortion.
For distortions whose S is not piecewise linear the module still probes
interior points of every step and reports the largest defect it finds as
``approximation_bound``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distortion import AvarSpectrum, Constant, Distortion, Step
from .prob_core import RandomVector, StepQuantile, ValidationError, quantile

DEFAULT_PROBES = 64
MAX_PROBE_POINTS = 2**20
PROBE_TOL = 1e-9


class EnvelopeError(RuntimeError):
    """The computed hull failed to majorize G at a probe point."""


def is_exact_family(sigma: Distortion) -> bool:
    """Families with piecewise-linear S, for which no probing is needed."""
    return isinstance(sigma, (Constant, AvarSpectrum, Step))


@dataclass(frozen=True, eq=False)
class TailTransform:
    """G(c_k) = sum_{j>k} v_j (c_j - c_{j-1}) at the breakpoints of F^{-1}_{|Z|}."""

    quantile: StepQuantile
    values: np.ndarray

    @property
    def breakpoints(self) -> np.ndarray:
        return self.quantile.breakpoints

    def __call__(self, alpha: float) -> float:
        return self.quantile.tail_integral(alpha)


@dataclass(frozen=True, eq=False)
class HullPoints:
    """Planar points (S(c_k), G(c_k)) and their upper concave hull.

    ``t``/``g`` are indexed like the quantile breakpoints; ``vertices``
    indexes the hull corners in increasing ``t``.
    """

    t: np.ndarray
    g: np.ndarray
    vertices: np.ndarray
    slopes: np.ndarray
    approximation_bound: float

    @property
    def vt(self) -> np.ndarray:
        return self.t[self.vertices]

    @property
    def vg(self) -> np.ndarray:
        return self.g[self.vertices]

    def __call__(self, t: float) -> float:
        """Hull value at ``t`` (linear interpolation between corners)."""
        return float(np.interp(t, self.vt, self.vg))


@dataclass(frozen=True, eq=False)
class DensityH:
    """Step density H, constant ``levels[k]`` on quantile step k."""

    quantile: StepQuantile
    levels: np.ndarray
    sigma: Distortion

    def __call__(self, u: float) -> float:
        c = self.quantile.breakpoints
        k = int(np.searchsorted(c, u, side="left")) - 1
        return float(self.levels[min(max(k, 0), self.levels.size - 1)])

    def masses(self) -> np.ndarray:
        c = self.quantile.breakpoints
        return np.array([self.sigma.integral_sigma(c[k], c[k + 1]) for k in range(self.levels.size)])

    def G_env(self, alpha: float) -> float:
        """int_alpha^1 H(u) sigma(u) du."""
        c = self.quantile.breakpoints
        parts = []
        for k in range(self.levels.size):
            if c[k + 1] <= alpha:
                continue
            parts.append(self.levels[k] * self.sigma.integral_sigma(max(alpha, c[k]), c[k + 1]))
        return math.fsum(parts)

    def q_norm(self, q: float) -> float:
        """(int H^q sigma)^(1/q), scaled so tiny or huge levels stay finite."""
        top = float(self.levels.max())
        if top == 0:
            return 0.0
        return top * math.fsum((self.levels / top) ** q * self.masses()) ** (1.0 / q)

    def q_power(self, q: float) -> float:
        """int H^q sigma."""
        top = float(self.levels.max())
        if top == 0:
            return 0.0
        return top**q * math.fsum((self.levels / top) ** q * self.masses())


def build_G(Z: RandomVector) -> TailTransform:
    """Tail transform of |Z| for a scalar variable."""
    q = quantile(np.abs(Z.column()), Z.space)
    seg = q.values * q.lengths
    G = np.zeros(q.m + 1)
    for k in range(q.m - 1, -1, -1):
        G[k] = math.fsum(seg[k:])
    return TailTransform(q, G)


def _upper_hull(t: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Indices of the upper concave hull, monotone chain, collinear points dropped."""
    order = np.lexsort((-g, t))
    # one point per abscissa: the highest
    keep = [order[0]]
    for i in order[1:]:
        if t[i] != t[keep[-1]]:
            keep.append(i)
    hull: list[int] = []
    for i in keep:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (t[b] - t[a]) * (g[i] - g[a]) - (g[b] - g[a]) * (t[i] - t[a])
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


def _probe_defect(G: TailTransform, sigma: Distortion, hull: HullPoints, per_step: int) -> float:
    c = G.breakpoints
    v = G.quantile.values
    worst = 0.0
    fr = (np.arange(1, per_step + 1) / (per_step + 1.0))
    for k in range(G.quantile.m):
        a = c[k] + fr * (c[k + 1] - c[k])
        t = hull.t[k + 1] + (sigma.S_many(a) - sigma.S_at(c[k + 1]))
        g = G.values[k + 1] + v[k] * (c[k + 1] - a)
        worst = max(worst, float(np.max(g - np.interp(t, hull.vt, hull.vg))))
    return worst


def concave_majorant(G: TailTransform, sigma: Distortion, probes: int = DEFAULT_PROBES) -> HullPoints:
    """Least concave majorant of the points (S(c_k), G(c_k)).

    The point for c_0 = 0 sits at t = 1 with height G(0); breakpoints inside
    the flat part [0, u0] of S share that abscissa and are dominated by it,
    which enforces G_env(0) = G(0).

    For families other than Constant, AvarSpectrum and Step, ``probes``
    interior points per quantile step are checked against the hull, doubled
    once to confirm; the largest defect becomes ``approximation_bound``.
    """
    q = G.quantile
    c = q.breakpoints
    mass = np.array([sigma.integral_sigma(c[k], c[k + 1]) for k in range(q.m)])
    t = np.zeros(q.m + 1)
    for k in range(q.m - 1, -1, -1):
        t[k] = math.fsum(mass[k:])
    g = np.asarray(G.values, dtype=float)
    verts = _upper_hull(t, g)
    vt, vg = t[verts], g[verts]
    slopes = np.diff(vg) / np.diff(vt) if verts.size > 1 else np.zeros(0)
    hull = HullPoints(t, g, verts, slopes, 0.0)
    if is_exact_family(sigma) or probes <= 0:
        return hull
    scale = max(1.0, float(g[0]))
    bound = 0.0
    n = probes
    for _ in range(2):
        if n * q.m > MAX_PROBE_POINTS:
            raise EnvelopeError(f"probe budget of {MAX_PROBE_POINTS} points exceeded")
        bound = max(bound, _probe_defect(G, sigma, hull, n))
        n *= 2
    if bound > PROBE_TOL * scale:
        raise EnvelopeError(f"hull misses G by {bound:.3e} at an interior probe")
    return HullPoints(t, g, verts, slopes, max(bound, 0.0))


def extract_H(hull: HullPoints, G: TailTransform, sigma: Distortion) -> DensityH:
    """Density H: on quantile step k, the hull slope over [t_{k+1}, t_k].

    Steps inside the flat part of S (zero sigma-mass) take the slope of the
    last hull segment, i.e. H is extended constantly on [0, u0].
    """
    q = G.quantile
    levels = np.zeros(q.m)
    if hull.slopes.size == 0:
        return DensityH(q, levels, sigma)
    vt = hull.vt
    for k in range(q.m):
        lo, hi = hull.t[k + 1], hull.t[k]
        if hi > lo:
            j = int(np.searchsorted(vt, 0.5 * (lo + hi))) - 1
        else:
            j = hull.slopes.size - 1
        levels[k] = hull.slopes[min(max(j, 0), hull.slopes.size - 1)]
    # slopes of a concave hull through (0, 0) ending at its maximum are >= 0
    levels = np.maximum(levels, 0.0)
    levels = np.maximum.accumulate(levels)
    return DensityH(q, levels, sigma)


def envelope(Z: RandomVector, sigma: Distortion, probes: int = DEFAULT_PROBES) -> tuple[TailTransform, HullPoints, DensityH]:
    """Run the whole pipeline G -> hull -> H for a scalar variable."""
    if Z.d != 1:
        raise ValidationError("envelope expects a scalar variable")
    G = build_G(Z)
    hull = concave_majorant(G, sigma, probes)
    return G, hull, extract_H(hull, G, sigma)
