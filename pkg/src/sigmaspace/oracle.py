"""Brute-force oracles for tests and cross-checks.

None of these are used on production paths.  They are deliberately naive:
enumeration, random search and dense grids, capped at tiny inputs.
"""

from __future__ import annotations

import itertools
import math
import os

import numpy as np
from scipy.optimize import minimize_scalar

from .distortion import Distortion
from .prob_core import RandomVector, ValidationError, quantile


def default_seed() -> int:
    return int(os.environ.get("SIGMA_RISK_SEED", "0"))


def enumerate_rho(Z: RandomVector, Y: RandomVector, max_n: int = 8) -> float:
    """max over all n! permutations of (1/n) sum <z_i, y_pi(i)>.

    Every permutation is scored in bulk; the near-optimal ones are then
    rescored with the same exactly rounded sum the assignment path uses.
    """
    from .risk import _require_equal_weights, permutation_value

    if Z.n > max_n:
        raise ValidationError(f"enumeration capped at n = {max_n}, got {Z.n}")
    _require_equal_weights(Z, Y)
    perms = np.array(list(itertools.permutations(range(Z.n))), dtype=int)
    gain = Z.values @ Y.values.T
    scores = gain[np.arange(Z.n), perms].sum(axis=1)
    top = scores.max()
    slack = 1e-9 * max(1.0, float(np.abs(gain).sum()))
    near = perms[scores >= top - slack]
    return max(permutation_value(Z, Y, perm) for perm in near)


def _ratio(h: np.ndarray, v: np.ndarray, dc: np.ndarray, mass: np.ndarray, p: float) -> np.ndarray:
    """E(|Z| h(U)) / ||h(U)||_{sigma,p} for rows of nondecreasing h."""
    num = (h * v * dc).sum(axis=-1)
    den = ((h**p) * mass).sum(axis=-1) ** (1.0 / p)
    with np.errstate(invalid="ignore", divide="ignore"):
        r = np.where(den > 0, num / den, 0.0)
    return r


def search_dual_pairing(
    Z: RandomVector,
    sigma: Distortion,
    p: float,
    restarts: int = 10_000,
    seed: int | None = None,
    max_n: int = 8,
) -> float:
    """Lower bound on the dual norm by direct search over the unit ball.

    Only comonotone candidates Y = sign(Z) h(U) with h nondecreasing and
    constant on the steps of F^{-1}_{|Z|} are searched.  h is parametrized
    by nonnegative increments; random restarts are scored in bulk and the
    best few are polished by coordinate ascent with bounded line searches.
    """
    if Z.n > max_n:
        raise ValidationError(f"search capped at n = {max_n}, got {Z.n}")
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    q = quantile(np.abs(Z.column()), Z.space)
    v, c = q.values, q.breakpoints
    m = q.m
    if not np.any(v):
        return 0.0
    dc = np.diff(c)
    mass = np.array([sigma.integral_sigma(c[k], c[k + 1]) for k in range(m)])

    # tail indicators are the extreme rays of the cone of nondecreasing h
    rays = np.array([np.concatenate([np.zeros(k), np.ones(m - k)]) for k in range(m)])
    incs = rng.exponential(size=(restarts, m)) * (rng.random((restarts, m)) < 0.6)
    incs[:, 0] += 1e-3 * rng.random(restarts)
    cands = np.vstack([rays, np.cumsum(incs, axis=1)])
    scores = _ratio(cands, v, dc, mass, p)
    best = float(scores.max())

    def objective(delta: np.ndarray) -> float:
        return float(_ratio(np.cumsum(delta), v, dc, mass, p))

    for idx in np.argsort(scores)[::-1][: min(8, scores.size)]:
        delta = np.diff(np.concatenate([[0.0], cands[idx]]))
        cur = objective(delta)
        for _ in range(60):
            prev = cur
            for j in range(m):
                hi = max(4.0 * delta.max(), 1.0)

                def f(x, j=j):
                    d = delta.copy()
                    d[j] = x
                    return -objective(d)

                res = minimize_scalar(f, bounds=(0.0, hi), method="bounded", options={"xatol": 1e-12})
                for x in (res.x, 0.0):
                    val = -f(x)
                    if val > cur:
                        delta[j], cur = x, val
            if cur - prev <= 1e-15 * max(1.0, cur):
                break
        best = max(best, cur)
    return best


def grid_biconjugate(
    Z: RandomVector,
    sigma: Distortion,
    alphas,
    y_points: int = 10_000,
    beta_points: int = 2_001,
    max_n: int = 6,
) -> np.ndarray:
    """G_env(a) = inf_{y>=0} [y S(a) - G*(y)], G*(y) = inf_b [y S(b) - G(b)], on grids.

    The beta grid is uniform plus the quantile and sigma breakpoints.  The y grid spans
    [0, 4 * max_b G(b)/S(b)]; the best grid point is polished by a bounded
    scalar minimization since the outer objective is convex in y.
    """
    if Z.n > max_n:
        raise ValidationError(f"grid oracle capped at n = {max_n}, got {Z.n}")
    q = quantile(np.abs(Z.column()), Z.space)
    betas = np.unique(np.concatenate([np.linspace(0.0, 1.0, beta_points), q.breakpoints, sigma.breakpoints()]))
    Gb = np.array([q.tail_integral(b) for b in betas])
    Sb = sigma.S_many(betas)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(Sb > 0, Gb / Sb, 0.0)
    y_max = 4.0 * max(float(ratios.max()), 1e-12)

    def conj(y: float) -> float:
        return float(np.min(y * Sb - Gb))

    ys = np.linspace(0.0, y_max, y_points)
    conj_grid = np.min(ys[:, None] * Sb[None, :] - Gb[None, :], axis=1)
    out = []
    for a in np.atleast_1d(np.asarray(alphas, dtype=float)):
        s = sigma.S_at(float(a))
        vals = ys * s - conj_grid
        i = int(np.argmin(vals))
        lo, hi = ys[max(i - 1, 0)], ys[min(i + 1, ys.size - 1)]
        best = float(vals[i])
        if hi > lo:
            res = minimize_scalar(lambda y: y * s - conj(y), bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
            best = min(best, float(res.fun))
        out.append(best)
    return np.array(out)


def random_slots(space, rng: np.random.Generator):
    """A slot coupling stacking the atoms in a random order."""
    from .prob_core import SlotCoupling

    return SlotCoupling.from_order(space, rng.permutation(space.n))
