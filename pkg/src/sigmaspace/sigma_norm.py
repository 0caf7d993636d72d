"""The distortion-weighted norm ||Y||_{sigma,p} and its comparison inequalities."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .distortion import Distortion
from .prob_core import (
    RandomVector,
    SlotCoupling,
    StepQuantile,
    ValidationError,
    leq,
    p_norm,
    quantile,
)


def _check_p(p: float) -> None:
    if not (1.0 <= p < math.inf):
        raise ValidationError(f"p must lie in [1, inf), got {p}")


def step_masses(q: StepQuantile, sigma: Distortion) -> np.ndarray:
    """sigma-mass S(c_{k-1}) - S(c_k) of every quantile step."""
    c = q.breakpoints
    return np.array([sigma.integral_sigma(c[k], c[k + 1]) for k in range(q.m)])


def weighted_power_sum(q: StepQuantile, sigma: Distortion, p: float) -> float:
    """Integral of sigma * F^p for a nonnegative step quantile F."""
    top = float(q.values[-1])
    if top == 0:
        return 0.0
    return top**p * math.fsum((q.values / top) ** p * step_masses(q, sigma))


def norm(Y: RandomVector, sigma: Distortion, p: float = 1.0, vecnorm: float = 2.0) -> float:
    """||Y||_{sigma,p}, exact for every distortion family.

    Computed from the quantile of ||Y|| through sigma-masses of its steps,
    which realizes the supremum over uniform variables at the comonotone one.
    """
    _check_p(p)
    q = quantile(Y.magnitudes(vecnorm), Y.space)
    top = float(q.values[-1])
    if top == 0:
        return 0.0
    return top * math.fsum((q.values / top) ** p * step_masses(q, sigma)) ** (1.0 / p)


def norm_via_coupling(
    Y: RandomVector, sigma: Distortion, p: float, slots: SlotCoupling, vecnorm: float = 2.0
) -> float:
    """(E sigma(U) ||Y||^p)^(1/p) for the uniform variable U given by ``slots``."""
    _check_p(p)
    if slots.space is not Y.space and not np.array_equal(slots.space.weights, Y.weights):
        raise ValidationError("slot coupling belongs to a different space")
    m = Y.magnitudes(vecnorm)
    top = float(m.max())
    if top == 0:
        return 0.0
    mass = np.array([sigma.integral_sigma(a, b) for a, b in zip(slots.lower, slots.upper)])
    return top * math.fsum((m / top) ** p * mass) ** (1.0 / p)


def norm_via_orders(Y: RandomVector, sigma: Distortion, p: float, orders, vecnorm: float = 2.0) -> np.ndarray:
    """Batch form of :func:`norm_via_coupling`: one value per row of ``orders``.

    Row ``j`` stacks the atoms into (0, 1] in the order ``orders[j]``.
    """
    _check_p(p)
    orders = np.atleast_2d(np.asarray(orders, dtype=int))
    m = Y.magnitudes(vecnorm)
    top = float(m.max())
    if top == 0:
        return np.zeros(orders.shape[0])
    upper = np.cumsum(Y.weights[orders], axis=1)
    upper[:, -1] = 1.0
    lower = np.concatenate([np.zeros((orders.shape[0], 1)), upper[:, :-1]], axis=1)
    ends, inv = np.unique(np.concatenate([lower, upper], axis=1), return_inverse=True)
    S = sigma.S_many(ends)[inv.reshape(orders.shape[0], -1)]
    mass = S[:, : Y.n] - S[:, Y.n :]
    return top * (((m[orders] / top) ** p) * mass).sum(axis=1) ** (1.0 / p)


class Comparison(NamedTuple):
    lower: float
    upper: float
    holds: bool


def compare_p(Y: RandomVector, sigma: Distortion, p: float, p_prime: float, vecnorm: float = 2.0) -> Comparison:
    """Monotonicity in the exponent: ||Y||_{sigma,p} <= ||Y||_{sigma,p'}."""
    if not p < p_prime:
        raise ValidationError(f"need p < p', got {p} and {p_prime}")
    a = norm(Y, sigma, p, vecnorm)
    b = norm(Y, sigma, p_prime, vecnorm)
    return Comparison(a, b, leq(a, b))


def holder_bound(Y: RandomVector, sigma: Distortion, p: float, p_prime: float, vecnorm: float = 2.0) -> Comparison:
    """||Y||_{sigma,p}^p <= (int sigma^r)^(1/r) (E||Y||^p')^(p/p'), r = p'/(p'-p).

    The constant-free form ||Y||_{sigma,p} <= ||Y||_{p'} does not follow from
    this bound unless int sigma^r = 1, so only this version is checked.
    """
    if not p < p_prime:
        raise ValidationError(f"need p < p', got {p} and {p_prime}")
    _check_p(p)
    _check_p(p_prime)
    r = p_prime / (p_prime - p)
    pi = sigma.power_integral(r)
    if math.isinf(pi):
        raise ValidationError(f"int sigma^{r} diverges; the bound is vacuous")
    lhs = norm(Y, sigma, p, vecnorm) ** p
    rhs = pi ** (1.0 / r) * p_norm(Y, p_prime, vecnorm) ** p
    return Comparison(lhs, rhs, leq(lhs, rhs))


def parallelogram_residual(sigma: Distortion, p: float, alpha: float) -> float:
    """Defect of the parallelogram law on two disjoint indicators.

    With Y1 = 1_E x1, Y2 = 1_{E^c} x2, P(E) = alpha and unit vectors x1, x2,
    the law forces S(1-alpha)^(2/p) + S(alpha)^(2/p) = 1.
    """
    if not 0.0 < alpha < 1.0:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha}")
    _check_p(p)
    e = 2.0 / p
    return abs(sigma.S_at(1.0 - alpha) ** e + sigma.S_at(alpha) ** e - 1.0)
