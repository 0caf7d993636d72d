"""Maximal correlation risk measure rho_Z(Y) = sup{E<Z, Y'> : Y' ~ Y}."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .distortion import from_sample
from .prob_core import (
    RandomVector,
    ValidationError,
    dual_exponent,
    leq,
    merge_steps,
    quantile,
    rownorm,
)
from .sigma_norm import norm

RISK_TOL = 1e-9


def permutation_value(Z: RandomVector, Y: RandomVector, perm) -> float:
    """(1/n) sum_i <z_i, y_perm(i)> on an equal-weight space."""
    perm = np.asarray(perm)
    prod = Z.values * Y.values[perm]
    return math.fsum(prod.ravel()) / Z.n


def _require_equal_weights(*vs: RandomVector) -> None:
    n = vs[0].n
    for v in vs:
        if v.n != n:
            raise ValidationError("variables have different atom counts")
        if not np.allclose(v.weights, 1.0 / n, rtol=0.0, atol=1e-15):
            raise ValidationError(
                "rho over rearrangements is only implemented for equal atom weights; "
                "unequal weights may require splitting atoms (use rho_scalar when d = 1)"
            )


def rho_scalar(Z: RandomVector, Y: RandomVector) -> float:
    """int_0^1 F^{-1}_Z F^{-1}_Y for scalar Z and Y (signed quantiles)."""
    if Z.d != 1 or Y.d != 1:
        raise ValidationError("rho_scalar needs scalar variables")
    if Z.n == Y.n and Z.space.is_uniform() and Y.space.is_uniform():
        # sorted pairing, summed exactly as the assignment path sums it
        return math.fsum(np.sort(Z.column()) * np.sort(Y.column())) / Z.n
    c, (vz, vy) = merge_steps(quantile(Z.column(), Z.space), quantile(Y.column(), Y.space))
    return math.fsum(vz * vy * np.diff(c))


def rho_assignment(Z: RandomVector, Y: RandomVector) -> tuple[float, np.ndarray]:
    """rho_Z(Y) on an equal-weight space as a linear assignment problem.

    Returns the optimum and ``perm`` with atom i of Z paired to atom
    ``perm[i]`` of Y.
    """
    _require_equal_weights(Z, Y)
    if Z.d != Y.d:
        raise ValidationError(f"dimension mismatch: {Z.d} vs {Y.d}")
    gain = Z.values @ Y.values.T
    rows, cols = linear_sum_assignment(gain, maximize=True)
    perm = np.empty(Z.n, dtype=int)
    perm[rows] = cols
    return permutation_value(Z, Y, perm), perm


@dataclass(frozen=True)
class LipschitzCheck:
    lhs: float
    rhs: float
    holds: bool
    scale: float


def lipschitz_check(Z: RandomVector, Y1: RandomVector, Y2: RandomVector, p: float = 1.0, vecnorm: float = 2.0) -> LipschitzCheck:
    """|rho_Z(Y1) - rho_Z(Y2)| against ||Y1 - Y2||_{sigma_Z, p}.

    Z is normalized to E||Z||_* = 1 first (dual norm of ``vecnorm``);
    the divisor is reported as ``scale``.
    """
    _require_equal_weights(Z, Y1, Y2)
    sigma = from_sample(Z, dual_exponent(vecnorm))
    Zn = Z.with_values(Z.values / sigma.scale)
    r1, _ = rho_assignment(Zn, Y1)
    r2, _ = rho_assignment(Zn, Y2)
    lhs = abs(r1 - r2)
    rhs = norm(Y1.with_values(Y1.values - Y2.values), sigma, p, vecnorm)
    return LipschitzCheck(lhs, rhs, leq(lhs, rhs, RISK_TOL), sigma.scale)


@dataclass(frozen=True)
class RiskReport:
    """The bound chain |E<Z,Y>| <= E||Z||_* ||Y|| <= K E||Z||_1 ||Y|| <= K int F_{||Z||_1} F_{||Y||}.

    ``rho`` (and ``permutation``) are filled in when they are computable:
    equal weights for any d, or d = 1.
    """

    pairing: float
    dual_product: float
    l1_product: float
    quantile_product: float
    K: float
    rho: float | None = None
    permutation: list[int] | None = None
    lipschitz_rhs: float | None = None
    holds: bool = field(default=False)

    @property
    def bound_chain(self) -> tuple[float, float, float, float]:
        return (self.pairing, self.dual_product, self.l1_product, self.quantile_product)

    def to_dict(self) -> dict:
        return {
            "rho": self.rho,
            "permutation": self.permutation,
            "pairing": self.pairing,
            "dual_product": self.dual_product,
            "l1_product": self.l1_product,
            "quantile_product": self.quantile_product,
            "K": self.K,
            "lipschitz_rhs": self.lipschitz_rhs,
            "holds": self.holds,
        }


def norm_constant(vecnorm: float, d: int) -> float:
    """K = max{||x||_* : ||x||_1 = 1}, attained at a coordinate vector."""
    e1 = np.zeros((1, d))
    e1[0, 0] = 1.0
    return float(rownorm(e1, dual_exponent(vecnorm))[0])


def bound_chain(Z: RandomVector, Y: RandomVector, vecnorm: float = 2.0) -> RiskReport:
    """Evaluate every term of the chain and whether it is nondecreasing."""
    if Z.values.shape != Y.values.shape or not np.array_equal(Z.weights, Y.weights):
        raise ValidationError("Z and Y must live on the same space with the same dimension")
    w = Z.weights
    zs = rownorm(Z.values, dual_exponent(vecnorm))
    z1 = rownorm(Z.values, 1.0)
    yn = rownorm(Y.values, vecnorm)
    K = norm_constant(vecnorm, Z.d)
    t0 = abs(math.fsum((Z.values * Y.values * w[:, None]).ravel()))
    t1 = math.fsum(w * zs * yn)
    t2 = K * math.fsum(w * z1 * yn)
    c, (qz, qy) = merge_steps(quantile(z1, Z.space), quantile(yn, Y.space))
    t3 = K * math.fsum(qz * qy * np.diff(c))
    holds = leq(t0, t1, RISK_TOL) and leq(t1, t2, RISK_TOL) and leq(t2, t3, RISK_TOL)
    rho = perm = None
    try:
        rho, p = rho_assignment(Z, Y)
        perm = p.tolist()
    except ValidationError:
        if Z.d == 1:
            rho = rho_scalar(Z, Y)
    if rho is not None:
        holds = holds and leq(rho, t3, RISK_TOL)
    return RiskReport(t0, t1, t2, t3, K, rho, perm, None, holds)
