"""Dual norms of L_sigma^p on a finite space, with optimality certificates.

For p = 1 the dual norm is the largest ratio of tail integrals
``G(a) / S(a)``; for p > 1 it is ``(int H^q sigma)^(1/q)`` with H the
density of the S-concave envelope of G.  Both routes return a witness Y
attaining the value, so every result can be checked by plain arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import envelope as env
from .distortion import Distortion
from .prob_core import (
    FiniteSpace,
    Partition,
    RandomVector,
    ValidationError,
    coarsen,
    comonotone_slots,
    dual_exponent,
    leq,
    merge_steps,
    norming_directions,
    quantile,
    rownorm,
    segment_index,
)
from .sigma_norm import norm

CERT_TOL = 1e-9
DOMINANCE_TOL = 1e-12


class CertificateError(RuntimeError):
    """A duality certificate failed its own sandwich check."""


def _abs_column(Z: RandomVector) -> np.ndarray:
    return np.abs(Z.column())


def _conjugate(p: float) -> float:
    if not (1.0 <= p < math.inf):
        raise ValidationError(f"p must lie in [1, inf), got {p}")
    return math.inf if p == 1.0 else p / (p - 1.0)


def pairing(Z: RandomVector, Y: RandomVector) -> float:
    """E<Z, Y> with the Euclidean inner product on R^d."""
    if Z.values.shape != Y.values.shape:
        raise ValidationError(f"shape mismatch: {Z.values.shape} vs {Y.values.shape}")
    if not np.array_equal(Z.weights, Y.weights):
        raise ValidationError("variables live on different spaces")
    prod = Z.values * Y.values * Z.weights[:, None]
    return math.fsum(prod.ravel())


# ---------------------------------------------------------------------------
# average value-at-risk


def avar(Z: RandomVector, alpha: float) -> float:
    """AV@R_alpha(|Z|) = (1/(1-alpha)) int_alpha^1 F^{-1}_{|Z|}."""
    if not 0.0 <= alpha < 1.0:
        raise ValidationError(f"avar level must lie in [0, 1), got {alpha}")
    q = quantile(_abs_column(Z), Z.space)
    return q.tail_integral(alpha) / (1.0 - alpha)


@dataclass(frozen=True, eq=False)
class AvarSet:
    """A set of probability 1 - alpha carrying the upper tail of |Z|.

    ``variable`` lives on a space where at most one atom of the original
    was split in two; ``parent`` maps new atoms back to original ones.
    """

    variable: RandomVector
    members: np.ndarray
    parent: np.ndarray
    value: float


def avar_superset(Z: RandomVector, alpha: float, tol: float = 1e-12) -> AvarSet:
    """Event E of mass 1 - alpha with AV@R_alpha(|Z|) = E(|Z| 1_E) / (1 - alpha)."""
    if not 0.0 <= alpha < 1.0:
        raise ValidationError(f"avar level must lie in [0, 1), got {alpha}")
    a = _abs_column(Z)
    slots = comonotone_slots(a, Z.space)
    w = list(Z.weights)
    vals = list(Z.values)
    parent = list(range(Z.n))
    members = [bool(slots.lower[i] >= alpha - tol) for i in range(Z.n)]
    for i in range(Z.n):
        lo, hi = slots.lower[i], slots.upper[i]
        if lo < alpha - tol and hi > alpha + tol:
            # split atom i at alpha: lower piece stays out, upper piece joins E
            w[i] = alpha - lo
            w.append(hi - alpha)
            vals.append(Z.values[i])
            parent.append(i)
            members.append(True)
    space = FiniteSpace(np.array(w))
    var = RandomVector(space, np.array(vals))
    mem = np.array(members)
    value = math.fsum(space.weights[mem] * np.abs(var.values[mem, 0])) / (1.0 - alpha)
    return AvarSet(var, mem, np.array(parent), value)


# ---------------------------------------------------------------------------
# certificates


@dataclass(frozen=True, eq=False)
class DualityCertificate:
    """Dual value sandwiched between a witness ratio and an envelope norm.

    ``pairing / ||witness||_{sigma,p} <= dual_value <= upper``;
    ``gap = upper - pairing / ||witness||``.
    """

    dual_value: float
    envelope: RandomVector
    witness: RandomVector
    pairing: float
    witness_norm: float
    upper: float
    gap: float
    approximation_bound: float
    p: float

    def lower(self) -> float:
        return self.pairing / self.witness_norm if self.witness_norm > 0 else 0.0

    def problems(self, tol: float = CERT_TOL) -> list[str]:
        scale = max(1.0, abs(self.dual_value))
        slack = tol * scale + self.approximation_bound
        out = []
        if self.pairing > self.dual_value * self.witness_norm + tol * max(1.0, abs(self.pairing)):
            out.append("pairing exceeds dual value times witness norm")
        if self.dual_value > self.upper + slack:
            out.append("dual value exceeds envelope norm")
        if self.gap > slack:
            out.append(f"gap {self.gap:.3e} exceeds tolerance {slack:.3e}")
        return out

    def ok(self, tol: float = CERT_TOL) -> bool:
        return not self.problems(tol)

    def to_dict(self) -> dict:
        return {
            "dual_value": self.dual_value,
            "pairing": self.pairing,
            "upper": self.upper,
            "gap": self.gap,
            "approximation_bound": self.approximation_bound,
            "envelope": self.envelope.values[:, 0].tolist()
            if self.envelope.d == 1
            else self.envelope.values.tolist(),
            "witness": self.witness.values[:, 0].tolist()
            if self.witness.d == 1
            else self.witness.values.tolist(),
        }


def _verified(cert: DualityCertificate) -> DualityCertificate:
    issues = cert.problems()
    if issues:
        raise CertificateError("; ".join(issues))
    return cert


def _zero_certificate(Z: RandomVector, p: float) -> DualityCertificate:
    zero = Z.with_values(np.zeros((Z.n, 1)))
    return DualityCertificate(0.0, zero, zero, 0.0, 0.0, 0.0, 0.0, 0.0, p)


def _best_level(Z: RandomVector, sigma: Distortion) -> tuple[float, int, np.ndarray]:
    q = quantile(_abs_column(Z), Z.space)
    G = env.build_G(Z).values
    best, arg = -1.0, 0
    for k in range(q.m):
        s = sigma.S_at(float(q.breakpoints[k]))
        r = G[k] / s
        if r > best:
            best, arg = r, k
    return float(best), arg, q.breakpoints


def dual_norm_inf(Z: RandomVector, sigma: Distortion) -> float:
    """|Z|*_{sigma,inf} = sup_a G(a) / S(a), the dual norm for p = 1.

    G is linear and S concave on each quantile step, so the ratio only needs
    to be checked at the breakpoints below 1.
    """
    return _best_level(Z, sigma)[0]


def _certificate_inf(Z: RandomVector, sigma: Distortion) -> DualityCertificate:
    eta, k, c = _best_level(Z, sigma)
    if eta == 0:
        return _zero_certificate(Z, 1.0)
    z = Z.column()
    slots = comonotone_slots(np.abs(z), Z.space)
    inside = slots.lower >= c[k]
    witness = Z.with_values((np.where(z < 0, -1.0, 1.0) * inside)[:, None])
    envelope = Z.with_values(np.full((Z.n, 1), eta))
    pr = pairing(Z, witness)
    wn = norm(witness, sigma, 1.0)
    upper = eta
    gap = upper - (pr / wn if wn > 0 else 0.0)
    return DualityCertificate(eta, envelope, witness, pr, wn, upper, gap, 0.0, 1.0)


def dual_norm_q(Z: RandomVector, sigma: Distortion, p: float, probes: int = env.DEFAULT_PROBES) -> DualityCertificate:
    """|Z|*_{sigma,q} for p > 1 with its certificate.

    The envelope Z' = H(U) is the minimizing sigma-dominating variable and
    the witness Y = sign(Z) H(U)^(q-1) attains the dual value, where U is
    comonotone with |Z|.
    """
    if not 1.0 < p < math.inf:
        raise ValidationError(f"dual_norm_q needs p in (1, inf), got {p}")
    qexp = _conjugate(p)
    z = Z.column()
    if not np.any(z):
        return _zero_certificate(Z, p)
    G, hull, H = env.envelope(Z, sigma, probes)
    _, seg = segment_index(np.abs(z), Z.space)
    h = H.levels[seg]
    envelope = Z.with_values(h[:, None])
    witness = Z.with_values((np.sign(z) * h ** (qexp - 1.0))[:, None])
    dual_value = H.q_norm(qexp)
    pr = pairing(Z, witness)
    wn = norm(witness, sigma, p)
    upper = norm(envelope, sigma, qexp)
    gap = upper - (pr / wn if wn > 0 else 0.0)
    return DualityCertificate(dual_value, envelope, witness, pr, wn, upper, gap, hull.approximation_bound, p)


def dual_certificate(Z: RandomVector, sigma: Distortion, p: float, probes: int = env.DEFAULT_PROBES) -> DualityCertificate:
    """Certified dual norm for any p in [1, inf) of a scalar variable."""
    if p == 1.0:
        return _verified(_certificate_inf(Z, sigma))
    return _verified(dual_norm_q(Z, sigma, p, probes))


def vector_dual_norm(Z: RandomVector, sigma: Distortion, p: float, vecnorm: float = 2.0) -> DualityCertificate:
    """Dual norm of Z acting on L_sigma^p(R^d, l_r) through Y -> E<Z, Y>.

    Reduces to the scalar dual norm of ||Z||_{r*}; the vector witness points
    each atom along a unit vector that norms z_i.
    """
    mags = rownorm(Z.values, dual_exponent(vecnorm))
    scalar = RandomVector(Z.space, mags[:, None])
    cert = dual_certificate(scalar, sigma, p)
    dirs = norming_directions(Z.values, vecnorm)
    witness = Z.with_values(cert.witness.values[:, :1] * dirs)
    pr = pairing(Z, witness)
    wn = norm(witness, sigma, p, vecnorm)
    gap = cert.upper - (pr / wn if wn > 0 else 0.0)
    return _verified(
        DualityCertificate(
            cert.dual_value, cert.envelope, witness, pr, wn, cert.upper, gap, cert.approximation_bound, p
        )
    )


def dual_norm(Z: RandomVector, sigma: Distortion, p: float, vecnorm: float = 2.0) -> float:
    """Dual norm value only; scalar variables use |z|, vectors ||z||_{r*}."""
    if p == 1.0:
        mags = rownorm(Z.values, dual_exponent(vecnorm)) if Z.d > 1 else np.abs(Z.column())
        return dual_norm_inf(RandomVector(Z.space, mags[:, None]), sigma)
    return vector_dual_norm(Z, sigma, p, vecnorm).dual_value


# ---------------------------------------------------------------------------
# sigma-dominance


class Dominance(NamedTuple):
    holds: bool
    margin: float


def sigma_dominates(Zp: RandomVector, Z: RandomVector, sigma: Distortion, tol: float = DOMINANCE_TOL) -> Dominance:
    """Whether int_a^1 sigma F^{-1}_{|Z'|} >= int_a^1 F^{-1}_{|Z|} for all a.

    On every interval of the merged breakpoints the difference D is a
    concave function of a (a multiple of S plus a linear term), so its
    minimum is attained at the merged breakpoints themselves.
    """
    qp = quantile(_abs_column(Zp), Zp.space)
    qz = quantile(_abs_column(Z), Z.space)
    c, (vp, vz) = merge_steps(qp, qz)
    contrib = np.array(
        [vp[j] * sigma.integral_sigma(c[j], c[j + 1]) - vz[j] * (c[j + 1] - c[j]) for j in range(c.size - 1)]
    )
    D = [math.fsum(contrib[j:]) for j in range(c.size - 1)]
    margin = min(D) if D else 0.0
    scale = max(1.0, qz.mean(), qp.values[-1])
    return Dominance(margin >= -tol * scale, float(margin))


# ---------------------------------------------------------------------------
# coarsening


class Contraction(NamedTuple):
    before: float
    after: float
    holds: bool


def dual_contraction_under_coarsening(
    Z: RandomVector, sigma: Distortion, p: float, part: Partition, vecnorm: float = 2.0
) -> Contraction:
    """Dual norms of Z and of E(Z | part); conditioning never increases it."""
    before = dual_norm(Z, sigma, p, vecnorm)
    after = dual_norm(coarsen(Z, part), sigma, p, vecnorm)
    return Contraction(before, after, leq(after, before, CERT_TOL))
