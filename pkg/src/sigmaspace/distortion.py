"""Distortion functions and their tail integrals.

A distortion is a nondecreasing, nonnegative, left-continuous weight on
[0, 1) with unit integral.  Norm code never samples it pointwise; it goes
through the tail integral ``S(a) = int_a^1 sigma`` and interval integrals,
all of which are closed form per family.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .prob_core import RandomVector, ValidationError, quantile

NORMALIZATION_TOL = 1e-12


def _check_unit(x: float, what: str) -> None:
    if not 0.0 <= x <= 1.0:
        raise ValidationError(f"{what}={x} outside [0, 1]")


class Distortion:
    """Base class; subclasses supply the closed forms."""

    def sigma_at(self, u: float) -> float:
        raise NotImplementedError

    def S_at(self, alpha: float) -> float:
        _check_unit(alpha, "alpha")
        if alpha <= self.u0():
            return 1.0
        return self._S(alpha)

    def integral_sigma(self, a: float, b: float) -> float:
        """Integral of sigma over (a, b)."""
        _check_unit(a, "a")
        _check_unit(b, "b")
        if a > b:
            raise ValidationError(f"integral bounds reversed: {a} > {b}")
        return self._integral(a, b)

    def S_inv(self, t: float) -> float:
        """Inverse of S restricted to [u0, 1]."""
        _check_unit(t, "t")
        if t == 1.0:
            return self.u0()
        if t == 0.0:
            return 1.0
        return self._S_inv(t)

    def power_integral(self, r: float) -> float:
        """Integral of sigma^r over (0, 1); ``math.inf`` when divergent."""
        if r < 1:
            raise ValidationError(f"power integral needs r >= 1, got {r}")
        return self._power_integral(r)

    def is_bounded(self) -> bool:
        return True

    def u0(self) -> float:
        return 0.0

    def sup(self) -> float:
        """Left limit of sigma at 1 (its essential supremum)."""
        raise NotImplementedError

    def spec(self) -> str:
        raise NotImplementedError

    # default implementations ------------------------------------------------

    def _S(self, alpha: float) -> float:
        raise NotImplementedError

    def _integral(self, a: float, b: float) -> float:
        return self._S(a) - self._S(b)

    def _S_inv(self, t: float) -> float:
        return optimize.brentq(lambda a: self._S(a) - t, self.u0(), 1.0, xtol=1e-15, rtol=1e-15)

    def _power_integral(self, r: float) -> float:
        return _monotone_quadrature(lambda u: self.sigma_at(u) ** r)

    def S_many(self, alphas) -> np.ndarray:
        a = np.asarray(alphas, dtype=float)
        if a.size and (a.min() < 0.0 or a.max() > 1.0):
            raise ValidationError("alpha outside [0, 1]")
        out = self._S_vec(a)
        return np.where(a <= self.u0(), 1.0, out)

    def _S_vec(self, a: np.ndarray) -> np.ndarray:
        return np.array([self._S(float(x)) if x > self.u0() else 1.0 for x in a.ravel()]).reshape(a.shape)

    def breakpoints(self) -> np.ndarray:
        """Points where sigma jumps (beyond 0 and 1)."""
        return np.empty(0)

    def __repr__(self) -> str:
        return f"Distortion({self.spec()})"


def _monotone_quadrature(f, rtol: float = 1e-10) -> float:
    """Adaptive quadrature on (0, 1) refined until two passes agree to rtol."""
    prev = None
    limit = 50
    while limit <= 5000:
        val, _ = integrate.quad(f, 0.0, 1.0, limit=limit, epsabs=0.0, epsrel=rtol / 10)
        if prev is not None and abs(val - prev) <= rtol * max(1.0, abs(val)):
            return val
        prev = val
        limit *= 4
    return prev


@dataclass(frozen=True, repr=False)
class Constant(Distortion):
    """sigma = 1: the plain Lebesgue weighting."""

    def sigma_at(self, u: float) -> float:
        _check_unit(u, "u")
        return 1.0

    def _S(self, alpha: float) -> float:
        return 1.0 - alpha

    def _S_vec(self, a: np.ndarray) -> np.ndarray:
        return 1.0 - a

    def _integral(self, a: float, b: float) -> float:
        return b - a

    def _S_inv(self, t: float) -> float:
        return 1.0 - t

    def _power_integral(self, r: float) -> float:
        return 1.0

    def sup(self) -> float:
        return 1.0

    def spec(self) -> str:
        return "constant"


@dataclass(frozen=True, repr=False)
class AvarSpectrum(Distortion):
    """sigma = 1/(1-beta) on (beta, 1], zero below: average value-at-risk."""

    beta: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.beta < 1.0:
            raise ValidationError(f"avar level beta must lie in [0, 1), got {self.beta}")

    def sigma_at(self, u: float) -> float:
        _check_unit(u, "u")
        return 1.0 / (1.0 - self.beta) if u > self.beta else 0.0

    def _S(self, alpha: float) -> float:
        return min(1.0, (1.0 - alpha) / (1.0 - self.beta))

    def _S_vec(self, a: np.ndarray) -> np.ndarray:
        return np.minimum(1.0, (1.0 - a) / (1.0 - self.beta))

    def _integral(self, a: float, b: float) -> float:
        return max(min(b, 1.0) - max(a, self.beta), 0.0) / (1.0 - self.beta)

    def _S_inv(self, t: float) -> float:
        return 1.0 - t * (1.0 - self.beta)

    def _power_integral(self, r: float) -> float:
        return (1.0 - self.beta) ** (1.0 - r)

    def u0(self) -> float:
        return self.beta

    def sup(self) -> float:
        return 1.0 / (1.0 - self.beta)

    def breakpoints(self) -> np.ndarray:
        return np.array([self.beta]) if self.beta > 0 else np.empty(0)

    def spec(self) -> str:
        return f"avar:{self.beta!r}"


@dataclass(frozen=True, repr=False)
class Power(Distortion):
    """sigma(u) = s u^(s-1), s >= 1."""

    s: float

    def __post_init__(self) -> None:
        if not (self.s >= 1.0 and math.isfinite(self.s)):
            raise ValidationError(f"power exponent must be finite and >= 1, got {self.s}")

    def sigma_at(self, u: float) -> float:
        _check_unit(u, "u")
        return self.s * u ** (self.s - 1.0) if self.s != 1.0 else 1.0

    def _S(self, alpha: float) -> float:
        return -math.expm1(self.s * math.log(alpha)) if alpha > 0 else 1.0

    def _S_vec(self, a: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.where(a > 0, -np.expm1(self.s * np.log(a)), 1.0) + 0.0

    def _integral(self, a: float, b: float) -> float:
        return b**self.s - a**self.s

    def _S_inv(self, t: float) -> float:
        return (1.0 - t) ** (1.0 / self.s)

    def _power_integral(self, r: float) -> float:
        return self.s**r / (r * (self.s - 1.0) + 1.0)

    def sup(self) -> float:
        return self.s

    def spec(self) -> str:
        return f"power:{self.s!r}"


@dataclass(frozen=True, repr=False)
class Log(Distortion):
    """sigma(u) = -log(1 - u); unbounded near 1."""

    def sigma_at(self, u: float) -> float:
        _check_unit(u, "u")
        return -math.log1p(-u) if u < 1 else math.inf

    @staticmethod
    def _tail(x: float) -> float:
        # int_0^x -log(y) dy with x = 1 - alpha
        return x * (1.0 - math.log(x)) if x > 0 else 0.0

    def _S(self, alpha: float) -> float:
        return self._tail(1.0 - alpha)

    def _S_vec(self, a: np.ndarray) -> np.ndarray:
        x = 1.0 - a
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(x > 0, x * (1.0 - np.log(x)), 0.0)

    def _S_inv(self, t: float) -> float:
        # S is strictly decreasing on [0, 1]; bracketed root with tight tolerance
        return optimize.brentq(lambda a: self._S(a) - t, 0.0, 1.0, xtol=1e-12, rtol=4 * np.finfo(float).eps)

    def _power_integral(self, r: float) -> float:
        return math.gamma(r + 1.0)

    def is_bounded(self) -> bool:
        return False

    def sup(self) -> float:
        return math.inf

    def spec(self) -> str:
        return "log"


@dataclass(frozen=True, repr=False)
class Step(Distortion):
    """Piecewise constant sigma: ``levels[k]`` on ``(bps[k], bps[k+1]]``.

    ``scale`` records the factor a sample was divided by when the step was
    built from data (see :func:`from_sample`); it does not enter sigma.
    """

    bps: np.ndarray
    levels: np.ndarray
    scale: float = field(default=1.0, compare=False)

    def __post_init__(self) -> None:
        b = np.asarray(self.bps, dtype=float)
        lv = np.asarray(self.levels, dtype=float)
        if b.size != lv.size + 1 or lv.size == 0:
            raise ValidationError("step distortion needs m levels and m + 1 breakpoints")
        if b[0] != 0.0 or b[-1] != 1.0 or np.any(np.diff(b) <= 0):
            raise ValidationError("step breakpoints must increase strictly from 0 to 1")
        if np.any(lv < 0) or np.any(np.diff(lv) < 0) or not np.all(np.isfinite(lv)):
            raise ValidationError("step levels must be finite, nonnegative and nondecreasing")
        total = math.fsum(lv * np.diff(b))
        if abs(total - 1.0) > NORMALIZATION_TOL:
            raise ValidationError(f"step distortion integrates to {total!r}, not 1")
        b = b.copy()
        lv = lv.copy()
        b.setflags(write=False)
        lv.setflags(write=False)
        object.__setattr__(self, "bps", b)
        object.__setattr__(self, "levels", lv)
        # cumulative tail masses S(bps[k])
        seg = lv * np.diff(b)
        tails = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])
        tails[0] = 1.0
        tails.setflags(write=False)
        object.__setattr__(self, "_tails", tails)

    @classmethod
    def normalized(cls, bps, levels) -> "Step":
        b = np.asarray(bps, dtype=float)
        lv = np.asarray(levels, dtype=float)
        total = math.fsum(lv * np.diff(b))
        if total <= 0:
            raise ValidationError("step levels integrate to zero")
        return cls(b, lv / total)

    def _piece(self, u: float) -> int:
        k = int(np.searchsorted(self.bps, u, side="left")) - 1
        return min(max(k, 0), self.levels.size - 1)

    def sigma_at(self, u: float) -> float:
        _check_unit(u, "u")
        return float(self.levels[self._piece(u)])

    def _S(self, alpha: float) -> float:
        if alpha <= 0.0:
            return 1.0
        if alpha >= 1.0:
            return 0.0
        k = self._piece(alpha)
        return float(self._tails[k + 1] + self.levels[k] * (self.bps[k + 1] - alpha))

    def _integral(self, a: float, b: float) -> float:
        lo = np.clip(self.bps[:-1], a, b)
        hi = np.clip(self.bps[1:], a, b)
        return math.fsum(self.levels * (hi - lo))

    def _S_inv(self, t: float) -> float:
        # tails are nonincreasing; find piece k with tails[k+1] < t <= tails[k]
        tails = self._tails
        k = int(np.searchsorted(-tails, -t, side="left")) - 1
        k = min(max(k, 0), self.levels.size - 1)
        while self.levels[k] == 0 and k + 1 < self.levels.size:
            k += 1
        return float(self.bps[k + 1] - (t - tails[k + 1]) / self.levels[k])

    def _power_integral(self, r: float) -> float:
        return math.fsum(self.levels**r * np.diff(self.bps))

    def u0(self) -> float:
        k = int(np.flatnonzero(self.levels > 0)[0])
        return float(self.bps[k])

    def sup(self) -> float:
        return float(self.levels[-1])

    def breakpoints(self) -> np.ndarray:
        return np.asarray(self.bps[1:-1])

    def spec(self) -> str:
        pairs = ";".join(f"{float(b)!r},{float(lv)!r}" for b, lv in zip(self.bps[1:], self.levels))
        return f"step:{pairs}"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Step)
            and np.array_equal(self.bps, other.bps)
            and np.array_equal(self.levels, other.levels)
        )

    def __hash__(self) -> int:
        return hash((self.bps.tobytes(), self.levels.tobytes()))


def from_sample(Z: RandomVector, vecnorm: float = 2.0) -> Step:
    """Distortion given by the quantile of ``||Z||``, rescaled to unit mean.

    The divisor ``E||Z||`` is kept on the result as ``scale``.
    """
    mags = Z.magnitudes(vecnorm)
    q = quantile(mags, Z.space)
    scale = q.mean()
    if not scale > 0:
        raise ValidationError("cannot build a distortion from an identically zero sample")
    st = Step.normalized(q.breakpoints, q.values / scale)
    object.__setattr__(st, "scale", scale)
    return st


def parse(text: str) -> Distortion:
    """Parse ``constant``, ``avar:<beta>``, ``power:<s>``, ``log`` or
    ``step:<b1,l1;b2,l2;...>`` where each ``b`` is the right end of a piece.
    """
    text = text.strip()
    name, _, arg = text.partition(":")
    name = name.lower()
    try:
        if name == "constant" and not arg:
            return Constant()
        if name == "log" and not arg:
            return Log()
        if name == "avar":
            return AvarSpectrum(float(arg))
        if name == "power":
            return Power(float(arg))
        if name == "step":
            pairs = [p.split(",") for p in arg.split(";") if p.strip()]
            if any(len(p) != 2 for p in pairs):
                raise ValidationError(f"malformed step pieces in {text!r}")
            bps = [0.0] + [float(b) for b, _ in pairs]
            levels = [float(lv) for _, lv in pairs]
            return Step(np.array(bps), np.array(levels))
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"cannot parse distortion {text!r}: {exc}") from exc
    raise ValidationError(f"unknown distortion {text!r}")
