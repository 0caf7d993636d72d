"""Finite probability spaces, empirical quantiles and comonotone couplings.

Everything here is exact bookkeeping on a finite sample space: atoms carry
positive weights, a uniform variable is represented by disjoint interval
slots of (0, 1] rather than by sampled points, and quantile functions are
left-continuous step functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

WEIGHT_TOL = 1e-12


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def close(a: float, b: float, tol: float = 1e-12) -> bool:
    """Absolute tolerance below magnitude 1, relative above."""
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def leq(a: float, b: float, tol: float = 1e-12) -> bool:
    return a <= b + tol * max(1.0, abs(a), abs(b))


# ---------------------------------------------------------------------------
# vector norms on R^d


def dual_exponent(r: float) -> float:
    """Conjugate exponent r* with 1/r + 1/r* = 1."""
    if r < 1:
        raise ValidationError(f"vector norm exponent must be >= 1, got {r}")
    if r == 1:
        return math.inf
    if math.isinf(r):
        return 1.0
    return r / (r - 1.0)


def rownorm(values: np.ndarray, r: float) -> np.ndarray:
    """l_r norm of every row of an (n, d) matrix."""
    if r < 1:
        raise ValidationError(f"vector norm exponent must be >= 1, got {r}")
    a = np.abs(np.asarray(values, dtype=float))
    if math.isinf(r):
        return a.max(axis=1)
    if r == 1:
        return a.sum(axis=1)
    # scale first so entries neither overflow nor underflow under the power
    m = a.max(axis=1)
    safe = np.where(m > 0, m, 1.0)
    return m * ((a / safe[:, None]) ** r).sum(axis=1) ** (1.0 / r)


def norming_directions(values: np.ndarray, r: float) -> np.ndarray:
    """Unit vectors u_i (in l_r) with <z_i, u_i> = ||z_i||_{r*}.

    Rows that are identically zero get the zero vector.
    """
    z = np.asarray(values, dtype=float)
    n, d = z.shape
    rs = dual_exponent(r)
    out = np.zeros_like(z)
    dn = rownorm(z, rs)
    for i in range(n):
        if dn[i] == 0:
            continue
        zi = z[i]
        if r == 1:
            j = int(np.argmax(np.abs(zi)))
            out[i, j] = np.sign(zi[j])
        elif math.isinf(r):
            out[i] = np.sign(zi)
        else:
            u = np.sign(zi) * (np.abs(zi) / dn[i]) ** (rs - 1.0)
            out[i] = u
    return out


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True, eq=False)
class FiniteSpace:
    """Atom weights of a finite probability space.

    Weights must be positive and sum to one within ``WEIGHT_TOL``; they are
    renormalized once here so downstream code can rely on an exact total.
    """

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.size == 0:
            raise ValidationError("a finite space needs at least one atom")
        if not np.all(np.isfinite(w)):
            raise ValidationError("weights must be finite")
        bad = np.flatnonzero(w <= 0)
        if bad.size:
            raise ValidationError(f"weight of atom {int(bad[0])} is not positive: {w[bad[0]]}")
        total = math.fsum(w)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise ValidationError(f"weights sum to {total!r}, not 1")
        object.__setattr__(self, "weights", _frozen(w / total))

    @classmethod
    def uniform(cls, n: int) -> "FiniteSpace":
        return cls(np.full(n, 1.0 / n))

    @classmethod
    def from_unnormalized(cls, weights: Sequence[float]) -> "FiniteSpace":
        w = np.asarray(weights, dtype=float)
        return cls(w / math.fsum(w))

    @property
    def n(self) -> int:
        return int(self.weights.size)

    def is_uniform(self) -> bool:
        return bool(np.all(self.weights == self.weights[0])) or bool(
            np.allclose(self.weights, 1.0 / self.n, rtol=0, atol=1e-15)
        )

    def permuted(self, perm: Sequence[int]) -> "FiniteSpace":
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise ValidationError("not a permutation of the atoms")
        # already normalized: skip the division so weights move bit for bit
        out = object.__new__(FiniteSpace)
        object.__setattr__(out, "weights", _frozen(self.weights[perm]))
        return out


@dataclass(frozen=True, eq=False)
class RandomVector:
    """Per-atom values in R^d attached to a finite space."""

    space: FiniteSpace
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[1] < 1:
            raise ValidationError(f"values must be an n x d matrix, got shape {v.shape}")
        if v.shape[0] != self.space.n:
            raise ValidationError(
                f"{v.shape[0]} rows of values for a space with {self.space.n} atoms"
            )
        bad = np.argwhere(~np.isfinite(v))
        if bad.size:
            raise ValidationError(f"non-finite value at atom {int(bad[0][0])}")
        object.__setattr__(self, "values", _frozen(v))

    @classmethod
    def scalar(cls, values: Sequence[float], weights: Sequence[float] | None = None) -> "RandomVector":
        v = np.asarray(values, dtype=float).ravel()
        space = FiniteSpace.uniform(v.size) if weights is None else FiniteSpace(weights)
        return cls(space, v[:, None])

    @property
    def n(self) -> int:
        return self.space.n

    @property
    def d(self) -> int:
        return int(self.values.shape[1])

    @property
    def weights(self) -> np.ndarray:
        return self.space.weights

    def column(self) -> np.ndarray:
        """The values of a scalar variable as a flat array."""
        if self.d != 1:
            raise ValidationError(f"expected a scalar variable, got d={self.d}")
        return self.values[:, 0]

    def magnitudes(self, r: float = 2.0) -> np.ndarray:
        return rownorm(self.values, r)

    def with_values(self, values: np.ndarray) -> "RandomVector":
        return RandomVector(self.space, values)

    def permuted(self, perm: Sequence[int]) -> "RandomVector":
        perm = np.asarray(perm)
        return RandomVector(self.space.permuted(perm), self.values[perm])


@dataclass(frozen=True, eq=False)
class StepQuantile:
    """Left-continuous nondecreasing step function on (0, 1].

    ``F(u) = values[k]`` for ``u`` in ``(breakpoints[k], breakpoints[k+1]]``.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if c.size != v.size + 1 or v.size == 0:
            raise ValidationError("need m values and m + 1 breakpoints")
        if c[0] != 0.0 or c[-1] != 1.0:
            raise ValidationError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(c) <= 0):
            raise ValidationError("breakpoints must be strictly increasing")
        if np.any(np.diff(v) < 0):
            raise ValidationError("quantile values must be nondecreasing")
        object.__setattr__(self, "breakpoints", _frozen(c))
        object.__setattr__(self, "values", _frozen(v))

    @property
    def m(self) -> int:
        return int(self.values.size)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    def __call__(self, u: float) -> float:
        if not 0.0 <= u <= 1.0:
            raise ValidationError(f"quantile level {u} outside [0, 1]")
        k = int(np.searchsorted(self.breakpoints, u, side="left")) - 1
        return float(self.values[max(k, 0)])

    def tail_integral(self, alpha: float) -> float:
        """Integral of F over (alpha, 1]."""
        c, v = self.breakpoints, self.values
        lo = np.clip(c[:-1], alpha, 1.0)
        return math.fsum(v * (c[1:] - np.maximum(lo, alpha)).clip(min=0.0))

    def mean(self) -> float:
        return math.fsum(self.values * self.lengths)


@dataclass(frozen=True, eq=False)
class SlotCoupling:
    """Disjoint half-open slots (lower[i], upper[i]] of (0, 1], one per atom.

    A slot coupling stands for a uniform random variable U on the space
    enlarged by [0, 1]: on atom i, U is uniform on its slot.
    """

    space: FiniteSpace
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        a = np.asarray(self.lower, dtype=float)
        b = np.asarray(self.upper, dtype=float)
        if a.size != self.space.n or b.size != self.space.n:
            raise ValidationError("one slot per atom required")
        order = np.argsort(a, kind="stable")
        ends = np.concatenate([[0.0], b[order]])
        if np.any(np.abs(a[order] - ends[:-1]) > 1e-12) or abs(ends[-1] - 1.0) > 1e-12:
            raise ValidationError("slots must tile (0, 1] without gaps or overlaps")
        if np.any(np.abs((b - a) - self.space.weights) > 1e-12):
            raise ValidationError("slot lengths must match atom weights")
        object.__setattr__(self, "lower", _frozen(a))
        object.__setattr__(self, "upper", _frozen(b))

    @classmethod
    def from_order(cls, space: FiniteSpace, order: Sequence[int]) -> "SlotCoupling":
        """Stack atoms into (0, 1] in the given order, first atom lowest."""
        order = np.asarray(order, dtype=int)
        if sorted(order.tolist()) != list(range(space.n)):
            raise ValidationError("order must be a permutation of the atoms")
        ends = np.cumsum(space.weights[order])
        ends[-1] = 1.0
        starts = np.concatenate([[0.0], ends[:-1]])
        lower = np.empty(space.n)
        upper = np.empty(space.n)
        lower[order] = starts
        upper[order] = ends
        return cls(space, lower, upper)

    def is_comonotone_with(self, v: np.ndarray) -> bool:
        v = np.asarray(v, dtype=float)
        for i in range(v.size):
            for j in range(v.size):
                if v[i] < v[j] and self.upper[i] > self.lower[j] + 1e-15:
                    return False
        return True


@dataclass(frozen=True, eq=False)
class Partition:
    """Assignment of every atom to one of ``k`` non-empty blocks."""

    blocks: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.blocks)
        if b.ndim != 1 or b.size == 0:
            raise ValidationError("partition needs one block label per atom")
        if not np.issubdtype(b.dtype, np.integer):
            raise ValidationError("block labels must be integers")
        if b.min() < 0:
            raise ValidationError("block labels must be non-negative")
        counts = np.bincount(b)
        empty = np.flatnonzero(counts == 0)
        if empty.size:
            raise ValidationError(f"block {int(empty[0])} is empty")
        b = b.copy()
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @property
    def k(self) -> int:
        return int(self.blocks.max()) + 1

    @classmethod
    def identity(cls, n: int) -> "Partition":
        return cls(np.arange(n))

    @classmethod
    def trivial(cls, n: int) -> "Partition":
        return cls(np.zeros(n, dtype=int))


# ---------------------------------------------------------------------------
# operations


def _scalar_values(v, space: FiniteSpace) -> np.ndarray:
    if isinstance(v, RandomVector):
        v = v.column()
    v = np.asarray(v, dtype=float).ravel()
    if v.size != space.n:
        raise ValidationError(f"{v.size} values for a space with {space.n} atoms")
    if not np.all(np.isfinite(v)):
        raise ValidationError("values must be finite")
    return v


def _sorted_ends(v: np.ndarray, space: FiniteSpace) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((np.arange(v.size), v))
    ends = np.cumsum(space.weights[order])
    ends[-1] = 1.0
    return order, ends


def quantile(v, space: FiniteSpace) -> StepQuantile:
    """Quantile function of the weighted empirical law of ``v``.

    Tied values are merged into a single step.

    >>> q = quantile([3.0, 1.0, 2.0], FiniteSpace.uniform(3))
    >>> q.values.tolist()
    [1.0, 2.0, 3.0]
    """
    v = _scalar_values(v, space)
    order, ends = _sorted_ends(v, space)
    sv = v[order]
    last = np.flatnonzero(np.append(sv[1:] != sv[:-1], True))
    return StepQuantile(np.concatenate([[0.0], ends[last]]), sv[last])


def comonotone_slots(v, space: FiniteSpace) -> SlotCoupling:
    """Slots ordered by ascending ``v``; ties go to the lower atom index first."""
    v = _scalar_values(v, space)
    order, _ = _sorted_ends(v, space)
    return SlotCoupling.from_order(space, order)


def segment_index(v, space: FiniteSpace) -> tuple[StepQuantile, np.ndarray]:
    """Quantile of ``v`` and, per atom, the index of the step its slot lies in.

    Steps and slots share one cumulative sum, so every slot sits inside
    exactly one step.
    """
    v = _scalar_values(v, space)
    q = quantile(v, space)
    seg = np.searchsorted(q.values, v)
    return q, seg


def expectation(v, space: FiniteSpace) -> float:
    v = _scalar_values(v, space)
    return math.fsum(space.weights * v)


def p_norm(Y: RandomVector, p: float, vecnorm: float = 2.0) -> float:
    """Lebesgue norm (sum_i w_i ||y_i||^p)^(1/p); the maximum for p = inf."""
    if not (p >= 1):
        raise ValidationError(f"p must lie in [1, inf], got {p}")
    m = Y.magnitudes(vecnorm)
    if math.isinf(p):
        return float(m.max())
    top = float(m.max())
    if top == 0:
        return 0.0
    return top * math.fsum(Y.weights * (m / top) ** p) ** (1.0 / p)


def coarsen(Z: RandomVector, part: Partition) -> RandomVector:
    """Conditional expectation of ``Z`` given the blocks of ``part``.

    The result lives on the coarsened space with one atom per block.
    """
    if part.blocks.size != Z.n:
        raise ValidationError("partition size does not match the space")
    k = part.k
    w = Z.weights
    bw = np.bincount(part.blocks, weights=w, minlength=k)
    vals = np.empty((k, Z.d))
    for j in range(Z.d):
        vals[:, j] = np.bincount(part.blocks, weights=w * Z.values[:, j], minlength=k) / bw
    # singleton blocks keep their value bit for bit
    single = np.bincount(part.blocks, minlength=k) == 1
    idx = np.full(k, -1)
    idx[part.blocks] = np.arange(Z.n)
    vals[single] = Z.values[idx[single]]
    return RandomVector(FiniteSpace(bw), vals)


def merge_steps(*qs: StepQuantile) -> tuple[np.ndarray, list[np.ndarray]]:
    """Common refinement of several step quantiles.

    Returns merged breakpoints and, for each input, its value on every
    merged interval.
    """
    c = np.unique(np.concatenate([q.breakpoints for q in qs]))
    mids = 0.5 * (c[:-1] + c[1:])
    vals = []
    for q in qs:
        k = np.searchsorted(q.breakpoints, mids, side="left") - 1
        vals.append(q.values[np.clip(k, 0, q.m - 1)])
    return c, vals
