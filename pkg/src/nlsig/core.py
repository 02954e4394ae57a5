"""Bounded multi-phase logistic curves.

A curve is a sum of ``n`` shifted logistic sub-sigmoids, each restricted to
its own finite input interval ``[x_min, x_max]`` and output range
``[y_min, y_max]``.  Each sub-sigmoid (a "partition") contributes one peak
inflection at ``x = delta`` where its growth rate is maximal.  The model is
evaluated exactly, together with its first and second derivatives in the
scalar input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "InvalidModelError",
    "Partition",
    "NlsigModel",
    "ClassicLogistic",
    "classic_from_partition",
]

# Exponents are clamped here; past the clamp the sub-sigmoid is pinned to
# its exact saturation limit (0 or dy), which keeps every derived quantity
# finite without observable error in the tails.
EXP_CLAMP = 700.0

SIGNS = ("increasing", "decreasing")


class InvalidModelError(ValueError):
    """Raised when a partition or model violates its invariants."""


def sign_factor(sign: str) -> float:
    """Exponent sign: -1 for an increasing curve, +1 for a decreasing one."""
    if sign == "increasing":
        return -1.0
    if sign == "decreasing":
        return 1.0
    raise InvalidModelError(f"sign must be one of {SIGNS}, got {sign!r}")


@dataclass(frozen=True)
class Partition:
    """One growth phase: a bounded logistic sub-sigmoid.

    Parameters
    ----------
    x_min, x_max : float
        Input sub-interval of the phase (x_max > x_min).
    delta : float
        Peak-inflection location, inside [x_min, x_max].
    y_min, y_max : float
        Output floor and ceiling of the phase (y_max >= y_min).
    lam : float
        Growth intensity (> 0).  The effective exponential rate is
        ``alpha = 2 * lam / (x_max - x_min)``.
    base : float
        Exponential base (> 1), natural base by default.
    """

    x_min: float
    x_max: float
    delta: float
    y_min: float
    y_max: float
    lam: float
    base: float = math.e

    def __post_init__(self):
        vals = (self.x_min, self.x_max, self.delta, self.y_min, self.y_max,
                self.lam, self.base)
        if not all(math.isfinite(v) for v in vals):
            raise InvalidModelError("partition parameters must be finite")
        if not self.x_max > self.x_min:
            raise InvalidModelError(
                f"x_max must exceed x_min (got [{self.x_min}, {self.x_max}])")
        if not self.x_min <= self.delta <= self.x_max:
            raise InvalidModelError(
                f"delta {self.delta} outside [{self.x_min}, {self.x_max}]")
        if self.y_max < self.y_min:
            raise InvalidModelError(
                f"y_max {self.y_max} below y_min {self.y_min}")
        if not self.lam > 0:
            raise InvalidModelError(f"lam must be positive, got {self.lam}")
        # base > 1 with a margin: partials divide by base*log(base)
        if self.base < 1.0 + 1e-6:
            raise InvalidModelError(
                f"base must be at least 1 + 1e-6, got {self.base}")

    @property
    def dx(self) -> float:
        return self.x_max - self.x_min

    @property
    def dy(self) -> float:
        return self.y_max - self.y_min

    @property
    def alpha(self) -> float:
        """Effective exponential rate, 2*lam/dx."""
        return 2.0 * self.lam / self.dx


def fraction(p: Partition, sign: str, x):
    """Normalized sub-sigmoid value ``1 / (1 + base**(s*alpha*(x-delta)))``.

    This is the phase's output expressed as a fraction of its range dy;
    well defined even for a degenerate flat phase (dy == 0).  Saturates to
    exactly 0 or 1 past the exponent clamp.
    """
    x = np.asarray(x, dtype=float)
    t = sign_factor(sign) * p.alpha * math.log(p.base) * (x - p.delta)
    frac = 1.0 / (1.0 + np.exp(np.clip(t, -EXP_CLAMP, EXP_CLAMP)))
    frac = np.where(t > EXP_CLAMP, 0.0, frac)
    frac = np.where(t < -EXP_CLAMP, 1.0, frac)
    return frac


@dataclass(frozen=True)
class NlsigModel:
    """Ordered sum of logistic phases with a shared growth direction.

    ``partitions`` must be ordered by strictly increasing peak location
    ``delta``.  The curve's global floor is the first partition's y_min;
    each phase then adds its own rise dy on top.
    """

    partitions: tuple[Partition, ...]
    sign: str = "increasing"

    def __post_init__(self):
        parts = tuple(self.partitions)
        object.__setattr__(self, "partitions", parts)
        if len(parts) < 1:
            raise InvalidModelError("model needs at least one partition")
        if not all(isinstance(p, Partition) for p in parts):
            raise InvalidModelError("partitions must be Partition instances")
        deltas = [p.delta for p in parts]
        if any(b <= a for a, b in zip(deltas, deltas[1:])):
            raise InvalidModelError(
                f"peak locations must be strictly increasing, got {deltas}")
        sign_factor(self.sign)

    @property
    def n(self) -> int:
        return len(self.partitions)

    @property
    def floor(self) -> float:
        """Global output floor (first partition's y_min)."""
        return self.partitions[0].y_min

    @property
    def ceiling(self) -> float:
        """Global output ceiling: floor plus the sum of all phase rises."""
        return self.floor + sum(p.dy for p in self.partitions)

    def chained_levels(self) -> np.ndarray:
        """Cumulative output levels, length n+1.

        ``levels[i-1]`` and ``levels[i]`` are phase i's floor and ceiling
        under the chained reading where each phase starts where the
        previous one saturates.
        """
        rises = [p.dy for p in self.partitions]
        return self.floor + np.concatenate([[0.0], np.cumsum(rises)])

    def _fractions(self, x) -> np.ndarray:
        """Stacked phase fractions, shape (n,) + shape(x)."""
        return np.stack([fraction(p, self.sign, x) for p in self.partitions])

    def value(self, x):
        """Curve value y(x); accepts scalars or arrays."""
        x = np.asarray(x, dtype=float)
        fracs = self._fractions(x)
        dys = np.array([p.dy for p in self.partitions])
        y = self.floor + np.tensordot(dys, fracs, axes=(0, 0))
        return float(y) if x.ndim == 0 else y

    def derivative(self, x):
        """First derivative dy/dx; non-negative when sign is increasing."""
        x = np.asarray(x, dtype=float)
        s = sign_factor(self.sign)
        fracs = self._fractions(x)
        total = np.zeros(x.shape)
        for p, f in zip(self.partitions, fracs):
            total += s * p.alpha * math.log(p.base) * p.dy * f * (f - 1.0)
        return float(total) if x.ndim == 0 else total

    def second_derivative(self, x):
        """Second derivative d2y/dx2; zero at each peak of a lone phase."""
        x = np.asarray(x, dtype=float)
        fracs = self._fractions(x)
        total = np.zeros(x.shape)
        for p, f in zip(self.partitions, fracs):
            rate = p.alpha * math.log(p.base)
            total += rate * rate * p.dy * f * (f - 1.0) * (2.0 * f - 1.0)
        return float(total) if x.ndim == 0 else total


@dataclass(frozen=True)
class ClassicLogistic:
    """Single logistic step on an unbounded input domain.

    ``y = y_min + (y_max - y_min) / (1 + e**(s*alpha*(x - delta)))`` with
    s = -1 for increasing and +1 for decreasing.  Serves as the exact
    reference for a one-phase model under ``alpha = 2*lam/dx``.
    """

    y_min: float
    y_max: float
    alpha: float
    delta: float
    sign: str = "increasing"

    def __post_init__(self):
        if self.y_max < self.y_min:
            raise InvalidModelError(
                f"y_max {self.y_max} below y_min {self.y_min}")
        if not self.alpha > 0:
            raise InvalidModelError(f"alpha must be positive, got {self.alpha}")
        sign_factor(self.sign)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        t = sign_factor(self.sign) * self.alpha * (x - self.delta)
        y = self.y_min + (self.y_max - self.y_min) / (
            1.0 + np.exp(np.clip(t, -EXP_CLAMP, EXP_CLAMP)))
        return float(y) if x.ndim == 0 else y


def classic_from_partition(p: Partition, sign: str = "increasing") -> ClassicLogistic:
    """Classic-form twin of a partition: same curve on an infinite domain.

    The natural-base rate is ``alpha * ln(base)`` so any base maps exactly.
    """
    return ClassicLogistic(y_min=p.y_min, y_max=p.y_max,
                           alpha=p.alpha * math.log(p.base),
                           delta=p.delta, sign=sign)
