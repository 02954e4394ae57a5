"""Analytic partial derivatives for least-squares fitting.

Provides the closed-form sensitivities of a bounded logistic phase to each
of its seven hyper-parameters, the dense residual Jacobian of a model over
a data set, the Gauss-Newton normal matrix, and the partials through a
weighted-input layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import NlsigModel, Partition, fraction, sign_factor

__all__ = [
    "PARAM_NAMES",
    "LsqObjective",
    "WeightLayer",
    "param_partials",
    "residual_jacobian",
    "objective_gradient",
    "gauss_newton_hessian",
    "weight_partials",
]

# Canonical per-partition parameter order used by every Jacobian block.
PARAM_NAMES = ("base", "lam", "x_max", "x_min", "delta", "y_max", "y_min")


def param_partials(p: Partition, sign: str, x):
    """Hyper-parameter partials of one phase's standalone output y_min + v(x).

    Returns the row [d/d base, d/d lam, d/d x_max, d/d x_min, d/d delta,
    d/d y_max, d/d y_min]; shape (7,) for scalar x, (len(x), 7) otherwise.
    The y_min and y_max entries always sum to 1.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xv = np.atleast_1d(x)

    s = sign_factor(sign)
    lnb = math.log(p.base)
    f = fraction(p, sign, xv)
    v = p.dy * f

    # common helper: s * ln(b) * v * (f - 1); zero exactly in clamped tails
    t = s * lnb * v * (f - 1.0)
    d_alpha = (xv - p.delta) * t

    out = np.empty((xv.size, 7))
    out[:, 0] = p.alpha / (p.base * lnb) * d_alpha          # base
    out[:, 1] = (2.0 / p.dx) * d_alpha                      # lam
    out[:, 2] = -(p.alpha / p.dx) * d_alpha                 # x_max
    out[:, 3] = (p.alpha / p.dx) * d_alpha                  # x_min
    out[:, 4] = -p.alpha * t                                # delta
    out[:, 5] = f                                           # y_max
    out[:, 6] = 1.0 - f                                     # y_min
    return out[0] if scalar else out


@dataclass(frozen=True)
class LsqObjective:
    """Least-squares objective E = 0.5 * sum((r_d - y(x_d))**2).

    ``x`` must be strictly increasing; ``r`` the observed values at x.
    """

    x: np.ndarray
    r: np.ndarray
    model: NlsigModel

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        r = np.asarray(self.r, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "r", r)
        if x.ndim != 1 or r.shape != x.shape or x.size < 1:
            raise ValueError("x and r must be 1-d arrays of equal length >= 1")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(r))):
            raise ValueError("x and r must be finite")

    def residuals(self) -> np.ndarray:
        return self.r - self.model.value(self.x)

    def value(self) -> float:
        e = self.residuals()
        return 0.5 * float(e @ e)


def residual_jacobian(obj: LsqObjective) -> np.ndarray:
    """Jacobian of the fitted curve, shape (D, 7*n).

    Block i holds partition i's param_partials row.  One correction makes
    the matrix the exact curve Jacobian: the global floor enters the sum
    only through the first partition, so for later partitions the y_min
    column carries only the range effect -v/dy instead of 1 - v/dy.
    """
    model = obj.model
    blocks = []
    for i, p in enumerate(model.partitions):
        block = param_partials(p, model.sign, obj.x)
        if i > 0:
            block = block.copy()
            block[:, 6] -= 1.0
        blocks.append(block)
    return np.hstack(blocks)


def objective_gradient(obj: LsqObjective) -> np.ndarray:
    """Gradient of E in the canonical parameter order: -J.T @ e."""
    J = residual_jacobian(obj)
    return -J.T @ obj.residuals()


def gauss_newton_hessian(J: np.ndarray) -> np.ndarray:
    """Gauss-Newton normal matrix J.T @ J (symmetric PSD)."""
    J = np.asarray(J, dtype=float)
    if J.ndim != 2:
        raise ValueError(f"J must be a 2-d matrix, got ndim={J.ndim}")
    if not np.all(np.isfinite(J)):
        raise ValueError("J must be finite")
    return J.T @ J


@dataclass(frozen=True)
class WeightLayer:
    """Affine input layer: x = w[0] + sum(w[1:] * inputs)."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        object.__setattr__(self, "weights", w)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a 1-d vector of length >= 1")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")

    @property
    def arity(self) -> int:
        """Number of inputs q (weights holds the bias plus q gains)."""
        return self.weights.size - 1

    def combine(self, inputs) -> float:
        inputs = np.asarray(inputs, dtype=float)
        if inputs.shape != (self.arity,):
            raise ValueError(
                f"expected {self.arity} inputs, got shape {inputs.shape}")
        return float(self.weights[0] + self.weights[1:] @ inputs)


def weight_partials(layer: WeightLayer, inputs, model: NlsigModel) -> np.ndarray:
    """Partials of y with respect to each weight, length q+1.

    The bias entry is dy/dx at the combined input; each gain entry is that
    slope scaled by its input.
    """
    inputs = np.asarray(inputs, dtype=float)
    g = model.derivative(layer.combine(inputs))
    return np.concatenate([[g], inputs * g])
