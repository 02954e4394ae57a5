"""Shared test helpers: random model generation and finite differences."""

import math

import numpy as np

from nlsig.core import NlsigModel, Partition


def random_model(rng, n=None, sign=None, vary_base=False, lam_range=(2.0, 10.0)):
    """Random valid model with n phases tiled over a random domain.

    Peak locations sit well inside each tile so small finite-difference
    perturbations of the interval bounds never violate invariants.
    """
    if n is None:
        n = int(rng.integers(1, 4))
    if sign is None:
        sign = "increasing" if rng.random() < 0.75 else "decreasing"
    x_lo = rng.uniform(-20.0, 20.0)
    widths = rng.uniform(5.0, 30.0, size=n)
    knots = x_lo + np.concatenate([[0.0], np.cumsum(widths)])
    floor = rng.uniform(-5.0, 5.0)
    level = floor
    parts = []
    for i in range(n):
        dy = rng.uniform(0.3, 5.0)
        base = math.e
        if vary_base and rng.random() < 0.4:
            base = float(rng.choice([2.0, 10.0, 1.5]))
        parts.append(Partition(
            x_min=float(knots[i]),
            x_max=float(knots[i + 1]),
            delta=float(knots[i] + widths[i] * rng.uniform(0.2, 0.8)),
            y_min=level,
            y_max=level + dy,
            lam=float(rng.uniform(*lam_range)),
            base=base,
        ))
        level += dy
    return NlsigModel(tuple(parts), sign=sign)


def central_diff(fn, t, h):
    """Symmetric difference quotient of a scalar function."""
    return (fn(t + h) - fn(t - h)) / (2.0 * h)


def fd_step(value):
    """Perturbation size scaled to the parameter, as used throughout."""
    return 1e-6 * max(1.0, abs(value))


def fd_close(approx, exact, rtol=1e-5, atol=1e-8):
    """Relative agreement at rtol with an absolute floor of atol."""
    return abs(approx - exact) <= atol + rtol * abs(exact)
