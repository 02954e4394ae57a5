"""Growth-state ratios of a fitted curve.

Two ratios locate the process relative to a phase's peak inflection.  The
output-side ratio (YIR) measures how much of the phase's rise has been
realized: exactly 0.5 at the peak, below while growth accelerates, above
while it slows.  The input-side ratio (XIR) measures exponential distance
from the peak location: exactly 1 at the peak, below 1 before, above 1
after.  Confidence intervals come from evaluating both ratios on
bootstrap replicate models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EXP_CLAMP, NlsigModel
from .fit import BootstrapResult

__all__ = [
    "DegeneratePartitionError",
    "YIR_PEAK_BAND",
    "XIR_PEAK_BAND",
    "MetricReport",
    "yir",
    "xir",
    "classify",
    "states_in_interval",
    "metric_ci",
    "partition_for",
    "build_report",
]

# "about the peak" bands; a point inside reads as peaking / peak period
YIR_PEAK_BAND = (0.45, 0.55)
XIR_PEAK_BAND = (0.9, 1.1)

_YIR_STATES = ("increasing", "peaking", "reducing")
_XIR_STATES = ("pre_peak", "peak", "post_peak")


class DegeneratePartitionError(ValueError):
    """Raised when asking for the ratio of a flat (zero-rise) phase."""


def _check_index(model: NlsigModel, i: int) -> int:
    if not 1 <= i <= model.n:
        raise IndexError(f"partition index {i} outside 1..{model.n}")
    return i - 1


def yir(model: NlsigModel, x: float, i: int = 1) -> float:
    """Realized fraction of phase i's rise at input x.

    Computed as (y - floor_i) / rise_i where floor_i is the chained level
    at which phase i starts.  ``i`` is 1-based.
    """
    k = _check_index(model, i)
    p = model.partitions[k]
    if p.dy == 0.0:
        raise DegeneratePartitionError(
            f"partition {i} has zero rise; its ratio is undefined")
    floor_i = float(model.chained_levels()[k])
    return (model.value(x) - floor_i) / p.dy


def xir(model: NlsigModel, x: float, i: int = 1) -> float:
    """Exponential distance of x from phase i's peak: base**(alpha*(x-delta)).

    Always computed with the positive-exponent orientation so values below
    1 mean pre-peak regardless of the model's growth direction.  Saturates
    at the exponent clamp instead of overflowing.
    """
    k = _check_index(model, i)
    p = model.partitions[k]
    u = p.alpha * math.log(p.base) * (x - p.delta)
    return math.exp(min(max(u, -EXP_CLAMP), EXP_CLAMP))


def classify(yir_value: float, xir_value: float,
             yir_band=YIR_PEAK_BAND, xir_band=XIR_PEAK_BAND):
    """Map point estimates to (yir_state, xir_state)."""
    if not math.isfinite(yir_value) or not math.isfinite(xir_value):
        return ("peaking" if not math.isfinite(yir_value) else
                _scalar_state(yir_value, yir_band, _YIR_STATES),
                "indeterminate")
    return (_scalar_state(yir_value, yir_band, _YIR_STATES),
            _scalar_state(xir_value, xir_band, _XIR_STATES))


def _scalar_state(value, band, states):
    lo, hi = band
    if value < lo:
        return states[0]
    if value > hi:
        return states[2]
    return states[1]


def states_in_interval(ci, band, kind: str):
    """All states an interval overlaps, in threshold order.

    Used for dual readings when a confidence interval straddles a band
    edge (e.g. "most likely a peak period but could also be pre-peak").
    """
    states = _YIR_STATES if kind == "yir" else _XIR_STATES
    lo, hi = ci
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return ("indeterminate",)
    out = []
    if lo < band[0]:
        out.append(states[0])
    if lo <= band[1] and hi >= band[0]:
        out.append(states[1])
    if hi > band[1]:
        out.append(states[2])
    return tuple(out)


def metric_ci(boot: BootstrapResult, x: float, i: int = 1):
    """95% percentile intervals of both ratios across replicate models."""
    yirs = np.array([yir(m, x, i) for m in boot.replicates])
    xirs = np.array([xir(m, x, i) for m in boot.replicates])
    yir_ci = (float(np.percentile(yirs, 2.5)), float(np.percentile(yirs, 97.5)))
    xir_ci = (float(np.percentile(xirs, 2.5)), float(np.percentile(xirs, 97.5)))
    return yir_ci, xir_ci


def partition_for(model: NlsigModel, x: float) -> int:
    """1-based index of the phase whose sub-interval contains x.

    The latest matching phase wins; falls back to the last phase when x
    lies outside every sub-interval.
    """
    chosen = model.n
    for idx in range(model.n, 0, -1):
        p = model.partitions[idx - 1]
        if p.x_min <= x <= p.x_max:
            chosen = idx
            break
    return chosen


@dataclass(frozen=True)
class MetricReport:
    """Point estimates, intervals, and categorical states of both ratios."""

    yir: float
    xir: float
    yir_ci: tuple
    xir_ci: tuple
    partition_index: int
    yir_state: str
    xir_state: str


def build_report(model: NlsigModel, x: float,
                 boot: BootstrapResult | None = None,
                 partition_index: int | None = None,
                 yir_band=YIR_PEAK_BAND, xir_band=XIR_PEAK_BAND) -> MetricReport:
    """Assemble the metric report at input x (typically the latest datum)."""
    i = partition_index if partition_index is not None else partition_for(model, x)
    y_val = yir(model, x, i)
    x_val = xir(model, x, i)
    if boot is not None:
        yir_ci, xir_ci = metric_ci(boot, x, i)
    else:
        yir_ci, xir_ci = (y_val, y_val), (x_val, x_val)
    y_state, x_state = classify(y_val, x_val, yir_band, xir_band)
    return MetricReport(yir=y_val, xir=x_val, yir_ci=yir_ci, xir_ci=xir_ci,
                        partition_index=i, yir_state=y_state,
                        xir_state=x_state)
