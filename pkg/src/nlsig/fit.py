"""Fitting multi-phase logistic models to cumulative time series.

The pipeline mirrors how these curves are estimated in practice: locate
candidate inflection points on a smoothed copy of the series to seed the
phase count and peak positions, run a damped Gauss-Newton solver with the
analytic Jacobian, then wrap the solution with residual-resampling
bootstrap confidence intervals.

Constraints (positive intensity, positive interval widths, ordered peaks,
non-negative rises) are enforced by an unconstrained reparametrization:
intensities and widths live in log space, rises in softplus space, and
each peak as a logit fraction of its own sub-interval.  Sub-intervals tile
the domain, so peak ordering is automatic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .calculus import LsqObjective, residual_jacobian
from .core import NlsigModel, Partition, sign_factor

__all__ = [
    "DegenerateDataError",
    "BootstrapError",
    "TimeSeries",
    "InflectionGuess",
    "FitOptions",
    "FitResult",
    "BootstrapResult",
    "detect_inflections",
    "uniform_guess",
    "moving_average",
    "fit",
    "refit",
    "r_squared",
    "bootstrap",
]

MIN_POINTS = 8


class DegenerateDataError(ValueError):
    """Raised for series that cannot support a fit (constant, too short)."""


class BootstrapError(RuntimeError):
    """Raised when too many bootstrap replicates fail to refit."""


@dataclass(frozen=True)
class TimeSeries:
    """Observed cumulative series on a strictly increasing grid."""

    x: np.ndarray
    r: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        r = np.asarray(self.r, dtype=float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "r", r)
        if x.ndim != 1 or r.shape != x.shape:
            raise ValueError("x and r must be 1-d arrays of equal length")
        if x.size < 2:
            raise ValueError("series needs at least two points")
        if np.any(np.diff(x) <= 0):
            raise ValueError("x must be strictly increasing")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(r))):
            raise ValueError("series values must be finite")

    def __len__(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class InflectionGuess:
    """Seed for the solver: phase count plus peak / valley hints."""

    n: int
    peak_locations: np.ndarray
    valley_locations: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        peaks = np.asarray(self.peak_locations, dtype=float)
        valleys = np.asarray(self.valley_locations, dtype=float)
        object.__setattr__(self, "peak_locations", peaks)
        object.__setattr__(self, "valley_locations", valleys)
        if self.n < 1:
            raise ValueError("phase count must be at least 1")
        if peaks.shape != (self.n,):
            raise ValueError(f"need exactly {self.n} peak locations")
        if np.any(np.diff(peaks) <= 0):
            raise ValueError("peak locations must be strictly increasing")
        if not np.all(np.isfinite(peaks)) or not np.all(np.isfinite(valleys)):
            raise ValueError("locations must be finite")


@dataclass(frozen=True)
class FitOptions:
    """Solver configuration.

    ``frozen`` names transform coordinates excluded from the optimizer:
    any of "base", "anchor" (left domain edge), "lam", "width", "dfrac"
    (peak position within its sub-interval), "dy", "floor".  The default
    frees intensity, peak, right interval edge, rise, and global floor.
    """

    sign: str = "increasing"
    base: float = math.e
    lambda_init: float = 6.0
    frozen: frozenset = frozenset({"base", "anchor"})
    max_iterations: int = 500
    damping_init: float = 1e-3
    step_tolerance: float = 1e-10
    objective_tolerance: float = 1e-12


@dataclass(frozen=True)
class FitResult:
    """Solver output: best model found plus fit diagnostics."""

    model: NlsigModel
    residuals: np.ndarray
    r_squared: float
    converged: bool
    iterations: int
    objective: float
    options: FitOptions


@dataclass(frozen=True)
class BootstrapResult:
    """Replicate models with per-parameter 95% percentile bounds.

    ``ci_lower`` and ``ci_upper`` have shape (n, 7) in the canonical
    parameter order (base, lam, x_max, x_min, delta, y_max, y_min).
    """

    replicates: tuple
    ci_lower: np.ndarray
    ci_upper: np.ndarray
    seed: int
    failures: int = 0


# ---------------------------------------------------------------------------
# smoothing and inflection detection


def moving_average(values, window: int) -> np.ndarray:
    """Centered moving average; the window shrinks symmetrically at edges."""
    v = np.asarray(values, dtype=float)
    if window < 1 or window % 2 == 0:
        raise ValueError("window must be a positive odd integer")
    half = window // 2
    csum = np.concatenate([[0.0], np.cumsum(v)])
    out = np.empty_like(v)
    for k in range(v.size):
        h = min(half, k, v.size - 1 - k)
        out[k] = (csum[k + h + 1] - csum[k - h]) / (2 * h + 1)
    return out


def _signed_runs(d2, tol):
    """Maximal runs of constant nonzero sign: (sign, first, last, peak_abs)."""
    runs = []
    for k, v in enumerate(d2):
        s = 0 if abs(v) <= tol else (1 if v > 0 else -1)
        if s == 0:
            continue
        if runs and runs[-1][0] == s and runs[-1][2] == k - 1:
            sign, first, _, amp = runs[-1]
            runs[-1] = (sign, first, k, max(amp, abs(v)))
        else:
            runs.append((s, k, k, abs(v)))
    return runs


def _sign_changes(d2, tol, gate):
    """Transition index pairs between substantial opposite-sign lobes.

    Lobes whose amplitude stays below ``gate`` are treated as noise and
    dropped before looking for transitions; remaining same-sign neighbours
    merge.  Returns peak (+ to -) and valley (- to +) transition pairs.
    """
    runs = [r for r in _signed_runs(d2, tol) if r[3] >= gate]
    merged = []
    for run in runs:
        if merged and merged[-1][0] == run[0]:
            sign, first, _, amp = merged[-1]
            merged[-1] = (sign, first, run[2], max(amp, run[3]))
        else:
            merged.append(run)
    peaks, valleys = [], []
    for a, b in zip(merged, merged[1:]):
        pair = (a[2], b[1])
        if a[0] == 1:
            peaks.append(pair)
        else:
            valleys.append(pair)
    return peaks, valleys


def _merge_close(positions, min_gap):
    """Cluster sorted positions closer than min_gap into their means."""
    merged = []
    cluster = []
    for pos in positions:
        if cluster and pos - cluster[-1] < min_gap:
            cluster.append(pos)
        else:
            if cluster:
                merged.append(float(np.mean(cluster)))
            cluster = [pos]
    if cluster:
        merged.append(float(np.mean(cluster)))
    return merged


def detect_inflections(ts: TimeSeries, smooth_window: int = 7,
                       sign: str = "increasing") -> InflectionGuess:
    """Locate candidate peak and valley inflections of a cumulative series.

    The series is smoothed with a centered moving average, then curvature
    is probed with second differences taken at a lag of one smoothing
    window (wider stencils keep the sign of the curvature readable under
    noise).  A peak inflection is a + to - sign change of that curvature,
    a valley the reverse; changes closer than one window are merged.  A
    series without any sign change falls back to a single phase peaking at
    the domain midpoint.

    Pass ``sign="decreasing"`` for decaying series; the curvature roles
    flip, so detection runs on the negated values.
    """
    d = len(ts)
    if d < MIN_POINTS:
        raise DegenerateDataError(
            f"series too short for detection: {d} < {MIN_POINTS}")
    if smooth_window < 1 or smooth_window % 2 == 0:
        raise ValueError("smooth_window must be a positive odd integer")
    if smooth_window > d // 2:
        raise ValueError("smooth_window must be at most half the series")

    values = ts.r if sign_factor(sign) < 0 else -ts.r
    smoothed = moving_average(values, smooth_window)
    lag = min(max(2 * smooth_window, 1), (d - 1) // 2)
    core = slice(lag, d - lag)
    d2 = smoothed[2 * lag:] - 2.0 * smoothed[lag:-lag] + smoothed[:-2 * lag]
    xc = ts.x[core]

    # noise floor of the curvature statistic, estimated from the raw
    # one-step second differences (signal there is negligible by contrast)
    sigma_d2 = float(np.median(np.abs(np.diff(ts.r, 2)))) / 0.6745
    gate = 4.0 * sigma_d2 / math.sqrt(smooth_window)

    scale = np.max(np.abs(d2)) if d2.size else 0.0
    peaks_idx, valleys_idx = _sign_changes(d2, tol=1e-12 * scale, gate=gate)

    # index-space candidate positions, then cluster within one window
    peak_pos = [0.5 * (a + b) for a, b in peaks_idx]
    valley_pos = [0.5 * (a + b) for a, b in valleys_idx]
    peak_pos = _merge_close(peak_pos, float(smooth_window))
    valley_pos = _merge_close(valley_pos, float(smooth_window))

    def to_x(pos):
        lo = int(math.floor(pos))
        hi = min(lo + 1, xc.size - 1)
        return float(xc[lo] + (pos - lo) * (xc[hi] - xc[lo]))

    peaks = [to_x(p) for p in peak_pos]
    valleys = [to_x(p) for p in valley_pos]

    if not peaks:
        peaks = [0.5 * (ts.x[0] + ts.x[-1])]
    return InflectionGuess(n=len(peaks),
                           peak_locations=np.array(peaks),
                           valley_locations=np.array(valleys))


def uniform_guess(ts: TimeSeries, n: int) -> InflectionGuess:
    """Forced n-phase seed: peaks at the centers of n equal tiles."""
    if n < 1:
        raise ValueError("n must be at least 1")
    edges = np.linspace(ts.x[0], ts.x[-1], n + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return InflectionGuess(n=n, peak_locations=centers,
                           valley_locations=edges[1:-1].copy())


# ---------------------------------------------------------------------------
# constraint-enforcing parameter transform


def _softplus(t):
    return np.logaddexp(0.0, t)


def _softplus_inv(y):
    y = np.asarray(y, dtype=float)
    small = y < 1e-10
    safe = np.where(small, 1.0, y)
    out = safe + np.log1p(-np.exp(-safe))
    return np.where(small, np.log(np.maximum(y, 1e-300)), out)


def _expit(t):
    t = np.asarray(t, dtype=float)
    pos = t >= 0
    out = np.empty_like(t)
    out[pos] = 1.0 / (1.0 + np.exp(-t[pos]))
    ez = np.exp(t[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _logit(f):
    f = np.clip(f, 1e-12, 1.0 - 1e-12)
    return np.log(f / (1.0 - f))


_EXP_LIM = 80.0


def _bounded_exp(t):
    return np.exp(np.clip(t, -_EXP_LIM, _EXP_LIM))


class _ParamSpace:
    """Bijection between free coordinates and tiled n-phase models.

    Coordinate kinds per phase: lam (log), width (log), dfrac (logit of
    the peak's position inside its tile), dy (inverse softplus of the
    rise), base (log of base-1); global kinds: floor, anchor.  Frozen
    kinds keep the values of the model used to build the space.
    """

    _PER_PHASE = ("lam", "width", "dfrac", "dy", "base")
    _GLOBAL = ("floor", "anchor")

    def __init__(self, model: NlsigModel, options: FitOptions):
        self.n = model.n
        self.sign = model.sign
        self.options = options
        self.fixed = {}
        self.coords = []
        for kind in self._GLOBAL:
            if kind in options.frozen:
                self.fixed[(kind, 0)] = self._extract(model, kind, 0)
            else:
                self.coords.append((kind, 0))
        for kind in self._PER_PHASE:
            for i in range(self.n):
                if kind in options.frozen:
                    self.fixed[(kind, i)] = self._extract(model, kind, i)
                else:
                    self.coords.append((kind, i))

    @staticmethod
    def _extract(model, kind, i):
        p = model.partitions[i]
        if kind == "floor":
            return model.floor
        if kind == "anchor":
            return model.partitions[0].x_min
        if kind == "lam":
            return p.lam
        if kind == "width":
            return p.dx
        if kind == "dfrac":
            return (p.delta - p.x_min) / p.dx
        if kind == "dy":
            return p.dy
        if kind == "base":
            return p.base
        raise KeyError(kind)

    @property
    def size(self) -> int:
        return len(self.coords)

    def pack(self, model: NlsigModel) -> np.ndarray:
        """Free coordinates representing a tiled model."""
        theta = np.empty(self.size)
        for j, (kind, i) in enumerate(self.coords):
            raw = self._extract(model, kind, i)
            if kind in ("lam", "width"):
                theta[j] = math.log(raw)
            elif kind == "dfrac":
                theta[j] = float(_logit(raw))
            elif kind == "dy":
                theta[j] = float(_softplus_inv(raw))
            elif kind == "base":
                theta[j] = math.log(max(raw - 1.0, 1e-9))
            else:
                theta[j] = raw
        return theta

    def _values(self, theta):
        """Raw per-kind values given free coordinates plus frozen fills."""
        vals = {}
        for (kind, i), v in self.fixed.items():
            vals[(kind, i)] = v
        for j, (kind, i) in enumerate(self.coords):
            t = theta[j]
            if kind in ("lam", "width"):
                vals[(kind, i)] = float(_bounded_exp(t))
            elif kind == "dfrac":
                vals[(kind, i)] = float(_expit(np.asarray(t)))
            elif kind == "dy":
                vals[(kind, i)] = float(_softplus(t))
            elif kind == "base":
                vals[(kind, i)] = 1.0 + 1e-6 + float(_bounded_exp(t))
            else:
                vals[(kind, i)] = float(t)
        return vals

    def unpack(self, theta) -> NlsigModel:
        vals = self._values(theta)
        anchor = vals[("anchor", 0)]
        floor = vals[("floor", 0)]
        parts = []
        x_lo, level = anchor, floor
        for i in range(self.n):
            w = vals[("width", i)]
            dy = vals[("dy", i)]
            f = min(max(vals[("dfrac", i)], 1e-12), 1.0 - 1e-12)
            parts.append(Partition(
                x_min=x_lo, x_max=x_lo + w, delta=x_lo + f * w,
                y_min=level, y_max=level + dy,
                lam=vals[("lam", i)], base=vals[("base", i)]))
            x_lo += w
            level += dy
        return NlsigModel(tuple(parts), sign=self.sign)

    def curve_jacobian(self, theta, xs) -> np.ndarray:
        """d y(x_d) / d theta_j via the raw 7n-parameter Jacobian."""
        model = self.unpack(theta)
        obj = LsqObjective(x=xs, r=np.zeros_like(xs), model=model)
        j_raw = residual_jacobian(obj)
        vals = self._values(theta)
        transform = np.zeros((7 * self.n, self.size))
        for j, (kind, i) in enumerate(self.coords):
            if kind == "lam":
                transform[7 * i + 1, j] = vals[("lam", i)]
            elif kind == "width":
                w = vals[("width", i)]
                f_i = vals[("dfrac", i)]
                for k in range(i, self.n):
                    transform[7 * k + 2, j] = w            # x_max_k, k >= i
                for k in range(i + 1, self.n):
                    transform[7 * k + 3, j] = w            # x_min_k, k > i
                    transform[7 * k + 4, j] = w            # delta_k,  k > i
                transform[7 * i + 4, j] = f_i * w          # own delta
            elif kind == "dfrac":
                f_i = vals[("dfrac", i)]
                transform[7 * i + 4, j] = f_i * (1.0 - f_i) * vals[("width", i)]
            elif kind == "dy":
                slope = float(_expit(np.asarray(theta[j])))
                for k in range(i, self.n):
                    transform[7 * k + 5, j] = slope        # y_max_k, k >= i
                for k in range(i + 1, self.n):
                    transform[7 * k + 6, j] = slope        # y_min_k, k > i
            elif kind == "base":
                transform[7 * i + 0, j] = vals[("base", i)] - 1.0 - 1e-6
            elif kind == "floor":
                for k in range(self.n):
                    transform[7 * k + 5, j] = 1.0
                    transform[7 * k + 6, j] = 1.0
            elif kind == "anchor":
                for k in range(self.n):
                    transform[7 * k + 2, j] = 1.0
                    transform[7 * k + 3, j] = 1.0
                    transform[7 * k + 4, j] = 1.0
        return j_raw @ transform


# ---------------------------------------------------------------------------
# initial model construction


def _interval_knots(ts, guess):
    """n+1 strictly increasing tile edges separating the guessed peaks."""
    peaks = guess.peak_locations
    knots = [float(ts.x[0])]
    for i in range(guess.n - 1):
        lo, hi = peaks[i], peaks[i + 1]
        inside = [v for v in guess.valley_locations if lo < v < hi]
        knots.append(float(inside[0]) if inside else 0.5 * (lo + hi))
    knots.append(float(ts.x[-1]))
    return np.array(knots)


def _initial_model(ts, guess, options) -> NlsigModel:
    knots = _interval_knots(ts, guess)
    window = min(7, max(3, (len(ts) // 4) | 1))
    smoothed = moving_average(ts.r, window)
    levels = np.interp(knots, ts.x, smoothed)
    span = max(float(np.max(smoothed) - np.min(smoothed)), 1e-12)

    increasing = options.sign == "increasing"
    floor = levels[0] if increasing else levels[-1]
    rises = np.diff(levels) if increasing else -np.diff(levels)
    rises = np.maximum(rises, 0.02 * span)

    parts = []
    level = floor
    for i in range(guess.n):
        lo, hi = knots[i], knots[i + 1]
        width = hi - lo
        delta = min(max(guess.peak_locations[i], lo + 0.05 * width),
                    hi - 0.05 * width)
        parts.append(Partition(
            x_min=float(lo), x_max=float(hi), delta=float(delta),
            y_min=float(level), y_max=float(level + rises[i]),
            lam=options.lambda_init, base=options.base))
        level += rises[i]
    return NlsigModel(tuple(parts), sign=options.sign)


def _retile(model: NlsigModel) -> NlsigModel:
    """Equivalent-curve model whose sub-intervals tile the domain.

    The curve depends on the intervals only through alpha and delta, so
    re-cutting the tiles while rescaling lam preserves it exactly.  The y
    ranges are re-chained onto the global floor.
    """
    n = model.n
    deltas = [p.delta for p in model.partitions]
    knots = [model.partitions[0].x_min]
    for i in range(n - 1):
        knots.append(0.5 * (deltas[i] + deltas[i + 1]))
    knots.append(model.partitions[-1].x_max)
    if knots[0] >= deltas[0]:
        knots[0] = deltas[0] - max(model.partitions[0].dx, 1e-6)
    if knots[-1] <= deltas[-1]:
        knots[-1] = deltas[-1] + max(model.partitions[-1].dx, 1e-6)

    parts = []
    level = model.floor
    for i, p in enumerate(model.partitions):
        lo, hi = knots[i], knots[i + 1]
        lam = p.alpha * (hi - lo) / 2.0  # keep alpha fixed under the new tile
        parts.append(Partition(
            x_min=float(lo), x_max=float(hi), delta=p.delta,
            y_min=float(level), y_max=float(level + p.dy),
            lam=float(lam), base=p.base))
        level += p.dy
    return NlsigModel(tuple(parts), sign=model.sign)


def _is_tiled(model: NlsigModel) -> bool:
    pairs = zip(model.partitions, model.partitions[1:])
    chained_x = all(b.x_min == a.x_max for a, b in pairs)
    levels = model.chained_levels()
    chained_y = all(
        p.y_min == levels[i] and p.y_max == levels[i + 1]
        for i, p in enumerate(model.partitions))
    return chained_x and chained_y


# ---------------------------------------------------------------------------
# solver


def r_squared(residuals, r) -> float:
    """Coefficient of determination 1 - SS_res / SS_tot."""
    e = np.asarray(residuals, dtype=float)
    r = np.asarray(r, dtype=float)
    if e.shape != r.shape:
        raise ValueError("residuals and observations must match in length")
    ss_tot = float(np.sum((r - np.mean(r)) ** 2))
    if ss_tot <= 0.0:
        raise DegenerateDataError("constant series: R-squared is undefined")
    return 1.0 - float(np.sum(e ** 2)) / ss_tot


def _solve_damped(space, theta0, xs, r, options):
    """Levenberg-Marquardt loop; returns (theta, iterations, converged)."""
    theta = theta0.copy()
    model = space.unpack(theta)
    resid = r - model.value(xs)
    energy = 0.5 * float(resid @ resid)
    mu = options.damping_init
    converged = False
    iterations = 0

    for iterations in range(1, options.max_iterations + 1):
        jac = space.curve_jacobian(theta, xs)
        grad = jac.T @ resid
        hess = jac.T @ jac
        diag = np.maximum(np.diag(hess), 1e-12 * max(np.max(np.diag(hess)), 1e-300))

        accepted = False
        while mu < 1e15:
            try:
                step = np.linalg.solve(hess + mu * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                mu *= 10.0
                continue
            candidate = theta + step
            cand_model = space.unpack(candidate)
            cand_resid = r - cand_model.value(xs)
            cand_energy = 0.5 * float(cand_resid @ cand_resid)
            if math.isfinite(cand_energy) and cand_energy < energy:
                accepted = True
                break
            mu *= 10.0

        if not accepted:
            # damping exhausted without any descent: stationary point
            converged = True
            break

        theta, resid = candidate, cand_resid
        drop = energy - cand_energy
        energy = cand_energy
        mu = max(mu / 10.0, 1e-15)

        step_norm = float(np.linalg.norm(step))
        if step_norm < options.step_tolerance * (1.0 + float(np.linalg.norm(theta))):
            converged = True
            break
        if drop < options.objective_tolerance * max(energy, 1e-300):
            converged = True
            break

    return theta, iterations, converged


def _fit_from_model(ts, initial, options) -> FitResult:
    r = ts.r
    ss_tot = float(np.sum((r - np.mean(r)) ** 2))
    if ss_tot <= 0.0:
        raise DegenerateDataError("constant series cannot be fitted")

    # fit on a unit-span copy of the observations for balanced coordinates
    offset = float(np.min(r))
    span = float(np.max(r) - np.min(r))
    scaled = TimeSeries(x=ts.x, r=(r - offset) / span)
    init_scaled = _rescale_model(initial, 1.0 / span, -offset / span)

    if not _is_tiled(init_scaled):
        init_scaled = _retile(init_scaled)
    space = _ParamSpace(init_scaled, options)
    theta0 = space.pack(init_scaled)
    theta, iterations, converged = _solve_damped(
        space, theta0, scaled.x, scaled.r, options)

    model = _rescale_model(space.unpack(theta), span, offset)
    residuals = r - model.value(ts.x)
    return FitResult(model=model, residuals=residuals,
                     r_squared=r_squared(residuals, r),
                     converged=converged, iterations=iterations,
                     objective=0.5 * float(residuals @ residuals),
                     options=options)


def _rescale_model(model, scale, offset):
    """Affine change of the output axis: y -> scale * y + offset."""
    parts = tuple(replace(p, y_min=scale * p.y_min + offset,
                          y_max=scale * p.y_max + offset)
                  for p in model.partitions)
    return NlsigModel(parts, sign=model.sign)


def fit(ts: TimeSeries, guess: InflectionGuess,
        options: FitOptions | None = None) -> FitResult:
    """Fit an n-phase model seeded from detected inflections.

    Raises DegenerateDataError for constant or too-short series; an
    iteration-capped run returns the best model found with
    ``converged=False``.
    """
    options = options or FitOptions()
    if len(ts) < MIN_POINTS:
        raise DegenerateDataError(
            f"series too short to fit: {len(ts)} < {MIN_POINTS}")
    peaks = guess.peak_locations
    if peaks[0] < ts.x[0] or peaks[-1] > ts.x[-1]:
        raise ValueError("guessed peaks must lie within the observed range")
    initial = _initial_model(ts, guess, options)
    return _fit_from_model(ts, initial, options)


def refit(ts: TimeSeries, start: NlsigModel,
          options: FitOptions | None = None) -> FitResult:
    """Fit starting from an existing model instead of a detection seed."""
    options = options or FitOptions(sign=start.sign)
    if options.sign != start.sign:
        options = replace(options, sign=start.sign)
    if len(ts) < MIN_POINTS:
        raise DegenerateDataError(
            f"series too short to fit: {len(ts)} < {MIN_POINTS}")
    return _fit_from_model(ts, start, options)


# ---------------------------------------------------------------------------
# bootstrap


def model_params(model: NlsigModel) -> np.ndarray:
    """Parameter matrix (n, 7) in canonical order."""
    return np.array([[p.base, p.lam, p.x_max, p.x_min, p.delta,
                      p.y_max, p.y_min] for p in model.partitions])


def bootstrap(ts: TimeSeries, fitted: FitResult, B: int,
              seed: int) -> BootstrapResult:
    """Residual-resampling bootstrap around a fitted curve.

    Each replicate refits ``y_fit + resample(residuals)`` starting from
    the fitted model; the per-replicate random stream is derived from
    (seed, replicate index) so runs are reproducible bit for bit.  Aborts
    if more than 20% of replicates fail to refit.
    """
    if B < 2:
        raise ValueError("need at least two bootstrap replicates")
    if not fitted.converged:
        raise ValueError("bootstrap requires a converged fit")
    y_fit = fitted.model.value(ts.x)
    resid = fitted.residuals
    d = len(ts)

    replicates = []
    failures = 0
    for k in range(B):
        rng = np.random.default_rng([seed, k])
        sample = y_fit + resid[rng.integers(0, d, size=d)]
        try:
            result = refit(TimeSeries(x=ts.x, r=sample), fitted.model,
                           fitted.options)
        except (DegenerateDataError, ValueError):
            failures += 1
            continue
        if not np.all(np.isfinite(model_params(result.model))):
            failures += 1
            continue
        replicates.append(result.model)

    if failures > 0.2 * B:
        raise BootstrapError(
            f"{failures} of {B} bootstrap refits failed; the fit is likely "
            "unstable at this phase count")

    stacked = np.array([model_params(m) for m in replicates])
    ci_lower = np.percentile(stacked, 2.5, axis=0)
    ci_upper = np.percentile(stacked, 97.5, axis=0)
    return BootstrapResult(replicates=tuple(replicates), ci_lower=ci_lower,
                           ci_upper=ci_upper, seed=seed, failures=failures)
