"""Command-line front end: CSV in, JSON fit report and plot data out.

Two input schemas are supported.  ``who_daily`` expects the public daily
COVID surveillance layout (Date_reported, Country_code, Country,
New_cases, Cumulative_cases, New_deaths, Cumulative_deaths); one country
and one series (infections or deaths) are selected and dates become day
indices counted from the first nonzero observation.  ``generic_xy`` reads
two named numeric columns.

The ``fit`` subcommand runs detection, the solver, the bootstrap, and the
growth-state metrics, then writes ``report.json`` (stable key order, full
provenance) and ``plot_data.csv`` (fitted curve, daily increments, and
the bootstrap confidence band on the observation grid).  Identical
invocations with the same seed produce byte-identical outputs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 fit failure.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .fit import (
    BootstrapError,
    DegenerateDataError,
    FitOptions,
    TimeSeries,
    bootstrap,
    detect_inflections,
    fit,
    uniform_guess,
)
from .metrics import build_report, states_in_interval

__all__ = ["IngestConfig", "ingest", "emit_generic", "run_fit", "main"]

WHO_COLUMNS = ("Date_reported", "Country_code", "Country",
               "New_cases", "Cumulative_cases", "New_deaths",
               "Cumulative_deaths")

_SERIES_COLUMN = {"infections": "Cumulative_cases",
                  "deaths": "Cumulative_deaths"}

_REPORT_PARAM_KEYS = ("base", "lambda", "x_max", "x_min", "delta",
                      "y_max", "y_min")


class DataError(ValueError):
    """Input file cannot be read or selects no usable series."""


@dataclass(frozen=True)
class IngestConfig:
    """Where and how to read one cumulative series."""

    path: str
    format: str = "generic_xy"
    country: str | None = None
    series: str = "infections"
    x_column: str = "x"
    y_column: str = "y"
    origin: str | None = None
    label: str | None = None

    def display_label(self) -> str:
        if self.label:
            return self.label
        if self.format == "who_daily":
            return f"{self.country} {self.series}"
        return Path(self.path).stem


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if reader.fieldnames is None:
                raise DataError(f"{path}: empty file, expected a CSV header")
            return reader.fieldnames, list(reader)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _ingest_generic(cfg) -> TimeSeries:
    fields, rows = _read_rows(cfg.path)
    for col in (cfg.x_column, cfg.y_column):
        if col not in fields:
            raise DataError(
                f"{cfg.path}: missing column {col!r} (found {fields})")
    try:
        x = np.array([float(row[cfg.x_column]) for row in rows])
        r = np.array([float(row[cfg.y_column]) for row in rows])
    except (TypeError, ValueError) as exc:
        raise DataError(f"{cfg.path}: non-numeric cell: {exc}") from exc
    try:
        return TimeSeries(x=x, r=r)
    except ValueError as exc:
        raise DataError(f"{cfg.path}: {exc}") from exc


def _parse_date(text, path):
    try:
        return datetime.date.fromisoformat(text.strip())
    except ValueError as exc:
        raise DataError(f"{path}: bad date {text!r}: {exc}") from exc


def _ingest_who(cfg) -> TimeSeries:
    if not cfg.country:
        raise DataError("who_daily format needs a country code")
    if cfg.series not in _SERIES_COLUMN:
        raise DataError(f"series must be one of {sorted(_SERIES_COLUMN)}")
    value_col = _SERIES_COLUMN[cfg.series]
    fields, rows = _read_rows(cfg.path)
    for col in ("Date_reported", "Country_code", value_col):
        if col not in fields:
            raise DataError(f"{cfg.path}: missing column {col!r}")

    selected = [row for row in rows
                if row["Country_code"].strip() == cfg.country]
    if not selected:
        raise DataError(
            f"{cfg.path}: no rows for country code {cfg.country!r}")

    dates = [_parse_date(row["Date_reported"], cfg.path) for row in selected]
    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise DataError(f"{cfg.path}: dates for {cfg.country} not "
                        "strictly increasing")
    try:
        values = np.array([float(row[value_col]) for row in selected])
    except (TypeError, ValueError) as exc:
        raise DataError(f"{cfg.path}: non-numeric cell: {exc}") from exc

    drops = int(np.sum(np.diff(values) < 0))
    if drops:
        sys.stderr.write(
            f"warning: {drops} decreasing cumulative value(s) for "
            f"{cfg.country} {cfg.series}; kept as observed\n")

    if cfg.origin is not None:
        origin = _parse_date(cfg.origin, cfg.path)
    else:
        nonzero = np.nonzero(values > 0)[0]
        if nonzero.size == 0:
            raise DataError(
                f"{cfg.path}: series for {cfg.country} is all zeros")
        origin = dates[int(nonzero[0])]

    keep = [(d, v) for d, v in zip(dates, values) if d >= origin]
    if not keep:
        raise DataError(f"{cfg.path}: no observations on or after {origin}")
    x = np.array([float((d - origin).days) for d, _ in keep])
    r = np.array([v for _, v in keep])
    try:
        return TimeSeries(x=x, r=r)
    except ValueError as exc:
        raise DataError(f"{cfg.path}: {exc}") from exc


def ingest(cfg: IngestConfig) -> TimeSeries:
    """Read one cumulative series according to the config."""
    if cfg.format == "generic_xy":
        return _ingest_generic(cfg)
    if cfg.format == "who_daily":
        return _ingest_who(cfg)
    raise DataError(f"unknown format {cfg.format!r}")


def emit_generic(ts: TimeSeries, path, x_column="x", y_column="y"):
    """Write a series as generic CSV; ingest reads it back identically."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow([x_column, y_column])
        for xv, rv in zip(ts.x, ts.r):
            writer.writerow([repr(float(xv)), repr(float(rv))])


# ---------------------------------------------------------------------------
# report assembly


def _file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _ci_entry(value, lower, upper):
    return {"value": float(value), "ci": [float(lower), float(upper)]}


_YIR_PHRASES = {
    "increasing": "the numbers are still increasing",
    "peaking": "the numbers are peaking",
    "reducing": "the numbers are now decreasing",
}
_XIR_PHRASES = {
    "pre_peak": "a pre-peak period",
    "peak": "a peak period",
    "post_peak": "a post-peak period",
    "indeterminate": "indeterminate",
}


def _narrative(report, yir_states, xir_states):
    yir_text = _YIR_PHRASES[report.yir_state]
    extra = [s for s in yir_states if s != report.yir_state]
    if extra:
        yir_text += " but could also read as " + \
            " or ".join(_YIR_PHRASES[s] for s in extra)
    xir_text = "this time is most likely " + _XIR_PHRASES[report.xir_state]
    extra = [s for s in xir_states if s != report.xir_state]
    if extra:
        xir_text += " but could also be " + \
            " or ".join(_XIR_PHRASES[s] for s in extra)
    return f"{yir_text}; {xir_text}."


def _build_document(label, ts, result, boot, report, seed, digest):
    from .metrics import XIR_PEAK_BAND, YIR_PEAK_BAND

    model = result.model
    partitions = []
    for i, p in enumerate(model.partitions):
        values = (p.base, p.lam, p.x_max, p.x_min, p.delta, p.y_max, p.y_min)
        block = {"index": i + 1}
        for key, value, lo, hi in zip(_REPORT_PARAM_KEYS, values,
                                      boot.ci_lower[i], boot.ci_upper[i]):
            block[key] = _ci_entry(value, lo, hi)
        partitions.append(block)

    yir_states = states_in_interval(report.yir_ci, YIR_PEAK_BAND, "yir")
    xir_states = states_in_interval(report.xir_ci, XIR_PEAK_BAND, "xir")
    return {
        "locale": label,
        "fit": {
            "n": model.n,
            "sign": model.sign,
            "converged": bool(result.converged),
            "iterations": int(result.iterations),
            "r_squared": float(result.r_squared),
            "objective": float(result.objective),
            "observations": int(len(ts)),
            "partitions": partitions,
        },
        "metrics": {
            "x": float(ts.x[-1]),
            "partition_index": int(report.partition_index),
            "yir": {
                "value": float(report.yir),
                "ci": [float(report.yir_ci[0]), float(report.yir_ci[1])],
                "state": report.yir_state,
                "states_in_ci": list(yir_states),
            },
            "xir": {
                "value": float(report.xir),
                "ci": [float(report.xir_ci[0]), float(report.xir_ci[1])],
                "state": report.xir_state,
                "states_in_ci": list(xir_states),
            },
            "narrative": _narrative(report, yir_states, xir_states),
        },
        "bootstrap": {
            "replicates": len(boot.replicates),
            "failures": int(boot.failures),
            "seed": int(boot.seed),
        },
        "provenance": {
            "input_sha256": digest,
            "seed": int(seed),
            "tool_version": __version__,
        },
    }


def _write_plot_data(path, ts, result, boot):
    curves = np.array([m.value(ts.x) for m in boot.replicates])
    lower = np.percentile(curves, 2.5, axis=0)
    upper = np.percentile(curves, 97.5, axis=0)
    y_fit = result.model.value(ts.x)
    g_fit = result.model.derivative(ts.x)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["x", "y_fit", "g_fit",
                         "y_ci_lower", "y_ci_upper", "r_observed"])
        for k in range(len(ts)):
            writer.writerow([repr(float(v)) for v in (
                ts.x[k], y_fit[k], g_fit[k], lower[k], upper[k], ts.r[k])])


def run_fit(cfg: IngestConfig, out_dir, n="auto", replicates=200, seed=0,
            options: FitOptions | None = None):
    """Ingest, fit, bootstrap, and write report.json plus plot_data.csv.

    Returns the report document (the same object serialized to JSON).
    """
    options = options or FitOptions()
    ts = ingest(cfg)
    if n == "auto":
        guess = detect_inflections(ts, smooth_window=_auto_window(len(ts)))
    else:
        forced = int(n)
        detected = detect_inflections(ts, smooth_window=_auto_window(len(ts)))
        guess = detected if detected.n == forced else uniform_guess(ts, forced)
    result = fit(ts, guess, options)
    boot = bootstrap(ts, result, B=replicates, seed=seed)
    report = build_report(result.model, float(ts.x[-1]), boot)

    document = _build_document(cfg.display_label(), ts, result, boot, report,
                               seed, _file_digest(cfg.path))
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.json"
    with open(report_path, "w", encoding="utf-8") as handle:
        json.dump(document, handle, indent=2)
        handle.write("\n")
    _write_plot_data(out / "plot_data.csv", ts, result, boot)
    return document


def _auto_window(points: int) -> int:
    """Default smoothing window: 7 when the series allows, else smaller."""
    return min(7, max(1, (points // 2) | 1))


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser():
    parser = _Parser(prog="nlsig",
                     description="Fit multi-phase logistic growth curves "
                                 "to cumulative time series.")
    sub = parser.add_subparsers(dest="command", required=True)
    fit_cmd = sub.add_parser("fit", help="fit one series and write reports")
    fit_cmd.add_argument("--input", required=True, help="input CSV path")
    fit_cmd.add_argument("--format", choices=("who_daily", "generic_xy"),
                         default="generic_xy")
    fit_cmd.add_argument("--country", help="country code (who_daily)")
    fit_cmd.add_argument("--series", choices=("infections", "deaths"),
                         default="infections")
    fit_cmd.add_argument("--x-column", default="x",
                         help="x column name (generic_xy)")
    fit_cmd.add_argument("--y-column", default="y",
                         help="y column name (generic_xy)")
    fit_cmd.add_argument("--label", help="label used in the report")
    fit_cmd.add_argument("--n", default="auto",
                         help="phase count: auto or a positive integer")
    fit_cmd.add_argument("--bootstrap", type=int, default=200, metavar="B",
                         help="bootstrap replicates (default 200)")
    fit_cmd.add_argument("--seed", type=int, default=0)
    fit_cmd.add_argument("--out", required=True, help="output directory")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.n != "auto":
        try:
            if int(args.n) < 1:
                raise ValueError
        except ValueError:
            sys.stderr.write(f"nlsig: error: --n must be 'auto' or a "
                             f"positive integer, got {args.n!r}\n")
            return 1
    if args.format == "who_daily" and not args.country:
        sys.stderr.write("nlsig: error: --country is required with "
                         "--format who_daily\n")
        return 1

    cfg = IngestConfig(path=args.input, format=args.format,
                       country=args.country, series=args.series,
                       x_column=args.x_column, y_column=args.y_column,
                       label=args.label)
    try:
        document = run_fit(cfg, out_dir=args.out, n=args.n,
                           replicates=args.bootstrap, seed=args.seed)
    except (DataError, DegenerateDataError) as exc:
        sys.stderr.write(f"nlsig: data error: {exc}\n")
        return 2
    except (BootstrapError, ValueError, np.linalg.LinAlgError) as exc:
        sys.stderr.write(f"nlsig: fit failed: {exc}\n")
        return 3

    summary = document["metrics"]
    print(f"{document['locale']}: n={document['fit']['n']} "
          f"R2={document['fit']['r_squared']:.6f} "
          f"YIR={summary['yir']['value']:.4f} "
          f"XIR={summary['xir']['value']:.4f}")
    print(f"report written to {Path(args.out) / 'report.json'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
