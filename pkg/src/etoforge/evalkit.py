"""Skill metrics, forecast-fidelity analysis, and the horizon sweep.

`metrics` computes the five regression measures (MAE, MAPE, MSE, RMSE,
R^2) exactly as defined, with correctly-rounded summation (math.fsum) so
results do not depend on sample order. The sweep machinery scores each
estimator against station-derived targets over forecast horizons d0..d15
per provider, the fidelity analysis scores the raw forecast features
themselves, and `usable_horizon` turns a quality threshold into the
largest horizon whose whole prefix satisfies it.

Negative R^2 values are reported as-is, never clipped. MAPE divides by
the actual value, so points with |actual| below a small epsilon (0.05
mm/day for ET, 1 W/m2 for SR) are excluded and counted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import pipelines
from .errors import (DegenerateActuals, EmptyInput, LengthMismatch,
                     MissingCells, NoModels, NonFinite, RangeError)
from .pipelines import ESTIMATORS, TARGET_ET0, TARGET_SR
from .weather.records import MAX_HORIZON, PROVIDERS, align_horizons

MAPE_EPSILON = {TARGET_ET0: 0.05, TARGET_SR: 1.0}
UNITS_NOTE = {TARGET_ET0: "mm/day", TARGET_SR: "W/m2"}

FIDELITY_FEATURES = ("TempMax", "TempMin", "HumidityAvg", "WindAvg",
                     "Precipitation")
_FEATURE_ATTR = {
    "TempMax": "temp_max",
    "TempMin": "temp_min",
    "HumidityAvg": "rh_avg",
    "WindAvg": "wind_avg",
    "Precipitation": "precip",
}


@dataclass(frozen=True)
class MetricReport:
    """The five measures over one (actual, predicted) series."""

    r2: float
    rmse: float
    mse: float
    mae: float
    mape: float          # percent; NaN when every point was epsilon-excluded
    n: int
    mape_excluded: int = 0
    units: str = ""

    def __post_init__(self):
        if self.n < 2:
            raise RangeError(f"n={self.n} < 2")
        if abs(self.rmse * self.rmse - self.mse) > 1e-12 * max(self.mse, 1e-300):
            raise RangeError("rmse^2 does not match mse")
        if self.mae > self.rmse * (1.0 + 1e-12):
            raise RangeError("mae exceeds rmse")
        if self.r2 > 1.0:
            raise RangeError(f"r2={self.r2} > 1")
        if not math.isnan(self.mape) and self.mape < 0.0:
            raise RangeError(f"mape={self.mape} < 0")


def metrics(actual, predicted, *, mape_epsilon: float = 1e-9,
            units: str = "") -> MetricReport:
    """Score a prediction series against the measured one.

    Raises LengthMismatch unless both series have the same length >= 2,
    NonFinite on NaN/inf inputs, and DegenerateActuals when the actual
    series has zero variance (R^2 undefined).
    """
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if a.shape != p.shape:
        raise LengthMismatch(f"actual has {a.shape[0]} points, predicted {p.shape[0]}")
    n = a.shape[0]
    if n < 2:
        raise LengthMismatch(f"need at least 2 points, got {n}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(p))):
        raise NonFinite("metrics inputs contain non-finite values")

    mean_a = math.fsum(a) / n
    sst = math.fsum((y - mean_a) ** 2 for y in a)
    if sst == 0.0:
        raise DegenerateActuals("actual series has zero variance; R^2 undefined")
    diffs = [y - yhat for y, yhat in zip(a, p)]
    sse = math.fsum(d * d for d in diffs)
    mae = math.fsum(abs(d) for d in diffs) / n
    mse = sse / n
    rmse = math.sqrt(mse)
    r2 = 1.0 - sse / sst

    included = [(y, d) for y, d in zip(a, diffs) if abs(y) >= mape_epsilon]
    excluded = n - len(included)
    if included:
        mape = math.fsum(abs(d) / abs(y) for y, d in included) / len(included) * 100.0
    else:
        mape = math.nan
    return MetricReport(r2=r2, rmse=rmse, mse=mse, mae=mae, mape=mape,
                        n=n, mape_excluded=excluded, units=units)


@dataclass(frozen=True)
class FidelityReport:
    """R^2 of the raw forecast features against the station measurements."""

    cells: dict            # (feature, provider, horizon) -> r2
    omissions: tuple = ()  # ((feature, provider, horizon), reason)


def compare_forecast_fidelity(observations, forecasts,
                              features=FIDELITY_FEATURES,
                              providers=None,
                              horizons=range(MAX_HORIZON + 1)) -> FidelityReport:
    """Score each forecast feature per provider per horizon.

    Cells that cannot be scored (no overlap, constant actuals, feature
    never supplied) are recorded as omissions instead of aborting the
    sweep. Negative R^2 values are kept.
    """
    if providers is None:
        providers = tuple(sorted({f.provider for f in forecasts})) or PROVIDERS
    cells = {}
    omissions = []
    by_provider = {p: [f for f in forecasts if f.provider == p] for p in providers}
    obs_by_date = {o.date: o for o in observations}
    for provider in providers:
        for horizon in horizons:
            aligned = align_horizons(observations, by_provider[provider], horizon)
            for feature in features:
                attr = _FEATURE_ATTR[feature]
                key = (feature, provider, horizon)
                series = [
                    (getattr(obs_by_date[pair.date], attr),
                     getattr(pair.forecast, attr))
                    for pair in aligned.pairs
                    if getattr(pair.forecast, attr) is not None
                ]
                try:
                    if len(series) < 2:
                        raise LengthMismatch(f"only {len(series)} usable pairs")
                    actual = [s[0] for s in series]
                    predicted = [s[1] for s in series]
                    cells[key] = metrics(actual, predicted).r2
                except (LengthMismatch, DegenerateActuals, NonFinite) as exc:
                    omissions.append((key, str(exc)))
    return FidelityReport(cells=cells, omissions=tuple(omissions))


@dataclass(frozen=True)
class ModelBundle:
    """The trained models the three estimators draw on."""

    et0_model: object = None
    sr_model: object = None

    def require(self, estimator: str):
        if estimator == "ET0_ANN":
            if self.et0_model is None:
                raise NoModels("ET0_ANN needs a trained ET0 model")
        elif estimator in ("SR_ANN", "ET0_HYB"):
            if self.sr_model is None:
                raise NoModels(f"{estimator} needs a trained SR model")
        else:
            raise RangeError(f"unknown estimator {estimator!r}")


@dataclass(frozen=True)
class HorizonSweep:
    """MetricReports per (horizon, provider, estimator), plus coverage."""

    cells: dict            # (horizon, provider, estimator) -> MetricReport
    coverage: dict         # (horizon, provider, estimator) -> matched/total
    omissions: tuple = ()
    metadata: dict = field(default_factory=dict)

    def horizons(self, provider: str, estimator: str):
        return sorted(h for (h, p, e) in self.cells
                      if p == provider and e == estimator)


def _cell_series(models: ModelBundle, pairs, site, estimator, humidity_mode,
                 forecast_wind_height):
    """Aligned (dates, actual, predicted) lists for one estimator."""
    usable = [p for p in pairs
              if p.forecast.rh_avg is not None and p.forecast.wind_avg is not None]
    dates = [p.date for p in usable]
    obs = [p.observed for p in usable]
    if estimator == "SR_ANN":
        actual = list(pipelines.build_sr_target(obs).values)
    else:
        actual = list(pipelines.build_et0_target(obs, site, humidity_mode).values)
    model = models.et0_model if estimator == "ET0_ANN" else models.sr_model
    predicted = []
    for pair in usable:
        fv = pipelines.make_features(pair.forecast, site, model.feature_names)
        if estimator == "ET0_ANN":
            predicted.append(pipelines.et0_ann_predict(models.et0_model, fv).value)
        elif estimator == "SR_ANN":
            predicted.append(pipelines.sr_ann_predict(models.sr_model, fv).value)
        else:
            predicted.append(pipelines.et0_hybrid_predict(
                models.sr_model, fv, pair.forecast, site,
                wind_height=forecast_wind_height).value)
    return dates, actual, predicted


def horizon_sweep(models: ModelBundle, observations, forecasts, site,
                  horizons=range(MAX_HORIZON + 1), providers=PROVIDERS,
                  estimators=ESTIMATORS, humidity_mode: str = "extremes",
                  forecast_wind_height: float | None = None) -> HorizonSweep:
    """Score every estimator over every (horizon, provider) cell.

    Inference only: models are read, never retrained. Cells with fewer
    than two matched dates, or that fail metric preconditions, are left
    out and listed in `omissions` with the reason; the sweep itself never
    aborts on a cell.
    """
    for estimator in estimators:
        models.require(estimator)
    cells, coverage, omissions = {}, {}, []
    by_provider = {p: [f for f in forecasts if f.provider == p] for p in providers}
    wind_note = (pipelines.DEFAULT_FORECAST_WIND_HEIGHT
                 if forecast_wind_height is None else forecast_wind_height)
    for provider in providers:
        for horizon in horizons:
            aligned = align_horizons(observations, by_provider[provider], horizon)
            for estimator in estimators:
                key = (horizon, provider, estimator)
                kind = TARGET_SR if estimator == "SR_ANN" else TARGET_ET0
                try:
                    if aligned.matched < 2:
                        raise LengthMismatch(
                            f"only {aligned.matched} matched dates")
                    dates, actual, predicted = _cell_series(
                        models, aligned.pairs, site, estimator,
                        humidity_mode, forecast_wind_height)
                    cells[key] = metrics(
                        actual, predicted,
                        mape_epsilon=MAPE_EPSILON[kind], units=UNITS_NOTE[kind])
                    coverage[key] = aligned.coverage
                except (LengthMismatch, DegenerateActuals, NonFinite,
                        RangeError) as exc:
                    omissions.append((key, str(exc)))
    return HorizonSweep(
        cells=cells, coverage=coverage, omissions=tuple(omissions),
        metadata={
            "humidity_mode": humidity_mode,
            "forecast_wind_height_m": wind_note,
            "metric_pooling": "all matched dates pooled across years",
        })


def usable_horizon(sweep: HorizonSweep, estimator: str, provider: str,
                   criterion) -> int:
    """Largest horizon h whose entire prefix d0..dh satisfies `criterion`.

    `criterion` is ("r2", tau) for R^2 >= tau or ("mape", tau) for
    MAPE <= tau. Returns -1 when d0 already fails. The skill curves are
    not monotone near the tail, so this is deliberately a prefix claim:
    one bad horizon caps everything after it.
    """
    name, tau = criterion
    if name not in ("r2", "mape"):
        raise RangeError(f"criterion must be ('r2', tau) or ('mape', tau), got {name!r}")
    hs = sweep.horizons(provider, estimator)
    if not hs or hs != list(range(hs[-1] + 1)):
        raise MissingCells(
            f"sweep lacks contiguous horizons from d0 for {provider}/{estimator}: {hs}")
    usable = -1
    for h in hs:
        report = sweep.cells[(h, provider, estimator)]
        value = report.r2 if name == "r2" else report.mape
        ok = value >= tau if name == "r2" else value <= tau
        if not ok:
            break
        usable = h
    return usable


def error_distribution(models: ModelBundle, observations, forecasts, site,
                       horizons=range(MAX_HORIZON + 1), providers=PROVIDERS,
                       estimators=ESTIMATORS, humidity_mode: str = "extremes",
                       forecast_wind_height: float | None = None) -> dict:
    """Raw per-day absolute errors for external distribution plotting.

    Returns (horizon, provider, estimator) -> list of (date, |error|),
    with no binning or density estimation; cells that cannot be evaluated
    are simply absent, mirroring the sweep's omission policy.
    """
    for estimator in estimators:
        models.require(estimator)
    out = {}
    by_provider = {p: [f for f in forecasts if f.provider == p] for p in providers}
    for provider in providers:
        for horizon in horizons:
            aligned = align_horizons(observations, by_provider[provider], horizon)
            for estimator in estimators:
                try:
                    dates, actual, predicted = _cell_series(
                        models, aligned.pairs, site, estimator,
                        humidity_mode, forecast_wind_height)
                    out[(horizon, provider, estimator)] = [
                        (d, abs(y - yhat))
                        for d, y, yhat in zip(dates, actual, predicted)
                    ]
                except (LengthMismatch, DegenerateActuals, NonFinite,
                        RangeError):
                    continue
    return out


# --- report emission --------------------------------------------------------

def _float_cell(x: float) -> str:
    return repr(float(x))


def _sweep_csv(sweep: HorizonSweep) -> str:
    lines = ["horizon,provider,estimator,n,coverage,r2,rmse,mse,mae,mape,mape_excluded"]
    for key in sorted(sweep.cells):
        h, p, e = key
        r = sweep.cells[key]
        cov = sweep.coverage.get(key, 0.0)
        lines.append(",".join([
            str(h), p, e, str(r.n), _float_cell(cov), _float_cell(r.r2),
            _float_cell(r.rmse), _float_cell(r.mse), _float_cell(r.mae),
            _float_cell(r.mape), str(r.mape_excluded)]))
    return "\n".join(lines) + "\n"


def _fidelity_csv(report: FidelityReport) -> str:
    lines = ["feature,provider,horizon,r2"]
    order = {f: i for i, f in enumerate(FIDELITY_FEATURES)}
    for key in sorted(report.cells, key=lambda k: (order.get(k[0], 99), k[1], k[2])):
        feature, provider, horizon = key
        lines.append(f"{feature},{provider},{horizon},{_float_cell(report.cells[key])}")
    return "\n".join(lines) + "\n"


def _distribution_csv(dist: dict) -> str:
    lines = ["horizon,provider,estimator,date,abs_error"]
    for key in sorted(dist):
        h, p, e = key
        for day, err in dist[key]:
            lines.append(f"{h},{p},{e},{day.isoformat()},{_float_cell(err)}")
    return "\n".join(lines) + "\n"


def _sweep_json(sweep: HorizonSweep) -> str:
    doc = {
        "type": "horizon_sweep",
        "metadata": sweep.metadata,
        "omissions": [
            {"horizon": k[0], "provider": k[1], "estimator": k[2], "reason": r}
            for k, r in sweep.omissions],
        "cells": [
            {
                "horizon": key[0], "provider": key[1], "estimator": key[2],
                "n": r.n, "coverage": sweep.coverage.get(key, 0.0),
                "r2": r.r2, "rmse": r.rmse, "mse": r.mse, "mae": r.mae,
                "mape": None if math.isnan(r.mape) else r.mape,
                "mape_excluded": r.mape_excluded, "units": r.units,
            }
            for key, r in sorted(sweep.cells.items())
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def sweep_from_json(text: str) -> HorizonSweep:
    """Parse a sweep document emitted by emit_report(..., 'json')."""
    doc = json.loads(text)
    if doc.get("type") != "horizon_sweep":
        raise RangeError(f"not a horizon_sweep document: {doc.get('type')!r}")
    cells, coverage = {}, {}
    for c in doc["cells"]:
        key = (c["horizon"], c["provider"], c["estimator"])
        mape = math.nan if c["mape"] is None else c["mape"]
        cells[key] = MetricReport(r2=c["r2"], rmse=c["rmse"], mse=c["mse"],
                                  mae=c["mae"], mape=mape, n=c["n"],
                                  mape_excluded=c["mape_excluded"],
                                  units=c["units"])
        coverage[key] = c["coverage"]
    omissions = tuple(
        ((o["horizon"], o["provider"], o["estimator"]), o["reason"])
        for o in doc.get("omissions", []))
    return HorizonSweep(cells=cells, coverage=coverage, omissions=omissions,
                        metadata=doc.get("metadata", {}))


def _fidelity_json(report: FidelityReport) -> str:
    doc = {
        "type": "forecast_fidelity",
        "omissions": [
            {"feature": k[0], "provider": k[1], "horizon": k[2], "reason": r}
            for k, r in report.omissions],
        "cells": [
            {"feature": k[0], "provider": k[1], "horizon": k[2], "r2": v}
            for k, v in sorted(
                report.cells.items(),
                key=lambda kv: (FIDELITY_FEATURES.index(kv[0][0])
                                if kv[0][0] in FIDELITY_FEATURES else 99,
                                kv[0][1], kv[0][2]))
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _distribution_json(dist: dict) -> str:
    doc = {
        "type": "error_distribution",
        "cells": [
            {
                "horizon": k[0], "provider": k[1], "estimator": k[2],
                "errors": [{"date": d.isoformat(), "abs_error": e}
                           for d, e in dist[k]],
            }
            for k in sorted(dist)
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit_report(report, fmt: str = "csv") -> str:
    """Render a sweep, fidelity report, or error distribution as csv/json.

    Output is byte-stable for identical input: rows are emitted in sorted
    key order and floats with full round-trip precision.
    """
    if fmt not in ("csv", "json"):
        raise RangeError(f"unknown format {fmt!r}")
    if isinstance(report, HorizonSweep):
        if not report.cells:
            raise EmptyInput("sweep has no cells")
        return _sweep_csv(report) if fmt == "csv" else _sweep_json(report)
    if isinstance(report, FidelityReport):
        if not report.cells:
            raise EmptyInput("fidelity report has no cells")
        return _fidelity_csv(report) if fmt == "csv" else _fidelity_json(report)
    if isinstance(report, dict):
        if not report:
            raise EmptyInput("error distribution is empty")
        return _distribution_csv(report) if fmt == "csv" else _distribution_json(report)
    raise RangeError(f"cannot emit a report for {type(report).__name__}")
