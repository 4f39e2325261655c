"""The two estimation workflows and their shared feature/target plumbing.

Direct route: a neural model maps a reduced forecastable feature set
straight to reference ET. Hybrid route: a neural model estimates solar
radiation from the same features, and the physics module turns that
estimate plus the raw temperature/humidity/wind into reference ET.

The feature set is fixed and ordered: the four forecast-friendly weather
parameters (max/min temperature, mean humidity, mean wind at source
height), a cyclic day-of-year encoding, and the top-of-atmosphere
radiation for the site/date. Wind stays at its source measurement height
in features; only the physics path normalizes it to 2 m.
"""

from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import fao56
from .errors import DomainError, FeatureMismatch, MissingField, RangeError
from .regressor import MlpModel, forward
from .weather.records import DailyObservation, ForecastRecord, SiteMetadata

FEATURE_NAMES = ("temp_max", "temp_min", "rh_avg", "wind_avg",
                 "doy_sin", "doy_cos", "ra")
ESTIMATORS = ("ET0_ANN", "ET0_HYB", "SR_ANN")
TARGET_ET0 = "ET0"
TARGET_SR = "SR"

# assumed measurement height for provider wind fields, configurable per call
DEFAULT_FORECAST_WIND_HEIGHT = 10.0

DOY_PERIOD = 365.25


@dataclass(frozen=True)
class FeatureVector:
    """One ordered row of model inputs, tagged with its origin."""

    date: dt.date
    values: tuple
    names: tuple = FEATURE_NAMES
    source: str = "WS"            # WS | VC | OWM
    horizon: int | None = None    # set when forecast-sourced

    def __post_init__(self):
        if len(self.values) != len(self.names):
            raise FeatureMismatch(
                f"{len(self.values)} values for {len(self.names)} names")
        if not all(math.isfinite(v) for v in self.values):
            raise RangeError(f"non-finite feature values on {self.date}")

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=np.float64)


@dataclass(frozen=True)
class TargetSeries:
    """Per-day training targets: reference ET in mm/day or SR in W/m2."""

    dates: tuple
    values: np.ndarray
    kind: str  # TARGET_ET0 | TARGET_SR

    def __post_init__(self):
        if self.kind not in (TARGET_ET0, TARGET_SR):
            raise RangeError(f"unknown target kind {self.kind!r}")
        if len(self.dates) != len(self.values):
            raise RangeError("dates and values lengths differ")
        if len(self.values) and float(np.min(self.values)) < 0.0:
            raise RangeError(f"negative {self.kind} target value")


class Prediction(NamedTuple):
    """A non-negative estimate plus whether the zero clamp fired."""

    value: float
    clamped: bool


def make_features(record, site: SiteMetadata, names=FEATURE_NAMES) -> FeatureVector:
    """Build the fixed-order feature row for one observation or forecast.

    `names` may select a subset of the canonical features (order is
    taken from `names` and must match between training and inference).
    Raises MissingField naming the first absent required field. The
    calendar features use a 365.25-day period, so Dec 31 and Jan 1 land
    next to each other on the cycle.
    """
    if isinstance(record, DailyObservation):
        source, horizon, day = "WS", None, record.date
    elif isinstance(record, ForecastRecord):
        source, horizon, day = record.provider, record.horizon, record.target_date
    else:
        raise FeatureMismatch(f"unsupported record type {type(record).__name__}")
    names = tuple(names)
    unknown = [n for n in names if n not in FEATURE_NAMES]
    if unknown:
        raise FeatureMismatch(f"unknown feature name(s) {unknown}")
    for name in ("temp_max", "temp_min", "rh_avg", "wind_avg"):
        if name in names and getattr(record, name, None) is None:
            raise MissingField(name)
    doy = day.timetuple().tm_yday
    angle = 2.0 * math.pi * doy / DOY_PERIOD
    full = {
        "temp_max": record.temp_max,
        "temp_min": record.temp_min,
        "rh_avg": record.rh_avg,
        "wind_avg": record.wind_avg,
        "doy_sin": math.sin(angle),
        "doy_cos": math.cos(angle),
        "ra": fao56.extraterrestrial_radiation(site.latitude_rad, doy),
    }
    return FeatureVector(date=day, values=tuple(full[n] for n in names),
                         names=names, source=source, horizon=horizon)


def feature_matrix(records, site: SiteMetadata, names=FEATURE_NAMES):
    """Feature rows for many records: (matrix, dates) in input order."""
    fvs = [make_features(r, site, names) for r in records]
    if not fvs:
        return np.zeros((0, len(tuple(names)))), []
    return np.stack([fv.as_array() for fv in fvs]), [fv.date for fv in fvs]


def _et0_for_day(*, temp_max, temp_min, sr_wm2, wind, wind_height, site, date,
                 humidity_mode, rh_max=None, rh_min=None, rh_avg=None) -> fao56.Et0Result:
    """The one physics path every ET target/estimate goes through."""
    inputs = fao56.Et0Inputs(
        temp_max=temp_max,
        temp_min=temp_min,
        wind_2m=fao56.wind_to_2m(wind, wind_height),
        solar_rad=fao56.sr_wm2_to_mj(sr_wm2),
        latitude=site.latitude_rad,
        elevation=site.elevation,
        day_of_year=date.timetuple().tm_yday,
        humidity_mode=humidity_mode,
        rh_max=rh_max,
        rh_min=rh_min,
        rh_avg=rh_avg,
    )
    return fao56.et0_fao56pm(inputs)


def build_et0_target(observations, site: SiteMetadata,
                     humidity_mode: str = "extremes") -> TargetSeries:
    """Per-day reference ET computed from station data (the training truth).

    Wind is normalized from the site sensor height; solar radiation is
    the daily-mean flux converted to MJ. humidity_mode picks between the
    rh-extremes form (default, stations report extremes) and the
    mean-humidity form used on forecast-driven paths.
    """
    dates, values = [], []
    for obs in sorted(observations, key=lambda o: o.date):
        try:
            result = _et0_for_day(
                temp_max=obs.temp_max, temp_min=obs.temp_min,
                sr_wm2=obs.sr_avg, wind=obs.wind_avg,
                wind_height=site.wind_sensor_height, site=site, date=obs.date,
                humidity_mode=humidity_mode,
                rh_max=obs.rh_max, rh_min=obs.rh_min, rh_avg=obs.rh_avg)
        except (DomainError, RangeError) as exc:
            raise type(exc)(f"{obs.date}: {exc}") from exc
        dates.append(obs.date)
        values.append(result.et0)
    return TargetSeries(dates=tuple(dates),
                        values=np.asarray(values, dtype=np.float64),
                        kind=TARGET_ET0)


def build_sr_target(observations) -> TargetSeries:
    """Daily-mean solar radiation, straight from the station record."""
    ordered = sorted(observations, key=lambda o: o.date)
    for obs in ordered:
        if obs.sr_avg is None:
            raise MissingField("sr_avg")
    return TargetSeries(
        dates=tuple(o.date for o in ordered),
        values=np.asarray([o.sr_avg for o in ordered], dtype=np.float64),
        kind=TARGET_SR)


def _check_model(model: MlpModel, fv: FeatureVector, target: str):
    if model.target_name != target:
        raise FeatureMismatch(
            f"model targets {model.target_name!r}, expected {target!r}")
    if tuple(model.feature_names) != tuple(fv.names):
        raise FeatureMismatch(
            f"model features {model.feature_names} do not match "
            f"input features {fv.names}")


def et0_ann_predict(model: MlpModel, fv: FeatureVector) -> Prediction:
    """Direct neural reference-ET estimate [mm/day], clamped at zero."""
    _check_model(model, fv, TARGET_ET0)
    raw = forward(model, fv.as_array())
    return Prediction(value=max(raw, 0.0), clamped=raw < 0.0)


def sr_ann_predict(model: MlpModel, fv: FeatureVector) -> Prediction:
    """Neural solar-radiation estimate [W/m2], clamped at zero."""
    _check_model(model, fv, TARGET_SR)
    raw = forward(model, fv.as_array())
    return Prediction(value=max(raw, 0.0), clamped=raw < 0.0)


def et0_from_sr(sr_wm2: float, raw_weather, site: SiteMetadata,
                wind_height: float | None = None) -> Prediction:
    """Physics half of the hybrid route: given SR, run the ET equation.

    `raw_weather` supplies temperature, mean humidity and wind (an
    observation or a forecast record). Wind height defaults to the site
    sensor height for observations and to the provider assumption for
    forecasts. Exposing this step separately lets a perfect SR value be
    substituted for the model output, which must reproduce the ET target
    exactly.
    """
    for name in ("temp_max", "temp_min", "rh_avg", "wind_avg"):
        if getattr(raw_weather, name, None) is None:
            raise MissingField(name)
    if wind_height is None:
        if isinstance(raw_weather, ForecastRecord):
            wind_height = DEFAULT_FORECAST_WIND_HEIGHT
        else:
            wind_height = site.wind_sensor_height
    date = (raw_weather.target_date if isinstance(raw_weather, ForecastRecord)
            else raw_weather.date)
    result = _et0_for_day(
        temp_max=raw_weather.temp_max, temp_min=raw_weather.temp_min,
        sr_wm2=sr_wm2, wind=raw_weather.wind_avg, wind_height=wind_height,
        site=site, date=date, humidity_mode="average",
        rh_avg=raw_weather.rh_avg)
    return Prediction(value=result.et0, clamped=result.clamped)


def et0_hybrid_predict(sr_model: MlpModel, fv: FeatureVector, raw_weather,
                       site: SiteMetadata,
                       wind_height: float | None = None) -> Prediction:
    """Hybrid reference-ET estimate: neural SR feeding the physics chain."""
    sr = sr_ann_predict(sr_model, fv)
    out = et0_from_sr(sr.value, raw_weather, site, wind_height=wind_height)
    return Prediction(value=out.value, clamped=sr.clamped or out.clamped)


class PredictionRow(NamedTuple):
    date: dt.date
    source: str
    horizon: int | None
    estimator: str
    prediction: Prediction


def predictions_csv(rows) -> str:
    """Render prediction rows as the documented CSV."""
    lines = ["date,source,horizon,estimator,value,clamped"]
    for r in rows:
        horizon = "" if r.horizon is None else str(r.horizon)
        lines.append(f"{r.date.isoformat()},{r.source},{horizon},"
                     f"{r.estimator},{r.prediction.value!r},"
                     f"{int(r.prediction.clamped)}")
    return "\n".join(lines) + "\n"
