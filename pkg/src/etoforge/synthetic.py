"""Seeded synthetic site data for experiments and the test bench.

Generates a plausible coastal mid-latitude climate: seasonal sinusoids
for temperature, humidity and wind with daily weather noise, solar
radiation as a clearness fraction of the top-of-atmosphere radiation
tied to humidity (so radiation is largely learnable from the forecast
feature set, with a small irreducible component), and winter-weighted
rain. Synthetic "providers" echo the observations with Gaussian noise
whose standard deviation grows linearly in the forecast horizon, which
is the degradation shape the evaluation machinery is meant to expose.

Everything is driven by numpy Generators seeded per call: the same
arguments always produce the same dataset.
"""

from __future__ import annotations

import datetime as dt
import math

import numpy as np

from . import fao56
from .weather.records import (MAX_HORIZON, DailyObservation, ForecastRecord,
                              SiteMetadata)

DOY_PERIOD = 365.25


def synthetic_site() -> SiteMetadata:
    """A south-facing coastal site with a 2 m anemometer."""
    return SiteMetadata(site_id="synthetic-coastal", latitude=37.1,
                        longitude=-8.0, elevation=25.0, wind_sensor_height=2.0)


def _season(doy: float, peak_doy: float) -> float:
    """Cosine that peaks at `peak_doy` (1 at peak, -1 half a year away)."""
    return math.cos(2.0 * math.pi * (doy - peak_doy) / DOY_PERIOD)


def synthetic_observations(site: SiteMetadata,
                           start: dt.date = dt.date(2020, 1, 1),
                           n_days: int = 730,
                           seed: int = 11) -> list:
    """`n_days` of daily station records starting at `start`."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_days):
        day = start + dt.timedelta(days=i)
        doy = day.timetuple().tm_yday

        t_mean = 17.0 + 7.0 * _season(doy, 196) + rng.normal(0.0, 1.5)
        half_range = 3.5 + 0.8 * abs(rng.normal(0.0, 1.0))
        temp_max = t_mean + half_range
        temp_min = t_mean - half_range

        rh_avg = 62.0 + 14.0 * _season(doy, 15) + rng.normal(0.0, 6.0)
        rh_avg = min(max(rh_avg, 15.0), 96.0)
        rh_max = min(rh_avg + 12.0 + abs(rng.normal(0.0, 4.0)), 100.0)
        rh_min = max(rh_avg - 16.0 - abs(rng.normal(0.0, 4.0)), 2.0)

        wind = 1.6 + 0.5 * _season(doy, 60) + abs(rng.normal(0.0, 0.8))

        ra = fao56.extraterrestrial_radiation(site.latitude_rad, doy)
        clearness = 0.76 - 0.0042 * (rh_avg - 45.0) + rng.normal(0.0, 0.012)
        clearness = min(max(clearness, 0.20), 0.80)
        sr_avg = clearness * ra / fao56.WM2_TO_MJ

        rain_p = min(max(0.06 + 0.0045 * (rh_avg - 48.0), 0.02), 0.45)
        precip = float(rng.exponential(6.0)) if rng.random() < rain_p else 0.0

        out.append(DailyObservation(
            date=day,
            temp_max=temp_max, temp_min=temp_min, temp_avg=t_mean,
            rh_max=rh_max, rh_min=rh_min, rh_avg=rh_avg,
            wind_avg=wind, sr_avg=sr_avg,
            sr_max=sr_avg * 2.6, pressure_avg=101.2 + rng.normal(0.0, 0.3),
            precip=precip))
    return out


# per-field noise std at unit scale; the horizon multiplies these
_FIELD_SIGMA = {"temp": 0.9, "rh": 4.5, "wind": 0.5, "precip": 1.2}


def synthetic_forecasts(observations, provider: str, seed: int = 23,
                        horizons=range(MAX_HORIZON + 1),
                        noise_base: float = 0.25,
                        noise_slope: float = 0.55) -> list:
    """Forecast records echoing `observations` with horizon-scaled noise.

    The noise multiplier for horizon h is ``noise_base + noise_slope*h``;
    zero base and slope yield a perfect provider whose records equal the
    observations at every horizon.
    """
    rng = np.random.default_rng(seed)
    records = []
    for obs in observations:
        for h in horizons:
            scale = noise_base + noise_slope * h
            tmax = obs.temp_max + rng.normal(0.0, _FIELD_SIGMA["temp"]) * scale
            tmin = obs.temp_min + rng.normal(0.0, _FIELD_SIGMA["temp"]) * scale
            if tmin > tmax:
                tmin, tmax = tmax, tmin
            rh = obs.rh_avg + rng.normal(0.0, _FIELD_SIGMA["rh"]) * scale
            rh = min(max(rh, 0.0), 100.0)
            wind = max(obs.wind_avg + rng.normal(0.0, _FIELD_SIGMA["wind"]) * scale, 0.0)
            precip = max(obs.precip + rng.normal(0.0, _FIELD_SIGMA["precip"]) * scale, 0.0)
            records.append(ForecastRecord(
                provider=provider,
                target_date=obs.date,
                issue_date=obs.date - dt.timedelta(days=h),
                temp_max=tmax, temp_min=tmin,
                rh_avg=rh, wind_avg=wind, precip=precip))
    return records


def write_synthetic_cache(forecasts, cache_dir) -> int:
    """Render forecast records as provider-native cached payloads.

    Produces the same files a live fetch would have cached (VC timeline
    days with km/h wind, OWM daily list with epoch stamps), so offline
    ingest exercises the full mapping/normalization path. Returns the
    number of payload files written.
    """
    import json

    from .weather.providers import ForecastCache

    cache = ForecastCache(cache_dir)
    by_issue = {}
    for rec in forecasts:
        by_issue.setdefault((rec.provider, rec.issue_date), []).append(rec)
    for (provider, issued), records in sorted(by_issue.items()):
        records.sort(key=lambda r: r.target_date)
        if provider == "VC":
            days = [{
                "datetime": r.target_date.isoformat(),
                "tempmax": r.temp_max,
                "tempmin": r.temp_min,
                "humidity": r.rh_avg,
                "windspeed": None if r.wind_avg is None else r.wind_avg * 3.6,
                "precip": r.precip,
                "conditions": "synthetic",
            } for r in records]
            body = json.dumps({"days": days, "source": "synthetic"}, sort_keys=True)
        else:
            entries = [{
                "dt": int(dt.datetime(r.target_date.year, r.target_date.month,
                                      r.target_date.day, 12,
                                      tzinfo=dt.timezone.utc).timestamp()),
                "temp": {"min": r.temp_min, "max": r.temp_max},
                "humidity": r.rh_avg,
                "speed": r.wind_avg,
                "rain": r.precip,
                "weather": [{"main": "synthetic"}],
            } for r in records]
            body = json.dumps({"list": entries, "cnt": len(entries)}, sort_keys=True)
        cache.write(provider, issued, body)
    return len(by_issue)


def synthetic_dataset(seed: int = 11, n_days: int = 730):
    """Site, observations, and both providers' forecasts in one call.

    The second provider gets slightly gentler noise growth, mirroring how
    two real services track each other closely but not identically.
    """
    site = synthetic_site()
    observations = synthetic_observations(site, n_days=n_days, seed=seed)
    forecasts = {
        "VC": synthetic_forecasts(observations, "VC", seed=seed + 1000),
        "OWM": synthetic_forecasts(observations, "OWM", seed=seed + 2000,
                                   noise_slope=0.50),
    }
    return site, observations, forecasts
