"""Daily grass-reference evapotranspiration physics.

Implements the standard daily combination-equation chain for a clipped
grass reference surface (0.12 m, albedo 0.23): vapour-pressure relations,
top-of-atmosphere and net radiation, logarithmic wind-profile adjustment
to 2 m, the reference-ET equation itself, and crop scaling.

Units are fixed throughout: temperatures degC, humidity percent (0-100),
pressure kPa, wind m/s, radiation MJ m-2 day-1 (use :func:`sr_wm2_to_mj`
to convert daily-mean W/m2), latitude radians, ET mm/day.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError, RangeError

SOLAR_CONSTANT = 0.0820        # MJ m-2 min-1
STEFAN_BOLTZMANN = 4.903e-9    # MJ K-4 m-2 day-1
ALBEDO = 0.23
KELVIN_OFFSET = 273.16         # for the longwave T^4 terms
WM2_TO_MJ = 0.0864             # 86400 s/day * 1e-6 MJ/J

HUMIDITY_MODES = ("extremes", "average")


def saturation_vapor_pressure(t: float) -> float:
    """Saturation vapour pressure e0(t) in kPa at air temperature t [degC].

    Strictly increasing; defined for t > -237.3 (the formula's pole).
    """
    if t <= -237.3:
        raise DomainError(f"saturation vapour pressure undefined at t={t} degC")
    return 0.6108 * math.exp(17.27 * t / (t + 237.3))


def svp_slope(t: float) -> float:
    """Slope of the saturation vapour-pressure curve [kPa/degC] at t.

    Analytic derivative of :func:`saturation_vapor_pressure`.
    """
    if t <= -237.3:
        raise DomainError(f"vapour-pressure slope undefined at t={t} degC")
    return 4098.0 * saturation_vapor_pressure(t) / (t + 237.3) ** 2


def atmospheric_pressure(elevation: float) -> float:
    """Standard-atmosphere pressure [kPa] at elevation [m above sea level]."""
    if elevation >= 45000.0:
        raise DomainError(f"pressure formula invalid at elevation={elevation} m")
    return 101.3 * ((293.0 - 0.0065 * elevation) / 293.0) ** 5.26


def psychrometric_constant(pressure: float) -> float:
    """Psychrometric constant [kPa/degC] from atmospheric pressure [kPa]."""
    if pressure <= 0.0:
        raise DomainError("pressure must be positive")
    return 0.665e-3 * pressure


def _check_rh(name: str, value: float) -> None:
    if not 0.0 <= value <= 100.0:
        raise RangeError(f"{name}={value} outside [0, 100] %")


def actual_vapor_pressure(
    temp_max: float,
    temp_min: float,
    *,
    rh_max: float | None = None,
    rh_min: float | None = None,
    rh_avg: float | None = None,
    mode: str = "extremes",
) -> float:
    """Actual vapour pressure e_a [kPa] from relative humidity.

    Two modes: "extremes" combines rh_max/rh_min with the saturation
    pressures at the opposite temperature extremes; "average" uses the
    mean humidity against the mean saturation pressure (the only option
    when a source reports a single daily humidity value).
    """
    es_tmax = saturation_vapor_pressure(temp_max)
    es_tmin = saturation_vapor_pressure(temp_min)
    if mode == "extremes":
        if rh_max is None or rh_min is None:
            raise RangeError("extremes mode needs rh_max and rh_min")
        _check_rh("rh_max", rh_max)
        _check_rh("rh_min", rh_min)
        return (es_tmin * rh_max / 100.0 + es_tmax * rh_min / 100.0) / 2.0
    if mode == "average":
        if rh_avg is None:
            raise RangeError("average mode needs rh_avg")
        _check_rh("rh_avg", rh_avg)
        return rh_avg / 100.0 * (es_tmax + es_tmin) / 2.0
    raise RangeError(f"unknown humidity mode: {mode!r}")


def extraterrestrial_radiation(latitude: float, day_of_year: int) -> float:
    """Top-of-atmosphere radiation R_a [MJ m-2 day-1].

    latitude is in radians. The sunset-hour-angle cosine is clamped to
    [-1, 1] so polar night yields exactly zero and midnight sun a full
    rotation, instead of a math-domain failure.
    """
    if not 1 <= day_of_year <= 366:
        raise RangeError(f"day_of_year={day_of_year} outside 1..366")
    if abs(latitude) > math.pi / 2:
        raise RangeError(f"latitude={latitude} rad outside +/- pi/2")
    b = 2.0 * math.pi * day_of_year / 365.0
    inv_distance = 1.0 + 0.033 * math.cos(b)
    declination = 0.409 * math.sin(b - 1.39)
    cos_ws = min(1.0, max(-1.0, -math.tan(latitude) * math.tan(declination)))
    sunset_angle = math.acos(cos_ws)
    ra = (24.0 * 60.0 / math.pi) * SOLAR_CONSTANT * inv_distance * (
        sunset_angle * math.sin(latitude) * math.sin(declination)
        + math.cos(latitude) * math.cos(declination) * math.sin(sunset_angle)
    )
    return max(ra, 0.0)


def clear_sky_radiation(ra: float, elevation: float) -> float:
    """Clear-sky shortwave radiation R_so [MJ m-2 day-1]."""
    return (0.75 + 2e-5 * elevation) * ra


@dataclass(frozen=True)
class NetRadiation:
    rn: float
    rns: float
    rnl: float
    rso: float


def net_radiation(
    solar_rad: float,
    ra: float,
    ea: float,
    temp_max: float,
    temp_min: float,
    elevation: float,
) -> NetRadiation:
    """Net radiation R_n = R_ns - R_nl at the grass reference surface.

    Shortwave uses the fixed 0.23 albedo. Longwave uses the Stefan-
    Boltzmann form with the relative-shortwave ratio R_s/R_so capped at
    1.0 (lower side left free). With zero R_a and zero measured shortwave
    (polar night) the ratio defaults to 1; zero R_a with positive
    shortwave is physically inconsistent and raises DomainError.
    """
    if ra < 0.0 or solar_rad < 0.0:
        raise RangeError("radiation inputs must be non-negative")
    rso = clear_sky_radiation(ra, elevation)
    rns = (1.0 - ALBEDO) * solar_rad
    if rso <= 0.0:
        if solar_rad > 0.0:
            raise DomainError("measured shortwave with zero extraterrestrial radiation")
        ratio = 1.0
    else:
        ratio = min(solar_rad / rso, 1.0)
    tk4 = ((temp_max + KELVIN_OFFSET) ** 4 + (temp_min + KELVIN_OFFSET) ** 4) / 2.0
    rnl = STEFAN_BOLTZMANN * tk4 * (0.34 - 0.14 * math.sqrt(ea)) * (1.35 * ratio - 0.35)
    return NetRadiation(rn=rns - rnl, rns=rns, rnl=rnl, rso=rso)


def wind_to_2m(u: float, height: float) -> float:
    """Wind speed at 2 m from a measurement at `height` m (log profile)."""
    if u < 0.0:
        raise RangeError(f"wind speed u={u} must be non-negative")
    if 67.8 * height - 5.42 <= 1.0:
        raise DomainError(f"wind profile undefined at measurement height {height} m")
    return u * 4.87 / math.log(67.8 * height - 5.42)


@dataclass(frozen=True)
class Et0Inputs:
    """One day of inputs for the reference-ET equation.

    Humidity is interpreted per `humidity_mode`: "extremes" requires
    rh_max/rh_min, "average" requires rh_avg. solar_rad is the measured
    (or estimated) daily shortwave in MJ m-2 day-1; wind is already at 2 m.
    """

    temp_max: float
    temp_min: float
    wind_2m: float
    solar_rad: float
    latitude: float
    elevation: float
    day_of_year: int
    humidity_mode: str = "extremes"
    rh_max: float | None = None
    rh_min: float | None = None
    rh_avg: float | None = None

    def __post_init__(self):
        if self.temp_min > self.temp_max:
            raise RangeError(f"temp_min={self.temp_min} > temp_max={self.temp_max}")
        if self.wind_2m < 0.0:
            raise RangeError("wind_2m must be non-negative")
        if self.solar_rad < 0.0:
            raise RangeError("solar_rad must be non-negative")
        if not 1 <= self.day_of_year <= 366:
            raise RangeError(f"day_of_year={self.day_of_year} outside 1..366")
        if abs(self.latitude) > math.pi / 2:
            raise RangeError("latitude must be in radians within +/- pi/2")
        if self.humidity_mode not in HUMIDITY_MODES:
            raise RangeError(f"unknown humidity mode: {self.humidity_mode!r}")
        if self.humidity_mode == "extremes":
            if self.rh_max is None or self.rh_min is None:
                raise RangeError("extremes mode needs rh_max and rh_min")
            _check_rh("rh_max", self.rh_max)
            _check_rh("rh_min", self.rh_min)
            if self.rh_min > self.rh_max:
                raise RangeError(f"rh_min={self.rh_min} > rh_max={self.rh_max}")
        else:
            if self.rh_avg is None:
                raise RangeError("average mode needs rh_avg")
            _check_rh("rh_avg", self.rh_avg)


@dataclass(frozen=True)
class Et0Result:
    """Reference ET plus every intermediate for audit.

    `et0` is clamped at zero; `intermediates` carries the raw value under
    "et0_raw" and a "clamped" flag (0/1) alongside delta, gamma, es, ea,
    pressure, ra, rso, rns, rnl and rn.
    """

    et0: float
    humidity_mode: str
    intermediates: dict = field(default_factory=dict)

    @property
    def clamped(self) -> bool:
        return self.intermediates.get("clamped", 0.0) == 1.0


def et0_fao56pm(inputs: Et0Inputs) -> Et0Result:
    """Daily reference evapotranspiration [mm/day] for the grass surface.

    Soil heat flux is taken as zero (daily time step); the mean
    temperature is the extremes' midpoint; saturation pressure is the
    mean of the values at the extremes. Negative raw results are clamped
    to zero and flagged.
    """
    t_mean = (inputs.temp_max + inputs.temp_min) / 2.0
    delta = svp_slope(t_mean)
    pressure = atmospheric_pressure(inputs.elevation)
    gamma = psychrometric_constant(pressure)
    es = (saturation_vapor_pressure(inputs.temp_max)
          + saturation_vapor_pressure(inputs.temp_min)) / 2.0
    ea = actual_vapor_pressure(
        inputs.temp_max,
        inputs.temp_min,
        rh_max=inputs.rh_max,
        rh_min=inputs.rh_min,
        rh_avg=inputs.rh_avg,
        mode=inputs.humidity_mode,
    )
    ra = extraterrestrial_radiation(inputs.latitude, inputs.day_of_year)
    rad = net_radiation(inputs.solar_rad, ra, ea,
                        inputs.temp_max, inputs.temp_min, inputs.elevation)

    numerator = (
        0.408 * delta * rad.rn
        + gamma * (900.0 / (t_mean + 273.0)) * inputs.wind_2m * (es - ea)
    )
    denominator = delta + gamma * (1.0 + 0.34 * inputs.wind_2m)
    et0_raw = numerator / denominator
    et0 = max(et0_raw, 0.0)

    intermediates = {
        "delta": delta,
        "gamma": gamma,
        "pressure": pressure,
        "es": es,
        "ea": ea,
        "ra": ra,
        "rso": rad.rso,
        "rns": rad.rns,
        "rnl": rad.rnl,
        "rn": rad.rn,
        "et0_raw": et0_raw,
        "clamped": 1.0 if et0_raw < 0.0 else 0.0,
    }
    for name, value in intermediates.items():
        if not math.isfinite(value):
            raise DomainError(f"non-finite intermediate {name}={value}")
    return Et0Result(et0=et0, humidity_mode=inputs.humidity_mode,
                     intermediates=intermediates)


def crop_et(et0: float, kc: float) -> float:
    """Crop evapotranspiration: the reference value scaled by a crop coefficient."""
    if kc < 0.0:
        raise RangeError(f"crop coefficient kc={kc} must be non-negative")
    return et0 * kc


def sr_wm2_to_mj(sr_avg: float) -> float:
    """Convert a daily-mean shortwave flux [W/m2] to MJ m-2 day-1."""
    if sr_avg < 0.0:
        raise RangeError(f"solar radiation {sr_avg} W/m2 must be non-negative")
    return sr_avg * WM2_TO_MJ
