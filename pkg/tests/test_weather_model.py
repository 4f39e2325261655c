"""Station CSV, unit conversion, record invariants, providers, alignment."""

import datetime as dt
import io
import json

import pytest

from etoforge.errors import (AuthError, CacheMiss, DuplicateDate,
                             MissingColumn, ProviderSchemaError, RangeError,
                             RateLimited, UnitError)
from etoforge.synthetic import (synthetic_forecasts, synthetic_site,
                                write_synthetic_cache)
from etoforge.weather import (AlignedPair, DailyObservation, ForecastCache,
                              ForecastRecord, SiteMetadata, WsSchema,
                              align_horizons, fetch_forecasts,
                              load_provider_mapping, load_ws_schema,
                              normalize_payload, parse_ws_csv,
                              records_from_jsonl, records_to_jsonl,
                              serialize_ws_csv, units, ws_schema_text)

D = dt.date


def _obs(day, **kw):
    base = dict(temp_max=25.0, temp_min=15.0, temp_avg=20.0, rh_max=90.0,
                rh_min=40.0, rh_avg=65.0, wind_avg=2.0, sr_avg=220.0,
                precip=0.0)
    base.update(kw)
    return DailyObservation(date=day, **base)


def _fc(day, horizon=0, provider="VC", **kw):
    base = dict(temp_max=25.0, temp_min=15.0, rh_avg=65.0, wind_avg=2.0)
    base.update(kw)
    return ForecastRecord(provider=provider, target_date=day,
                          issue_date=day - dt.timedelta(days=horizon), **base)


# --- record invariants ---------------------------------------------------------

def test_observation_temperature_ordering():
    with pytest.raises(RangeError):
        _obs(D(2022, 6, 1), temp_min=21.0, temp_avg=20.0)
    with pytest.raises(RangeError):
        _obs(D(2022, 6, 1), temp_avg=26.0)


def test_observation_humidity_bounds():
    with pytest.raises(RangeError):
        _obs(D(2022, 6, 1), rh_avg=120.0, rh_max=120.0)
    with pytest.raises(RangeError):
        _obs(D(2022, 6, 1), rh_min=70.0, rh_avg=65.0)


def test_observation_nonnegative_fields():
    with pytest.raises(RangeError):
        _obs(D(2022, 6, 1), wind_avg=-0.1)
    with pytest.raises(RangeError):
        _obs(D(2022, 6, 1), sr_avg=-5.0)
    with pytest.raises(RangeError):
        _obs(D(2022, 6, 1), precip=-1.0)


def test_forecast_horizon_derived_and_bounded():
    record = _fc(D(2022, 6, 10), horizon=3)
    assert record.horizon == 3
    with pytest.raises(RangeError):
        _fc(D(2022, 6, 10), horizon=16)
    with pytest.raises(RangeError):
        _fc(D(2022, 6, 10), horizon=-1)


def test_forecast_provider_enum():
    with pytest.raises(RangeError):
        _fc(D(2022, 6, 10), provider="NOAA")


def test_site_metadata_invariants():
    with pytest.raises(RangeError):
        SiteMetadata("x", latitude=95.0, longitude=0.0, elevation=0.0,
                     wind_sensor_height=2.0)
    with pytest.raises(RangeError):
        SiteMetadata("x", latitude=10.0, longitude=0.0, elevation=0.0,
                     wind_sensor_height=0.0)
    site = SiteMetadata("x", latitude=37.0, longitude=-8.0, elevation=10.0,
                        wind_sensor_height=2.0)
    assert site.solar_tz_offset_hours == pytest.approx(-8.0 / 15.0)


def test_aligned_pair_date_agreement():
    obs = _obs(D(2022, 6, 1))
    with pytest.raises(RangeError):
        AlignedPair(date=D(2022, 6, 2), observed=obs, forecast=_fc(D(2022, 6, 2)))


# --- units -----------------------------------------------------------------------

def test_canonical_units_are_identity():
    for field_name, quantity in units.FIELD_QUANTITY.items():
        canonical = units.CANONICAL[quantity]
        assert units.convert_field(field_name, 12.5, canonical) == 12.5


def test_common_conversions():
    assert units.convert("temp", 77.0, "degF") == 25.0
    assert units.convert("temp", 300.65, "K") == pytest.approx(27.5)
    assert units.convert("wind", 36.0, "km/h") == 10.0
    assert units.convert("rh", 0.55, "fraction") == pytest.approx(55.0)
    assert units.convert("precip", 1.0, "in") == 25.4
    assert units.convert("pressure", 1013.0, "hPa") == 101.3


def test_unknown_unit_rejected():
    with pytest.raises(UnitError):
        units.convert("temp", 1.0, "furlongs")
    with pytest.raises(UnitError):
        units.convert("wind", 1.0, "degC")


# --- station CSV -----------------------------------------------------------------

CUSTOM_HEADER = ("day,tmax,tmin,tavg,hmax,hmin,havg,wind,solar,rain\n")
CUSTOM_COLUMNS = {
    "date": "day", "temp_max": "tmax", "temp_min": "tmin", "temp_avg": "tavg",
    "rh_max": "hmax", "rh_min": "hmin", "rh_avg": "havg",
    "wind_avg": "wind", "sr_avg": "solar", "precip": "rain",
}
CUSTOM_UNITS = {
    "tmax": "degF", "tmin": "degF", "tavg": "degF",
    "hmax": "percent", "hmin": "percent", "havg": "percent",
    "wind": "km/h", "solar": "W/m2", "rain": "mm",
}


def test_parse_fahrenheit_row():
    csv_text = CUSTOM_HEADER + "2022-06-01,77.0,59.0,68.0,90,40,65,7.2,220,0\n"
    schema = WsSchema(units=CUSTOM_UNITS, columns=CUSTOM_COLUMNS)
    rows = parse_ws_csv(io.BytesIO(csv_text.encode()), schema)
    assert len(rows) == 1
    assert rows[0].temp_max == 25.0
    assert rows[0].temp_min == 15.0
    assert rows[0].wind_avg == 2.0


def test_parse_rh_out_of_range_reports_row():
    csv_text = CUSTOM_HEADER + "2022-06-01,77.0,59.0,68.0,90,40,120,7.2,220,0\n"
    schema = WsSchema(units=CUSTOM_UNITS, columns=CUSTOM_COLUMNS)
    with pytest.raises(RangeError) as err:
        parse_ws_csv(io.BytesIO(csv_text.encode()), schema)
    assert "row 1" in str(err.value)


def test_parse_two_year_synthetic_file(synth):
    _, observations, _ = synth
    text = serialize_ws_csv(observations)
    parsed = parse_ws_csv(io.BytesIO(text.encode()), WsSchema.canonical())
    assert len(parsed) == 730
    assert all(b.date > a.date for a, b in zip(parsed, parsed[1:]))


def test_round_trip_is_bit_exact(synth):
    _, observations, _ = synth
    sample = list(observations[:40])
    sample.append(_obs(observations[-1].date + dt.timedelta(days=1),
                       sr_max=None, pressure_avg=None))
    parsed = parse_ws_csv(io.BytesIO(serialize_ws_csv(sample).encode()),
                          WsSchema.canonical())
    assert parsed == sorted(sample, key=lambda o: o.date)


def test_missing_column():
    schema = WsSchema(units=CUSTOM_UNITS,
                      columns=dict(CUSTOM_COLUMNS, rh_avg="Hum"))
    csv_text = CUSTOM_HEADER + "2022-06-01,77,59,68,90,40,65,7.2,220,0\n"
    with pytest.raises(MissingColumn):
        parse_ws_csv(io.BytesIO(csv_text.encode()), schema)


def test_undeclared_and_unknown_units():
    no_unit = dict(CUSTOM_UNITS)
    del no_unit["wind"]
    csv_text = CUSTOM_HEADER + "2022-06-01,77,59,68,90,40,65,7.2,220,0\n"
    with pytest.raises(UnitError):
        parse_ws_csv(io.BytesIO(csv_text.encode()),
                     WsSchema(units=no_unit, columns=CUSTOM_COLUMNS))
    bad_unit = dict(CUSTOM_UNITS, wind="stadia")
    with pytest.raises(UnitError):
        parse_ws_csv(io.BytesIO(csv_text.encode()),
                     WsSchema(units=bad_unit, columns=CUSTOM_COLUMNS))


def test_duplicate_date_rejected():
    csv_text = (CUSTOM_HEADER
                + "2022-06-01,77,59,68,90,40,65,7.2,220,0\n"
                + "2022-06-01,78,60,69,90,40,65,7.2,220,0\n")
    with pytest.raises(DuplicateDate):
        parse_ws_csv(io.BytesIO(csv_text.encode()),
                     WsSchema(units=CUSTOM_UNITS, columns=CUSTOM_COLUMNS))


def test_rows_sorted_regardless_of_file_order():
    csv_text = (CUSTOM_HEADER
                + "2022-06-03,77,59,68,90,40,65,7.2,220,0\n"
                + "2022-06-01,77,59,68,90,40,65,7.2,220,0\n"
                + "2022-06-02,77,59,68,90,40,65,7.2,220,0\n")
    rows = parse_ws_csv(io.BytesIO(csv_text.encode()),
                        WsSchema(units=CUSTOM_UNITS, columns=CUSTOM_COLUMNS))
    assert [r.date.day for r in rows] == [1, 2, 3]


def test_sidecar_round_trip(tmp_path):
    path = tmp_path / "ws.schema"
    path.write_text(ws_schema_text())
    schema = load_ws_schema(path)
    assert schema.units == WsSchema.canonical().units


# --- alignment -------------------------------------------------------------------

def test_align_basic_coverage():
    days = [D(2022, 6, 1) + dt.timedelta(days=i) for i in range(10)]
    observations = [_obs(d) for d in days]
    forecasts = [_fc(d, horizon=3) for d in days[:7]]
    result = align_horizons(observations, forecasts, 3)
    assert result.matched == 7
    assert result.coverage == 0.7
    assert [p.date for p in result.pairs] == days[:7]


def test_align_disjoint_ranges():
    observations = [_obs(D(2022, 6, 1))]
    forecasts = [_fc(D(2023, 6, 1), horizon=2)]
    result = align_horizons(observations, forecasts, 2)
    assert result.pairs == [] and result.coverage == 0.0


def test_align_three_month_hole():
    # observations lose Jun-Aug; forecasts cover the whole year at d2
    all_days = [D(2022, 1, 1) + dt.timedelta(days=i) for i in range(365)]
    hole = {d for d in all_days if d.month in (6, 7, 8)}
    observations = [_obs(d) for d in all_days if d not in hole]
    forecasts = [_fc(d, horizon=2) for d in all_days]
    result = align_horizons(observations, forecasts, 2)
    assert result.matched == 365 - len(hole) == 273
    assert result.coverage == 1.0
    assert not any(p.date in hole for p in result.pairs)

    # mirrored: the forecast side has the hole instead
    flipped = align_horizons([_obs(d) for d in all_days],
                             [_fc(d, horizon=2) for d in all_days if d not in hole],
                             2)
    assert flipped.matched == 273
    assert flipped.coverage == pytest.approx(273 / 365)


def test_align_output_independent_of_input_order():
    days = [D(2022, 6, 1) + dt.timedelta(days=i) for i in range(8)]
    observations = [_obs(d) for d in days]
    forecasts = [_fc(d, horizon=1) for d in days]
    forward = align_horizons(observations, forecasts, 1)
    shuffled = align_horizons(list(reversed(observations)),
                              list(reversed(forecasts)), 1)
    assert forward == shuffled


def test_align_pairs_match_horizon_and_date():
    days = [D(2022, 6, 1) + dt.timedelta(days=i) for i in range(6)]
    observations = [_obs(d) for d in days]
    forecasts = [_fc(d, horizon=h) for d in days for h in (0, 2, 5)]
    result = align_horizons(observations, forecasts, 2)
    for pair in result.pairs:
        assert pair.forecast.horizon == 2
        assert pair.forecast.target_date == pair.date == pair.observed.date


def test_align_shares_no_records_between_horizons():
    days = [D(2022, 6, 1) + dt.timedelta(days=i) for i in range(6)]
    observations = [_obs(d) for d in days]
    forecasts = [_fc(d, horizon=h) for d in days for h in range(6)]
    at2 = {id(p.forecast) for p in align_horizons(observations, forecasts, 2).pairs}
    at5 = {id(p.forecast) for p in align_horizons(observations, forecasts, 5).pairs}
    assert at2 and at5 and not (at2 & at5)


def test_align_rejects_bad_horizon():
    with pytest.raises(RangeError):
        align_horizons([], [], 16)


# --- provider ingestion -------------------------------------------------------------

VC_BODY_ONE_DAY = json.dumps({
    "days": [{"datetime": "2022-06-01", "tempmax": 27.5, "tempmin": 16.0,
              "humidity": 58.0, "windspeed": 14.4, "precip": 0.0,
              "uvindex": 8}],
    "queryCost": 1,
})


def test_offline_single_payload_identity_replay(tmp_path):
    cache = ForecastCache(tmp_path)
    cache.write("VC", D(2022, 6, 1), VC_BODY_ONE_DAY)
    site = synthetic_site()
    records = fetch_forecasts("VC", site, (D(2022, 6, 1), D(2022, 6, 1)),
                              cache_dir=tmp_path, offline=True)
    assert len(records) == 1
    rec = records[0]
    assert rec.horizon == 0
    assert rec.temp_max == 27.5
    assert rec.wind_avg == pytest.approx(4.0)   # 14.4 km/h
    assert rec.extras["uvindex"] == 8


def test_offline_sixteen_horizons_for_one_date(tmp_path):
    site = synthetic_site()
    day = D(2022, 6, 16)
    observations = [_obs(day)]
    forecasts = synthetic_forecasts(observations, "VC", seed=5,
                                    noise_base=0.0, noise_slope=0.0)
    write_synthetic_cache(forecasts, tmp_path)
    records = fetch_forecasts("VC", site, (day, day),
                              cache_dir=tmp_path, offline=True)
    assert len(records) == 16
    assert sorted(r.horizon for r in records) == list(range(16))


def test_offline_empty_cache_raises(tmp_path):
    with pytest.raises(CacheMiss):
        fetch_forecasts("VC", synthetic_site(), (D(2022, 6, 1), D(2022, 6, 2)),
                        cache_dir=tmp_path, offline=True)


def test_online_requires_credentials(tmp_path, monkeypatch):
    monkeypatch.delenv("ETOFORGE_VC_API_KEY", raising=False)
    with pytest.raises(AuthError):
        fetch_forecasts("VC", synthetic_site(), (D(2022, 6, 1), D(2022, 6, 1)),
                        cache_dir=tmp_path, offline=False)


def test_online_invalid_key(tmp_path):
    def reject(url, params):
        return 401, {}, "unauthorized"

    with pytest.raises(AuthError):
        fetch_forecasts("VC", synthetic_site(), (D(2022, 6, 1), D(2022, 6, 1)),
                        credentials="bad-key", cache_dir=tmp_path,
                        offline=False, http_get=reject)


def test_online_rate_limited(tmp_path):
    def throttle(url, params):
        return 429, {"Retry-After": "30"}, ""

    with pytest.raises(RateLimited) as err:
        fetch_forecasts("OWM", synthetic_site(), (D(2022, 6, 1), D(2022, 6, 1)),
                        credentials="key", cache_dir=tmp_path,
                        offline=False, http_get=throttle)
    assert err.value.retry_after == 30.0


def test_online_caches_verbatim_before_normalizing(tmp_path):
    day = D(2022, 6, 1)
    seen = []

    def serve(url, params):
        seen.append(url)
        return 200, {}, VC_BODY_ONE_DAY

    records = fetch_forecasts("VC", synthetic_site(), (day, day),
                              credentials="key", cache_dir=tmp_path,
                              offline=False, http_get=serve)
    cache = ForecastCache(tmp_path)
    assert cache.read("VC", day) == VC_BODY_ONE_DAY
    assert len(seen) == 16   # one request per issue date in the window
    assert any(r.horizon == 0 for r in records)

    # replay: already-cached issue dates are not re-fetched
    seen.clear()
    fetch_forecasts("VC", synthetic_site(), (day, day), credentials="key",
                    cache_dir=tmp_path, offline=False, http_get=serve)
    assert seen == []


def test_malformed_entry_skipped_not_fatal(tmp_path, caplog):
    body = json.dumps({"days": [
        {"datetime": "2022-06-01", "tempmax": 27.5, "tempmin": 16.0,
         "humidity": 58.0, "windspeed": 14.4},
        {"datetime": "2022-06-02", "tempmin": 16.0, "humidity": 58.0,
         "windspeed": 14.4},
    ]})
    mapping = load_provider_mapping("VC")
    with caplog.at_level("WARNING"):
        records = normalize_payload(body, D(2022, 6, 1), mapping)
    assert [r.target_date for r in records] == [D(2022, 6, 1)]
    assert "skipping" in caplog.text


def test_owm_epoch_dates_respect_tz_offset():
    stamp = dt.datetime(2022, 6, 1, 23, 30, tzinfo=dt.timezone.utc).timestamp()
    body = json.dumps({"list": [{
        "dt": stamp, "temp": {"min": 16.0, "max": 27.0},
        "humidity": 60.0, "speed": 3.0, "rain": 0.0}]})
    mapping = load_provider_mapping("OWM")
    west = normalize_payload(body, D(2022, 6, 1), mapping, tz_offset_hours=-1.0)
    east = normalize_payload(body, D(2022, 6, 2), mapping, tz_offset_hours=2.0)
    assert west[0].target_date == D(2022, 6, 1)
    assert east[0].target_date == D(2022, 6, 2)


def test_mapping_format_version_checked(tmp_path):
    bad = tmp_path / "map.json"
    bad.write_text(json.dumps({"format_version": 99, "provider": "VC",
                               "list_path": "days",
                               "target_date": {"path": "datetime", "kind": "iso"},
                               "fields": {}}))
    with pytest.raises(ProviderSchemaError):
        load_provider_mapping("VC", path=bad)


def test_normalizing_canonical_record_changes_nothing():
    # canonical-unit payload fields survive normalization unchanged
    mapping = load_provider_mapping("OWM")   # OWM mapping is all-canonical units
    body = json.dumps({"list": [{
        "dt": dt.datetime(2022, 6, 3, 12, tzinfo=dt.timezone.utc).timestamp(),
        "temp": {"min": 16.25, "max": 27.125}, "humidity": 58.5,
        "speed": 3.75, "rain": 1.5}]})
    rec = normalize_payload(body, D(2022, 6, 1), mapping, tz_offset_hours=0.0)[0]
    assert (rec.temp_max, rec.temp_min, rec.rh_avg, rec.wind_avg, rec.precip) \
        == (27.125, 16.25, 58.5, 3.75, 1.5)


def test_jsonl_store_round_trip(synth):
    _, _, forecasts = synth
    sample = forecasts["VC"][:50] + forecasts["OWM"][:50]
    again = records_from_jsonl(records_to_jsonl(sample))
    assert sorted(again, key=lambda r: (r.provider, r.target_date, r.issue_date)) \
        == sorted(sample, key=lambda r: (r.provider, r.target_date, r.issue_date))


def test_cache_write_is_atomic_no_temp_left(tmp_path):
    cache = ForecastCache(tmp_path)
    cache.write("VC", D(2022, 6, 1), "{}")
    leftovers = [p for p in tmp_path.rglob("*.tmp")]
    assert leftovers == []
    assert cache.has("VC", D(2022, 6, 1))


def test_concurrent_fetch_matches_sequential(tmp_path):
    day = D(2022, 6, 1)

    def serve(url, params):
        return 200, {}, VC_BODY_ONE_DAY

    sequential = fetch_forecasts("VC", synthetic_site(), (day, day),
                                 credentials="key", cache_dir=tmp_path / "a",
                                 offline=False, http_get=serve, concurrency=1)
    threaded = fetch_forecasts("VC", synthetic_site(), (day, day),
                               credentials="key", cache_dir=tmp_path / "b",
                               offline=False, http_get=serve, concurrency=4)
    assert threaded == sequential
    assert ForecastCache(tmp_path / "b").has("VC", day - dt.timedelta(days=15))
