"""Command-line orchestration: ingest, train, predict, evaluate, fao56.

Usage revolves around a key=value config file (see README) with flag
overrides; flags always win. Every command writes its artifacts under
the configured output directory and refreshes a manifest of file hashes
there, so identical inputs plus an identical seed give byte-identical
outputs. Exit codes: 0 success, 2 usage/config error, 3 data/runtime
error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import evalkit, fao56, pipelines, regressor
from .config import ConfigError, build_config
from .errors import EtoforgeError, MissingCells
from .weather import (WsSchema, fetch_forecasts, load_ws_schema,
                      parse_ws_csv, records_from_jsonl, records_to_jsonl,
                      serialize_ws_csv, ws_schema_text)

OBS_STORE = "observations.csv"
OBS_SCHEMA = "observations.schema"
FORECAST_STORE = "forecasts.jsonl"
MODEL_FILES = {"ET0": "model_et0.json", "SR": "model_sr.json"}


def _write(out_dir: Path, name: str, text: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8")
    print(f"wrote {path}")
    return path


def _write_manifest(out_dir: Path, seed: int) -> None:
    files = {}
    for path in sorted(out_dir.rglob("*")):
        if path.is_file() and path.name != "manifest.json":
            digest = hashlib.sha256(path.read_bytes()).hexdigest()
            files[str(path.relative_to(out_dir))] = digest
    doc = {"seed": seed, "files": files}
    (out_dir / "manifest.json").write_text(
        json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_observations(cfg):
    store = cfg.out_dir / OBS_STORE
    if not store.is_file():
        raise ConfigError(f"no ingested observations at {store}; run `ingest ws` first")
    schema = load_ws_schema(cfg.out_dir / OBS_SCHEMA) \
        if (cfg.out_dir / OBS_SCHEMA).is_file() else None
    return parse_ws_csv(store, schema or WsSchema.canonical())


def _load_forecasts(cfg):
    store = cfg.out_dir / FORECAST_STORE
    if not store.is_file():
        raise ConfigError(f"no ingested forecasts at {store}; run `ingest forecast` first")
    return records_from_jsonl(store.read_text(encoding="utf-8"))


def _load_model(cfg, target: str):
    path = cfg.out_dir / MODEL_FILES[target]
    if not path.is_file():
        raise ConfigError(f"model file missing: {path}; run `train --target "
                          f"{target.lower()}` first")
    return regressor.load(path)


# --- commands ----------------------------------------------------------------

def cmd_ingest_ws(cfg) -> int:
    cfg.require_paths("ws_csv", "ws_schema")
    schema = load_ws_schema(cfg.ws_schema, columns=cfg.ws_columns)
    observations = parse_ws_csv(cfg.ws_csv, schema)
    _write(cfg.out_dir, OBS_STORE, serialize_ws_csv(observations))
    _write(cfg.out_dir, OBS_SCHEMA, ws_schema_text())
    first, last = observations[0].date, observations[-1].date
    gaps = (last - first).days + 1 - len(observations)
    print(f"{len(observations)} observations ({first} .. {last}), "
          f"{gaps} gap day(s) dropped-and-reported, never interpolated")
    _write_manifest(cfg.out_dir, cfg.seed)
    return 0


def cmd_ingest_forecast(cfg) -> int:
    if cfg.forecast_cache is None:
        raise ConfigError("config key forecast_cache is required for forecast ingest")
    if cfg.offline and not Path(cfg.forecast_cache).exists():
        raise ConfigError(f"forecast_cache path does not exist: {cfg.forecast_cache}")
    start, end = cfg.start_date, cfg.end_date
    if start is None or end is None:
        store = cfg.out_dir / OBS_STORE
        if store.is_file():
            observations = _load_observations(cfg)
            start = start or observations[0].date
            end = end or observations[-1].date
        else:
            raise ConfigError("start_date/end_date not configured and no "
                              "ingested observations to take the range from")
    site = cfg.site()
    all_records = []
    for provider in cfg.providers:
        records = fetch_forecasts(
            provider, site, (start, end),
            cache_dir=cfg.forecast_cache, offline=cfg.offline,
            tz_offset_hours=cfg.tz_offset_hours)
        all_records.extend(records)
        dates = {r.target_date for r in records}
        per_date = sorted(len({f.horizon for f in records if f.target_date == d})
                          for d in dates) or [0]
        spread = (str(per_date[0]) if per_date[0] == per_date[-1]
                  else f"{per_date[0]}-{per_date[-1]}")
        print(f"{provider}: {len(records)} forecast records across "
              f"{len(dates)} target dates, {spread} horizons per date")
    _write(cfg.out_dir, FORECAST_STORE, records_to_jsonl(all_records))
    _write_manifest(cfg.out_dir, cfg.seed)
    return 0


def _clamped(values):
    return np.maximum(np.asarray(values, dtype=np.float64), 0.0)


def cmd_train(cfg, target: str) -> int:
    observations = _load_observations(cfg)
    site = cfg.site()
    X, _ = pipelines.feature_matrix(observations, site, cfg.features)
    if target == "ET0":
        series = pipelines.build_et0_target(observations, site, cfg.humidity_mode)
    else:
        series = pipelines.build_sr_target(observations)
    y = series.values

    rng = np.random.default_rng(cfg.seed)
    order = rng.permutation(len(y))
    n_hold = max(2, int(round(len(y) * cfg.holdout_fraction)))
    hold, fit = order[:n_hold], order[n_hold:]

    model = regressor.train((X[fit], y[fit]), (cfg.hidden, cfg.activation),
                            cfg.train_config(), feature_names=cfg.features,
                            target_name=target)
    predictions = _clamped(regressor.predict_batch(model, X[hold]))
    report = evalkit.metrics(y[hold], predictions,
                             mape_epsilon=evalkit.MAPE_EPSILON[target],
                             units=evalkit.UNITS_NOTE[target])
    path = cfg.out_dir / MODEL_FILES[target]
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    regressor.save(model, path)
    print(f"wrote {path}")
    print(f"{target} model ({'x'.join(str(h) for h in cfg.hidden)} "
          f"{cfg.activation}, seed {cfg.seed}): held-out R2 = {report.r2:.4f}, "
          f"RMSE = {report.rmse:.4f} {report.units}, MAE = {report.mae:.4f}, "
          f"MAPE = {report.mape:.2f}% (n={report.n})")
    _write_manifest(cfg.out_dir, cfg.seed)
    return 0


def cmd_predict(cfg, estimator: str, source: str, horizon) -> int:
    estimator = estimator.upper()
    needs = ("ET0",) if estimator == "ET0_ANN" else ("SR",)
    models = {t: _load_model(cfg, t) for t in needs}
    site = cfg.site()
    rows = []
    model = models.get("ET0") or models.get("SR")
    if source == "ws":
        for obs in _load_observations(cfg):
            fv = pipelines.make_features(obs, site, model.feature_names)
            rows.append(pipelines.PredictionRow(
                obs.date, "WS", None, estimator,
                _predict_one(estimator, models, fv, obs, site, wind_height=None)))
    else:
        provider = source.upper()
        records = [r for r in _load_forecasts(cfg)
                   if r.provider == provider
                   and (horizon is None or r.horizon == horizon)]
        if not records:
            raise ConfigError(f"no {provider} forecast records"
                              + (f" at horizon d{horizon}" if horizon is not None else ""))
        for rec in records:
            fv = pipelines.make_features(rec, site, model.feature_names)
            rows.append(pipelines.PredictionRow(
                rec.target_date, provider, rec.horizon, estimator,
                _predict_one(estimator, models, fv, rec, site,
                             wind_height=cfg.forecast_wind_height)))
    suffix = f"_d{horizon}" if horizon is not None else ""
    name = f"predictions_{estimator.lower()}_{source}{suffix}.csv"
    _write(cfg.out_dir, name, pipelines.predictions_csv(rows))
    print(f"{len(rows)} predictions ({estimator}, source {source})")
    _write_manifest(cfg.out_dir, cfg.seed)
    return 0


def _predict_one(estimator, models, fv, raw_record, site, wind_height):
    if estimator == "ET0_ANN":
        return pipelines.et0_ann_predict(models["ET0"], fv)
    if estimator == "SR_ANN":
        return pipelines.sr_ann_predict(models["SR"], fv)
    if estimator == "ET0_HYB":
        return pipelines.et0_hybrid_predict(
            models["SR"], fv, raw_record, site, wind_height=wind_height)
    raise ConfigError(f"unknown estimator {estimator!r}")


def cmd_evaluate(cfg) -> int:
    observations = _load_observations(cfg)
    forecasts = _load_forecasts(cfg)
    bundle = evalkit.ModelBundle(et0_model=_load_model(cfg, "ET0"),
                                 sr_model=_load_model(cfg, "SR"))
    site = cfg.site()

    sweep = evalkit.horizon_sweep(
        bundle, observations, forecasts, site,
        horizons=cfg.horizons, providers=cfg.providers,
        humidity_mode=cfg.humidity_mode,
        forecast_wind_height=cfg.forecast_wind_height)
    fidelity = evalkit.compare_forecast_fidelity(
        observations, forecasts, providers=cfg.providers, horizons=cfg.horizons)
    distribution = evalkit.error_distribution(
        bundle, observations, forecasts, site,
        horizons=cfg.horizons, providers=cfg.providers,
        humidity_mode=cfg.humidity_mode,
        forecast_wind_height=cfg.forecast_wind_height)

    for key, reason in sweep.omissions:
        print(f"omitted cell {key}: {reason}", file=sys.stderr)

    _write(cfg.out_dir, "sweep.csv", evalkit.emit_report(sweep, "csv"))
    _write(cfg.out_dir, "fidelity.csv", evalkit.emit_report(fidelity, "csv"))
    _write(cfg.out_dir, "distributions.csv", evalkit.emit_report(distribution, "csv"))

    usable_lines = ["criterion,threshold,provider,estimator,usable_horizon"]
    for name, tau in (("r2", cfg.r2_threshold), ("mape", cfg.mape_threshold)):
        relation = ">=" if name == "r2" else "<="
        for provider in cfg.providers:
            for estimator in pipelines.ESTIMATORS:
                try:
                    u = evalkit.usable_horizon(sweep, estimator, provider, (name, tau))
                except MissingCells as exc:
                    print(f"usable horizon ({name}{relation}{tau}): "
                          f"{provider}/{estimator} -> n/a ({exc})", file=sys.stderr)
                    continue
                usable_lines.append(f"{name},{tau!r},{provider},{estimator},{u}")
                print(f"usable horizon ({name}{relation}{tau}): "
                      f"{provider}/{estimator} -> d{u}")
    _write(cfg.out_dir, "usable_horizons.csv", "\n".join(usable_lines) + "\n")
    _write_manifest(cfg.out_dir, cfg.seed)
    return 0


def cmd_fao56(args) -> int:
    if args.rh_avg is not None:
        mode, rh = "average", {"rh_avg": args.rh_avg}
    elif args.rh_max is not None and args.rh_min is not None:
        mode, rh = "extremes", {"rh_max": args.rh_max, "rh_min": args.rh_min}
    else:
        raise ConfigError("humidity required: --rh-avg, or --rh-max with --rh-min")
    if (args.solar_rad_wm2 is None) == (args.solar_rad_mj is None):
        raise ConfigError("give exactly one of --solar-rad-wm2 / --solar-rad-mj")
    solar_mj = (args.solar_rad_mj if args.solar_rad_mj is not None
                else fao56.sr_wm2_to_mj(args.solar_rad_wm2))
    inputs = fao56.Et0Inputs(
        temp_max=args.temp_max, temp_min=args.temp_min,
        wind_2m=fao56.wind_to_2m(args.wind, args.wind_height),
        solar_rad=solar_mj, latitude=math.radians(args.latitude),
        elevation=args.elevation, day_of_year=args.day_of_year,
        humidity_mode=mode, **rh)
    result = fao56.et0_fao56pm(inputs)
    print(f"et0 = {result.et0:.6f} mm/day  (humidity mode: {result.humidity_mode})")
    for name in sorted(result.intermediates):
        print(f"  {name} = {result.intermediates[name]:.6f}")
    return 0


# --- argument wiring ---------------------------------------------------------

def _add_config_args(parser):
    parser.add_argument("--config", help="key=value config file")
    parser.add_argument("--out-dir", help="output directory (overrides config)")
    parser.add_argument("--seed", type=int, help="top-level seed (overrides config)")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key; repeatable")


def _resolve_config(args):
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        overrides[key.strip()] = value.strip()
    if args.out_dir is not None:
        overrides["out_dir"] = args.out_dir
    if args.seed is not None:
        overrides["seed"] = str(args.seed)
    return build_config(args.config, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="etoforge",
        description="Reference-ET estimation from reduced weather features, "
                    "with forecast-horizon evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="load station or forecast data")
    ingest_sub = ingest.add_subparsers(dest="what", required=True)
    ws = ingest_sub.add_parser("ws", help="parse a weather-station CSV")
    _add_config_args(ws)
    fc = ingest_sub.add_parser("forecast", help="fetch or replay provider forecasts")
    _add_config_args(fc)
    fc.add_argument("--offline", action="store_true",
                    help="serve cached payloads only")

    tr = sub.add_parser("train", help="fit a regressor on ingested WS data")
    _add_config_args(tr)
    tr.add_argument("--target", choices=("et0", "sr"), required=True)

    pr = sub.add_parser("predict", help="run an estimator over ingested data")
    _add_config_args(pr)
    pr.add_argument("--estimator", choices=("et0_ann", "et0_hyb", "sr_ann"),
                    required=True)
    pr.add_argument("--source", choices=("ws", "vc", "owm"), required=True)
    pr.add_argument("--horizon", type=int, default=None,
                    help="restrict forecast sources to one horizon")

    ev = sub.add_parser("evaluate", help="horizon sweep, fidelity, distributions")
    _add_config_args(ev)

    fa = sub.add_parser("fao56", help="one-shot reference-ET calculator")
    fa.add_argument("--temp-max", type=float, required=True)
    fa.add_argument("--temp-min", type=float, required=True)
    fa.add_argument("--rh-max", type=float)
    fa.add_argument("--rh-min", type=float)
    fa.add_argument("--rh-avg", type=float)
    fa.add_argument("--wind", type=float, required=True,
                    help="wind speed at --wind-height [m/s]")
    fa.add_argument("--wind-height", type=float, default=2.0)
    fa.add_argument("--solar-rad-wm2", type=float,
                    help="daily-mean shortwave [W/m2]")
    fa.add_argument("--solar-rad-mj", type=float,
                    help="daily shortwave [MJ/m2/day]")
    fa.add_argument("--latitude", type=float, required=True, help="degrees")
    fa.add_argument("--elevation", type=float, required=True, help="m")
    fa.add_argument("--day-of-year", type=int, required=True)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    try:
        if args.command == "fao56":
            return cmd_fao56(args)
        cfg = _resolve_config(args)
        if args.command == "ingest" and args.what == "ws":
            return cmd_ingest_ws(cfg)
        if args.command == "ingest" and args.what == "forecast":
            if args.offline:
                cfg.offline = True
            return cmd_ingest_forecast(cfg)
        if args.command == "train":
            return cmd_train(cfg, args.target.upper())
        if args.command == "predict":
            return cmd_predict(cfg, args.estimator, args.source, args.horizon)
        if args.command == "evaluate":
            return cmd_evaluate(cfg)
        parser.error(f"unhandled command {args.command}")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EtoforgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
