"""Metric formulas, fidelity analysis, sweeps, thresholds, report emission."""

import datetime as dt
import math

import numpy as np
import pytest

from etoforge import pipelines
from etoforge.errors import (DegenerateActuals, EmptyInput, LengthMismatch,
                             MissingCells, NoModels, NonFinite, RangeError)
from etoforge.evalkit import (FIDELITY_FEATURES, HorizonSweep, MetricReport,
                              ModelBundle, compare_forecast_fidelity,
                              emit_report, error_distribution, horizon_sweep,
                              metrics, sweep_from_json, usable_horizon)
from etoforge.synthetic import (synthetic_forecasts, synthetic_observations,
                                synthetic_site)

from .gen_golden import GOLDEN_PATH, build_report


def _brute_force(actual, predicted, eps=1e-9):
    """Plain-loop renditions of the five formulas, kept separate on purpose."""
    n = len(actual)
    mae = sum(abs(y - p) for y, p in zip(actual, predicted)) / n
    mse = sum((y - p) ** 2 for y, p in zip(actual, predicted)) / n
    rmse = mse ** 0.5
    mean = sum(actual) / n
    sst = sum((y - mean) ** 2 for y in actual)
    r2 = 1.0 - sum((y - p) ** 2 for y, p in zip(actual, predicted)) / sst
    kept = [(y, p) for y, p in zip(actual, predicted) if abs(y) >= eps]
    mape = (sum(abs(y - p) / abs(y) for y, p in kept) / len(kept) * 100.0
            if kept else math.nan)
    return dict(mae=mae, mse=mse, rmse=rmse, r2=r2, mape=mape)


# --- the five formulas ------------------------------------------------------------

def test_perfect_prediction():
    r = metrics([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert (r.mae, r.mse, r.rmse, r.mape) == (0.0, 0.0, 0.0, 0.0)
    assert r.r2 == 1.0


def test_hand_worked_two_point_series():
    r = metrics([0.0, 2.0], [1.0, 1.0])
    assert r.mae == 1.0 and r.mse == 1.0 and r.rmse == 1.0
    assert r.r2 == 0.0
    assert r.mape == 50.0          # the y=0 point is excluded
    assert r.mape_excluded == 1


def test_mean_predictor_gives_exactly_zero_r2():
    actual = [3.0, 7.0, 5.0, 9.0]
    mean = sum(actual) / len(actual)
    r = metrics(actual, [mean] * 4)
    assert r.r2 == 0.0


def test_negative_r2_preserved():
    r = metrics([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
    assert r.r2 < 0.0


def test_small_series_match_brute_force():
    cases = [
        ([1.0, 2.0], [1.5, 1.5]),
        ([0.3, 0.7, 1.1], [0.2, 0.9, 1.0]),
        ([5.0, 5.5, 6.0, 4.5], [5.2, 5.1, 6.3, 4.4]),
        ([-2.0, 1.0, 4.0], [-1.0, 0.0, 5.0]),
        ([10.0, 20.0, 30.0, 40.0, 50.0, 60.0], [12, 18, 33, 39, 52, 58]),
    ]
    for actual, predicted in cases:
        r = metrics(actual, predicted)
        bf = _brute_force(actual, predicted)
        for name in ("mae", "mse", "rmse", "r2", "mape"):
            assert getattr(r, name) == pytest.approx(bf[name], rel=1e-12, abs=1e-12)


def test_metrics_errors():
    with pytest.raises(LengthMismatch):
        metrics([1.0, 2.0], [1.0])
    with pytest.raises(LengthMismatch):
        metrics([1.0], [1.0])
    with pytest.raises(DegenerateActuals):
        metrics([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    with pytest.raises(NonFinite):
        metrics([1.0, float("nan")], [1.0, 2.0])


def test_metrics_permutation_invariance():
    rng = np.random.default_rng(5)
    actual = rng.normal(5.0, 2.0, size=200)
    predicted = actual + rng.normal(0.0, 0.7, size=200)
    base = metrics(actual, predicted)
    order = rng.permutation(200)
    shuffled = metrics(actual[order], predicted[order])
    assert base == shuffled


def test_mae_never_exceeds_rmse_and_rmse_squares_to_mse():
    rng = np.random.default_rng(6)
    for _ in range(20):
        actual = rng.normal(0.0, 3.0, size=50)
        predicted = actual + rng.normal(0.0, 1.0, size=50)
        r = metrics(actual, predicted)
        assert r.mae <= r.rmse * (1 + 1e-12)
        assert r.rmse ** 2 == pytest.approx(r.mse, rel=1e-12)


def test_mape_epsilon_exclusion_count():
    r = metrics([0.01, 5.0, 10.0], [1.0, 5.5, 9.0], mape_epsilon=0.05)
    assert r.mape_excluded == 1
    assert r.mape == pytest.approx((0.5 / 5.0 + 1.0 / 10.0) / 2 * 100.0)


def test_metric_report_invariants_enforced():
    with pytest.raises(RangeError):
        MetricReport(r2=1.2, rmse=1.0, mse=1.0, mae=0.5, mape=10.0, n=5)
    with pytest.raises(RangeError):
        MetricReport(r2=0.5, rmse=1.0, mse=1.0, mae=1.5, mape=10.0, n=5)
    with pytest.raises(RangeError):
        MetricReport(r2=0.5, rmse=1.0, mse=2.0, mae=0.5, mape=10.0, n=5)


# --- forecast fidelity ---------------------------------------------------------

@pytest.fixture(scope="module")
def small_world():
    site = synthetic_site()
    observations = synthetic_observations(site, n_days=90, seed=11)
    return site, observations


def test_fidelity_perfect_provider_scores_one(small_world):
    _, observations = small_world
    perfect = synthetic_forecasts(observations, "VC", noise_base=0.0,
                                  noise_slope=0.0)
    report = compare_forecast_fidelity(observations, perfect,
                                       providers=("VC",), horizons=range(4))
    for feature in FIDELITY_FEATURES:
        for horizon in range(4):
            assert report.cells[(feature, "VC", horizon)] == 1.0


def test_fidelity_degrades_with_horizon(small_world):
    _, observations = small_world
    noisy = synthetic_forecasts(observations, "OWM", seed=3,
                                noise_base=0.2, noise_slope=0.6)
    report = compare_forecast_fidelity(observations, noisy, providers=("OWM",))
    for feature in ("TempMax", "TempMin", "HumidityAvg", "WindAvg"):
        r2s = [report.cells[(feature, "OWM", h)] for h in range(16)]
        slope = np.polyfit(range(16), r2s, 1)[0]
        assert slope < 0.0, feature


def test_fidelity_records_omissions_instead_of_aborting(small_world):
    site, observations = small_world
    dry = [type(o)(**{**o.__dict__, "precip": 0.0}) for o in observations]
    forecasts = synthetic_forecasts(dry, "VC", noise_base=0.0, noise_slope=0.0)
    report = compare_forecast_fidelity(dry, forecasts, providers=("VC",),
                                       horizons=range(2))
    assert ("Precipitation", "VC", 0) not in report.cells
    assert any(key[0] == "Precipitation" for key, _ in report.omissions)
    assert ("TempMax", "VC", 0) in report.cells


# --- horizon sweep ----------------------------------------------------------------

def test_sweep_perfect_provider_constant_across_horizons(small_world, full_models):
    site, observations = small_world
    perfect = synthetic_forecasts(observations, "VC", noise_base=0.0,
                                  noise_slope=0.0)
    sweep = horizon_sweep(full_models, observations, perfect, site,
                          horizons=range(5), providers=("VC",),
                          humidity_mode="average")
    for estimator in pipelines.ESTIMATORS:
        d0 = sweep.cells[(0, "VC", estimator)]
        for h in range(1, 5):
            assert sweep.cells[(h, "VC", estimator)] == d0


def test_sweep_cell_equals_manual_decomposition(small_world, full_models):
    site, observations = small_world
    forecasts = synthetic_forecasts(observations, "VC", seed=9,
                                    noise_base=0.3, noise_slope=0.4)
    sweep = horizon_sweep(full_models, observations, forecasts, site,
                          horizons=(2,), providers=("VC",),
                          humidity_mode="average")
    from etoforge.weather import align_horizons
    aligned = align_horizons(observations, forecasts, 2)
    actual = pipelines.build_et0_target(
        [p.observed for p in aligned.pairs], site, "average").values
    predicted = [
        pipelines.et0_ann_predict(
            full_models.et0_model,
            pipelines.make_features(p.forecast, site,
                                    full_models.et0_model.feature_names)).value
        for p in aligned.pairs
    ]
    manual = metrics(actual, predicted, mape_epsilon=0.05, units="mm/day")
    assert sweep.cells[(2, "VC", "ET0_ANN")] == manual
    assert sweep.coverage[(2, "VC", "ET0_ANN")] == aligned.coverage


def test_sweep_requires_models(small_world):
    site, observations = small_world
    with pytest.raises(NoModels):
        horizon_sweep(ModelBundle(), observations, [], site)


def test_sweep_omits_thin_cells_without_aborting(small_world, full_models):
    site, observations = small_world
    one_day = synthetic_forecasts(observations[:1], "VC",
                                  noise_base=0.0, noise_slope=0.0)
    sweep = horizon_sweep(full_models, observations, one_day, site,
                          horizons=range(2), providers=("VC",),
                          humidity_mode="average")
    assert not sweep.cells
    assert len(sweep.omissions) == 6
    assert all("matched" in reason for _, reason in sweep.omissions)


def test_sweep_metadata_flags_assumptions(degradation_sweep):
    meta = degradation_sweep.metadata
    assert meta["forecast_wind_height_m"] == 10.0
    assert meta["humidity_mode"] == "average"
    assert "pooled" in meta["metric_pooling"]


# --- usable horizon -----------------------------------------------------------------

def _report_with(r2=None, mape=None):
    actual = [4.0, 5.0, 6.0, 7.0]
    if r2 is not None:
        alpha = 1.0 - math.sqrt(1.0 - r2)
        mean = sum(actual) / 4
        predicted = [mean + alpha * (y - mean) for y in actual]
        return metrics(actual, predicted)
    predicted = [y * (1.0 + mape / 100.0) for y in actual]
    return metrics(actual, predicted)


def _fake_sweep(r2_curve, provider="VC", estimator="ET0_ANN"):
    cells = {(h, provider, estimator): _report_with(r2=r2)
             for h, r2 in enumerate(r2_curve)}
    return HorizonSweep(cells=cells, coverage={k: 1.0 for k in cells})


def test_usable_horizon_first_failure():
    sweep = _fake_sweep([0.9, 0.8, 0.65])
    assert usable_horizon(sweep, "ET0_ANN", "VC", ("r2", 0.7)) == 1


def test_usable_horizon_all_pass_and_d0_failure():
    sweep = _fake_sweep([0.9] * 16)
    assert usable_horizon(sweep, "ET0_ANN", "VC", ("r2", 0.7)) == 15
    assert usable_horizon(_fake_sweep([0.5, 0.9]), "ET0_ANN", "VC",
                          ("r2", 0.7)) == -1


def test_usable_horizon_prefix_semantics():
    # a dip caps the answer even if later horizons recover
    sweep = _fake_sweep([0.9, 0.6, 0.95, 0.9])
    assert usable_horizon(sweep, "ET0_ANN", "VC", ("r2", 0.7)) == 0


def test_usable_horizon_monotone_in_threshold():
    sweep = _fake_sweep([0.95, 0.9, 0.8, 0.72, 0.6, 0.5])
    previous = 99
    for tau in (0.5, 0.6, 0.7, 0.8, 0.9):
        u = usable_horizon(sweep, "ET0_ANN", "VC", ("r2", tau))
        assert u <= previous
        previous = u


def test_usable_horizon_mape_criterion():
    cells = {(h, "VC", "ET0_ANN"): _report_with(mape=m)
             for h, m in enumerate([10.0, 20.0, 30.0])}
    sweep = HorizonSweep(cells=cells, coverage={k: 1.0 for k in cells})
    assert usable_horizon(sweep, "ET0_ANN", "VC", ("mape", 25.0)) == 1


def test_usable_horizon_missing_cells():
    cells = {(h, "VC", "ET0_ANN"): _report_with(r2=0.9) for h in (0, 2)}
    sweep = HorizonSweep(cells=cells, coverage={k: 1.0 for k in cells})
    with pytest.raises(MissingCells):
        usable_horizon(sweep, "ET0_ANN", "VC", ("r2", 0.7))
    with pytest.raises(RangeError):
        usable_horizon(sweep, "ET0_ANN", "VC", ("sharpe", 0.7))


# --- error distribution ---------------------------------------------------------------

def test_distribution_zero_for_perfect_predictor(small_world, full_models):
    site, observations = small_world
    perfect = synthetic_forecasts(observations, "VC", noise_base=0.0,
                                  noise_slope=0.0)
    sweep = horizon_sweep(full_models, observations, perfect, site,
                          horizons=(0,), providers=("VC",),
                          humidity_mode="average")
    dist = error_distribution(full_models, observations, perfect, site,
                              horizons=(0,), providers=("VC",),
                              humidity_mode="average")
    errors = [e for _, e in dist[(0, "VC", "ET0_ANN")]]
    assert np.mean(errors) == pytest.approx(
        sweep.cells[(0, "VC", "ET0_ANN")].mae, abs=1e-12)


def test_distribution_median_grows_with_horizon(synth, full_models, degradation_sweep):
    site, observations, forecasts = synth
    dist = error_distribution(full_models, observations, forecasts["VC"], site,
                              horizons=range(0, 16, 3), providers=("VC",),
                              humidity_mode="average")
    medians = [np.median([e for _, e in dist[(h, "VC", "ET0_HYB")]])
               for h in range(0, 16, 3)]
    assert np.polyfit(range(len(medians)), medians, 1)[0] > 0.0


# --- emission ---------------------------------------------------------------------------

def test_sweep_csv_shape(degradation_sweep):
    lines = emit_report(degradation_sweep, "csv").strip().splitlines()
    assert lines[0] == ("horizon,provider,estimator,n,coverage,r2,rmse,mse,"
                        "mae,mape,mape_excluded")
    assert len(lines) == 1 + 16 * 2 * 3


def test_sweep_json_round_trip(degradation_sweep):
    text = emit_report(degradation_sweep, "json")
    again = sweep_from_json(text)
    assert again == degradation_sweep


def test_fidelity_csv_layout(small_world):
    _, observations = small_world
    forecasts = synthetic_forecasts(observations, "VC", seed=2)
    report = compare_forecast_fidelity(observations, forecasts,
                                       providers=("VC",), horizons=range(2))
    lines = emit_report(report, "csv").strip().splitlines()
    assert lines[0] == "feature,provider,horizon,r2"
    assert lines[1].startswith("TempMax,VC,0,")


def test_distribution_csv_layout(small_world, full_models):
    site, observations = small_world
    forecasts = synthetic_forecasts(observations, "VC", seed=2)
    dist = error_distribution(full_models, observations, forecasts, site,
                              horizons=(0,), providers=("VC",),
                              humidity_mode="average")
    lines = emit_report(dist, "csv").strip().splitlines()
    assert lines[0] == "horizon,provider,estimator,date,abs_error"
    head = lines[1].split(",")
    assert head[0] == "0" and head[1] == "VC"
    dt.date.fromisoformat(head[3])


def test_emit_rejects_empty_and_unknown():
    with pytest.raises(EmptyInput):
        emit_report(HorizonSweep(cells={}, coverage={}), "csv")
    with pytest.raises(EmptyInput):
        emit_report({}, "json")
    with pytest.raises(RangeError):
        emit_report(_fake_sweep([0.9]), "yaml")


def test_emission_is_deterministic(degradation_sweep):
    assert emit_report(degradation_sweep, "csv") == emit_report(degradation_sweep, "csv")
    assert emit_report(degradation_sweep, "json") == emit_report(degradation_sweep, "json")


def test_golden_fidelity_report():
    assert GOLDEN_PATH.is_file(), "regenerate with python -m tests.gen_golden"
    assert emit_report(build_report(), "csv") == GOLDEN_PATH.read_text()
