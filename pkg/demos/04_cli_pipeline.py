"""The whole workflow through the command line, end to end.

Builds a disposable workspace (station CSV + schema sidecar + an offline
forecast cache in both providers' native payload formats), then drives
`etoforge` exactly as a cron job would: ingest, train, evaluate, predict.
"""

import sys
import tempfile
from pathlib import Path

from etoforge.cli import main
from etoforge.synthetic import synthetic_dataset, write_synthetic_cache
from etoforge.weather import serialize_ws_csv, ws_schema_text

root = Path(tempfile.mkdtemp(prefix="etoforge-demo-"))
site, observations, forecasts = synthetic_dataset(seed=11, n_days=365)

(root / "ws.csv").write_text(serialize_ws_csv(observations))
(root / "ws.schema").write_text(ws_schema_text())
n_payloads = write_synthetic_cache(forecasts["VC"] + forecasts["OWM"],
                                   root / "cache")
print(f"workspace {root} ({n_payloads} cached provider payloads)")

(root / "run.cfg").write_text(f"""\
# etoforge run configuration
site_id = {site.site_id}
latitude = {site.latitude}
longitude = {site.longitude}
elevation = {site.elevation}
wind_sensor_height = {site.wind_sensor_height}
ws_csv = {root / 'ws.csv'}
ws_schema = {root / 'ws.schema'}
forecast_cache = {root / 'cache'}
out_dir = {root / 'out'}
seed = 7
epochs = 300
humidity_mode = average
r2_threshold = 0.7
mape_threshold = 25
""")

commands = [
    ["ingest", "ws"],
    ["ingest", "forecast", "--offline"],
    ["train", "--target", "et0"],
    ["train", "--target", "sr"],
    ["evaluate"],
    ["predict", "--estimator", "et0_hyb", "--source", "vc", "--horizon", "3"],
]
for argv in commands:
    print(f"\n$ etoforge {' '.join(argv)}")
    code = main(argv + ["--config", str(root / "run.cfg")])
    if code != 0:
        sys.exit(code)

print(f"\nartifacts under {root / 'out'}; manifest.json lists their hashes")
