"""etoforge: reference-evapotranspiration estimation from reduced weather features.

Library layout:

- :mod:`etoforge.weather` -- canonical records, station CSV, forecast
  providers, horizon alignment
- :mod:`etoforge.fao56` -- the daily reference-ET physics
- :mod:`etoforge.regressor` -- the from-scratch neural regressor
- :mod:`etoforge.pipelines` -- the direct and hybrid estimation routes
- :mod:`etoforge.evalkit` -- metrics, fidelity, horizon sweep, reports
- :mod:`etoforge.synthetic` -- seeded synthetic site data
- :mod:`etoforge.cli` -- the `etoforge` command-line front end
"""

from . import errors, evalkit, fao56, pipelines, regressor, synthetic, weather

__version__ = "0.1.0"

__all__ = ["errors", "evalkit", "fao56", "pipelines", "regressor",
           "synthetic", "weather", "__version__"]
