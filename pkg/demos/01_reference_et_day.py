"""Compute reference evapotranspiration for a single day, step by step.

Walks the full physics chain for a temperate summer day: vapour-pressure
terms, radiation balance, wind normalization, the reference-ET value,
and crop scaling on top.
"""

import math

from etoforge import fao56

# A mid-latitude summer day: station at 100 m, 50.80 N. Wind was measured
# at 10 m, shortwave arrives as a daily total in MJ/m2.
wind_2m = fao56.wind_to_2m(2.778, height=10.0)
inputs = fao56.Et0Inputs(
    temp_max=21.5,
    temp_min=12.3,
    rh_max=84.0,
    rh_min=63.0,
    humidity_mode="extremes",
    wind_2m=wind_2m,
    solar_rad=22.07,
    latitude=math.radians(50.80),
    elevation=100.0,
    day_of_year=187,
)
result = fao56.et0_fao56pm(inputs)

print(f"wind at 2 m            : {wind_2m:.3f} m/s (from 2.778 m/s at 10 m)")
for name in ("delta", "gamma", "es", "ea", "ra", "rso", "rns", "rnl", "rn"):
    print(f"{name:<23}: {result.intermediates[name]:.4f}")
print(f"reference ET           : {result.et0:.3f} mm/day")

# Scaling to a specific crop is one multiplication by its coefficient.
for crop, kc in [("cool-season turf", 0.80), ("olive orchard", 0.65)]:
    print(f"{crop:<23}: {fao56.crop_et(result.et0, kc):.3f} mm/day (kc={kc})")

# The same day through the CLI:
#   etoforge fao56 --temp-max 21.5 --temp-min 12.3 --rh-max 84 --rh-min 63 \
#       --wind 2.778 --wind-height 10 --solar-rad-mj 22.07 \
#       --latitude 50.80 --elevation 100 --day-of-year 187
