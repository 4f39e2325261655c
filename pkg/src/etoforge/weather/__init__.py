"""Weather data model: canonical records, station CSV, providers, alignment."""

from .records import (MAX_HORIZON, PROVIDERS, AlignedPair, AlignResult,
                      DailyObservation, ForecastRecord, SiteMetadata,
                      align_horizons)
from .station_csv import (WsSchema, load_ws_schema, parse_ws_csv,
                          serialize_ws_csv, ws_schema_text)
from .providers import (ENV_KEYS, FieldMap, ForecastCache, ProviderMapping,
                        fetch_forecasts, load_provider_mapping,
                        normalize_payload, records_from_jsonl,
                        records_to_jsonl)
from . import units

__all__ = [
    "MAX_HORIZON", "PROVIDERS", "AlignedPair", "AlignResult",
    "DailyObservation", "ForecastRecord", "SiteMetadata", "align_horizons",
    "WsSchema", "load_ws_schema", "parse_ws_csv", "serialize_ws_csv",
    "ws_schema_text", "ENV_KEYS", "FieldMap", "ForecastCache",
    "ProviderMapping", "fetch_forecasts", "load_provider_mapping",
    "normalize_payload", "records_from_jsonl", "records_to_jsonl", "units",
]
