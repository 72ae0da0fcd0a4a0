"""Seeded agent-based simulator of a shared DC supply bus under
signal-reacting appliances, with stability metrics and mitigation knobs."""

from .analysis import (
    StabilityReport,
    TimeOfDayProfile,
    detect_periodic_deviation,
    stability_metrics,
    synchronization_index,
    time_of_day_profile,
)
from .circuit import LoadSet, SourceModel, relative_voltage, solve_bus_voltage
from .config import ConfigError, ScenarioConfig, load_config, save_config
from .devices import (
    FridgeAgent,
    FridgePolicy,
    WasherAgent,
    WasherPolicy,
    fridge_step,
    washer_step,
)
from .engine import Coordinator, SimTrace, apply_disturbance, load_trace, run, write_trace
from .market import (
    PriceProcessParams,
    PriceSeries,
    generate_price_series,
    price_with_feedback,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "Coordinator",
    "FridgeAgent",
    "FridgePolicy",
    "LoadSet",
    "PriceProcessParams",
    "PriceSeries",
    "ScenarioConfig",
    "SimTrace",
    "SourceModel",
    "StabilityReport",
    "TimeOfDayProfile",
    "WasherAgent",
    "WasherPolicy",
    "apply_disturbance",
    "detect_periodic_deviation",
    "fridge_step",
    "generate_price_series",
    "load_config",
    "load_trace",
    "price_with_feedback",
    "relative_voltage",
    "run",
    "save_config",
    "solve_bus_voltage",
    "stability_metrics",
    "synchronization_index",
    "time_of_day_profile",
    "washer_step",
    "write_trace",
]
