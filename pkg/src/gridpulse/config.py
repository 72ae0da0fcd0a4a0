"""Scenario configuration: typed schema, strict validation, YAML round trip.

A scenario file is a YAML document with the sections source, agents, policy,
coordinator, market and run.  Validation is strict: unknown keys anywhere are
errors, as are keys that do not apply to the configured agent kind (a fridge
scenario carries no market section, a washer scenario requires one).  Every
error message names the offending dotted key.

`resolved_dict` materialises defaults and the concrete seed so that the
written resolved.config reproduces the run when fed back in.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import yaml

from .devices import FridgePolicy, WasherPolicy

COORDINATOR_MODES = ("none", "randomized", "time_division")


class ConfigError(ValueError):
    """Scenario validation failure; the message names the offending key."""


def _require(mapping, section, required, optional=()):
    if not isinstance(mapping, dict):
        raise ConfigError(f"{section}: expected a mapping")
    for key in mapping:
        if key not in required and key not in optional:
            raise ConfigError(f"{section}.{key}: unknown key")
    for key in required:
        if key not in mapping:
            raise ConfigError(f"{section}.{key}: missing required key")


def _number(value, key, *, minimum=None, strict_min=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    value = float(value)
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
    if strict_min is not None and value <= strict_min:
        raise ConfigError(f"{key}: must be > {strict_min}, got {value}")
    return value


def _integer(value, key, *, minimum=None):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
    return value


def _int_pair(value, key, *, minimum):
    """Scalar or [lo, hi] inclusive integer range."""
    if isinstance(value, int) and not isinstance(value, bool):
        value = [value, value]
    if (
        not isinstance(value, list)
        or len(value) != 2
        or any(isinstance(v, bool) or not isinstance(v, int) for v in value)
    ):
        raise ConfigError(f"{key}: expected an integer or [lo, hi] pair, got {value!r}")
    lo, hi = value
    if lo < minimum:
        raise ConfigError(f"{key}: must be >= {minimum}, got {lo}")
    if lo > hi:
        raise ConfigError(f"{key}: lo must not exceed hi, got {value}")
    return [lo, hi]


def _float_pair(value, key, *, minimum):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value, value]
    if not isinstance(value, list) or len(value) != 2:
        raise ConfigError(f"{key}: expected a number or [lo, hi] pair, got {value!r}")
    lo = _number(value[0], key, minimum=minimum)
    hi = _number(value[1], key, minimum=minimum)
    if lo > hi:
        raise ConfigError(f"{key}: lo must not exceed hi, got {value}")
    return [lo, hi]


def _resistances(value, key, count):
    """Scalar ohms or one value per agent; returns the list form."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value] * count
    if not isinstance(value, list):
        raise ConfigError(f"{key}: expected ohms or a per-agent list, got {value!r}")
    if len(value) != count:
        raise ConfigError(f"{key}: expected {count} per-agent values, got {len(value)}")
    return [_number(v, key, strict_min=0.0) for v in value]


@dataclass
class SourceConfig:
    v_source: float
    r_source: float
    v_nominal: float
    disturbances: list = field(default_factory=list)  # [tick, new v_source volts]


@dataclass
class FridgeFleetConfig:
    kind = "fridge"
    count: int
    r_base: list
    r_flex: list
    on_duration: int
    off_duration: int
    max_postpone: int | None = None  # None -> 3 * off_duration


@dataclass
class WasherFleetConfig:
    kind = "washer"
    count: int
    r_base: list
    r_flex: list
    job_length: list  # [lo, hi] ticks, drawn per job
    deadline_horizon: list  # [lo, hi] ticks, drawn per agent
    arrival_gap: list  # [lo, hi] ticks idle between jobs
    first_arrival_max: int
    initial_reference_price: list  # [lo, hi] currency


@dataclass
class CoordinatorConfig:
    mode: str = "none"
    permits_per_tick: int | None = None


@dataclass
class MarketConfig:
    period_length: int = 60
    mean: float | None = None
    reversion: float | None = None
    noise_std: float | None = None
    initial_price: float | None = None
    overrides: list = field(default_factory=list)  # [period index, price]
    file: str | None = None
    feedback_slope: float = 0.0
    baseline_share: float | None = None


@dataclass
class RunConfig:
    n_ticks: int
    seed: int | None = None
    band: list = field(default_factory=lambda: [0.98, 1.02])


@dataclass
class ScenarioConfig:
    source: SourceConfig
    agents: FridgeFleetConfig | WasherFleetConfig
    policy: FridgePolicy | WasherPolicy
    coordinator: CoordinatorConfig
    market: MarketConfig | None
    run: RunConfig

    @property
    def kind(self) -> str:
        return self.agents.kind


def _parse_source(section) -> SourceConfig:
    _require(section, "source", {"v_source", "r_source", "v_nominal"}, {"disturbances"})
    disturbances = []
    raw = section.get("disturbances", [])
    if not isinstance(raw, list):
        raise ConfigError("source.disturbances: expected a list of [tick, volts]")
    seen = set()
    for i, event in enumerate(raw):
        key = f"source.disturbances[{i}]"
        if not isinstance(event, list) or len(event) != 2:
            raise ConfigError(f"{key}: expected [tick, volts], got {event!r}")
        tick = _integer(event[0], key, minimum=0)
        volts = _number(event[1], key, strict_min=0.0)
        if tick in seen:
            raise ConfigError(f"{key}: duplicate disturbance tick {tick}")
        seen.add(tick)
        disturbances.append([tick, volts])
    disturbances.sort()
    return SourceConfig(
        v_source=_number(section["v_source"], "source.v_source", strict_min=0.0),
        r_source=_number(section["r_source"], "source.r_source", strict_min=0.0),
        v_nominal=_number(section["v_nominal"], "source.v_nominal", strict_min=0.0),
        disturbances=disturbances,
    )


def _parse_agents(section):
    if not isinstance(section, dict) or "kind" not in section:
        raise ConfigError("agents.kind: missing required key")
    kind = section["kind"]
    count_raw = section.get("count")
    if count_raw is None:
        raise ConfigError("agents.count: missing required key")
    count = _integer(count_raw, "agents.count", minimum=0)
    if kind == "fridge":
        _require(
            section,
            "agents",
            {"kind", "count", "r_base", "r_flex", "on_duration", "off_duration"},
            {"max_postpone"},
        )
        max_postpone = section.get("max_postpone")
        if max_postpone is not None:
            max_postpone = _integer(max_postpone, "agents.max_postpone", minimum=1)
        return FridgeFleetConfig(
            count=count,
            r_base=_resistances(section["r_base"], "agents.r_base", count),
            r_flex=_resistances(section["r_flex"], "agents.r_flex", count),
            on_duration=_integer(section["on_duration"], "agents.on_duration", minimum=1),
            off_duration=_integer(section["off_duration"], "agents.off_duration", minimum=1),
            max_postpone=max_postpone,
        )
    if kind == "washer":
        _require(
            section,
            "agents",
            {
                "kind",
                "count",
                "r_base",
                "r_flex",
                "job_length",
                "deadline_horizon",
                "arrival_gap",
                "initial_reference_price",
            },
            {"first_arrival_max"},
        )
        return WasherFleetConfig(
            count=count,
            r_base=_resistances(section["r_base"], "agents.r_base", count),
            r_flex=_resistances(section["r_flex"], "agents.r_flex", count),
            job_length=_int_pair(section["job_length"], "agents.job_length", minimum=1),
            deadline_horizon=_int_pair(
                section["deadline_horizon"], "agents.deadline_horizon", minimum=1
            ),
            arrival_gap=_int_pair(section["arrival_gap"], "agents.arrival_gap", minimum=1),
            first_arrival_max=_integer(
                section.get("first_arrival_max", 0), "agents.first_arrival_max", minimum=0
            ),
            initial_reference_price=_float_pair(
                section["initial_reference_price"],
                "agents.initial_reference_price",
                minimum=0.0,
            ),
        )
    raise ConfigError(f"agents.kind: expected 'fridge' or 'washer', got {kind!r}")


def _parse_policy(section, kind):
    if kind == "fridge":
        _require(
            section,
            "policy",
            set(),
            {"threshold_low", "threshold_high", "act_probability", "resume_wait_max"},
        )
        cls = FridgePolicy
    else:
        _require(
            section,
            "policy",
            set(),
            {"ewma_lambda", "bargain_factor", "voltage_check_enabled", "voltage_limit"},
        )
        cls = WasherPolicy
    try:
        return cls(**section)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"policy: {exc}") from None


def _parse_coordinator(section) -> CoordinatorConfig:
    if section is None:
        return CoordinatorConfig()
    _require(section, "coordinator", {"mode"}, {"permits_per_tick"})
    mode = section["mode"]
    if mode not in COORDINATOR_MODES:
        raise ConfigError(
            f"coordinator.mode: expected one of {COORDINATOR_MODES}, got {mode!r}"
        )
    permits = section.get("permits_per_tick")
    if mode == "time_division":
        if permits is None:
            raise ConfigError("coordinator.permits_per_tick: required for time_division")
        permits = _integer(permits, "coordinator.permits_per_tick", minimum=1)
    elif permits is not None:
        raise ConfigError(
            f"coordinator.permits_per_tick: only valid for time_division, mode is {mode!r}"
        )
    return CoordinatorConfig(mode=mode, permits_per_tick=permits)


def _parse_market(section) -> MarketConfig:
    _require(
        section,
        "market",
        set(),
        {
            "period_length",
            "mean",
            "reversion",
            "noise_std",
            "initial_price",
            "overrides",
            "file",
            "feedback_slope",
            "baseline_share",
        },
    )
    period_length = _integer(section.get("period_length", 60), "market.period_length", minimum=1)
    file = section.get("file")
    if file is not None and not isinstance(file, str):
        raise ConfigError(f"market.file: expected a path string, got {file!r}")
    if file is not None:
        for key in ("mean", "reversion", "noise_std", "initial_price", "overrides"):
            if key in section:
                raise ConfigError(f"market.{key}: not allowed together with market.file")
        mean = reversion = noise_std = initial_price = None
        overrides = []
    else:
        for key in ("mean", "reversion", "noise_std"):
            if key not in section:
                raise ConfigError(f"market.{key}: missing required key")
        mean = _number(section["mean"], "market.mean", minimum=0.0)
        reversion = _number(section["reversion"], "market.reversion", minimum=0.0)
        if reversion > 1.0:
            raise ConfigError(f"market.reversion: must be in [0, 1], got {reversion}")
        noise_std = _number(section["noise_std"], "market.noise_std", minimum=0.0)
        initial_price = section.get("initial_price")
        if initial_price is not None:
            initial_price = _number(initial_price, "market.initial_price", minimum=0.0)
        overrides = []
        raw = section.get("overrides", [])
        if not isinstance(raw, list):
            raise ConfigError("market.overrides: expected a list of [period, price]")
        for i, event in enumerate(raw):
            key = f"market.overrides[{i}]"
            if not isinstance(event, list) or len(event) != 2:
                raise ConfigError(f"{key}: expected [period, price], got {event!r}")
            overrides.append(
                [_integer(event[0], key, minimum=0), _number(event[1], key, minimum=0.0)]
            )
    slope = _number(section.get("feedback_slope", 0.0), "market.feedback_slope")
    baseline = section.get("baseline_share")
    if slope != 0.0:
        if baseline is None:
            raise ConfigError("market.baseline_share: required when feedback_slope is set")
        baseline = _number(baseline, "market.baseline_share", minimum=0.0)
        if baseline > 1.0:
            raise ConfigError(f"market.baseline_share: must be in [0, 1], got {baseline}")
    elif baseline is not None:
        raise ConfigError("market.baseline_share: only valid with a nonzero feedback_slope")
    return MarketConfig(
        period_length=period_length,
        mean=mean,
        reversion=reversion,
        noise_std=noise_std,
        initial_price=initial_price,
        overrides=overrides,
        file=file,
        feedback_slope=slope,
        baseline_share=baseline,
    )


def _parse_run(section) -> RunConfig:
    _require(section, "run", {"n_ticks"}, {"seed", "band"})
    seed = section.get("seed")
    if seed is not None:
        seed = _integer(seed, "run.seed", minimum=0)
    band = section.get("band", [0.98, 1.02])
    if not isinstance(band, list) or len(band) != 2:
        raise ConfigError(f"run.band: expected [low, high], got {band!r}")
    low = _number(band[0], "run.band", strict_min=0.0)
    high = _number(band[1], "run.band", strict_min=0.0)
    if low >= high:
        raise ConfigError(f"run.band: low must be < high, got {band}")
    return RunConfig(
        n_ticks=_integer(section["n_ticks"], "run.n_ticks", minimum=0),
        seed=seed,
        band=[low, high],
    )


def config_from_dict(doc) -> ScenarioConfig:
    """Validate a raw YAML mapping into a ScenarioConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("scenario: expected a mapping of sections")
    known = {"source", "agents", "policy", "coordinator", "market", "run"}
    for key in doc:
        if key not in known:
            raise ConfigError(f"{key}: unknown section")
    for key in ("source", "agents", "policy", "run"):
        if key not in doc:
            raise ConfigError(f"{key}: missing required section")
    agents = _parse_agents(doc["agents"])
    market = None
    if agents.kind == "washer":
        if "market" not in doc:
            raise ConfigError("market: missing required section for washer scenarios")
        market = _parse_market(doc["market"])
    elif "market" in doc:
        raise ConfigError("market: not valid in a fridge scenario")
    return ScenarioConfig(
        source=_parse_source(doc["source"]),
        agents=agents,
        policy=_parse_policy(doc["policy"], agents.kind),
        coordinator=_parse_coordinator(doc.get("coordinator")),
        market=market,
        run=_parse_run(doc["run"]),
    )


def load_config(path) -> ScenarioConfig:
    """Load and validate a scenario YAML file."""
    with open(path) as fh:
        try:
            doc = yaml.safe_load(fh)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML: {exc}") from None
    try:
        return config_from_dict(doc)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def resolved_dict(config: ScenarioConfig) -> dict:
    """Plain mapping with defaults materialised; loads back to the same run."""
    doc: dict = {
        "source": {
            "v_source": config.source.v_source,
            "r_source": config.source.r_source,
            "v_nominal": config.source.v_nominal,
            "disturbances": [list(e) for e in config.source.disturbances],
        }
    }
    a = config.agents
    if a.kind == "fridge":
        doc["agents"] = {
            "kind": "fridge",
            "count": a.count,
            "r_base": list(a.r_base),
            "r_flex": list(a.r_flex),
            "on_duration": a.on_duration,
            "off_duration": a.off_duration,
            "max_postpone": (
                a.max_postpone if a.max_postpone is not None else 3 * a.off_duration
            ),
        }
        p = config.policy
        doc["policy"] = {
            "threshold_low": p.threshold_low,
            "threshold_high": p.threshold_high,
            "act_probability": p.act_probability,
            "resume_wait_max": p.resume_wait_max,
        }
    else:
        doc["agents"] = {
            "kind": "washer",
            "count": a.count,
            "r_base": list(a.r_base),
            "r_flex": list(a.r_flex),
            "job_length": list(a.job_length),
            "deadline_horizon": list(a.deadline_horizon),
            "arrival_gap": list(a.arrival_gap),
            "first_arrival_max": a.first_arrival_max,
            "initial_reference_price": list(a.initial_reference_price),
        }
        p = config.policy
        doc["policy"] = {
            "ewma_lambda": p.ewma_lambda,
            "bargain_factor": p.bargain_factor,
            "voltage_check_enabled": p.voltage_check_enabled,
            "voltage_limit": p.voltage_limit,
        }
    doc["coordinator"] = {"mode": config.coordinator.mode}
    if config.coordinator.mode == "time_division":
        doc["coordinator"]["permits_per_tick"] = config.coordinator.permits_per_tick
    if config.market is not None:
        m = config.market
        market: dict = {"period_length": m.period_length}
        if m.file is not None:
            market["file"] = m.file
        else:
            market["mean"] = m.mean
            market["reversion"] = m.reversion
            market["noise_std"] = m.noise_std
            if m.initial_price is not None:
                market["initial_price"] = m.initial_price
            market["overrides"] = [list(e) for e in m.overrides]
        if m.feedback_slope != 0.0:
            market["feedback_slope"] = m.feedback_slope
            market["baseline_share"] = m.baseline_share
        doc["market"] = market
    doc["run"] = {
        "n_ticks": config.run.n_ticks,
        "seed": config.run.seed,
        "band": list(config.run.band),
    }
    return doc


def save_config(config: ScenarioConfig, path) -> None:
    """Write the resolved scenario to a YAML file."""
    with open(path, "w") as fh:
        yaml.safe_dump(resolved_dict(config), fh, sort_keys=False)
