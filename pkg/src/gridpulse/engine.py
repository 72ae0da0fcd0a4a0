"""Deterministic tick loop: solve the circuit, let agents react, record.

Each tick runs six ordered phases: (1) read the signals of the previous
tick (relative bus voltage, plus the price of the current market period for
washer runs); (2) every agent computes its transition on those frozen
signals; (3) the coordinator filters candidate switch-ons (time_division
mode); (4) the staged outcomes are committed to the load set; (5) the bus
voltage is solved for this tick; (6) a trace row is appended.  Agents never
observe intra-tick voltage — the one-tick sensing delay is what makes the
evaluation order irrelevant.

Randomness is carved into independent sub-streams keyed by
(seed, stream tag, agent id[, tick]).  An agent performs at most one draw
per tick, and the generator for an (agent, tick) cell is only materialised
when that draw actually happens, so runs that never draw (act_probability
0 or 1 with no resume spread) pay nothing for it.  Because every cell is an
independent stream, changing the agent count, the evaluation order, or the
coordinator mode never reshuffles another agent's randomness.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from math import ceil

import numpy as np

from .circuit import LoadSet, SourceModel, relative_voltage, solve_bus_voltage
from .config import ConfigError, ScenarioConfig
from .devices import (
    CAUSE_DEADLINE,
    CAUSE_FORCED,
    FridgeAgent,
    ON,
    OFF,
    POSTPONED,
    WasherAgent,
    fridge_commit,
    fridge_decide,
    washer_commit,
    washer_decide,
)
from .market import (
    FLOAT_FMT,
    PriceProcessParams,
    generate_price_series,
    load_price_series,
    price_with_feedback,
)

# sub-stream tags (second entry of the seed tuple)
STREAM_INIT = 1  # per-agent initial conditions: (seed, 1, agent_id)
STREAM_TICK = 2  # per-agent per-tick draws: (seed, 2, agent_id, tick)
STREAM_MARKET = 3  # exogenous price process: (seed, 3)

TRACE_COLUMNS = (
    "tick",
    "bus_voltage",
    "rel_voltage",
    "n_flexible_on",
    "price",
    "n_postponed",
    "n_vetoed",
    "n_forced",
)


class LazyRng:
    """Generator for one (agent, tick) cell, materialised on first draw."""

    __slots__ = ("_key", "_rng")

    def __init__(self, key):
        self._key = key
        self._rng = None

    def _generator(self):
        if self._rng is None:
            self._rng = np.random.default_rng(self._key)
        return self._rng

    def random(self):
        return self._generator().random()

    def integers(self, low, high=None):
        return self._generator().integers(low, high)


def agent_rng(seed: int, agent_id: int, tick: int) -> LazyRng:
    """The per-(agent, tick) draw stream used inside the tick loop."""
    return LazyRng((seed, STREAM_TICK, agent_id, tick))


def apply_disturbance(v_source: float, disturbances, tick: int) -> float:
    """Effective source volts at a tick: last scheduled step with tick <= t."""
    effective = v_source
    for event_tick, volts in disturbances:
        if event_tick > tick:
            break
        effective = volts
    return effective


@dataclass
class Coordinator:
    """Central activation permit dispenser.

    Only time_division actually intervenes: per tick it grants at most
    permits_per_tick switch-on permits round-robin by agent id, starting
    from a cursor that advances past the last grantee.  The modes none and
    randomized grant everything (randomized detuning lives in the agent
    policy, not here).
    """

    mode: str = "none"
    permits_per_tick: int | None = None
    cursor: int = 0

    def assign_permits(self, requests) -> set:
        if self.mode != "time_division":
            return set(requests)
        if not requests:
            return set()
        ordered = sorted(requests)
        pivot = bisect.bisect_left(ordered, self.cursor)
        ring = ordered[pivot:] + ordered[:pivot]
        granted = ring[: self.permits_per_tick]
        self.cursor = granted[-1] + 1
        return set(granted)


@dataclass
class SimTrace:
    """Per-tick record of one run; arrays all share length n_ticks.

    price is None for fridge runs (no market).  expectation_dispersion
    (washer runs) is the spread max - min of the fleet's smoothed price
    expectations after each tick.  agent_states is the per-tick flexible-on
    matrix, recorded only on request.
    """

    n_agents: int
    band: tuple
    bus_voltage: np.ndarray
    rel_voltage: np.ndarray
    n_flexible_on: np.ndarray
    n_postponed: np.ndarray
    n_vetoed: np.ndarray
    n_forced: np.ndarray
    price: np.ndarray | None = None
    expectation_dispersion: np.ndarray | None = None
    agent_states: np.ndarray | None = None

    @property
    def n_ticks(self) -> int:
        return len(self.rel_voltage)


def _build_fridges(cfg, seed):
    agents = []
    period = cfg.on_duration + cfg.off_duration
    cap = cfg.max_postpone if cfg.max_postpone is not None else 0
    for i in range(cfg.count):
        rng = np.random.default_rng((seed, STREAM_INIT, i))
        phase = int(rng.integers(period))
        agents.append(
            FridgeAgent(
                agent_id=i,
                on_duration=cfg.on_duration,
                off_duration=cfg.off_duration,
                phase=phase,
                mode=ON if phase < cfg.on_duration else OFF,
                max_postpone=cap,
            )
        )
    return agents


def _build_washers(cfg, seed):
    agents = []
    horizons = np.empty(cfg.count, dtype=np.int64)
    next_arrival = np.empty(cfg.count, dtype=np.int64)
    ref_lo, ref_hi = cfg.initial_reference_price
    h_lo, h_hi = cfg.deadline_horizon
    for i in range(cfg.count):
        rng = np.random.default_rng((seed, STREAM_INIT, i))
        reference = float(rng.uniform(ref_lo, ref_hi))
        horizons[i] = int(rng.integers(h_lo, h_hi + 1))
        next_arrival[i] = int(rng.integers(0, cfg.first_arrival_max + 1))
        agents.append(WasherAgent(agent_id=i, reference_price=reference))
    return agents, horizons, next_arrival


def _exogenous_prices(market, seed, n_ticks):
    """Per-period exogenous price array covering the whole run."""
    n_periods = max(1, ceil(n_ticks / market.period_length))
    if market.file is not None:
        series = load_price_series(market.file, market.period_length)
        if len(series.prices) < n_periods:
            raise ConfigError(
                f"market.file: {market.file} holds {len(series.prices)} periods, "
                f"run needs {n_periods}"
            )
        return np.asarray(series.prices, dtype=float)[:n_periods]
    params = PriceProcessParams(
        mean=market.mean,
        reversion=market.reversion,
        noise_std=market.noise_std,
        low_price_events=[tuple(e) for e in market.overrides],
        initial_price=market.initial_price,
    )
    rng = np.random.default_rng((seed, STREAM_MARKET))
    return np.asarray(
        generate_price_series(params, n_periods, market.period_length, rng).prices,
        dtype=float,
    )


def run(
    config: ScenarioConfig,
    agent_order=None,
    record_agent_states: bool = False,
) -> SimTrace:
    """Execute a scenario and return its trace.

    agent_order permutes the within-tick evaluation order (the trace must
    not depend on it); record_agent_states additionally captures the
    per-tick flexible-on matrix for audits.
    """
    seed = config.run.seed
    if seed is None:
        raise ConfigError("run.seed: required to run (set it or pass a seed override)")
    n_ticks = config.run.n_ticks
    n_agents = config.agents.count
    kind = config.kind
    source = config.source
    policy = config.policy

    if agent_order is None:
        order = range(n_agents)
    else:
        order = list(agent_order)
        if sorted(order) != list(range(n_agents)):
            raise ValueError("agent_order must be a permutation of the agent ids")

    g_base = 1.0 / np.asarray(config.agents.r_base, dtype=float)
    g_flex = 1.0 / np.asarray(config.agents.r_flex, dtype=float)

    if kind == "fridge":
        agents = _build_fridges(config.agents, seed)
        horizons = next_arrival = None
        gap_lo = gap_hi = len_lo = len_hi = 0
        exo_prices = None
        period_length = 0
    else:
        agents, horizons, next_arrival = _build_washers(config.agents, seed)
        gap_lo, gap_hi = config.agents.arrival_gap
        len_lo, len_hi = config.agents.job_length
        exo_prices = _exogenous_prices(config.market, seed, n_ticks)
        period_length = config.market.period_length
        feedback_slope = config.market.feedback_slope
        baseline_share = config.market.baseline_share

    flex_on = np.array([a.flexible_on for a in agents], dtype=bool) if kind == "fridge" else np.zeros(n_agents, dtype=bool)
    loads = LoadSet(g_base=g_base, g_flex=g_flex, flex_on=flex_on)

    # step-function source voltage per tick
    v_source = np.full(n_ticks, source.v_source, dtype=float)
    for event_tick, volts in source.disturbances:
        if event_tick < n_ticks:
            v_source[event_tick:] = volts

    coordinator = Coordinator(
        mode=config.coordinator.mode,
        permits_per_tick=config.coordinator.permits_per_tick,
    )

    bus = np.empty(n_ticks, dtype=float)
    rel = np.empty(n_ticks, dtype=float)
    on_count = np.empty(n_ticks, dtype=np.int64)
    postponed = np.zeros(n_ticks, dtype=np.int64)
    vetoed = np.zeros(n_ticks, dtype=np.int64)
    forced = np.zeros(n_ticks, dtype=np.int64)
    price_arr = np.empty(n_ticks, dtype=float) if kind == "washer" else None
    dispersion = np.empty(n_ticks, dtype=float) if kind == "washer" else None
    states = np.empty((n_ticks, n_agents), dtype=bool) if record_agent_states else None

    # the signal agents see at tick 0: the initial states solved at tick 0's source
    v_init = apply_disturbance(source.v_source, source.disturbances, 0)
    rel_prev = relative_voltage(
        solve_bus_voltage(SourceModel(v_source=v_init, r_source=source.r_source), loads),
        source.v_nominal,
    )

    decisions = [None] * n_agents
    eff_price = 0.0
    current_period = -1
    period_on_sum = 0
    period_tick_count = 0

    for t in range(n_ticks):
        if kind == "washer":
            k = t // period_length
            if k != current_period:
                if current_period >= 0 and feedback_slope != 0.0 and period_tick_count:
                    share = period_on_sum / (period_tick_count * max(1, n_agents))
                    eff_price = price_with_feedback(
                        float(exo_prices[k]), share, feedback_slope, baseline_share
                    )
                else:
                    eff_price = float(exo_prices[k])
                current_period = k
                period_on_sum = 0
                period_tick_count = 0

        requests = set()
        if kind == "fridge":
            for i in order:
                d = fridge_decide(agents[i], policy, rel_prev, agent_rng(seed, i, t))
                decisions[i] = d
                if d.wants_on:
                    requests.add(i)
        else:
            for i in order:
                a = agents[i]
                rng = agent_rng(seed, i, t)
                if a.running_until is not None and t >= a.running_until:
                    a.running_until = None  # job done; schedule the next arrival
                    next_arrival[i] = t + int(rng.integers(gap_lo, gap_hi + 1))
                if a.running_until is None and not a.job_pending and t >= next_arrival[i]:
                    a.assign_job(int(rng.integers(len_lo, len_hi + 1)), t + horizons[i])
                d = washer_decide(a, policy, eff_price, rel_prev, t)
                decisions[i] = d
                if d.wants_on:
                    requests.add(i)

        granted = coordinator.assign_permits(requests)

        n_forced_t = 0
        n_vetoed_t = 0
        if kind == "fridge":
            for i in order:
                d = decisions[i]
                ok = i in granted
                flex_on[i] = fridge_commit(agents[i], d, granted=ok)
                if d.wants_on and ok and d.cause == CAUSE_FORCED:
                    n_forced_t += 1
            postponed[t] = sum(1 for a in agents if a.mode == POSTPONED)
        else:
            for i in order:
                d = decisions[i]
                ok = i in granted
                if d.vetoed:
                    n_vetoed_t += 1
                flex_on[i] = washer_commit(agents[i], policy, d, eff_price, t, granted=ok)
                if d.wants_on and ok and d.cause == CAUSE_DEADLINE:
                    n_forced_t += 1
            refs = [a.reference_price for a in agents]
            dispersion[t] = (max(refs) - min(refs)) if refs else 0.0
            price_arr[t] = eff_price

        v_bus = solve_bus_voltage(
            SourceModel(v_source=float(v_source[t]), r_source=source.r_source), loads
        )
        bus[t] = v_bus
        rel[t] = relative_voltage(v_bus, source.v_nominal)
        on_count[t] = int(flex_on.sum())
        forced[t] = n_forced_t
        vetoed[t] = n_vetoed_t
        if record_agent_states:
            states[t] = flex_on
        if kind == "washer":
            period_on_sum += on_count[t]
            period_tick_count += 1
        rel_prev = rel[t]

    return SimTrace(
        n_agents=n_agents,
        band=tuple(config.run.band),
        bus_voltage=bus,
        rel_voltage=rel,
        n_flexible_on=on_count,
        n_postponed=postponed,
        n_vetoed=vetoed,
        n_forced=forced,
        price=price_arr,
        expectation_dispersion=dispersion,
        agent_states=states,
    )


# ---------------------------------------------------------------------------
# trace serialization


def write_trace(trace: SimTrace, path) -> None:
    """Write the per-tick trace CSV (9-significant-digit floats).

    The price column is left empty on fridge runs, which carry no market.
    """
    with open(path, "w", newline="") as fh:
        fh.write(",".join(TRACE_COLUMNS) + "\n")
        for t in range(trace.n_ticks):
            price_cell = "" if trace.price is None else FLOAT_FMT % trace.price[t]
            fh.write(
                f"{t},{FLOAT_FMT % trace.bus_voltage[t]},{FLOAT_FMT % trace.rel_voltage[t]},"
                f"{trace.n_flexible_on[t]},{price_cell},{trace.n_postponed[t]},"
                f"{trace.n_vetoed[t]},{trace.n_forced[t]}\n"
            )


def load_trace(path, n_agents: int = 0) -> SimTrace:
    """Read a trace CSV back into a SimTrace.

    The file does not store the fleet size; pass n_agents when metrics that
    need it (the synchronization index) are wanted.
    """
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty trace file")
    header = lines[0].split(",")
    if tuple(header) != TRACE_COLUMNS:
        raise ValueError(
            f"{path}: unexpected columns {header!r}, expected {list(TRACE_COLUMNS)}"
        )
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(TRACE_COLUMNS):
            raise ValueError(f"{path}:{lineno}: expected {len(TRACE_COLUMNS)} cells")
        try:
            rows.append(
                (
                    int(cells[0]),
                    float(cells[1]),
                    float(cells[2]),
                    int(cells[3]),
                    float(cells[4]) if cells[4] else None,
                    int(cells[5]),
                    int(cells[6]),
                    int(cells[7]),
                )
            )
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed trace row {line!r}") from None
    for t, row in enumerate(rows):
        if row[0] != t:
            raise ValueError(f"{path}: tick column must count 0..n-1, got {row[0]} at row {t}")
    prices = [r[4] for r in rows]
    has_price = any(p is not None for p in prices)
    if has_price and not all(p is not None for p in prices):
        raise ValueError(f"{path}: price column must be fully present or fully empty")
    return SimTrace(
        n_agents=n_agents,
        band=(0.98, 1.02),
        bus_voltage=np.array([r[1] for r in rows], dtype=float),
        rel_voltage=np.array([r[2] for r in rows], dtype=float),
        n_flexible_on=np.array([r[3] for r in rows], dtype=np.int64),
        n_postponed=np.array([r[5] for r in rows], dtype=np.int64),
        n_vetoed=np.array([r[6] for r in rows], dtype=np.int64),
        n_forced=np.array([r[7] for r in rows], dtype=np.int64),
        price=np.array(prices, dtype=float) if has_price else None,
    )
