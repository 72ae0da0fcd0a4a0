"""Appliance state machines reacting to bus voltage and price signals.

Two appliance families are modelled:

* Fridges run a fixed duty cycle (on_duration ticks on, off_duration ticks
  off).  When the cycle schedules a turn-on while the relative bus voltage
  sits below threshold_low, the fridge postpones the activation; when the
  voltage overshoots threshold_high mid-off, it may pull the activation
  forward.  Both reactions pass through a randomized gate (Bernoulli with
  act_probability) so that populations can be detuned from reacting in
  lockstep, and a postponed fridge re-enters service after a uniformly drawn
  resume wait.  postponed_for is capped by max_postpone: at the cap the
  fridge must run regardless of voltage (mode FORCED).

* Washers hold one pending job at a time and start it when the price signal
  drops below bargain_factor times their own smoothed price expectation, or
  unconditionally once the job deadline arrives.  An optional voltage check
  vetoes price-triggered starts while the relative voltage is below
  voltage_limit.  The expectation is an EWMA updated every tick with the
  broadcast price, so all expectations contract toward the shared signal.

Every step is split into a decide part (reads signals, performs any random
draws, stages the outcome) and a commit part (applies the staged outcome,
optionally denied by a coordinator permit).  fridge_step / washer_step glue
the two for uncoordinated operation.  Agents are mutated in place and
returned.  Threshold comparisons are strict: a signal exactly at a threshold
is compliant and triggers nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

# fridge modes
ON = "on"
OFF = "off"
POSTPONED = "postponed"
FORCED = "forced"

_MODES = (ON, OFF, POSTPONED, FORCED)

# activation causes (reported per tick by the engine)
CAUSE_CYCLE = "cycle"
CAUSE_EARLY = "early"
CAUSE_RESUME = "resume"
CAUSE_FORCED = "forced"
CAUSE_BARGAIN = "bargain"
CAUSE_DEADLINE = "deadline"


def randomized_gate(trigger: bool, act_probability: float, rng) -> bool:
    """Bernoulli gate on a reaction trigger.

    Returns False when the trigger is off; otherwise True with probability
    act_probability.  The degenerate probabilities consume no randomness, so
    act_probability 1.0 reproduces the always-react (naive) policy draw for
    draw and 0.0 disables the reaction entirely.
    """
    if not trigger:
        return False
    if act_probability >= 1.0:
        return True
    if act_probability <= 0.0:
        return False
    return rng.random() < act_probability


def update_reference_price(reference: float, price: float, ewma_lambda: float) -> float:
    """One EWMA step: (1 - lambda) * reference + lambda * price."""
    return (1.0 - ewma_lambda) * reference + ewma_lambda * price


def voltage_veto(candidate: bool, rel_voltage: float, voltage_limit: float) -> bool:
    """True when a candidate start may proceed; vetoed below voltage_limit."""
    return candidate and rel_voltage >= voltage_limit


# ---------------------------------------------------------------------------
# fridges


@dataclass
class FridgePolicy:
    """Voltage-reactive duty-cycle policy parameters."""

    threshold_low: float = 0.98
    threshold_high: float = 1.02
    act_probability: float = 1.0
    resume_wait_max: int = 0

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold_low <= 1.0:
            raise ValueError(f"threshold_low must be in (0, 1], got {self.threshold_low}")
        if self.threshold_high < 1.0:
            raise ValueError(f"threshold_high must be >= 1, got {self.threshold_high}")
        if not 0.0 <= self.act_probability <= 1.0:
            raise ValueError(
                f"act_probability must be in [0, 1], got {self.act_probability}"
            )
        if self.resume_wait_max < 0:
            raise ValueError(f"resume_wait_max must be >= 0, got {self.resume_wait_max}")


@dataclass
class FridgeAgent:
    """Duty-cycled fridge. phase counts ticks into the on+off cycle.

    While ON or FORCED the phase lies in [0, on_duration); while OFF it lies
    in [on_duration, on_duration + off_duration).  A POSTPONED fridge holds
    phase 0 frozen (the cycle is stretched, not skipped) and resume_wait is
    its pending activation countdown (None while still waiting for the
    voltage to recover).
    """

    agent_id: int
    on_duration: int
    off_duration: int
    phase: int = 0
    mode: str = ON
    postponed_for: int = 0
    max_postpone: int = 0  # 0 -> default 3 * off_duration
    resume_wait: int | None = None

    def __post_init__(self) -> None:
        if self.on_duration < 1 or self.off_duration < 1:
            raise ValueError("on_duration and off_duration must be >= 1 ticks")
        if self.max_postpone == 0:
            self.max_postpone = 3 * self.off_duration
        if self.max_postpone < 1:
            raise ValueError(f"max_postpone must be >= 1, got {self.max_postpone}")
        if self.mode not in _MODES:
            raise ValueError(f"unknown fridge mode {self.mode!r}")
        if not 0 <= self.phase < self.on_duration + self.off_duration:
            raise ValueError(f"phase {self.phase} outside the duty cycle")
        if not 0 <= self.postponed_for <= self.max_postpone:
            raise ValueError("postponed_for must stay within [0, max_postpone]")

    @property
    def flexible_on(self) -> bool:
        return self.mode == ON or self.mode == FORCED


@dataclass
class FridgeDecision:
    """Staged outcome of one fridge tick.

    When wants_on is set the engine may deny the activation (coordinator
    permits); the staged tuples are (mode, phase, postponed_for, resume_wait).
    """

    wants_on: bool
    cause: str | None
    next_state: tuple
    denied_state: tuple | None = None


def fridge_decide(agent: FridgeAgent, policy: FridgePolicy, rel_voltage: float, rng) -> FridgeDecision:
    """Advance one tick worth of fridge logic without touching the agent."""
    on_d = agent.on_duration
    period = on_d + agent.off_duration

    if agent.mode == ON or agent.mode == FORCED:
        nxt = agent.phase + 1
        if nxt >= on_d:  # on-window over, fall back to the off leg
            return FridgeDecision(False, None, (OFF, nxt, 0, None))
        return FridgeDecision(False, None, (agent.mode, nxt, 0, None))

    if agent.mode == OFF:
        nxt = agent.phase + 1
        if nxt >= period:  # cycle schedules the turn-on now
            if rel_voltage < policy.threshold_low and randomized_gate(
                True, policy.act_probability, rng
            ):
                staged = (POSTPONED, 0, 1, None)
                if 1 >= agent.max_postpone:  # degenerate cap: must run at once
                    return FridgeDecision(
                        True, CAUSE_FORCED, (FORCED, 0, 0, None), staged
                    )
                return FridgeDecision(False, None, staged)
            return FridgeDecision(
                True, CAUSE_CYCLE, (ON, 0, 0, None), (POSTPONED, 0, 1, 0)
            )
        # mid off-leg: overshoot may pull the activation forward
        if rel_voltage > policy.threshold_high and randomized_gate(
            True, policy.act_probability, rng
        ):
            return FridgeDecision(
                True, CAUSE_EARLY, (ON, 0, 0, None), (OFF, nxt, 0, None)
            )
        return FridgeDecision(False, None, (OFF, nxt, 0, None))

    # POSTPONED: count the tick, then either force, count down, or resume
    pf = min(agent.postponed_for + 1, agent.max_postpone)
    if pf >= agent.max_postpone:
        return FridgeDecision(
            True, CAUSE_FORCED, (FORCED, 0, 0, None), (POSTPONED, 0, pf, 0)
        )
    if agent.resume_wait is not None:
        if agent.resume_wait - 1 <= 0:
            return FridgeDecision(
                True, CAUSE_RESUME, (ON, 0, 0, None), (POSTPONED, 0, pf, 0)
            )
        return FridgeDecision(False, None, (POSTPONED, 0, pf, agent.resume_wait - 1))
    if rel_voltage >= policy.threshold_low:  # recovery: draw the resume wait
        if policy.resume_wait_max > 0:
            wait = int(rng.integers(0, policy.resume_wait_max + 1))
        else:
            wait = 0
        if wait == 0:
            return FridgeDecision(
                True, CAUSE_RESUME, (ON, 0, 0, None), (POSTPONED, 0, pf, 0)
            )
        return FridgeDecision(False, None, (POSTPONED, 0, pf, wait))
    return FridgeDecision(False, None, (POSTPONED, 0, pf, None))


def fridge_commit(agent: FridgeAgent, decision: FridgeDecision, granted: bool = True) -> bool:
    """Apply a staged fridge outcome; returns the committed flexible-on flag."""
    if decision.wants_on and not granted:
        state = decision.denied_state
    else:
        state = decision.next_state
    agent.mode, agent.phase, agent.postponed_for, agent.resume_wait = state
    return agent.flexible_on


def fridge_step(agent: FridgeAgent, policy: FridgePolicy, rel_voltage: float, rng):
    """Uncoordinated fridge tick: decide and commit in one go."""
    decision = fridge_decide(agent, policy, rel_voltage, rng)
    on = fridge_commit(agent, decision, granted=True)
    return agent, on


# ---------------------------------------------------------------------------
# washers


@dataclass
class WasherPolicy:
    """Price-chasing start policy with optional voltage check."""

    ewma_lambda: float = 0.02
    bargain_factor: float = 0.8
    voltage_check_enabled: bool = False
    voltage_limit: float = 0.95

    def __post_init__(self) -> None:
        if not 0.0 < self.ewma_lambda <= 1.0:
            raise ValueError(f"ewma_lambda must be in (0, 1], got {self.ewma_lambda}")
        if self.bargain_factor <= 0.0:
            raise ValueError(f"bargain_factor must be > 0, got {self.bargain_factor}")
        if self.voltage_limit <= 0.0:
            raise ValueError(f"voltage_limit must be > 0, got {self.voltage_limit}")


@dataclass
class WasherAgent:
    """Washer with at most one pending job and a smoothed price expectation."""

    agent_id: int
    reference_price: float
    job_pending: bool = False
    job_length: int = 0
    job_deadline: int = 0
    running_until: int | None = None

    def __post_init__(self) -> None:
        if self.reference_price < 0.0:
            raise ValueError("reference_price must be >= 0")
        if self.job_pending and self.job_length < 1:
            raise ValueError("a pending job needs job_length >= 1")

    def running(self, tick: int) -> bool:
        return self.running_until is not None and tick < self.running_until

    def assign_job(self, length: int, deadline: int) -> None:
        """Hand the washer a fresh job (engine-side arrival bookkeeping)."""
        if self.job_pending or self.running_until is not None:
            raise ValueError("washer already busy, cannot assign a job")
        if length < 1:
            raise ValueError(f"job_length must be >= 1, got {length}")
        self.job_pending = True
        self.job_length = length
        self.job_deadline = deadline


@dataclass
class WasherDecision:
    """Staged outcome of one washer tick (start wish plus veto bookkeeping)."""

    wants_on: bool
    cause: str | None
    vetoed: bool


def washer_decide(
    agent: WasherAgent, policy: WasherPolicy, price: float, rel_voltage: float, tick: int
) -> WasherDecision:
    """Start decision for the pending job, if any.

    Deadline starts bypass both the price comparison and the voltage check.
    The decision reads the expectation as formed on previous ticks; the EWMA
    update itself happens at commit time.
    """
    if not agent.job_pending or agent.running(tick):
        return WasherDecision(False, None, False)
    if tick >= agent.job_deadline:
        return WasherDecision(True, CAUSE_DEADLINE, False)
    if price <= policy.bargain_factor * agent.reference_price:
        if policy.voltage_check_enabled and not voltage_veto(True, rel_voltage, policy.voltage_limit):
            return WasherDecision(False, None, True)
        return WasherDecision(True, CAUSE_BARGAIN, False)
    return WasherDecision(False, None, False)


def washer_commit(
    agent: WasherAgent,
    policy: WasherPolicy,
    decision: WasherDecision,
    price: float,
    tick: int,
    granted: bool = True,
) -> bool:
    """Apply a staged washer outcome and the unconditional EWMA update."""
    if decision.wants_on and granted:
        agent.running_until = tick + agent.job_length
        agent.job_pending = False
    agent.reference_price = update_reference_price(
        agent.reference_price, price, policy.ewma_lambda
    )
    return agent.running(tick)


def washer_step(
    agent: WasherAgent, policy: WasherPolicy, price: float, rel_voltage: float, tick: int, rng=None
):
    """Uncoordinated washer tick.  rng is accepted for signature symmetry;
    the start rule itself draws nothing."""
    if agent.running_until is not None and tick >= agent.running_until:
        agent.running_until = None  # job finished on an earlier tick
    decision = washer_decide(agent, policy, price, rel_voltage, tick)
    on = washer_commit(agent, policy, decision, price, tick, granted=True)
    return agent, on
