"""DC supply bus electrical model.

A single stiff source behind an internal resistance feeds one shared bus.
Every appliance hangs off that bus as a resistive branch: a base branch that
is always connected and a flexible branch that is switched by the appliance
policy.  With all branches in parallel the bus voltage follows the voltage
divider

    v_bus = v_source / (1 + r_source * G_total)

where G_total is the summed conductance of all connected branches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class SourceModel:
    """Ideal source voltage (volts) behind a series resistance (ohms)."""

    v_source: float
    r_source: float

    def __post_init__(self) -> None:
        if self.v_source <= 0.0:
            raise ValueError(f"v_source must be > 0, got {self.v_source}")
        if self.r_source <= 0.0:
            raise ValueError(f"r_source must be > 0, got {self.r_source}")


@dataclass
class LoadSet:
    """Per-agent branch conductances (siemens) plus flexible on/off flags.

    Base branches are always connected.  Flexible branch i contributes only
    while flex_on[i] is set.  Arrays share one length (one slot per agent).
    """

    g_base: np.ndarray
    g_flex: np.ndarray
    flex_on: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.g_base = np.asarray(self.g_base, dtype=float)
        self.g_flex = np.asarray(self.g_flex, dtype=float)
        if self.flex_on is None:
            self.flex_on = np.zeros(self.g_base.shape, dtype=bool)
        self.flex_on = np.asarray(self.flex_on, dtype=bool)
        if not (self.g_base.shape == self.g_flex.shape == self.flex_on.shape):
            raise ValueError("g_base, g_flex and flex_on must have equal length")
        if np.any(self.g_base < 0.0) or np.any(self.g_flex < 0.0):
            raise ValueError("branch conductances must be >= 0")

    @classmethod
    def from_resistances(cls, r_base, r_flex, flex_on=None) -> "LoadSet":
        """Build from branch resistances in ohms (must be > 0)."""
        r_base = np.asarray(r_base, dtype=float)
        r_flex = np.asarray(r_flex, dtype=float)
        if np.any(r_base <= 0.0) or np.any(r_flex <= 0.0):
            raise ValueError("branch resistances must be > 0 ohms")
        return cls(1.0 / r_base, 1.0 / r_flex, flex_on)

    @property
    def n_agents(self) -> int:
        return int(self.g_base.size)

    @property
    def n_flexible_on(self) -> int:
        return int(np.count_nonzero(self.flex_on))

    def total_conductance(self) -> float:
        """Summed conductance of every connected branch, in siemens."""
        return float(self.g_base.sum() + self.g_flex[self.flex_on].sum())


def solve_bus_voltage(source: SourceModel, loads: LoadSet) -> float:
    """Bus voltage of the divider source -> r_source -> parallel loads.

    With nothing connected (G_total = 0) the bus floats at the open-circuit
    source voltage.
    """
    g_total = loads.total_conductance()
    if g_total == 0.0:
        return source.v_source
    return source.v_source / (1.0 + source.r_source * g_total)


def relative_voltage(v_bus: float, v_nominal: float) -> float:
    """Bus voltage as a fraction of the declared nominal operating point."""
    if v_nominal <= 0.0:
        raise ValueError(f"v_nominal must be > 0, got {v_nominal}")
    return v_bus / v_nominal
