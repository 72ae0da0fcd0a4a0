"""Stability metrics and time-of-day aggregation for run artifacts.

The stability side summarises a relative-voltage trace against an operating
band: extreme excursions, how often the trace leaves the band, whether (and
when) it settles inside for good, and how synchronized the flexible load is
compared to independent switching.  The time-of-day side bins long
measurement records (e.g. a year of grid frequency samples) by
seconds-since-midnight with a single-pass streaming mean/variance, and
scores periodic deviations such as full-hour spikes.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime

import numpy as np

from .market import FLOAT_FMT

SECONDS_PER_DAY = 86400


@dataclass
class StabilityReport:
    """Summary of one run's relative-voltage trace."""

    min_rel_voltage: float
    max_rel_voltage: float
    band_crossings: int
    settling_tick: int | None
    sync_index: float | None
    band: tuple
    expectation_dispersion: np.ndarray | None = None


def count_band_exits(rel_voltage: np.ndarray, band) -> int:
    """Strict exits of the band, the state before the trace presumed inside."""
    low, high = band
    inside = (rel_voltage >= low) & (rel_voltage <= high)
    exits = int(np.count_nonzero(inside[:-1] & ~inside[1:]))
    if not inside[0]:
        exits += 1
    return exits


def settling_tick_of(rel_voltage: np.ndarray, band) -> int | None:
    """First tick after which the trace never leaves the band again."""
    low, high = band
    inside = (rel_voltage >= low) & (rel_voltage <= high)
    if not inside[-1]:
        return None
    outside = np.flatnonzero(~inside)
    if outside.size == 0:
        return 0
    return int(outside[-1]) + 1


def synchronization_index(n_flexible_on: np.ndarray, n_agents: int) -> float | None:
    """Observed std of the on-count over the Bernoulli-independent std.

    Values near 1 mean the population switches as independently as coin
    flips with the observed duty fraction; sqrt(n_agents) is the fully
    synchronized ceiling.  Undefined (None) when the duty fraction is
    degenerate (all on or all off throughout).
    """
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    x = np.asarray(n_flexible_on, dtype=float)
    if x.size < 2:
        raise ValueError("need at least 2 ticks for a synchronization index")
    p_hat = float(x.mean()) / n_agents
    if p_hat <= 0.0 or p_hat >= 1.0:
        return None
    return float(x.std() / math.sqrt(n_agents * p_hat * (1.0 - p_hat)))


def stability_metrics(trace, band=(0.98, 1.02)) -> StabilityReport:
    """Compute the StabilityReport of a simulation trace.

    Duck-typed over the trace: needs rel_voltage and n_flexible_on arrays,
    n_agents, and optionally an expectation_dispersion series.
    """
    low, high = band
    if not low < high:
        raise ValueError(f"band must satisfy low < high, got {band}")
    rel = np.asarray(trace.rel_voltage, dtype=float)
    if rel.size == 0:
        raise ValueError("cannot summarise an empty trace")
    if trace.n_agents >= 1 and rel.size >= 2:
        sync = synchronization_index(trace.n_flexible_on, trace.n_agents)
    else:
        sync = None
    return StabilityReport(
        min_rel_voltage=float(rel.min()),
        max_rel_voltage=float(rel.max()),
        band_crossings=count_band_exits(rel, band),
        settling_tick=settling_tick_of(rel, band),
        sync_index=sync,
        band=(low, high),
        expectation_dispersion=getattr(trace, "expectation_dispersion", None),
    )


# ---------------------------------------------------------------------------
# time-of-day profile


def parse_timestamp(cell: str) -> float:
    """Seconds since midnight from an epoch number or ISO-8601 timestamp."""
    text = cell.strip()
    try:
        return float(text) % SECONDS_PER_DAY
    except ValueError:
        pass
    iso = text[:-1] + "+00:00" if text.endswith("Z") else text
    try:
        t = datetime.fromisoformat(iso)
    except ValueError:
        raise ValueError(f"not an epoch or ISO-8601 timestamp: {cell!r}") from None
    return t.hour * 3600 + t.minute * 60 + t.second + t.microsecond / 1e6


@dataclass
class TimeOfDayProfile:
    """Streaming per-bin mean/std over seconds-since-midnight bins.

    Uses Welford accumulators per bin (count, mean, sum of squared
    deviations), so a year of samples streams through in one pass and two
    profiles can be merged exactly.
    """

    bin_width: int
    count: np.ndarray = field(default=None)  # type: ignore[assignment]
    mean: np.ndarray = field(default=None)  # type: ignore[assignment]
    m2: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.bin_width < 1 or SECONDS_PER_DAY % self.bin_width != 0:
            raise ValueError(
                f"bin_width must divide {SECONDS_PER_DAY} s, got {self.bin_width}"
            )
        n = self.n_bins
        if self.count is None:
            self.count = np.zeros(n, dtype=np.int64)
            self.mean = np.zeros(n, dtype=float)
            self.m2 = np.zeros(n, dtype=float)

    @property
    def n_bins(self) -> int:
        return SECONDS_PER_DAY // self.bin_width

    def add(self, seconds_since_midnight: float, value: float) -> None:
        b = int(seconds_since_midnight // self.bin_width)
        if not 0 <= b < self.n_bins:
            raise ValueError(f"timestamp {seconds_since_midnight} outside the day")
        self.count[b] += 1
        delta = value - self.mean[b]
        self.mean[b] += delta / self.count[b]
        self.m2[b] += delta * (value - self.mean[b])

    def std(self) -> np.ndarray:
        """Population std per bin; NaN where the bin is missing (count 0)."""
        out = np.full(self.n_bins, np.nan)
        seen = self.count > 0
        out[seen] = np.sqrt(self.m2[seen] / self.count[seen])
        return out

    def missing(self) -> np.ndarray:
        return self.count == 0

    def bin_starts(self) -> np.ndarray:
        return np.arange(self.n_bins, dtype=np.int64) * self.bin_width

    def merge(self, other: "TimeOfDayProfile") -> "TimeOfDayProfile":
        """Exact combination of two profiles (parallel Welford merge)."""
        if other.bin_width != self.bin_width:
            raise ValueError("cannot merge profiles with different bin widths")
        n = self.count + other.count
        out = TimeOfDayProfile(self.bin_width)
        both = (self.count > 0) & (other.count > 0)
        only_a = (self.count > 0) & ~both
        only_b = (other.count > 0) & ~both
        out.count = n
        out.mean[only_a] = self.mean[only_a]
        out.m2[only_a] = self.m2[only_a]
        out.mean[only_b] = other.mean[only_b]
        out.m2[only_b] = other.m2[only_b]
        delta = other.mean[both] - self.mean[both]
        na, nb = self.count[both], other.count[both]
        out.mean[both] = self.mean[both] + delta * nb / n[both]
        out.m2[both] = self.m2[both] + other.m2[both] + delta**2 * na * nb / n[both]
        return out


def time_of_day_profile(samples, bin_width: int) -> TimeOfDayProfile:
    """Stream (seconds_since_midnight, value) samples into a profile."""
    profile = TimeOfDayProfile(bin_width)
    for seconds, value in samples:
        profile.add(seconds, value)
    return profile


def detect_periodic_deviation(profile: TimeOfDayProfile, period: int) -> float:
    """Excess absolute deviation of bins sitting on the period boundary.

    Deviations are |bin mean - overall mean of bin means|, missing bins
    excluded.  The score is the mean deviation of bins whose start lies at
    phase 0 of the period minus the mean deviation of all other bins; a flat
    profile scores 0, profiles with boundary-locked artefacts score > 0.
    """
    if period < 1 or period % profile.bin_width != 0:
        raise ValueError(
            f"period must be a positive multiple of bin_width {profile.bin_width}, "
            f"got {period}"
        )
    if SECONDS_PER_DAY % period != 0:
        raise ValueError(f"period must divide {SECONDS_PER_DAY} s, got {period}")
    seen = profile.count > 0
    if not np.any(seen):
        raise ValueError("profile has no populated bins")
    phase0 = (profile.bin_starts() % period == 0) & seen
    others = ~(profile.bin_starts() % period == 0) & seen
    if not np.any(phase0) or not np.any(others):
        raise ValueError("need populated bins both on and off the period boundary")
    overall = float(profile.mean[seen].mean())
    dev = np.abs(profile.mean - overall)
    return float(dev[phase0].mean() - dev[others].mean())


# ---------------------------------------------------------------------------
# CSV surfaces


def load_frequency_csv(path):
    """Yield (seconds_since_midnight, value) rows from a timestamp,value CSV."""
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(
                    f"{path}: line {lineno}: expected timestamp,value "
                    f"({len(row)} columns found)"
                )
            if lineno == 1 and row[0].strip().lower() == "timestamp":
                continue
            try:
                seconds = parse_timestamp(row[0])
                value = float(row[1])
            except ValueError as exc:
                raise ValueError(f"{path}: line {lineno}: {exc}") from None
            yield seconds, value


def write_profile_csv(profile: TimeOfDayProfile, path) -> None:
    """bin_start_seconds,mean,std,count rows; missing bins keep empty stats."""
    stds = profile.std()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_start_seconds", "mean", "std", "count"])
        for b, start in enumerate(profile.bin_starts()):
            if profile.count[b] == 0:
                writer.writerow([start, "", "", 0])
            else:
                writer.writerow(
                    [start, FLOAT_FMT % profile.mean[b], FLOAT_FMT % stds[b], profile.count[b]]
                )


def read_profile_csv(path) -> TimeOfDayProfile:
    """Rebuild a profile from its CSV (stats at the file's precision)."""
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[0] != "bin_start_seconds":
            raise ValueError(f"{path}: missing bin_start_seconds header")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ValueError(f"{path}: line {lineno}: expected 4 columns")
            rows.append((lineno, row))
    if not rows:
        raise ValueError(f"{path}: no profile rows")
    starts = [int(r[0]) for _, r in rows]
    widths = {b - a for a, b in zip(starts, starts[1:])}
    if len(widths) != 1:
        raise ValueError(f"{path}: bin starts are not evenly spaced")
    profile = TimeOfDayProfile(widths.pop())
    for lineno, (start, mean, std, count) in [(ln, r) for ln, r in rows]:
        b = int(start) // profile.bin_width
        c = int(count)
        profile.count[b] = c
        if c > 0:
            profile.mean[b] = float(mean)
            profile.m2[b] = float(std) ** 2 * c
    return profile


def write_report_csv(report: StabilityReport, path) -> None:
    """metric,value rows; absent metrics (no settling, degenerate sync)
    keep an empty value cell.  A dispersion series is summarised by its
    endpoints (dispersion_start, dispersion_end)."""
    def fmt(value):
        return "" if value is None else FLOAT_FMT % value

    rows = [
        ("min_rel_voltage", fmt(report.min_rel_voltage)),
        ("max_rel_voltage", fmt(report.max_rel_voltage)),
        ("band_crossings", str(report.band_crossings)),
        ("settling_tick", "" if report.settling_tick is None else str(report.settling_tick)),
        ("sync_index", fmt(report.sync_index)),
    ]
    disp = report.expectation_dispersion
    if disp is not None and len(disp) > 0:
        rows.append(("dispersion_start", fmt(float(disp[0]))))
        rows.append(("dispersion_end", fmt(float(disp[-1]))))
    with open(path, "w", newline="") as fh:
        fh.write("metric,value\n")
        for metric, value in rows:
            fh.write(f"{metric},{value}\n")


def read_report_csv(path) -> dict:
    """Parse a report CSV into {metric: float | None}."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["metric", "value"]:
            raise ValueError(f"{path}: expected a metric,value header, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{path}: line {lineno}: expected 2 columns")
            metric, value = row
            out[metric] = float(value) if value else None
    return out
