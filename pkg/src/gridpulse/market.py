"""Electricity price signal: piecewise-constant series and its generator.

Prices are quoted per market period (a fixed number of simulation ticks,
one hour in spirit).  The synthetic generator is a mean-reverting random
walk clamped at zero, with optional per-period overrides used to script
high-price windows and low-price events.  An optional linear feedback term
couples the price to the previous period's flexible demand share.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

#: formatting used for every CSV this package writes (9 significant digits)
FLOAT_FMT = "%.9g"


@dataclass
class PriceSeries:
    """Per-period prices; the price at tick t is prices[t // period_length]."""

    prices: np.ndarray
    period_length: int

    def __post_init__(self) -> None:
        self.prices = np.asarray(self.prices, dtype=float)
        if self.prices.ndim != 1 or self.prices.size == 0:
            raise ValueError("prices must be a non-empty 1-d sequence")
        if self.period_length < 1:
            raise ValueError(f"period_length must be >= 1, got {self.period_length}")
        if np.any(self.prices < 0.0):
            raise ValueError("prices must be >= 0")

    @property
    def n_periods(self) -> int:
        return int(self.prices.size)

    def price_at_tick(self, tick: int) -> float:
        if tick < 0:
            raise ValueError(f"tick must be >= 0, got {tick}")
        period = tick // self.period_length
        if period >= self.n_periods:
            raise ValueError(
                f"tick {tick} is beyond the series ({self.n_periods} periods "
                f"of {self.period_length} ticks)"
            )
        return float(self.prices[period])


@dataclass
class PriceProcessParams:
    """Mean-reverting generator parameters plus scripted per-period overrides."""

    mean: float
    reversion: float
    noise_std: float
    low_price_events: list = field(default_factory=list)
    initial_price: float | None = None  # defaults to mean

    def __post_init__(self) -> None:
        if self.mean < 0.0:
            raise ValueError(f"mean price must be >= 0, got {self.mean}")
        if not 0.0 <= self.reversion <= 1.0:
            raise ValueError(f"reversion must be in [0, 1], got {self.reversion}")
        if self.noise_std < 0.0:
            raise ValueError(f"noise_std must be >= 0, got {self.noise_std}")
        for event in self.low_price_events:
            period, price = event
            if period < 0:
                raise ValueError(f"override period index must be >= 0, got {period}")
            if price < 0.0:
                raise ValueError(f"override price must be >= 0, got {price}")


def generate_price_series(
    params: PriceProcessParams,
    n_periods: int,
    period_length: int,
    rng: np.random.Generator,
) -> PriceSeries:
    """Simulate the clamped mean-reverting walk, then apply overrides.

    p[k+1] = p[k] + reversion * (mean - p[k]) + noise_std * eps[k],
    clamped below at zero; eps are standard normal draws from rng.
    """
    if n_periods < 1:
        raise ValueError(f"n_periods must be >= 1, got {n_periods}")
    prices = np.empty(n_periods, dtype=float)
    p = params.mean if params.initial_price is None else params.initial_price
    prices[0] = max(0.0, p)
    for k in range(1, n_periods):
        p = p + params.reversion * (params.mean - p) + params.noise_std * rng.standard_normal()
        p = max(0.0, p)
        prices[k] = p
    for period, price in params.low_price_events:
        if period < n_periods:
            prices[period] = price
    return PriceSeries(prices, period_length)


def price_with_feedback(
    exogenous_price: float,
    demand_share: float,
    slope: float,
    baseline_share: float,
) -> float:
    """Shift the exogenous price linearly with the previous period's demand.

    demand_share is the fraction of flexible loads that were on; the shift is
    slope * (demand_share - baseline_share), floored at a zero price.
    """
    if not 0.0 <= demand_share <= 1.0:
        raise ValueError(f"demand_share must be in [0, 1], got {demand_share}")
    return max(0.0, exogenous_price + slope * (demand_share - baseline_share))


def save_price_series(series: PriceSeries, path) -> None:
    """Write one `price` column with a header, 9 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["price"])
        for p in series.prices:
            writer.writerow([FLOAT_FMT % p])


def load_price_series(path, period_length: int) -> PriceSeries:
    """Read a one-column price CSV; the `price` header row is optional."""
    prices = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if len(row) > 1:
                extras = ", ".join(row[1:])
                raise ValueError(
                    f"{path}: line {lineno}: expected a single price column, "
                    f"found extra column(s): {extras}"
                )
            cell = row[0].strip()
            if lineno == 1 and cell.lower() == "price":
                continue
            try:
                prices.append(float(cell))
            except ValueError:
                raise ValueError(f"{path}: line {lineno}: not a price: {cell!r}") from None
    if not prices:
        raise ValueError(f"{path}: no price rows found")
    return PriceSeries(np.array(prices), period_length)
