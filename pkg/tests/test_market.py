"""Price process and price CSV round-trip checks."""

import numpy as np
import pytest

from gridpulse.market import (
    PriceProcessParams,
    PriceSeries,
    generate_price_series,
    load_price_series,
    price_with_feedback,
    save_price_series,
)


def test_degenerate_process_is_constant():
    # full reversion, no noise: every step lands exactly on the mean
    params = PriceProcessParams(mean=40.0, reversion=1.0, noise_std=0.0)
    series = generate_price_series(params, 50, 60, np.random.default_rng(0))
    assert np.all(series.prices == 40.0)


def test_long_run_mean_recovers_parameter():
    # AR(1) stationary mean equals the configured mean; with phi = 0.8 the
    # standard error of a 10k-period sample mean is ~0.1, so +-1 is a wide net.
    params = PriceProcessParams(mean=40.0, reversion=0.2, noise_std=2.0)
    series = generate_price_series(params, 10_000, 60, np.random.default_rng(123))
    assert abs(float(series.prices.mean()) - 40.0) < 1.0


def test_prices_never_negative():
    # push the walk hard against the clamp
    params = PriceProcessParams(mean=1.0, reversion=0.05, noise_std=5.0)
    series = generate_price_series(params, 5_000, 60, np.random.default_rng(7))
    assert float(series.prices.min()) >= 0.0


def test_override_events_pin_exact_periods():
    params = PriceProcessParams(
        mean=40.0, reversion=0.2, noise_std=2.0, low_price_events=[(5, 5.0), (8, 0.0)]
    )
    series = generate_price_series(params, 20, 60, np.random.default_rng(1))
    assert series.prices[5] == 5.0
    assert series.prices[8] == 0.0


def test_piecewise_constant_lookup():
    series = PriceSeries([10.0, 20.0, 30.0], period_length=60)
    assert series.price_at_tick(0) == 10.0
    assert series.price_at_tick(59) == 10.0
    assert series.price_at_tick(60) == 20.0
    assert series.price_at_tick(179) == 30.0
    with pytest.raises(ValueError):
        series.price_at_tick(180)
    with pytest.raises(ValueError):
        series.price_at_tick(-1)


def test_feedback_identity_and_direction():
    assert price_with_feedback(40.0, 0.6, 0.0, 0.2) == 40.0
    assert price_with_feedback(40.0, 0.6, 25.0, 0.2) == pytest.approx(50.0)
    assert price_with_feedback(40.0, 0.1, 25.0, 0.2) == pytest.approx(37.5)
    assert price_with_feedback(1.0, 0.0, 25.0, 0.2) == 0.0  # floored at zero
    with pytest.raises(ValueError):
        price_with_feedback(40.0, 1.5, 25.0, 0.2)


def test_csv_round_trip_exact_at_declared_precision(tmp_path):
    params = PriceProcessParams(mean=40.0, reversion=0.2, noise_std=2.0)
    series = generate_price_series(params, 100, 60, np.random.default_rng(42))
    path = tmp_path / "prices.csv"
    save_price_series(series, path)
    loaded = load_price_series(path, 60)
    assert loaded.n_periods == 100
    # a second write of the loaded series must reproduce the file byte-for-byte
    path2 = tmp_path / "prices2.csv"
    save_price_series(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_csv_header_optional(tmp_path):
    path = tmp_path / "bare.csv"
    path.write_text("12.5\n13\n0\n")
    series = load_price_series(path, 60)
    assert list(series.prices) == [12.5, 13.0, 0.0]


def test_csv_stray_column_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("price,region\n12.5,DE\n")
    with pytest.raises(ValueError, match="region"):
        load_price_series(path, 60)


def test_csv_bad_cell_reports_line(tmp_path):
    path = tmp_path / "bad2.csv"
    path.write_text("price\n12.5\noops\n")
    with pytest.raises(ValueError, match="line 3"):
        load_price_series(path, 60)


def test_param_validation():
    with pytest.raises(ValueError):
        PriceProcessParams(mean=-1.0, reversion=0.2, noise_std=1.0)
    with pytest.raises(ValueError):
        PriceProcessParams(mean=40.0, reversion=1.5, noise_std=1.0)
    with pytest.raises(ValueError):
        PriceProcessParams(mean=40.0, reversion=0.2, noise_std=-1.0)
    with pytest.raises(ValueError):
        PriceProcessParams(mean=40.0, reversion=0.2, noise_std=1.0, low_price_events=[(2, -5.0)])
    with pytest.raises(ValueError):
        PriceSeries([1.0, -2.0], 60)
