import numpy as np
import pandas as pd
import pytest

from pesuff.errors import InsufficientDataError, InvalidArgumentError, InvalidDataError
from pesuff.rvpipe import (
    TickTable,
    build_hourly_rv,
    deseasonalize,
    hourly_rv,
    log_returns,
    make_synthetic_ticks,
    regularize_grid,
    weekend_filter,
    year_window,
)


def _ticks(stamps, prices):
    return TickTable(pd.DataFrame({"timestamp": pd.to_datetime(stamps, utc=True), "close_bid": prices}))


def _acf(values, lag):
    v = values - values.mean()
    return float((v[:-lag] * v[lag:]).sum() / (v * v).sum())


class TestTickTable:
    def test_rejects_nonpositive_price(self):
        with pytest.raises(InvalidDataError):
            _ticks(["2020-01-06 00:00", "2020-01-06 00:10"], [1.0, 0.0])

    def test_rejects_duplicates(self):
        with pytest.raises(InvalidDataError):
            _ticks(["2020-01-06 00:00", "2020-01-06 00:00"], [1.0, 1.1])

    def test_requires_timezone(self):
        with pytest.raises(InvalidArgumentError):
            TickTable(pd.DataFrame({"timestamp": pd.to_datetime(["2020-01-06"]), "close_bid": [1.0]}))

    def test_csv_roundtrip(self, tmp_path):
        ticks = _ticks(["2020-01-06 00:00", "2020-01-06 00:10"], [1.0, 1.1])
        out = tmp_path / "ticks.csv"
        ticks.to_csv(out)
        back = TickTable.from_csv(out)
        assert np.allclose(back.frame["close_bid"], ticks.frame["close_bid"])


class TestLogReturns:
    def test_flat_prices(self):
        returns = log_returns(_ticks(["2020-01-06 00:00", "2020-01-06 00:10"], [100.0, 100.0]))
        assert returns.iloc[0] == 0.0

    def test_exact_log_identity(self):
        returns = log_returns(_ticks(["2020-01-06 00:00", "2020-01-06 00:10"], [100.0, 100.0 * np.e]))
        assert returns.iloc[0] == pytest.approx(1.0, rel=1e-12)

    def test_needs_two_ticks(self):
        with pytest.raises(InsufficientDataError):
            log_returns(_ticks(["2020-01-06 00:00"], [1.0]))

    def test_gbm_drift_recovered(self):
        g = np.random.default_rng(1)
        n = 20000
        drift, vol = 2e-5, 3e-4
        steps = drift + vol * g.normal(size=n)
        prices = 1.2 * np.exp(np.cumsum(steps))
        stamps = pd.date_range("2020-01-06", periods=n + 1, freq="10min", tz="UTC")
        ticks = TickTable(pd.DataFrame({"timestamp": stamps, "close_bid": np.concatenate(([1.2], prices))}))
        returns = log_returns(ticks).to_numpy()
        assert abs(returns.mean() - drift) < 3 * vol / np.sqrt(n)


class TestWeekendFilter:
    def test_boundaries(self):
        stamps = [
            "2020-01-10 20:50",  # Friday, retained
            "2020-01-10 21:00",  # Friday 21:00, dropped (window start, inclusive)
            "2020-01-11 12:00",  # Saturday, dropped
            "2020-01-12 20:50",  # Sunday 20:50, dropped (window end, inclusive)
            "2020-01-12 21:00",  # Sunday 21:00, retained
        ]
        ticks = _ticks(stamps, [1.0, 1.1, 1.2, 1.3, 1.4])
        kept = weekend_filter(ticks).frame["timestamp"].dt.strftime("%a %H:%M").tolist()
        assert kept == ["Fri 20:50", "Sun 21:00"]

    def test_idempotent_and_noop_without_weekend(self):
        stamps = pd.date_range("2020-01-06 00:00", periods=12, freq="10min", tz="UTC")
        ticks = TickTable(pd.DataFrame({"timestamp": stamps, "close_bid": np.linspace(1, 1.1, 12)}))
        once = weekend_filter(ticks)
        twice = weekend_filter(once)
        assert once.frame.equals(twice.frame)
        assert len(once) == 12


class TestHourlyRv:
    def test_six_equal_returns(self):
        rv = hourly_rv(np.full(6, 0.01))
        assert rv.values[0] == pytest.approx(6e-4)

    def test_all_zero_returns(self):
        rv = hourly_rv(np.zeros(12))
        assert np.all(rv.values == 0.0)

    def test_trailing_partial_hour_dropped(self):
        rv = hourly_rv(np.full(15, 0.01))
        assert len(rv) == 2

    def test_missing_hour_dropped(self):
        values = np.full(18, 0.01)
        values[7] = np.nan
        rv = hourly_rv(values)
        assert len(rv) == 2  # middle hour removed

    def test_one_trading_year_has_6360_hours(self):
        start, end = year_window(2013)
        ticks = make_synthetic_ticks(start - pd.Timedelta(days=2, minutes=10), end, seed=3)
        raw, des = build_hourly_rv(ticks, train_length=5160)
        assert len(raw) == 6360
        assert len(des) == 6360

    def test_empty_input(self):
        with pytest.raises(InsufficientDataError):
            hourly_rv(np.empty(0))


class TestDeseasonalize:
    def test_constant_series_flattens_to_global_constant(self):
        rv = hourly_rv(np.full(48 * 6, 0.02))
        des = deseasonalize(rv)
        assert np.allclose(des.values, des.values[0])
        factors = np.array(list(des.seasonal_factors.values()))
        assert np.allclose(factors, factors[0])

    def test_cycle_removed(self):
        g = np.random.default_rng(7)
        hours = np.repeat(np.arange(4000) % 24, 6)
        scale = 1.0 + 0.5 * np.sin(2 * np.pi * hours / 24.0)
        raw = hourly_rv(g.normal(size=hours.size) * scale * 1e-4)
        des = deseasonalize(raw, train_length=3000)
        band = 2.0 / np.sqrt(4000)
        assert _acf(raw.values, 24) > 10 * band
        assert abs(_acf(des.values, 24)) < band

    def test_roundtrip(self):
        g = np.random.default_rng(8)
        raw = hourly_rv(g.normal(size=600) * 1e-4)
        des = deseasonalize(raw, train_length=80)
        rebuilt = des.values * np.array([des.seasonal_factors[int(h)] for h in des.hour_of_day])
        assert np.max(np.abs(rebuilt - raw.values)) < 1e-12

    def test_factors_ignore_test_span(self):
        g = np.random.default_rng(9)
        returns = g.normal(size=1200) * 1e-4
        raw = hourly_rv(returns)
        des_a = deseasonalize(raw, train_length=100)
        tampered = hourly_rv(np.concatenate([returns[:600], returns[600:] * 7.0]))
        des_b = deseasonalize(tampered, train_length=100)
        assert des_a.seasonal_factors == des_b.seasonal_factors

    def test_already_deseasonalized(self):
        raw = hourly_rv(np.random.default_rng(10).normal(size=600) * 1e-4)
        des = deseasonalize(raw)
        with pytest.raises(InvalidArgumentError):
            deseasonalize(des)

    def test_unseen_hour_bucket(self):
        raw = hourly_rv(np.random.default_rng(11).normal(size=1200) * 1e-4)
        with pytest.raises(InsufficientDataError):
            deseasonalize(raw, train_length=12)  # only 12 of 24 hour labels in train


class TestGapPolicy:
    def _year_ticks_with_gap(self, n_missing):
        stamps = pd.date_range("2020-01-06 00:00", periods=400, freq="10min", tz="UTC")
        g = np.random.default_rng(12)
        prices = 1.2 * np.exp(np.cumsum(g.normal(0.0, 1e-4, size=400)))
        frame = pd.DataFrame({"timestamp": stamps, "close_bid": prices})
        frame = frame.drop(index=range(60, 60 + n_missing)).reset_index(drop=True)
        return TickTable(frame)

    def test_short_gap_forward_filled(self):
        prices = regularize_grid(self._year_ticks_with_gap(3))
        assert not prices.isna().any()
        assert len(prices) == 400

    def test_long_gap_drops_hour(self):
        ticks = self._year_ticks_with_gap(4)
        prices = regularize_grid(ticks)
        assert prices.isna().sum() == 4
        returns = pd.Series(np.diff(np.log(prices.to_numpy())), index=prices.index[1:])
        rv = hourly_rv(returns)
        assert len(rv) < 66  # affected hours removed


class TestYearWindow:
    def test_benchmark_dates(self):
        start, end = year_window(2013)
        assert start == pd.Timestamp("2013-06-16 21:00", tz="UTC")
        assert end == pd.Timestamp("2014-06-20 20:50", tz="UTC")
        start, end = year_window(2018)
        assert end == pd.Timestamp("2019-06-21 20:50", tz="UTC")
