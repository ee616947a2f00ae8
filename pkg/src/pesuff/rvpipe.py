"""Hourly realized volatility from 10-minute close-bid ticks.

Pipeline: drop the weekend window, regularize onto the 10-minute grid
(forward-filling short gaps), take log returns, sum six consecutive
squared returns per hour, and optionally divide by per-hour-of-day
seasonal factors fitted on the training span only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from datetime import timedelta

import numpy as np
import pandas as pd

from .errors import InsufficientDataError, InvalidArgumentError, InvalidDataError

__all__ = [
    "TickTable",
    "RvSeries",
    "log_returns",
    "weekend_filter",
    "regularize_grid",
    "hourly_rv",
    "deseasonalize",
    "build_hourly_rv",
    "year_window",
    "make_synthetic_ticks",
]

GRID = pd.Timedelta(minutes=10)
RETURNS_PER_HOUR = 6


@dataclass(frozen=True)
class TickTable:
    """Close-bid ticks at 10-minute resolution with strictly increasing UTC stamps."""

    frame: pd.DataFrame  # columns: timestamp (datetime64 UTC), close_bid (float)

    def __post_init__(self):
        df = self.frame
        if list(df.columns) != ["timestamp", "close_bid"]:
            raise InvalidArgumentError("tick table needs exactly the columns (timestamp, close_bid)")
        if len(df) == 0:
            raise InsufficientDataError("tick table is empty")
        ts = df["timestamp"]
        if ts.dt.tz is None:
            raise InvalidArgumentError("tick timestamps must be timezone-aware UTC")
        if not ts.is_monotonic_increasing or ts.duplicated().any():
            raise InvalidDataError("tick timestamps must be strictly increasing without duplicates")
        prices = df["close_bid"].to_numpy()
        if not np.isfinite(prices).all() or (prices <= 0).any():
            raise InvalidDataError("close bids must be finite and positive")

    def __len__(self):
        return len(self.frame)

    @classmethod
    def from_csv(cls, path) -> "TickTable":
        df = pd.read_csv(path)
        if list(df.columns) != ["timestamp", "close_bid"]:
            raise InvalidDataError(f"{path}: expected header 'timestamp,close_bid', got {list(df.columns)}")
        try:
            df["timestamp"] = pd.to_datetime(df["timestamp"], utc=True, format="ISO8601")
        except (ValueError, TypeError) as exc:
            raise InvalidDataError(f"{path}: unparseable timestamp ({exc})") from exc
        return cls(df)

    def to_csv(self, path) -> None:
        out = self.frame.copy()
        out["timestamp"] = out["timestamp"].dt.strftime("%Y-%m-%dT%H:%M:%SZ")
        out.to_csv(path, index=False)


@dataclass(frozen=True)
class RvSeries:
    """Hourly realized volatility with hour-of-day labels."""

    values: np.ndarray
    hour_of_day: np.ndarray
    start_times: pd.DatetimeIndex | None = None
    deseasonalized: bool = False
    seasonal_factors: dict[int, float] | None = None

    def __post_init__(self):
        if self.values.shape != self.hour_of_day.shape:
            raise InvalidArgumentError("values and hour labels must be aligned")
        if (self.values < 0).any():
            raise InvalidDataError("realized volatility cannot be negative")

    def __len__(self):
        return len(self.values)


def log_returns(ticks: TickTable) -> pd.Series:
    """Log price changes between consecutive retained ticks, indexed by the later stamp."""
    if len(ticks) < 2:
        raise InsufficientDataError("need at least two ticks for a return")
    prices = np.log(ticks.frame["close_bid"].to_numpy())
    return pd.Series(np.diff(prices), index=ticks.frame["timestamp"].iloc[1:])


def _in_weekend_window(ts: pd.Series) -> np.ndarray:
    """Friday 21:00 through Sunday 20:50 UTC, both ends inclusive."""
    dow = ts.dt.dayofweek  # Monday=0 ... Sunday=6
    minutes = ts.dt.hour * 60 + ts.dt.minute
    friday_late = (dow == 4) & (minutes >= 21 * 60)
    saturday = dow == 5
    sunday_early = (dow == 6) & (minutes <= 20 * 60 + 50)
    return (friday_late | saturday | sunday_early).to_numpy()


def weekend_filter(ticks: TickTable) -> TickTable:
    """Drop every tick inside the weekly closure window; idempotent."""
    keep = ~_in_weekend_window(ticks.frame["timestamp"])
    return TickTable(ticks.frame.loc[keep].reset_index(drop=True))


def _trading_grid(start: pd.Timestamp, end: pd.Timestamp) -> pd.DatetimeIndex:
    full = pd.date_range(start, end, freq=GRID)
    return full[~_in_weekend_window(full.to_series())]


def regularize_grid(ticks: TickTable, max_ffill: int = 3) -> pd.Series:
    """Align ticks onto the weekday 10-minute grid.

    Gaps of up to ``max_ffill`` consecutive missing bars are forward
    filled (zero return); longer gaps stay missing and the hours touching
    them are dropped downstream.
    """
    frame = ticks.frame
    first, last = frame["timestamp"].iloc[0], frame["timestamp"].iloc[-1]
    if first.minute % 10 or first.second or last.minute % 10 or last.second:
        raise InvalidDataError("tick timestamps must sit on the 10-minute grid")
    grid = _trading_grid(first, last)
    prices = pd.Series(frame["close_bid"].to_numpy(), index=frame["timestamp"]).reindex(grid)
    missing = prices.isna()
    if missing.any():
        run_id = (missing != missing.shift()).cumsum()
        run_len = missing.groupby(run_id).transform("sum")
        fillable = missing & (run_len <= max_ffill)
        filled = prices.ffill()
        prices = prices.where(~fillable, filled)
    return prices


def hourly_rv(returns: pd.Series | np.ndarray) -> RvSeries:
    """Sum six consecutive squared 10-minute returns per hour.

    A trailing partial hour is dropped; hours containing a missing return
    (an unfilled long gap) are dropped as well.  Hour-of-day labels come
    from the block's first return when timestamps are present, else from
    the block index modulo 24.
    """
    if isinstance(returns, pd.Series):
        values = returns.to_numpy(dtype=np.float64)
        stamps = pd.DatetimeIndex(returns.index)
    else:
        values = np.asarray(returns, dtype=np.float64)
        stamps = None
    if values.size == 0:
        raise InsufficientDataError("no returns supplied")
    n_blocks = values.size // RETURNS_PER_HOUR
    if n_blocks == 0:
        raise InsufficientDataError("fewer returns than one full hour")
    trimmed = values[: n_blocks * RETURNS_PER_HOUR].reshape(n_blocks, RETURNS_PER_HOUR)
    keep = ~np.isnan(trimmed).any(axis=1)
    rv = (trimmed[keep] ** 2).sum(axis=1)
    if stamps is not None:
        block_starts = stamps[np.arange(n_blocks) * RETURNS_PER_HOUR] - GRID
        block_starts = block_starts[keep]
        hours = block_starts.hour.to_numpy()
    else:
        block_starts = None
        hours = (np.flatnonzero(keep) % 24).astype(np.int64)
    return RvSeries(values=rv, hour_of_day=hours, start_times=block_starts)


def deseasonalize(rv: RvSeries, train_length: int | None = None) -> RvSeries:
    """Divide each value by the geometric mean RV of its hour of day.

    Factors are computed on the first ``train_length`` observations only
    (the whole series by default) and stored for an exact round trip.
    """
    if rv.deseasonalized:
        raise InvalidArgumentError("series is already deseasonalized")
    n_train = len(rv) if train_length is None else train_length
    if not 1 <= n_train <= len(rv):
        raise InvalidArgumentError("training span must be within the series")
    factors = {}
    for hour in np.unique(rv.hour_of_day):
        in_bucket = (rv.hour_of_day[:n_train] == hour)
        positive = rv.values[:n_train][in_bucket]
        positive = positive[positive > 0]
        if positive.size == 0:
            raise InsufficientDataError(f"hour bucket {hour} has no positive training observations")
        factors[int(hour)] = float(np.exp(np.mean(np.log(positive))))
    scale = np.array([factors[int(h)] for h in rv.hour_of_day])
    return replace(rv, values=rv.values / scale, deseasonalized=True, seasonal_factors=factors)


def build_hourly_rv(ticks: TickTable, max_ffill: int = 3, train_length: int | None = None) -> tuple[RvSeries, RvSeries]:
    """Full pipeline: weekend filter, grid alignment, returns, hourly RV, deseasonalize.

    Returns the raw and the deseasonalized hourly series.
    """
    filtered = weekend_filter(ticks)
    prices = regularize_grid(filtered, max_ffill)
    returns = pd.Series(np.diff(np.log(prices.to_numpy())), index=prices.index[1:])
    raw = hourly_rv(returns)
    return raw, deseasonalize(raw, train_length)


def _nth_weekday_of_june(year: int, weekday: int, nth: int) -> pd.Timestamp:
    first = pd.Timestamp(year=year, month=6, day=1, tz="UTC")
    offset = (weekday - first.dayofweek) % 7
    return first + timedelta(days=offset + 7 * (nth - 1))


def year_window(start_year: int) -> tuple[pd.Timestamp, pd.Timestamp]:
    """Observation window: 3rd Sunday of June 21:00 UTC to next year's 3rd Friday 20:50 UTC."""
    start = _nth_weekday_of_june(start_year, 6, 3) + timedelta(hours=21)
    end = _nth_weekday_of_june(start_year + 1, 4, 3) + timedelta(hours=20, minutes=50)
    return start, end


def make_synthetic_ticks(
    start: pd.Timestamp,
    end: pd.Timestamp,
    seed: int = 0,
    initial_price: float = 1.10,
    vol_per_step: float = 4e-4,
    intraday_cycle: float = 0.5,
    drop_fraction: float = 0.0,
) -> TickTable:
    """Geometric random-walk ticks on the full 10-minute grid.

    The step volatility carries a 24-hour multiplicative cycle so the
    deseasonalization stage has a real pattern to remove.  A fraction of
    bars can be dropped to exercise the gap policy.  Weekend stamps are
    included; the pipeline is expected to remove them.
    """
    grid = pd.date_range(start, end, freq=GRID)
    g = np.random.default_rng(seed)
    hours = grid.hour.to_numpy()
    scale = vol_per_step * (1.0 + intraday_cycle * np.sin(2 * np.pi * hours / 24.0))
    steps = g.normal(0.0, 1.0, size=len(grid)) * scale
    log_prices = np.log(initial_price) + np.cumsum(steps)
    frame = pd.DataFrame({"timestamp": grid, "close_bid": np.exp(log_prices)})
    if drop_fraction > 0:
        keep = g.uniform(size=len(frame)) >= drop_fraction
        keep[0] = keep[-1] = True
        frame = frame.loc[keep].reset_index(drop=True)
    return TickTable(frame)
