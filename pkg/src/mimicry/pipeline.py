"""Market pipeline: returns -> daily fractions -> rolling U(t) -> warnings.

Windows are half-open everywhere: the indicator at ``t`` uses ``[t - 12
months, t)`` and a warning window ``[start, end)`` covers a crash iff
``start <= crash < end``.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path

import numpy as np
import pandas as pd
from statsmodels.stats.proportion import proportion_confint

from ._csv import write_csv
from .estimation import ComovementSeries, FitError, fit_symmetric, DEFAULT_MIN_DAYS, DEFAULT_MIN_STOCKS
from .model import TopologySpec
from .netsim import replica_rng, simulate_snapshots

__all__ = [
    "IngestError",
    "ReturnRecord",
    "IndicatorSeries",
    "SignalSeries",
    "WarningWindow",
    "CrashEvent",
    "EventReport",
    "PermutationResult",
    "ScheduleSegment",
    "SyntheticMarket",
    "DJI_LARGEST_DROPS_1985_2010",
    "ingest_returns",
    "write_returns",
    "read_fractions",
    "rolling_indicator",
    "read_indicator",
    "normalized_change",
    "detect_warnings",
    "read_windows",
    "read_crashes",
    "evaluate_events",
    "permutation_pvalue",
    "read_schedule",
    "simulate_market",
    "synth_market",
]

log = logging.getLogger(__name__)

ONE_YEAR = pd.DateOffset(years=1)


class IngestError(ValueError):
    pass


def _ts(x):
    return pd.Timestamp(x).normalize()


def _d64(x):
    return np.datetime64(_ts(x).date(), "D")


@dataclass(frozen=True)
class ReturnRecord:
    date: date
    ticker: str
    ret: float

    def __post_init__(self):
        if not self.ticker:
            raise ValueError("ticker must be non-empty")
        if not self.ret > -1.0:
            raise ValueError(f"return {self.ret} <= -1 is impossible for a simple return")


def _parse_date(text):
    return date.fromisoformat(text.strip())


def _read_rows(path, header):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        first = next(reader, None)
        if first is None or [c.strip() for c in first] != header:
            raise IngestError(f"{path}: expected header {','.join(header)!r}, got {first!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            yield lineno, row


def ingest_returns(path) -> pd.DataFrame:
    """Read a ``date,ticker,return`` CSV into a validated frame sorted by (date, ticker)."""
    errors, rows = [], []
    for lineno, row in _read_rows(path, ["date", "ticker", "return"]):
        if len(row) != 3:
            errors.append(f"line {lineno}: expected 3 fields, got {len(row)}")
            continue
        try:
            day = _parse_date(row[0])
        except ValueError:
            errors.append(f"line {lineno}: bad date {row[0]!r}")
            continue
        ticker = row[1].strip()
        if not ticker:
            errors.append(f"line {lineno}: empty ticker")
            continue
        try:
            ret = float(row[2])
        except ValueError:
            errors.append(f"line {lineno}: bad return {row[2]!r}")
            continue
        if not math.isfinite(ret):
            errors.append(f"line {lineno}: non-finite return {row[2]!r}")
            continue
        if ret <= -1.0:
            errors.append(f"line {lineno}: return {ret} <= -1")
            continue
        rows.append((lineno, day, ticker, ret))
    seen = {}
    for lineno, day, ticker, _ in rows:
        key = (day, ticker)
        if key in seen:
            errors.append(f"line {lineno}: duplicate ({day}, {ticker}) first seen on line {seen[key]}")
        else:
            seen[key] = lineno
    if errors:
        raise IngestError(f"{path}: {len(errors)} problem(s)\n  " + "\n  ".join(errors[:50]))
    frame = pd.DataFrame(
        {
            "date": pd.to_datetime([r[1] for r in rows]),
            "ticker": [r[2] for r in rows],
            "return": np.array([r[3] for r in rows], dtype=float),
        }
    )
    frame = frame.sort_values(["date", "ticker"], kind="mergesort").reset_index(drop=True)
    log.info("read %d return records from %s", len(frame), path)
    return frame


def write_returns(frame, path):
    rows = zip(pd.to_datetime(frame["date"]).dt.strftime("%Y-%m-%d"), frame["ticker"], frame["return"])
    write_csv(path, ["date", "ticker", "return"], rows)


def read_fractions(path, min_stocks=DEFAULT_MIN_STOCKS) -> ComovementSeries:
    """Read a ``date,n_up,n_total`` CSV."""
    errors, rows = [], []
    for lineno, row in _read_rows(path, ["date", "n_up", "n_total"]):
        try:
            day = _parse_date(row[0])
            n_up, n_total = int(row[1]), int(row[2])
        except (ValueError, IndexError):
            errors.append(f"line {lineno}: malformed row {','.join(row)!r}")
            continue
        if not 0 <= n_up <= n_total:
            errors.append(f"line {lineno}: need 0 <= n_up <= n_total")
            continue
        rows.append((day, n_up, n_total))
    if errors:
        raise IngestError(f"{path}: {len(errors)} problem(s)\n  " + "\n  ".join(errors[:50]))
    frame = pd.DataFrame(rows, columns=["date", "n_up", "n_total"])
    if frame["date"].duplicated().any():
        raise IngestError(f"{path}: duplicate dates")
    return ComovementSeries.from_frame(frame, min_stocks=min_stocks)


def write_fractions(series: ComovementSeries, path):
    rows = zip(pd.to_datetime(series.dates).strftime("%Y-%m-%d"), series.k_up, series.n_day)
    write_csv(path, ["date", "n_up", "n_total"], rows)


# -- rolling indicator -------------------------------------------------------


@dataclass(frozen=True)
class IndicatorSeries:
    dates: np.ndarray
    u_hat: np.ndarray
    stderr: np.ndarray
    n_days: np.ndarray
    n_ref: np.ndarray
    gaps: tuple = ()

    def __len__(self):
        return self.dates.size

    def to_csv(self, path):
        rows = zip(pd.to_datetime(self.dates).strftime("%Y-%m-%d"), self.u_hat, self.stderr, self.n_days, self.n_ref)
        write_csv(path, ["date", "u_hat", "stderr", "n_days", "n_ref"], rows)


def read_indicator(path) -> IndicatorSeries:
    cols = {"date": [], "u_hat": [], "stderr": [], "n_days": [], "n_ref": []}
    for lineno, row in _read_rows(path, list(cols)):
        try:
            cols["date"].append(np.datetime64(_parse_date(row[0]), "D"))
            cols["u_hat"].append(float(row[1]))
            cols["stderr"].append(float(row[2]))
            cols["n_days"].append(int(row[3]))
            cols["n_ref"].append(int(row[4]))
        except (ValueError, IndexError) as exc:
            raise IngestError(f"{path}: line {lineno}: {exc}") from exc
    return IndicatorSeries(
        np.array(cols["date"], dtype="datetime64[D]"),
        np.array(cols["u_hat"]),
        np.array(cols["stderr"]),
        np.array(cols["n_days"], dtype=np.int64),
        np.array(cols["n_ref"], dtype=np.int64),
    )


def _step_dates(dates, step):
    idx = pd.DatetimeIndex(dates)
    if step == "daily":
        picked = idx
    elif step in ("weekly", "monthly"):
        key = idx.to_period("W" if step == "weekly" else "M")
        picked = idx[~pd.Series(key).duplicated().to_numpy()]
    else:
        raise ValueError(f"unknown step {step!r}")
    end = idx[-1] + pd.Timedelta(days=1)
    return list(picked) + [end]


def _seed_for(seed, t):
    return [int(seed), int((t - pd.Timestamp("1800-01-01")).days)]


def rolling_indicator(series: ComovementSeries, step="daily", *, window_months=12, n_boot=1000, block_len=20,
                      seed=0, min_days=DEFAULT_MIN_DAYS, threads=1) -> IndicatorSeries:
    """Fit ``U = D`` on the trailing ``window_months`` calendar months before each step date.

    Step dates are the series' trading days (or the first trading day of each
    week/month) plus the day after the last observation. Dates whose window
    starts before the data or holds fewer than ``min_days`` days are skipped;
    failed fits are recorded in ``gaps``.
    """
    if len(series) == 0:
        raise ValueError("empty series")
    first = pd.Timestamp(series.dates[0])
    offset = pd.DateOffset(months=window_months)
    candidates = [t for t in _step_dates(series.dates, step) if t - offset >= first]

    def fit_at(t):
        start = t - offset
        sub = series.window(start, t)
        if len(sub) < min_days:
            return t, None, "occupancy"
        try:
            res = fit_symmetric(sub, None, n_boot=n_boot, block_len=block_len, seed=_seed_for(seed, t),
                                min_days=min_days)
        except FitError as exc:
            return t, None, str(exc)
        return t, res, None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fit_at, candidates))
    else:
        results = [fit_at(t) for t in candidates]

    pts, gaps = [], []
    for t, res, why in results:
        if res is None:
            if why != "occupancy":
                gaps.append((_d64(t), why))
            continue
        pts.append((_d64(t), res.u_eq_d, res.stderr, res.n_days, res.n_ref))
    if gaps:
        log.info("%d indicator date(s) failed to fit", len(gaps))
    if not pts:
        return IndicatorSeries(np.array([], dtype="datetime64[D]"), np.array([]), np.array([]),
                               np.array([], dtype=np.int64), np.array([], dtype=np.int64), tuple(gaps))
    d, u, s, nd, nr = zip(*pts)
    return IndicatorSeries(np.array(d, dtype="datetime64[D]"), np.array(u), np.array(s),
                           np.array(nd, dtype=np.int64), np.array(nr, dtype=np.int64), tuple(gaps))


# -- annual-change signal ----------------------------------------------------


@dataclass(frozen=True)
class SignalSeries:
    dates: np.ndarray
    raw_change: np.ndarray
    normalized: np.ndarray
    smoothed: np.ndarray
    order: str = "normalize-first"
    gaps: tuple = ()

    def __len__(self):
        return self.dates.size

    def to_csv(self, path):
        rows = zip(pd.to_datetime(self.dates).strftime("%Y-%m-%d"), self.raw_change, self.normalized, self.smoothed)
        write_csv(path, ["date", "raw_change", "normalized", "smoothed"], rows)


def normalized_change(indicator: IndicatorSeries, order="normalize-first", match_tolerance=10) -> SignalSeries:
    """Annual change of U in units of the sampling error one year earlier, averaged over a year.

    ``raw(t) = U(t) - U(t - 1y)`` and ``normalized(t) = raw(t) / stderr(t - 1y)``,
    where ``t - 1y`` is matched to the nearest indicator date within
    ``match_tolerance`` business days. ``smoothed(t)`` averages over
    ``(t - 1y, t]``: the normalized values (``"normalize-first"``), or the raw
    changes then divides by ``stderr(t - 1y)`` (``"average-first"``). It is
    NaN until the signal has a full year of history.
    """
    if order not in ("normalize-first", "average-first"):
        raise ValueError(f"unknown order {order!r}")
    dates = indicator.dates
    if dates.size == 0:
        return SignalSeries(dates, np.array([]), np.array([]), np.array([]), order)
    idx = pd.DatetimeIndex(dates)
    targets = (idx - ONE_YEAR).to_numpy().astype("datetime64[D]")
    pos = np.clip(np.searchsorted(dates, targets), 0, dates.size - 1)
    prev = np.clip(pos - 1, 0, dates.size - 1)
    pick = np.where(np.abs(dates[prev] - targets) <= np.abs(dates[pos] - targets), prev, pos)
    lo = np.minimum(dates[pick], targets)
    hi = np.maximum(dates[pick], targets)
    ok = (np.busday_count(lo, hi) <= match_tolerance) & (dates[pick] < dates)

    gaps = tuple(dates[~ok & (targets >= dates[0])])
    t_dates = dates[ok]
    raw = indicator.u_hat[ok] - indicator.u_hat[pick[ok]]
    base_se = indicator.stderr[pick[ok]]
    normalized = raw / base_se

    smoothed = np.full(t_dates.size, np.nan)
    if t_dates.size:
        starts = (pd.DatetimeIndex(t_dates) - ONE_YEAR).to_numpy().astype("datetime64[D]")
        coverage = t_dates[0] - np.timedelta64(14, "D")
        csum_n = np.concatenate([[0.0], np.cumsum(normalized)])
        csum_r = np.concatenate([[0.0], np.cumsum(raw)])
        left = np.searchsorted(t_dates, starts, side="right")
        right = np.arange(1, t_dates.size + 1)
        count = right - left
        full = starts >= coverage
        if order == "normalize-first":
            avg = (csum_n[right] - csum_n[left]) / count
        else:
            avg = (csum_r[right] - csum_r[left]) / count / base_se
        smoothed = np.where(full, avg, np.nan)
    return SignalSeries(t_dates, raw, normalized, smoothed, order, gaps)


# -- detection and evaluation ------------------------------------------------


@dataclass(frozen=True)
class WarningWindow:
    start: pd.Timestamp
    end: pd.Timestamp
    trigger_value: float = float("nan")
    preceded_by_positive: bool = True

    def covers(self, when):
        return self.start <= _ts(when) < self.end


def detect_warnings(signal: SignalSeries, threshold=2.0, lookback_positive=ONE_YEAR, window_len=ONE_YEAR):
    """Year-long warning windows opened by a drop after a period of positive change.

    A window opens at the first date where ``smoothed <= -threshold`` and
    ``smoothed > 0`` somewhere in the preceding ``lookback_positive``; no
    trigger can fire while a window is open.
    """
    windows = []
    last_positive = None
    open_until = None
    for d64, value in zip(signal.dates, signal.smoothed):
        if not np.isfinite(value):
            continue
        t = pd.Timestamp(d64)
        fire = (
            value <= -threshold
            and last_positive is not None
            and last_positive >= t - lookback_positive
            and (open_until is None or t >= open_until)
        )
        if fire:
            w = WarningWindow(t, t + window_len, float(value), True)
            windows.append(w)
            open_until = w.end
        if value > 0:
            last_positive = t
    return windows


def write_windows(windows, path):
    rows = [(w.start.strftime("%Y-%m-%d"), w.end.strftime("%Y-%m-%d"), w.start.strftime("%Y-%m-%d"), w.trigger_value)
            for w in windows]
    write_csv(path, ["start", "end", "trigger_date", "trigger_value"], rows)


def read_windows(path):
    out = []
    for lineno, row in _read_rows(path, ["start", "end", "trigger_date", "trigger_value"]):
        try:
            value = float(row[3]) if len(row) > 3 and row[3].strip() else float("nan")
            out.append(WarningWindow(_ts(_parse_date(row[0])), _ts(_parse_date(row[1])), value, True))
        except (ValueError, IndexError) as exc:
            raise IngestError(f"{path}: line {lineno}: {exc}") from exc
    return out


@dataclass(frozen=True)
class CrashEvent:
    date: pd.Timestamp
    label: str = ""


DJI_LARGEST_DROPS_1985_2010 = tuple(
    CrashEvent(pd.Timestamp(d), label)
    for d, label in [
        ("1987-10-19", "Black Monday"),
        ("1987-10-26", "Black Monday aftershock"),
        ("1997-10-27", "Asian crisis"),
        ("2001-09-17", "September 11 reopening"),
        ("2008-09-29", "financial crisis"),
        ("2008-10-09", "financial crisis"),
        ("2008-10-15", "financial crisis"),
        ("2008-12-01", "financial crisis"),
    ]
)


def read_crashes(path):
    """Read ``date,label`` lines; a ``date,label`` header line is optional."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    out = []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or not row[0].strip() or row[0].strip().startswith("#"):
                continue
            if lineno == 1 and row[0].strip() == "date":
                continue
            try:
                out.append(CrashEvent(_ts(_parse_date(row[0])), row[1].strip() if len(row) > 1 else ""))
            except ValueError as exc:
                raise IngestError(f"{path}: line {lineno}: bad date {row[0]!r}") from exc
    return out


@dataclass(frozen=True)
class EventReport:
    hits: int
    n_crashes: int
    coverage_fraction: float
    covered: list = field(default_factory=list)

    def lines(self):
        out = [f"hits={self.hits} crashes={self.n_crashes} coverage_fraction={self.coverage_fraction:.17g}"]
        for crash, window in self.covered:
            where = f"{window.start:%Y-%m-%d}..{window.end:%Y-%m-%d}" if window is not None else "uncovered"
            out.append(f"{crash.date:%Y-%m-%d},{crash.label},{where}")
        return out


def _crash_dates(crashes):
    return [c.date if isinstance(c, CrashEvent) else _ts(c) for c in crashes]


def evaluate_events(windows, crashes, study_period) -> EventReport:
    """Which crashes fall inside a warning window, and how much of the period is covered."""
    p0, p1 = _ts(study_period[0]), _ts(study_period[1])
    crashes = [c if isinstance(c, CrashEvent) else CrashEvent(_ts(c)) for c in crashes]
    outside = [c for c in crashes if not p0 <= c.date < p1]
    if outside:
        log.warning("%d crash date(s) outside the study period", len(outside))
    covered = []
    for c in crashes:
        hit = next((w for w in windows if w.covers(c.date)), None)
        covered.append((c, hit))
    total = (p1 - p0).days
    inside = sum(max(0, (min(w.end, p1) - max(w.start, p0)).days) for w in windows)
    return EventReport(sum(w is not None for _, w in covered), len(crashes), inside / total if total else 0.0, covered)


@dataclass(frozen=True)
class PermutationResult:
    p_value: float
    ci_low: float
    ci_high: float
    n_trials: int
    observed_hits: int
    n_extreme: int
    mode: str


def permutation_pvalue(windows, crashes, study_period, n_trials=10**6, mode="shift-windows", seed=0,
                       randomize_ties=False, chunk=100_000) -> PermutationResult:
    """Monte Carlo probability of covering at least as many crashes by chance.

    ``"shift-windows"`` re-places the windows uniformly at random inside the
    period without overlap, keeping the crash dates; ``"shift-crashes"``
    keeps the windows and redraws each crash date uniformly. With
    ``randomize_ties`` ties count with a uniform random weight, which makes
    the p-value exactly uniform under the null.
    """
    if mode not in ("shift-windows", "shift-crashes"):
        raise ValueError(f"unknown mode {mode!r}")
    if n_trials < 10**4:
        raise ValueError("n_trials must be >= 10^4")
    p0, p1 = _ts(study_period[0]), _ts(study_period[1])
    period = float((p1 - p0).days)
    starts = np.array([(w.start - p0).days for w in windows], dtype=float)
    lengths = np.array([(w.end - w.start).days for w in windows], dtype=float)
    if lengths.sum() > period:
        raise ValueError("windows are longer in total than the study period")
    order = np.argsort(starts)
    if np.any(starts[order][1:] < (starts + lengths)[order][:-1]):
        raise ValueError("windows overlap")
    c = np.array([(d - p0).days for d in _crash_dates(crashes)], dtype=float)
    observed = int(sum(np.any((starts <= x) & (x < starts + lengths)) for x in c))

    rng = np.random.default_rng(seed)
    m = lengths.size
    greater = equal = 0
    ties_weight = 0.0
    done = 0
    free = period - lengths.sum()
    while done < n_trials:
        b = min(chunk, n_trials - done)
        if mode == "shift-windows":
            if m == 0:
                hits = np.zeros(b, dtype=np.int64)
            else:
                gaps = np.sort(rng.uniform(0.0, free, size=(b, m)), axis=1)
                perm = np.argsort(rng.random((b, m)), axis=1)
                lens = lengths[perm]
                s = gaps + np.cumsum(lens, axis=1) - lens
                inside = (s[:, :, None] <= c[None, None, :]) & (c[None, None, :] < (s + lens)[:, :, None])
                hits = inside.any(axis=1).sum(axis=1)
        else:
            cc = rng.uniform(0.0, period, size=(b, c.size))
            inside = (starts[None, :, None] <= cc[:, None, :]) & (cc[:, None, :] < (starts + lengths)[None, :, None])
            hits = inside.any(axis=1).sum(axis=1)
        greater += int((hits > observed).sum())
        n_eq = int((hits == observed).sum())
        equal += n_eq
        if randomize_ties:
            ties_weight += n_eq * rng.random()
        done += b
    n_extreme = greater + equal
    if randomize_ties:
        p = (greater + ties_weight) / n_trials
    else:
        p = n_extreme / n_trials
    lo, hi = proportion_confint(n_extreme, n_trials, alpha=0.05, method="wilson")
    return PermutationResult(float(p), float(lo), float(hi), int(n_trials), observed, n_extreme, mode)


# -- synthetic market --------------------------------------------------------


@dataclass(frozen=True)
class ScheduleSegment:
    """Constant integer ``U``, ``D`` on the half-open date range ``[start, end)``."""

    start: pd.Timestamp
    end: pd.Timestamp
    u: int
    d: int
    p: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "start", _ts(self.start))
        object.__setattr__(self, "end", _ts(self.end))
        if not self.end > self.start:
            raise ValueError(f"segment end {self.end:%Y-%m-%d} must follow its start")
        if int(self.u) != self.u or int(self.d) != self.d or self.u < 0 or self.d < 0:
            raise ValueError("synthetic markets need non-negative integer U and D")
        object.__setattr__(self, "u", int(self.u))
        object.__setattr__(self, "d", int(self.d))


def _check_schedule(schedule):
    if not schedule:
        raise ValueError("empty schedule")
    for a, b in zip(schedule, schedule[1:]):
        if b.start != a.end:
            kind = "gap" if b.start > a.end else "overlap"
            raise ValueError(f"schedule {kind} between {a.end:%Y-%m-%d} and {b.start:%Y-%m-%d}")


def read_schedule(path):
    """Read a ``start,end,u,d[,p]`` CSV of contiguous segments."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    out = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = [c.strip() for c in next(reader, [])]
        if header[:4] != ["start", "end", "u", "d"]:
            raise IngestError(f"{path}: expected header 'start,end,u,d[,p]'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                p = float(row[4]) if len(row) > 4 and row[4].strip() else 0.0
                out.append(ScheduleSegment(_parse_date(row[0]), _parse_date(row[1]), float(row[2]), float(row[3]), p))
            except (ValueError, IndexError) as exc:
                raise IngestError(f"{path}: line {lineno}: {exc}") from exc
    _check_schedule(out)
    return out


def default_sweeps_per_day(n_stocks, u, d):
    """Sweeps that bring the day-to-day correlation of k down to about exp(-3)."""
    return max(1, math.ceil(3.0 * (n_stocks + u + d - 1) / max(u + d, 1)))


@dataclass(frozen=True)
class SyntheticMarket:
    returns: pd.DataFrame
    dates: pd.DatetimeIndex
    up_counts: np.ndarray
    signs: np.ndarray


def simulate_market(schedule, n_stocks, days, seed=0, *, sweeps_per_day=None, burn_in_sweeps=50,
                    topology: TopologySpec | None = None) -> SyntheticMarket:
    """Run the copying chain through ``schedule`` and emit one return per stock per business day.

    Each stock's return has the sign of its node and a log-normal magnitude
    (log-location -4.6, log-scale 0.5). Every segment starts with
    ``burn_in_sweeps`` sweeps; ``sweeps_per_day=None`` picks
    :func:`default_sweeps_per_day` per segment.
    """
    schedule = list(schedule)
    _check_schedule(schedule)
    if topology is None:
        topology = TopologySpec.full(n_stocks)
    elif topology.n_nodes != n_stocks:
        raise ValueError("topology size differs from n_stocks")
    dates = pd.bdate_range(schedule[0].start, periods=days)
    if dates[-1] >= schedule[-1].end:
        raise ValueError(f"schedule ends {schedule[-1].end:%Y-%m-%d}, before the last trading day {dates[-1]:%Y-%m-%d}")
    chain_rng = replica_rng(seed, 0)
    size_rng = replica_rng(seed, 1)
    signs = np.empty((days, n_stocks), dtype=np.int8)
    ups = np.empty(days, dtype=np.int64)
    current = None
    for seg in schedule:
        sel = np.flatnonzero((dates >= seg.start) & (dates < seg.end))
        if sel.size == 0:
            continue
        spd = sweeps_per_day or default_sweeps_per_day(n_stocks, seg.u, seg.d)
        snaps, ks = simulate_snapshots(topology, seg.u, seg.d, seg.p, sel.size, spd, burn_in_sweeps, chain_rng,
                                       current)
        signs[sel] = snaps
        ups[sel] = ks
        current = snaps[-1]
    magnitude = size_rng.lognormal(mean=-4.6, sigma=0.5, size=signs.shape)
    tickers = np.array([f"S{i:04d}" for i in range(n_stocks)])
    returns = pd.DataFrame(
        {
            "date": np.repeat(dates.to_numpy(), n_stocks),
            "ticker": np.tile(tickers, days),
            "return": (signs * magnitude).ravel(),
        }
    )
    return SyntheticMarket(returns, dates, ups, signs)


def synth_market(schedule, n_stocks, days, seed=0, **kwargs) -> pd.DataFrame:
    """Synthetic ``date, ticker, return`` records; see :func:`simulate_market`."""
    return simulate_market(schedule, n_stocks, days, seed, **kwargs).returns
