"""Moment fits of the model to daily positive-return fractions.

The symmetric fit pins the mean fraction at 1/2 and inverts the sample
variance (divisor n - 1) for ``a = U + D``; sampling errors come from a
moving-block bootstrap over days.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np
import pandas as pd
from scipy import stats

from ._csv import write_csv
from .model import ModelParams, MomentRangeError, invert_moments, stationary_pmf

__all__ = [
    "FitError",
    "ComovementSeries",
    "FitResult",
    "FreeFitResult",
    "DensityCurve",
    "GofBin",
    "GofReport",
    "positive_fraction",
    "sample_variance",
    "symmetric_estimate",
    "free_estimate",
    "fit_symmetric",
    "fit_free",
    "block_bootstrap_indices",
    "bootstrap_stderr",
    "kde",
    "chi2_gof",
]

log = logging.getLogger(__name__)

DEFAULT_MIN_STOCKS = 140
DEFAULT_MIN_DAYS = 200


class FitError(ValueError):
    """A window cannot be fitted; ``c2`` holds the offending variance if any."""

    def __init__(self, message, c2=None, reason=None):
        super().__init__(message)
        self.c2 = c2
        self.reason = reason


def _day(x):
    return np.datetime64(pd.Timestamp(x).date(), "D")


@dataclass(frozen=True)
class ComovementSeries:
    """Daily up-counts ``k_up`` out of ``n_day`` non-zero returns."""

    dates: np.ndarray
    k_up: np.ndarray
    n_day: np.ndarray
    min_stocks: int = DEFAULT_MIN_STOCKS

    def __post_init__(self):
        dates = np.asarray(self.dates, dtype="datetime64[D]")
        k = np.asarray(self.k_up, dtype=np.int64)
        n = np.asarray(self.n_day, dtype=np.int64)
        if not (dates.shape == k.shape == n.shape and dates.ndim == 1):
            raise ValueError("dates, k_up and n_day must be 1-D and of equal length")
        if dates.size > 1 and not np.all(np.diff(dates) > np.timedelta64(0, "D")):
            raise ValueError("dates must be strictly increasing")
        if np.any(k < 0) or np.any(k > n):
            raise ValueError("need 0 <= k_up <= n_day on every day")
        if np.any(n < max(self.min_stocks, 1)):
            raise ValueError(f"every day needs n_day >= {max(self.min_stocks, 1)}")
        for name, arr in (("dates", dates), ("k_up", k), ("n_day", n)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def __len__(self):
        return self.dates.size

    @property
    def fractions(self):
        return self.k_up / self.n_day

    @classmethod
    def from_frame(cls, frame, min_stocks=DEFAULT_MIN_STOCKS, drop_small=True):
        """Build from a frame with columns ``date, n_up, n_total``."""
        frame = frame.sort_values("date")
        n = frame["n_total"].to_numpy(dtype=np.int64)
        keep = n >= max(min_stocks, 1)
        if drop_small and not keep.all():
            log.info("dropped %d day(s) with fewer than %d stocks", int((~keep).sum()), min_stocks)
            frame = frame[keep]
        dates = pd.to_datetime(frame["date"]).to_numpy().astype("datetime64[D]")
        return cls(dates, frame["n_up"].to_numpy(), frame["n_total"].to_numpy(), min_stocks)

    def to_frame(self):
        return pd.DataFrame({"date": self.dates, "n_up": self.k_up, "n_total": self.n_day})

    def window(self, start=None, end=None):
        """Days in the half-open interval ``[start, end)``."""
        mask = np.ones(len(self), dtype=bool)
        if start is not None:
            mask &= self.dates >= _day(start)
        if end is not None:
            mask &= self.dates < _day(end)
        return ComovementSeries(self.dates[mask], self.k_up[mask], self.n_day[mask], self.min_stocks)

    def span(self):
        return self.dates[0], self.dates[-1]


def positive_fraction(returns, min_stocks=DEFAULT_MIN_STOCKS) -> ComovementSeries:
    """Count up-moves per day.

    ``returns`` is a frame with ``date``, ``ticker`` and ``return`` columns.
    Exact zero returns count neither up nor down. Days with fewer than
    ``min_stocks`` non-zero returns are dropped.
    """
    if len(returns) == 0:
        raise ValueError("no return records")
    frame = pd.DataFrame(returns)[["date", "ticker", "return"]]
    dup = frame.duplicated(["date", "ticker"], keep=False)
    if dup.any():
        bad = frame.loc[dup, ["date", "ticker"]].drop_duplicates().head(5)
        pairs = ", ".join(f"({pd.Timestamp(d).date()}, {t})" for d, t in bad.itertuples(index=False))
        raise ValueError(f"{int(dup.sum())} records share a (date, ticker) pair, e.g. {pairs}")
    r = frame["return"].to_numpy(dtype=float)
    grouped = pd.DataFrame({"date": pd.to_datetime(frame["date"]), "up": r > 0, "nonzero": r != 0})
    daily = grouped.groupby("date", sort=True).agg(n_up=("up", "sum"), n_total=("nonzero", "sum"))
    n_zero = int((r == 0).sum())
    if n_zero:
        log.info("excluded %d zero return(s)", n_zero)
    daily = daily.reset_index()
    return ComovementSeries.from_frame(daily, min_stocks=min_stocks)


def _window_bounds(series, window):
    if window is None:
        return series
    return series.window(*window)


def sample_variance(fractions):
    """Unbiased (divisor n - 1) variance along the last axis."""
    return np.var(np.asarray(fractions, dtype=float), axis=-1, ddof=1)


def symmetric_estimate(fractions, n_ref):
    """``U = D`` from each row of ``fractions``; NaN where the inversion fails."""
    c2 = sample_variance(fractions)
    v = 0.25
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (v - c2) / (c2 - v / n_ref)
    ok = (c2 > v / n_ref) & (c2 < v)
    return np.where(ok, 0.5 * a, np.nan)


def free_estimate(fractions, n_ref):
    """Columns ``(U, D, xi, a)`` per row, with the mean taken from the data."""
    x = np.asarray(fractions, dtype=float)
    c1 = x.mean(axis=-1)
    c2 = x.var(axis=-1, ddof=1)
    v = c1 * (1.0 - c1)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (v - c2) / (c2 - v / n_ref)
    ok = (c1 > 0) & (c1 < 1) & (c2 > v / n_ref) & (c2 < v)
    out = np.stack([c1 * a, (1.0 - c1) * a, c1, a], axis=-1)
    return np.where(ok[..., None], out, np.nan)


def block_bootstrap_indices(n, n_boot, block_len, rng):
    """Moving-block resampling indices, shape ``(n_boot, n)``."""
    if n_boot < 2:
        raise ValueError("n_boot must be >= 2")
    if block_len < 1:
        raise ValueError("block_len must be >= 1")
    if block_len >= n:
        raise ValueError(f"block_len={block_len} leaves no resampling variation in {n} days")
    n_blocks = -(-n // block_len)
    starts = rng.integers(0, n - block_len + 1, size=(n_boot, n_blocks))
    idx = starts[:, :, None] + np.arange(block_len)
    return idx.reshape(n_boot, -1)[:, :n]


def bootstrap_stderr(series, window, estimator: Callable, n_boot=1000, block_len=20, seed=0, method="block"):
    """Standard deviation of ``estimator`` over bootstrap resamples of the window's days.

    ``estimator`` maps a ``(n_boot, n_days)`` array of resampled fractions to
    one value (or one row of values) per resample, returning NaN for failed
    resamples. ``method="iid"`` resamples single days.
    """
    x = _window_bounds(series, window).fractions
    if method == "iid":
        block_len = 1
    elif method != "block":
        raise ValueError(f"unknown bootstrap method {method!r}")
    if x.size < 2 * block_len or x.size < 2:
        raise ValueError(f"window holds {x.size} days; need at least {2 * block_len}")
    rng = np.random.default_rng(seed)
    idx = block_bootstrap_indices(x.size, n_boot, block_len, rng)
    values = np.asarray(estimator(x[idx]), dtype=float)
    finite = np.isfinite(values) if values.ndim == 1 else np.isfinite(values).all(axis=1)
    failed = 1.0 - finite.mean()
    if failed > 0.10:
        warnings.warn(f"{failed:.1%} of bootstrap resamples failed", RuntimeWarning, stacklevel=2)
    if finite.sum() < 2:
        raise FitError("fewer than two bootstrap resamples succeeded")
    sd = values[finite].std(axis=0, ddof=1)
    return float(sd) if np.ndim(sd) == 0 else sd


@dataclass(frozen=True)
class FitResult:
    u_eq_d: float
    stderr: float
    n_ref: int
    window: tuple
    n_days: int
    c2: float

    @property
    def params(self):
        return ModelParams(self.n_ref, self.u_eq_d, self.u_eq_d)


@dataclass(frozen=True)
class FreeFitResult:
    u: float
    d: float
    xi: float
    a: float
    u_stderr: float
    d_stderr: float
    xi_stderr: float
    a_stderr: float
    n_ref: int
    window: tuple
    n_days: int


def _prepare(series, window, min_days):
    sub = _window_bounds(series, window)
    if len(sub) < max(min_days, 2):
        raise FitError(f"window holds {len(sub)} days; need at least {max(min_days, 2)}")
    n_ref = int(round(float(np.median(sub.n_day))))
    bounds = window if window is not None else (sub.dates[0], sub.dates[-1] + np.timedelta64(1, "D"))
    return sub, n_ref, bounds


def _invert_or_fail(c1, c2, n_ref):
    try:
        return invert_moments(c1, c2, n_ref)
    except MomentRangeError as exc:
        raise FitError(f"fit failed: {exc}", c2=c2, reason=exc.reason) from exc


def fit_symmetric(series, window=None, *, n_boot=1000, block_len=20, seed=0, min_days=DEFAULT_MIN_DAYS,
                  method="block") -> FitResult:
    """Fit ``U = D`` to the days in ``window`` (half-open ``(start, end)``)."""
    sub, n_ref, bounds = _prepare(series, window, min_days)
    c2 = float(sample_variance(sub.fractions))
    _, a = _invert_or_fail(0.5, c2, n_ref)
    stderr = bootstrap_stderr(sub, None, lambda x: symmetric_estimate(x, n_ref), n_boot, block_len, seed, method)
    return FitResult(a / 2.0, stderr, n_ref, bounds, len(sub), c2)


def fit_free(series, window=None, *, n_boot=1000, block_len=20, seed=0, min_days=DEFAULT_MIN_DAYS,
             method="block") -> FreeFitResult:
    """Fit ``U`` and ``D`` separately, taking the mean fraction from the data."""
    sub, n_ref, bounds = _prepare(series, window, min_days)
    x = sub.fractions
    c1, c2 = float(x.mean()), float(x.var(ddof=1))
    xi, a = _invert_or_fail(c1, c2, n_ref)
    se = bootstrap_stderr(sub, None, lambda s: free_estimate(s, n_ref), n_boot, block_len, seed, method)
    return FreeFitResult(xi * a, (1 - xi) * a, xi, a, *map(float, se), n_ref, bounds, len(sub))


@dataclass(frozen=True)
class DensityCurve:
    grid: np.ndarray
    empirical: np.ndarray
    model: np.ndarray | None = None

    def to_csv(self, path):
        model = self.model if self.model is not None else np.full(self.grid.size, np.nan)
        write_csv(path, ["x", "empirical", "model"], zip(self.grid, self.empirical, model))


def _gauss_smooth(grid, points, weights, sigma):
    z = (grid[:, None] - points[None, :]) / sigma
    dens = (np.exp(-0.5 * z * z) * weights[None, :]).sum(axis=1) / (sigma * np.sqrt(2 * np.pi))
    return dens / np.trapezoid(dens, grid)


def kde(series, window=None, sigma=0.06, grid_points=512, params: ModelParams | None = None,
        model_mode="smoothed") -> DensityCurve:
    """Gaussian kernel density of the daily fractions on a grid over [0, 1].

    No reflection at the edges; curves are rescaled to unit mass on [0, 1].
    With ``params``, the exact law is overlaid either smoothed by the same
    kernel (``"smoothed"``) or as ``N * rho(k)`` interpolated on the grid
    (``"raw"``).
    """
    x = _window_bounds(series, window).fractions
    if x.size == 0:
        raise ValueError("window is empty")
    grid = np.linspace(0.0, 1.0, grid_points)
    emp = _gauss_smooth(grid, x, np.full(x.size, 1.0 / x.size), sigma)
    model = None
    if params is not None:
        rho = stationary_pmf(params).probs
        support = np.arange(params.n_nodes + 1) / params.n_nodes
        if model_mode == "smoothed":
            model = _gauss_smooth(grid, support, rho, sigma)
        elif model_mode == "raw":
            model = np.interp(grid, support, rho * params.n_nodes)
            model = model / np.trapezoid(model, grid)
        else:
            raise ValueError(f"unknown model_mode {model_mode!r}")
    return DensityCurve(grid, emp, model)


@dataclass(frozen=True)
class GofBin:
    k_lo: int
    k_hi: int
    observed: int
    expected: float


@dataclass(frozen=True)
class GofReport:
    statistic: float
    dof: int
    p_value: float
    bins: list
    n_days: int

    def to_csv(self, path, n_ref):
        rows = [((b.k_lo - 0.5) / n_ref, (b.k_hi + 0.5) / n_ref, b.observed, b.expected) for b in self.bins]
        write_csv(path, ["bin_lo", "bin_hi", "observed", "expected"], rows)
        with open(path, "a", newline="\n") as fh:
            fh.write(f"# statistic={self.statistic:.17g} dof={self.dof} p_value={self.p_value:.17g}\n")


def _equal_probability_bins(pmf, target_bins):
    """Inclusive ``(k_lo, k_hi)`` ranges of near-equal probability."""
    cum = np.cumsum(pmf)
    cuts = np.searchsorted(cum, np.arange(1, target_bins) / target_bins, side="left")
    ends = sorted(set(int(c) for c in cuts if c < pmf.size - 1)) + [pmf.size - 1]
    starts = [0] + [e + 1 for e in ends[:-1]]
    return list(zip(starts, ends))


def chi2_gof(series, window, params: ModelParams, n_fitted=1, target_bins=20, min_expected=5.0,
             min_days=100) -> GofReport:
    """Pearson chi-square test of the daily up-counts against the model law.

    Fractions are mapped to the nearest count on ``0..params.n_nodes``.
    Bins of near-equal model probability are merged until every expected
    count is at least ``min_expected``.
    """
    sub = _window_bounds(series, window)
    n_days = len(sub)
    if n_days < min_days:
        raise ValueError(f"window holds {n_days} days; need at least {min_days}")
    n = params.n_nodes
    pmf = stationary_pmf(params).probs
    k = np.clip(np.rint(sub.fractions * n).astype(np.int64), 0, n)
    hist = np.bincount(k, minlength=n + 1)

    bins = _equal_probability_bins(pmf, target_bins)
    probs = [float(pmf[lo:hi + 1].sum()) for lo, hi in bins]
    while len(bins) > 1 and min(probs) * n_days < min_expected:
        i = int(np.argmin(probs))
        if i == 0:
            j = 1
        elif i == len(bins) - 1:
            j = i - 1
        else:
            j = i - 1 if probs[i - 1] <= probs[i + 1] else i + 1
        lo, hi = min(i, j), max(i, j)
        bins[lo:hi + 1] = [(bins[lo][0], bins[hi][1])]
        probs[lo:hi + 1] = [probs[lo] + probs[hi]]
    if len(bins) < 3:
        raise ValueError(f"only {len(bins)} bin(s) survive merging; need 3")

    observed = np.array([hist[lo:hi + 1].sum() for lo, hi in bins])
    expected = np.array(probs) * n_days
    statistic = float(((observed - expected) ** 2 / expected).sum())
    dof = len(bins) - 1 - n_fitted
    if dof < 1:
        raise ValueError("no degrees of freedom left")
    p_value = float(stats.chi2.sf(statistic, dof))
    report_bins = [GofBin(lo, hi, int(o), float(e)) for (lo, hi), o, e in zip(bins, observed, expected)]
    return GofReport(statistic, dof, p_value, report_bins, n_days)
