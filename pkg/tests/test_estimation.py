import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from conftest import iid_series
from mimicry.estimation import (
    ComovementSeries,
    FitError,
    block_bootstrap_indices,
    bootstrap_stderr,
    chi2_gof,
    fit_free,
    fit_symmetric,
    free_estimate,
    kde,
    positive_fraction,
    sample_variance,
    symmetric_estimate,
)
from mimicry.model import ModelParams


def returns_frame(rows):
    return pd.DataFrame(rows, columns=["date", "ticker", "return"])


class TestPositiveFraction:
    def test_counts_and_zero_exclusion(self):
        frame = returns_frame([
            ("2001-01-02", "A", 0.01), ("2001-01-02", "B", -0.02), ("2001-01-02", "C", 0.0),
            ("2001-01-03", "A", 0.03), ("2001-01-03", "B", 0.01), ("2001-01-03", "C", -0.01),
        ])
        series = positive_fraction(frame, min_stocks=1)
        assert series.k_up.tolist() == [1, 2]
        assert series.n_day.tolist() == [2, 3]
        np.testing.assert_allclose(series.fractions, [0.5, 2 / 3])

    def test_small_days_dropped(self):
        frame = returns_frame([("2001-01-02", "A", 0.01), ("2001-01-03", "A", 0.01), ("2001-01-03", "B", 0.01)])
        series = positive_fraction(frame, min_stocks=2)
        assert series.dates.tolist() == [np.datetime64("2001-01-03")]

    def test_duplicates_rejected(self):
        frame = returns_frame([("2001-01-02", "A", 0.01), ("2001-01-02", "A", 0.02)])
        with pytest.raises(ValueError, match="share a"):
            positive_fraction(frame, min_stocks=1)

    def test_default_threshold(self):
        rows = [("2001-01-02", f"T{i}", 0.01) for i in range(139)]
        rows += [("2001-01-03", f"T{i}", -0.01) for i in range(140)]
        series = positive_fraction(returns_frame(rows))
        assert len(series) == 1 and series.k_up[0] == 0

    def test_series_validation(self):
        d = np.array(["2001-01-02", "2001-01-03"], dtype="datetime64[D]")
        with pytest.raises(ValueError):
            ComovementSeries(d[::-1], [1, 1], [2, 2], min_stocks=1)
        with pytest.raises(ValueError):
            ComovementSeries(d, [3, 1], [2, 2], min_stocks=1)

    def test_window_half_open(self, rng):
        series = iid_series(50, 1, 1, 30, rng)
        sub = series.window("2000-01-04", "2000-01-06")
        assert sub.dates.tolist() == [np.datetime64("2000-01-04"), np.datetime64("2000-01-05")]


class TestSymmetricEstimate:
    def test_two_point_variance(self):
        assert sample_variance([0.3, 0.7]) == pytest.approx(0.08)

    @settings(max_examples=50)
    @given(st.lists(st.floats(0, 1), min_size=2, max_size=50))
    def test_variance_divisor(self, xs):
        x = np.array(xs)
        assert sample_variance(x) == pytest.approx(((x - x.mean()) ** 2).sum() / (x.size - 1), abs=1e-15)

    @settings(max_examples=50)
    @given(st.lists(st.floats(0.05, 0.95), min_size=3, max_size=60), st.randoms())
    def test_order_does_not_matter(self, xs, r):
        x = np.array(xs)
        y = x.copy()
        r.shuffle(y)
        assert sample_variance(x) == pytest.approx(sample_variance(y), rel=1e-12, abs=1e-18)

    def test_constant_fractions_fail_too_small(self):
        dates = pd.bdate_range("2000-01-03", periods=250).to_numpy()
        series = ComovementSeries(dates, np.full(250, 100), np.full(250, 200), min_stocks=1)
        with pytest.raises(FitError) as err:
            fit_symmetric(series, n_boot=10)
        assert err.value.reason == "too_small" and err.value.c2 == 0.0

    def test_two_point_fractions_fail_too_large(self):
        dates = pd.bdate_range("2000-01-03", periods=250).to_numpy()
        k = np.tile([0, 200], 125)
        series = ComovementSeries(dates, k, np.full(250, 200), min_stocks=1)
        with pytest.raises(FitError) as err:
            fit_symmetric(series, n_boot=10)
        assert err.value.reason == "too_large"

    def test_uniform_fractions_give_critical_point(self):
        # variance of a uniform variable on [0, 1] is 1/12, which inverts to U ~ 1
        n = 500
        x = (np.arange(20000) + 0.5) / 20000
        assert symmetric_estimate(x, n) == pytest.approx(1.0, rel=0.01)

    def test_row_wise(self):
        x = np.array([[0.5, 0.5, 0.5], [0.2, 0.5, 0.8]])
        u = symmetric_estimate(x, 100)
        assert np.isnan(u[0]) and np.isfinite(u[1])

    def test_recovers_parameter(self, rng):
        series = iid_series(1000, 2.5, 2.5, 5000, rng)
        res = fit_symmetric(series, n_boot=200)
        assert res.u_eq_d == pytest.approx(2.5, rel=0.1)
        assert res.n_ref == 1000 and res.n_days == 5000
        assert abs(res.u_eq_d - 2.5) < 4 * res.stderr

    def test_too_few_days(self, rng):
        with pytest.raises(FitError, match="need at least"):
            fit_symmetric(iid_series(100, 1, 1, 50, rng))


class TestFreeFit:
    def test_recovers_asymmetric_parameters(self, rng):
        series = iid_series(800, 1.5, 4.0, 6000, rng)
        res = fit_free(series, n_boot=200)
        assert res.u == pytest.approx(1.5, rel=0.1)
        assert res.d == pytest.approx(4.0, rel=0.1)
        assert res.xi == pytest.approx(1.5 / 5.5, abs=0.01)
        assert res.u + res.d == pytest.approx(res.a)
        assert res.u_stderr > 0 and res.d_stderr > 0

    def test_estimate_columns(self):
        x = np.array([0.2, 0.4, 0.3, 0.5])
        u, d, xi, a = free_estimate(x, 300)
        assert xi == pytest.approx(x.mean()) and u == pytest.approx(xi * a) and d == pytest.approx((1 - xi) * a)


class TestBootstrap:
    def test_index_shape_and_blocks(self, rng):
        idx = block_bootstrap_indices(100, 7, 10, rng)
        assert idx.shape == (7, 100)
        assert idx.min() >= 0 and idx.max() < 100
        # inside each block indices are consecutive
        assert np.all(np.diff(idx.reshape(7, 10, 10), axis=2) == 1)

    @pytest.mark.parametrize("n_boot,block_len", [(1, 5), (10, 100), (10, 0)])
    def test_degenerate_settings(self, rng, n_boot, block_len):
        with pytest.raises(ValueError):
            block_bootstrap_indices(100, n_boot, block_len, rng)

    def test_seeded(self, rng):
        series = iid_series(300, 2, 2, 300, rng)
        est = lambda x: symmetric_estimate(x, 300)
        assert bootstrap_stderr(series, None, est, 100, seed=3) == bootstrap_stderr(series, None, est, 100, seed=3)

    def test_stderr_matches_sampling_spread(self):
        # mean bootstrap standard error should track the spread of the estimate
        # across independent windows
        rng = np.random.default_rng(7)
        estimates, stderrs = [], []
        for _ in range(200):
            series = iid_series(1000, 2.0, 2.0, 252, rng)
            res = fit_symmetric(series, n_boot=300, seed=int(rng.integers(1 << 30)), method="iid")
            estimates.append(res.u_eq_d)
            stderrs.append(res.stderr)
        spread = np.std(estimates, ddof=1)
        assert np.mean(stderrs) == pytest.approx(spread, rel=0.15)


class TestKde:
    def test_unit_mass_and_bump(self, rng):
        dates = pd.bdate_range("2000-01-03", periods=300).to_numpy()
        series = ComovementSeries(dates, np.full(300, 150), np.full(300, 300), min_stocks=1)
        curve = kde(series)
        assert np.trapezoid(curve.empirical, curve.grid) == pytest.approx(1.0, abs=1e-3)
        assert curve.grid[np.argmax(curve.empirical)] == pytest.approx(0.5, abs=1 / 511)
        # a single point gives the renormalised kernel itself
        peak = 1 / (0.06 * np.sqrt(2 * np.pi))
        assert curve.empirical.max() == pytest.approx(peak, rel=0.01)

    def test_flat_data_gives_flat_interior(self):
        dates = pd.bdate_range("2000-01-03", periods=1001).to_numpy()
        series = ComovementSeries(dates, np.arange(1001), np.full(1001, 1000), min_stocks=1)
        curve = kde(series)
        interior = curve.empirical[(curve.grid > 0.25) & (curve.grid < 0.75)]
        assert np.ptp(interior) < 0.01

    def test_model_overlay(self, rng):
        series = iid_series(500, 3, 3, 3000, rng)
        params = ModelParams(500, 3, 3)
        smooth = kde(series, params=params)
        raw = kde(series, params=params, model_mode="raw")
        for curve in (smooth, raw):
            assert np.trapezoid(curve.model, curve.grid) == pytest.approx(1.0, abs=1e-3)
        assert np.abs(smooth.empirical - smooth.model).max() < 0.15 * smooth.model.max()

    def test_csv(self, rng, tmp_path):
        curve = kde(iid_series(100, 1, 1, 50, rng), grid_points=5)
        curve.to_csv(tmp_path / "d.csv")
        lines = (tmp_path / "d.csv").read_text().splitlines()
        assert lines[0] == "x,empirical,model" and len(lines) == 6 and lines[1].endswith(",nan")

    def test_empty_window(self, rng):
        with pytest.raises(ValueError):
            kde(iid_series(100, 1, 1, 50, rng), window=("1990-01-01", "1991-01-01"))


class TestChi2:
    def test_bins_partition_and_expectations(self, rng):
        series = iid_series(300, 2, 2, 1000, rng)
        report = chi2_gof(series, None, ModelParams(300, 2, 2))
        assert report.bins[0].k_lo == 0 and report.bins[-1].k_hi == 300
        for a, b in zip(report.bins, report.bins[1:]):
            assert b.k_lo == a.k_hi + 1
        assert sum(b.observed for b in report.bins) == 1000
        assert sum(b.expected for b in report.bins) == pytest.approx(1000)
        assert min(b.expected for b in report.bins) >= 5
        assert report.dof == len(report.bins) - 2

    def test_detects_wrong_model(self, rng):
        series = iid_series(300, 1, 1, 1000, rng)
        assert chi2_gof(series, None, ModelParams(300, 5, 5)).p_value < 1e-10

    def test_uniform_null(self):
        rng = np.random.default_rng(1)
        pvals = [chi2_gof(iid_series(200, 3, 3, 300, rng), None, ModelParams(200, 3, 3), n_fitted=0).p_value
                 for _ in range(200)]
        assert stats.kstest(pvals, "uniform").statistic < 0.1

    def test_fitted_null_calibration(self):
        # data drawn from the law, parameter refitted: p-values uniform with one dof removed
        rng = np.random.default_rng(31)
        pvals = []
        for _ in range(1000):
            data = iid_series(1000, 2.21, 2.21, 1000, rng)
            refit = fit_symmetric(data, n_boot=2, block_len=1, min_days=2)
            pvals.append(chi2_gof(data, None, refit.params, n_fitted=1).p_value)
        assert stats.kstest(pvals, "uniform").statistic < 0.05

    def test_merging_small_sample(self, rng):
        report = chi2_gof(iid_series(200, 1, 1, 40, rng), None, ModelParams(200, 1, 1), min_days=10)
        assert 3 <= len(report.bins) <= 8
        assert min(b.expected for b in report.bins) >= 5

    def test_csv(self, rng, tmp_path):
        report = chi2_gof(iid_series(100, 2, 2, 200, rng), None, ModelParams(100, 2, 2))
        report.to_csv(tmp_path / "g.csv", 100)
        lines = (tmp_path / "g.csv").read_text().splitlines()
        assert lines[0] == "bin_lo,bin_hi,observed,expected"
        assert lines[-1].startswith("# statistic=")
