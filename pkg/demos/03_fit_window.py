"""
Fitting the model to a window of daily co-movement
==================================================

Draws a year of synthetic market days, fits U = D with a block-bootstrap
standard error, checks the fit with a chi-square test and a kernel density
overlay, and fits U and D separately.
"""
import numpy as np
import pandas as pd

from mimicry.estimation import ComovementSeries, chi2_gof, fit_free, fit_symmetric, kde
from mimicry.model import ModelParams, stationary_pmf

rng = np.random.default_rng(3)
n_stocks, days = 1000, 252
for u_true in (1.24, 2.21, 5.79):
    k = rng.choice(n_stocks + 1, size=days, p=stationary_pmf(ModelParams(n_stocks, u_true, u_true)).probs)
    dates = pd.bdate_range("2006-01-02", periods=days)
    series = ComovementSeries(dates.to_numpy(), k, np.full(days, n_stocks))

    res = fit_symmetric(series)
    gof = chi2_gof(series, None, res.params)
    curve = kde(series, params=res.params)
    gap = np.abs(curve.empirical - curve.model).max()
    print(f"true U={u_true:4.2f}: fitted {res.u_eq_d:.2f} +/- {res.stderr:.2f}, chi2={gof.statistic:.1f}"
          f" on {gof.dof} dof (p={gof.p_value:.2f}), max density gap {gap:.2f}")

# An asymmetric market: more news pushing prices down than up.
k = rng.choice(n_stocks + 1, size=days, p=stationary_pmf(ModelParams(n_stocks, 1.5, 3.0)).probs)
series = ComovementSeries(pd.bdate_range("2006-01-02", periods=days).to_numpy(), k, np.full(days, n_stocks))
free = fit_free(series)
print(f"free fit: U={free.u:.2f} +/- {free.u_stderr:.2f}, D={free.d:.2f} +/- {free.d_stderr:.2f}")
