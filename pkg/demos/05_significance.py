"""
How unlikely is it to cover the crashes by chance?
==================================================

Four year-long warning windows and the eight largest one-day Dow Jones
drops of 1985-2010. The Monte Carlo p-value is the chance that randomly
placed windows (or randomly placed crash dates) cover as many crashes.
"""
import pandas as pd

from mimicry.pipeline import DJI_LARGEST_DROPS_1985_2010, WarningWindow, evaluate_events, permutation_pvalue

period = ("1985-01-01", "2011-01-01")
windows = [WarningWindow(pd.Timestamp(s), pd.Timestamp(s) + pd.DateOffset(years=1))
           for s in ("1987-03-01", "1997-03-01", "2001-03-01", "2008-03-01")]

report = evaluate_events(windows, DJI_LARGEST_DROPS_1985_2010, period)
print("\n".join(report.lines()))

for mode in ("shift-windows", "shift-crashes"):
    res = permutation_pvalue(windows, DJI_LARGEST_DROPS_1985_2010, period, n_trials=10**6, mode=mode)
    print(f"{mode:>13}: p = {res.p_value:.2e}  (95% Wilson interval {res.ci_low:.2e} .. {res.ci_high:.2e})")
