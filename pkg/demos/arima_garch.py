"""Linear forecasting with ARIMA, then a look at what it leaves behind.

An ARMA(1,1) with GARCH(1,1) innovations is simulated.  The ARMA part is
estimated by exact Kalman-filter likelihood and scored walk-forward; the
residuals are then checked for volatility clustering and a GARCH model
is fitted to them.

Run:  python demos/arima_garch.py
"""

import numpy as np

from yieldcast import arima, garch
from yieldcast.diagnostics import adf_test, correlogram

n = 3000
# alpha weights lagged variance, beta lagged squared shocks
eps = garch.simulate_garch(0.05, [0.85], [0.10], n, seed=4)
y = np.empty(n)
y[0] = eps[0]
for t in range(1, n):
    y[t] = 0.6 * y[t - 1] + eps[t] + 0.3 * eps[t - 1]
y += 2.0

adf = adf_test(y)
print(f"ADF statistic {adf.statistic:.2f}, p = {adf.p_value:.2g}: stationary, so no differencing")

for order in ((1, 0, 0), (0, 0, 1), (1, 0, 1), (2, 0, 2)):
    f = arima.fit(y, arima.ArimaSpec(*order), compute_se=False)
    print(f"ARIMA{order}  AIC {f.aic:9.1f}")

fit = arima.fit(y, arima.ArimaSpec(1, 0, 1))
s = fit.summary()
print("\nchosen ARIMA(1,0,1):", {k: round(v, 3) for k, v in s["coefficients"].items()})

fc = arima.forecast(fit, 5)
print("5-step forecast:", np.round(fc.mean, 3), " 95% half-width:", np.round(fc.upper - fc.mean, 3))

wf = arima.walk_forward(y, arima.ArimaSpec(1, 0, 1), 0.8, refit="fixed_params")
print(f"walk-forward RMSE over {len(wf.actual)} steps: {wf.rmse:.3f}"
      f" (innovation SD {np.std(eps):.3f})\n")

# Residuals look white in levels but not in squares.
e = fit.residuals.values
print(f"max |ACF| of residuals, lags 1-10:         {np.abs(correlogram(e, 10).acf[1:]).max():.3f}")
diag = garch.arch_effect_diagnostic(e - e.mean())
print(f"squared-residual lags outside the band:     {diag.exceed_fraction:.0%}  -> ARCH effect {diag.arch_effect}")

g = garch.fit_garch(e - e.mean())
print("\nGARCH(1,1) on the residuals:", {k: round(v, 3) for k, v in g.summary()["coefficients"].items()})
after = garch.arch_effect_diagnostic(g.standardized_residuals())
print(f"standardized residuals outside the band:    {after.exceed_fraction:.0%}  -> ARCH effect {after.arch_effect}")
print("variance forecast, next 5 days:", np.round(garch.forecast_variance(g, 5), 3))
