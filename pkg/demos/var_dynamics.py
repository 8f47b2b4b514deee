"""How shocks travel through a small VAR.

Three stationary series are simulated from a VAR(2) in which the first
variable drives the other two.  We test for Granger causality, choose the
lag by AIC, and read the fitted system through orthogonalized impulse
responses and the forecast-error variance decomposition.

Run:  python demos/var_dynamics.py
"""

import numpy as np

from yieldcast import var
from yieldcast.data import Panel
from yieldcast.diagnostics import granger_causality

names = ("spread", "term", "policy")
B1 = np.array([[0.5, 0.0, 0.0],
               [0.4, 0.3, 0.0],
               [0.2, 0.1, 0.4]])
B2 = np.array([[0.2, 0.0, 0.0],
               [0.1, 0.1, 0.0],
               [0.0, 0.0, 0.1]])
cov = np.array([[1.0, 0.5, 0.2],
                [0.5, 1.0, 0.1],
                [0.2, 0.1, 1.0]])
y = var.simulate_var(np.zeros(3), np.stack([B1, B2]), cov, 2000, seed=11)
panel = Panel(names, np.datetime64("2010-01-04") + np.arange(len(y)), y)

print("Granger tests at 4 lags (p-values):")
for effect, cause in (("term", "spread"), ("spread", "term"), ("policy", "spread")):
    g = granger_causality(panel[effect], panel[cause], 4)
    print(f"  {cause:>6} -> {effect:<6} p = {g.p_value:.3g}")

sel = var.select_lag_order(panel, 10)
print(f"\nAIC picks lag {sel.lag} (weak evidence: {sel.weak_evidence})")
print("AIC trace:", np.round(sel.aic_trace, 4))

fit = var.fit_var(panel, sel.lag)
print(f"spectral radius {fit.spectral_radius():.3f}; equation Durbin-Watson", np.round(fit.dw, 3))

resp = var.irf(fit, 8).responses
print("\nresponse of each variable to a one-sd spread shock:")
print(f"{'h':>3} " + " ".join(f"{n:>8}" for n in names))
for h in range(9):
    print(f"{h:>3} " + " ".join(f"{v:8.3f}" for v in resp[h, :, 0]))

shares = var.fevd(fit, 10).shares
print("\nshare of term's forecast-error variance due to each shock:")
for h in (0, 4, 10):
    print(f"  {h + 1:>2}-step  " + "  ".join(f"{n} {s:.3f}" for n, s in zip(names, shares[h, 1])))

alt = var.fevd(fit, 0, ordering=("term", "spread", "policy")).shares
print(f"\nordering matters: with term first, its own impact share is {alt[0, 0, 0]:.3f}"
      f" instead of {shares[0, 1, 1]:.3f}")

fc = var.forecast_var(fit, panel, 5)
print("\n5-step forecast of spread:", np.round(fc["spread"].values, 3))
