"""Predict a response at an unobserved location.

The covariate curve at the target is kriged from the observed sites, then
pushed through the fitted slope. One set of kriging weights serves every
point of the curve, which is what makes the prediction cheap.
"""

import numpy as np

from sflr.estimate import center, fit_gcv
from sflr.krige import DEFAULT_TARGET, krige_curve, predict_pair, solve_kriging
from sflr.simulate import CASE_B, generate_covariates, generate_responses
from sflr.spatial import make_grid, stream
from sflr.spline import build_spline_system

p, n = 101, 15
system = build_spline_system(p)
grid = make_grid(n, 2)
X = generate_covariates(grid, p, stream(2, n, 0, 0))
r = generate_responses(X, CASE_B, 0.10, stream(2, n, 0, 1))

ks = solve_kriging(grid, DEFAULT_TARGET)
print(f"target {DEFAULT_TARGET}: weights sum to {ks.weights.sum():.12f}")
for i in np.argsort(ks.weights)[::-1][:4]:
    print(f"  site {tuple(grid.sites[i].tolist())} weight {ks.weights[i]:.3f}")

# Kriging an observed site hands back that site's curve unchanged.
same = solve_kriging(grid, grid.sites[37])
print(f"max error when kriging an observed site: {np.abs(krige_curve(same, X) - X.values[37]).max():.1e}")

result = fit_gcv(center(X, r), system)
pair = predict_pair(result, CASE_B, krige_curve(ks, X))
print(f"predicted {pair.y_hat:.4f}, oracle {pair.y_star:.4f}, squared error {pair.squared_error:.2e}")
