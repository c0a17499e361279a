"""Draw one spatial functional data set and look at what came out.

Covariate curves live on a square lattice of sites and are correlated across
space; responses are integrals of those curves against a slope function plus
spatially correlated noise tuned to a target signal-to-noise ratio.
"""

import numpy as np

from sflr.simulate import CASE_A, generate_covariates, generate_responses
from sflr.spatial import make_grid, stream

grid = make_grid(10, 2)
X = generate_covariates(grid, 101, stream(0, 10, 0, 0))
sample = generate_responses(X, CASE_A, 0.10, stream(0, 10, 0, 1))

print(f"{len(grid)} sites, curves sampled at {X.values.shape[1]} points")
print(f"curve value range: [{X.values.min():.2f}, {X.values.max():.2f}]")

# Neighbouring sites should look more alike than distant ones.
near = np.corrcoef(X.values[0], X.values[1])[0, 1]
far = np.corrcoef(X.values[0], X.values[-1])[0, 1]
print(f"correlation of curves at adjacent sites {near:.2f}, at opposite corners {far:.2f}")

print(f"signal second moment {sample.signal_second_moment:.4f}")
print(f"noise variance       {sample.sigma2_eps:.4f}")
print(f"realized snr         {sample.snr:.4f}")
