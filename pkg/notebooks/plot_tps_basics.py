"""
Thin-plate splines on a handful of points
=========================================

Fit a spline through six control pairs, look at how the smoothing weight
trades landmark accuracy for a gentler warp, and check that a purely affine
motion costs no bending at all.
"""

import numpy as np

from garmentwarp import ControlPairs, bending_energy, fit_tps
from garmentwarp.tps import residuals

rng = np.random.default_rng(0)
source = np.array([[0.2, 0.2], [0.8, 0.2], [0.5, 0.5], [0.2, 0.8], [0.8, 0.8], [0.5, 0.9]])
target = source + rng.normal(0, 0.04, source.shape)
pairs = ControlPairs(source, target)

# With lambda = 0 the spline hits every target exactly
exact = fit_tps(pairs, 0.0)
print("max residual at lambda=0:", residuals(exact, pairs).max())

# Raising lambda lowers the bending energy and loosens the fit
for lam in (1e-4, 1e-2, 1.0, 100.0):
    t = fit_tps(pairs, lam)
    print(f"lambda={lam:<7g} energy={bending_energy(t):.3e} residual sum={residuals(t, pairs).sum():.4f}")

# An affine target is reproduced by the affine part alone
A = np.array([[1.1, 0.2], [-0.1, 0.9]])
affine = fit_tps(ControlPairs(source, source @ A.T + [0.05, 0.0]), 0.01)
print("rbf weights on an affine target:", np.abs(affine.rbf_coeffs).max())
print(affine.affine.round(6))

# The spline is a plain function of the plane; evaluate it on a grid
grid = np.stack(np.meshgrid(np.linspace(0, 1, 5), np.linspace(0, 1, 5)), axis=-1)
print(exact(grid).shape)
