#!/usr/bin/env python3
"""Association-cell load laws and their Monte Carlo check.

The user count in a typical cell follows the gamma-approximated
Poisson-Voronoi area mixture with mean lambda_u/lambda; the cell containing
a random user is size-biased and holds 1 + (9/7) * lambda_u/lambda users on
average.  A nearest-neighbor Monte Carlo over a torus reproduces both PMFs.
"""

import math

import numpy as np
from scipy.spatial import cKDTree

from mmwcell import tagged_mean, tagged_pmf, typical_mean, typical_pmf

ratio = 10.0  # users per BS
n = np.arange(0, 41)

print(f"typical-cell PMF, mean {typical_mean(ratio, 1.0):.3f}:")
print("  n :", " ".join(f"{k:5d}" for k in n[:12]))
print("  p :", " ".join(f"{p:.3f}" for p in typical_pmf(ratio, 1.0, n[:12])))
print(f"tagged-cell PMF, mean {tagged_mean(ratio, 1.0):.3f}:")
print("  n :", " ".join(f"{k:5d}" for k in n[1:13]))
print("  p :", " ".join(f"{p:.3f}" for p in tagged_pmf(ratio, 1.0, n[1:13])))

rng = np.random.default_rng(3)
n_cells = 40000
side = math.sqrt(n_cells)
bs = rng.random((rng.poisson(n_cells), 2)) * side
users = rng.random((rng.poisson(ratio * n_cells), 2)) * side
tree = cKDTree(bs, boxsize=side)
_, owner = tree.query(users)
counts = np.bincount(owner, minlength=len(bs))

hi = counts.max() + 1
emp_typ = np.bincount(counts, minlength=hi) / counts.size
emp_tag = np.bincount(counts[owner], minlength=hi) / owner.size
tv_typ = 0.5 * np.abs(emp_typ - typical_pmf(ratio, 1.0, np.arange(hi))).sum()
tv_tag = 0.5 * np.abs(emp_tag - tagged_pmf(ratio, 1.0, np.arange(hi))).sum()
print(f"\nVoronoi Monte Carlo over {len(bs)} cells:")
print(f"  typical-cell total variation: {tv_typ:.4f}")
print(f"  tagged-cell  total variation: {tv_tag:.4f}")
print(f"  empirical means: typical {counts.mean():.2f}, "
      f"tagged {counts[owner].mean():.2f}")
