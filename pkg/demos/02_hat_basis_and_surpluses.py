"""Hat-function basis in action: interpolating a bell-shaped density with
hierarchical surpluses and watching the surpluses decay by ~4x per level."""

import numpy as np
from scipy.stats import norm

from sparserc import hierarchize_full_grid_1d
from sparserc.basis import evaluate_surpluses

# Interpolate a normal density (mean 0.5, sd 0.15) on nested dyadic grids.
# The hierarchical surpluses are the corrections each level adds on top of
# the coarser interpolant.
density = lambda u: norm.pdf(u, loc=0.5, scale=0.15)

for level in (1, 2, 3):
    nodes = np.arange(1, 2**level) / 2.0**level
    surpluses = hierarchize_full_grid_1d(density(nodes))
    grid_eval = np.linspace(0, 1, 9)
    approx = evaluate_surpluses(surpluses, grid_eval)
    err = np.abs(approx - density(grid_eval))[1:-1].max()
    print(f"level {level}: {len(surpluses):2d} basis functions, "
          f"max interior error {err:.3f}")

# For a smooth function the largest surplus per level shrinks roughly by
# the squared mesh ratio, i.e. a factor near 4.
level = 7
nodes = np.arange(1, 2**level) / 2.0**level
surpluses = hierarchize_full_grid_1d(np.sin(np.pi * nodes))
print("\nmax |surplus| per level for sin(pi u):")
prev = None
for l in range(1, level + 1):
    mx = max(abs(v) for (k, _), v in surpluses.items() if k == l)
    ratio = "" if prev is None else f"  (shrunk {prev / mx:.2f}x)"
    print(f"  level {l}: {mx:.6f}{ratio}")
    prev = mx
