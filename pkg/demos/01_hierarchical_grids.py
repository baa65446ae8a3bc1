"""Tour of the dyadic grid machinery: sparse vs full grids, the
parent/child structure, and a refinement step with ancestor closure."""

import json

from sparserc import (
    GridPoint,
    build_classical_sparse_grid,
    build_full_grid,
    grid_from_json,
    grid_to_json,
    hierarchical_children,
    hierarchical_parent,
    refinable_points,
    refine,
)

# Sparse grids keep only level combinations with a small total level, so
# their size grows mildly with dimension while full tensor grids explode.
print("grid sizes, sparse level 4 vs full grid with 7 points per axis:")
print(f"{'dim':>4} {'sparse':>8} {'full':>10}")
for dim in (2, 3, 4, 5, 6):
    sparse = len(build_classical_sparse_grid(dim, 4))
    full = (2**3 - 1) ** dim
    print(f"{dim:>4} {sparse:>8} {full:>10}")

# One-dimensional structure: each point has two children half a mesh away.
p = GridPoint((2,), (1,))
print(f"\npoint at {p.unit_coords()[0]} has children at",
      [c.unit_coords()[0] for c in hierarchical_children(p, 0, 5)])
print("and parent at", hierarchical_parent(p, 0).unit_coords()[0])

# Refining an interior point of a two-dimensional grid adds its four
# children; when a child's parent in the other dimension is missing, the
# closure pass adds it too so the hierarchy never dangles.
grid = build_classical_sparse_grid(2, 3)
target = GridPoint((2, 2), (1, 1))  # sits at (0.25, 0.25)
refined, report = refine(grid, [target])
print(f"\nrefining {target.unit_coords()} in the level-3 sparse grid "
      f"({len(grid)} points):")
print("  children added: ", [c.unit_coords() for c in report.children])
print("  ancestors added:", [a.unit_coords() for a in report.ancestors])
print(f"  grid grew to {len(refined)} points; "
      f"{len(refinable_points(refined))} of them are refinable")

# Grids serialize to plain JSON and round-trip exactly.
blob = json.dumps(grid_to_json(refined))
assert grid_from_json(json.loads(blob), max_level=refined.max_level) == refined
print(f"\nJSON round trip OK ({len(blob)} bytes)")
