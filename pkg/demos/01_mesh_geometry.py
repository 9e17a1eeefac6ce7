"""Meshes: grid spray, exact Delaunay, rasterization and triangle splitting."""
import numpy as np

from magic_codec import geometry
from magic_codec.imageio import to_gray
from magic_codec.synth import synthetic_image

# A 640x480 image gets a grid every ceil((rows + cols) / 20) pixels,
# plus the last row and column so the corners are always present.
rows, cols = 480, 640
grid = -(-(rows + cols) // 20)
pts = geometry.grid_spray(rows, cols, grid)
print(f"grid={grid}: {len(pts)} grid points")

# Integer coordinates and exact predicates: no tolerance anywhere.
tess = geometry.delaunay(pts)
print(f"{len(tess)} triangles over the grid")

# Four cocircular points have two valid triangulations; the tie rule always
# picks the same one, whatever the input order.
square = [(9, 9), (0, 9), (9, 0), (0, 0)]
print("square ->", geometry.delaunay(square).triangles.tolist())

# Rasterization is boundary inclusive, so the mesh covers every pixel.
tid, pix = geometry.rasterize(tess.vertices(), rows, cols)
print("pixels covered:", np.unique(pix).size, "of", rows * cols)

# Split rounds: add the centroid of every triangle whose gray values vary
# by more than th, re-triangulate, repeat.
gray = to_gray(synthetic_image(rows, cols, seed=1))
for rnd in range(4):
    new = geometry.split_all(tess, gray, th=5.0)
    print(f"round {rnd}: {len(tess.points)} points, {len(new)} splits")
    tess = geometry.delaunay(np.concatenate([tess.points, new]))

# Pruning keeps one point per pw x pw window.
kept = geometry.prune_points(tess.points, 8, rows, cols)
print(f"pruned to {len(kept)} points (bound {(rows // 8) * (cols // 8)})")
