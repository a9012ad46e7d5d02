"""Generate the offset-circles mesh shipped with the package.

Domain: unit disk minus a hole of radius 0.1 centered at (0.5, 0).
The point cloud combines exact boundary circles, two graded rings
around the hole, and a hexagonal interior lattice; Delaunay fills it
and triangles whose centroid falls in the hole are dropped.  Fully
deterministic, so the committed asset is reproducible:

    python3 scripts/gen_offset_mesh.py

rewrites src/penaltyflow/assets/offset_circles.txt in place.
"""

import os
import sys

import numpy as np
from scipy.spatial import Delaunay

OUTER_R = 1.0
HOLE_C = np.array([0.5, 0.0])
HOLE_R = 0.1

N_OUTER = 64          # points on the outer circle
N_HOLE = 20           # points on the hole
SPACING = 0.095       # target interior point spacing
RINGS = [(0.16, 24), (0.25, 30)]  # graded rings around the hole


def circle(center, radius, n, phase=0.0):
    th = phase + 2.0 * np.pi * np.arange(n) / n
    return center + radius * np.column_stack([np.cos(th), np.sin(th)])


def hex_lattice(spacing):
    pts = []
    dy = spacing * np.sqrt(3.0) / 2.0
    n_rows = int(np.ceil(2.2 * OUTER_R / dy))
    for row in range(-n_rows, n_rows + 1):
        y = row * dy
        shift = 0.5 * spacing if row % 2 else 0.0
        n_cols = int(np.ceil(2.2 * OUTER_R / spacing))
        for col in range(-n_cols, n_cols + 1):
            pts.append((col * spacing + shift, y))
    return np.array(pts)


def build_points():
    pts = [circle((0.0, 0.0), OUTER_R, N_OUTER),
           circle(HOLE_C, HOLE_R, N_HOLE)]
    for radius, count in RINGS:
        pts.append(circle(HOLE_C, radius, count, phase=np.pi / count))
    lattice = hex_lattice(SPACING)
    r = np.hypot(lattice[:, 0], lattice[:, 1])
    d_hole = np.hypot(lattice[:, 0] - HOLE_C[0], lattice[:, 1] - HOLE_C[1])
    keep = (r < OUTER_R - 0.55 * SPACING) \
        & (d_hole > RINGS[-1][0] + 0.45 * SPACING)
    pts.append(lattice[keep])
    return np.vstack(pts)


def build_mesh():
    points = build_points()
    tri = Delaunay(points).simplices
    centroids = points[tri].mean(axis=1)
    d_hole = np.hypot(centroids[:, 0] - HOLE_C[0],
                      centroids[:, 1] - HOLE_C[1])
    tri = tri[d_hole > HOLE_R]

    # enforce counterclockwise orientation
    p = points[tri]
    area2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) \
        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0])
    flip = area2 < 0
    tri[flip, 1], tri[flip, 2] = tri[flip, 2].copy(), tri[flip, 1].copy()

    # drop any point the triangulation does not use
    used = np.unique(tri)
    remap = -np.ones(len(points), dtype=int)
    remap[used] = np.arange(len(used))
    return points[used], remap[tri]


def boundary_flags(points, tri):
    counts = {}
    for t in tri:
        for a, b in ((0, 1), (1, 2), (2, 0)):
            key = (min(t[a], t[b]), max(t[a], t[b]))
            counts[key] = counts.get(key, 0) + 1
    flags = np.zeros(len(points), dtype=int)
    for (i, j), c in counts.items():
        if c == 1:
            flags[i] = flags[j] = 1
    return flags


def quality_report(points, tri):
    p = points[tri]
    a = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
    b = np.linalg.norm(p[:, 2] - p[:, 1], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 2], axis=1)
    area = 0.5 * np.abs(
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    angles = []
    for e1, e2, e3 in ((a, b, c), (b, c, a), (c, a, b)):
        cos = np.clip((e2 ** 2 + e3 ** 2 - e1 ** 2) / (2 * e2 * e3), -1, 1)
        angles.append(np.degrees(np.arccos(cos)))
    return area.sum(), np.min(angles), area.min()


def main():
    points, tri = build_mesh()
    flags = boundary_flags(points, tri)
    total_area, min_angle, min_area = quality_report(points, tri)
    target = np.pi * (OUTER_R ** 2 - HOLE_R ** 2)
    print("nodes=%d triangles=%d" % (len(points), len(tri)))
    print("area=%.6f target=%.6f (%.3f%% off)"
          % (total_area, target, 100 * abs(total_area - target) / target))
    print("min angle=%.2f deg, min area=%.3e" % (min_angle, min_area))
    if abs(total_area - target) / target > 0.02:
        sys.exit("area deviates more than 2% from the annulus area")
    if min_angle < 15.0:
        sys.exit("mesh has angles below 15 degrees")

    out = os.path.join(os.path.dirname(__file__), os.pardir, "src",
                       "penaltyflow", "assets", "offset_circles.txt")
    out = os.path.normpath(out)
    os.makedirs(os.path.dirname(out), exist_ok=True)
    with open(out, "w") as fh:
        fh.write("# unit disk with a hole of radius 0.1 at (0.5, 0)\n")
        fh.write("# generated by scripts/gen_offset_mesh.py\n")
        fh.write("%d %d\n" % (len(points), len(tri)))
        for (x, y), flag in zip(points, flags):
            fh.write("%.17g %.17g %d\n" % (x, y, flag))
        for i, j, k in tri:
            fh.write("%d %d %d\n" % (i, j, k))
    print("wrote %s" % out)


if __name__ == "__main__":
    main()
