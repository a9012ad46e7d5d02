"""Triangulations: structured rectangle meshes and plain-text mesh files."""

import numpy as np


class Mesh:
    """Straight-edged triangulation of a planar domain.

    Parameters
    ----------
    nodes : (n_nodes, 2) array
        Vertex coordinates.
    triangles : (n_tri, 3) int array
        Node indices per triangle, counterclockwise.
    boundary_nodes : iterable of int
        Indices of the nodes lying on the domain boundary.

    Notes
    -----
    Construction validates the orientation (strictly positive signed
    areas), index ranges, and that every boundary node touches at least
    one edge owned by exactly one triangle.  Instances are treated as
    immutable after construction.
    """

    def __init__(self, nodes, triangles, boundary_nodes):
        self.nodes = np.array(nodes, dtype=float)
        self.triangles = np.array(triangles, dtype=int)
        self.boundary_nodes = frozenset(int(i) for i in boundary_nodes)
        if self.nodes.ndim != 2 or self.nodes.shape[1] != 2:
            raise ValueError("nodes must be an (n, 2) array")
        if self.triangles.ndim != 2 or self.triangles.shape[1] != 3:
            raise ValueError("triangles must be an (m, 3) array")
        self._validate()
        self.h_max = self._longest_edge()

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_triangles(self):
        return self.triangles.shape[0]

    def signed_areas(self):
        """Signed area of every triangle (positive iff counterclockwise)."""
        p = self.nodes[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_counts(self):
        """Map sorted edge (i, j) -> number of triangles sharing it."""
        counts = {}
        for tri in self.triangles:
            for a, b in ((0, 1), (1, 2), (2, 0)):
                key = (int(min(tri[a], tri[b])), int(max(tri[a], tri[b])))
                counts[key] = counts.get(key, 0) + 1
        return counts

    def boundary_edges(self):
        """Edges owned by exactly one triangle, as sorted index pairs."""
        return [e for e, c in self.edge_counts().items() if c == 1]

    def _validate(self):
        if self.triangles.size and (self.triangles.min() < 0
                                    or self.triangles.max() >= self.n_nodes):
            raise ValueError("triangle refers to a node index out of range")
        areas = self.signed_areas()
        bad = np.where(areas <= 0.0)[0]
        if bad.size:
            raise ValueError(
                "triangle %d has nonpositive signed area %.3e "
                "(nodes must be counterclockwise)" % (bad[0], areas[bad[0]]))
        counts = self.edge_counts()
        if any(c > 2 for c in counts.values()):
            raise ValueError("an edge is shared by more than two triangles")
        on_boundary_edge = set()
        for (i, j), c in counts.items():
            if c == 1:
                on_boundary_edge.add(i)
                on_boundary_edge.add(j)
        stray = self.boundary_nodes - on_boundary_edge
        if stray:
            raise ValueError(
                "boundary node %d does not lie on any boundary edge"
                % sorted(stray)[0])

    def _longest_edge(self):
        p = self.nodes[self.triangles]
        lengths = [np.linalg.norm(p[:, a] - p[:, b], axis=1)
                   for a, b in ((0, 1), (1, 2), (2, 0))]
        return float(np.max(lengths)) if self.n_triangles else 0.0


def build_rect_mesh(nx, ny, x0, y0, x1, y1):
    """Uniform triangulation of the rectangle [x0, x1] x [y0, y1].

    Each of the nx*ny cells is split along its lower-left to upper-right
    diagonal, giving 2*nx*ny counterclockwise triangles on a fixed,
    reproducible pattern.

    Parameters
    ----------
    nx, ny : int
        Cells per side; at least 1.
    x0, y0, x1, y1 : float
        Rectangle corners with x1 > x0 and y1 > y0.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    if not (x1 > x0 and y1 > y0):
        raise ValueError(
            "invalid rectangle corners: need x1 > x0 and y1 > y0, got "
            "(%g, %g) to (%g, %g)" % (x0, y0, x1, y1))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    xx, yy = np.meshgrid(xs, ys)           # row j = constant y
    nodes = np.column_stack([xx.ravel(), yy.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    triangles = []
    for j in range(ny):
        for i in range(nx):
            a = nid(i, j)
            b = nid(i + 1, j)
            c = nid(i + 1, j + 1)
            d = nid(i, j + 1)
            triangles.append((a, b, c))
            triangles.append((a, c, d))

    boundary = [nid(i, j)
                for j in range(ny + 1) for i in range(nx + 1)
                if i in (0, nx) or j in (0, ny)]
    return Mesh(nodes, np.array(triangles), boundary)


def build_crisscross_mesh(nx, ny, x0, y0, x1, y1):
    """Criss-cross triangulation of the rectangle [x0, x1] x [y0, y1].

    Each of the nx*ny cells is split into four triangles by both
    diagonals, meeting at the cell center.  The crossing centers are
    singular vertices, which makes the space of exactly divergence-free
    quadratic velocities rich enough to approximate at full order; on
    the single-diagonal pattern of build_rect_mesh a strong grad-div
    penalty locks the velocity into a poor subspace and the error
    stagnates orders of magnitude above the interpolation level.

    Parameters as in build_rect_mesh.
    """
    if nx < 1 or ny < 1:
        raise ValueError("nx and ny must be at least 1")
    if not (x1 > x0 and y1 > y0):
        raise ValueError(
            "invalid rectangle corners: need x1 > x0 and y1 > y0, got "
            "(%g, %g) to (%g, %g)" % (x0, y0, x1, y1))
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    xx, yy = np.meshgrid(xs, ys)
    corners = np.column_stack([xx.ravel(), yy.ravel()])
    cxx, cyy = np.meshgrid(0.5 * (xs[:-1] + xs[1:]), 0.5 * (ys[:-1] + ys[1:]))
    centers = np.column_stack([cxx.ravel(), cyy.ravel()])
    nodes = np.vstack([corners, centers])

    def nid(i, j):
        return j * (nx + 1) + i

    ctr0 = (nx + 1) * (ny + 1)
    triangles = []
    for j in range(ny):
        for i in range(nx):
            a = nid(i, j)
            b = nid(i + 1, j)
            c = nid(i + 1, j + 1)
            d = nid(i, j + 1)
            m = ctr0 + j * nx + i
            triangles += [(a, b, m), (b, c, m), (c, d, m), (d, a, m)]

    boundary = [nid(i, j)
                for j in range(ny + 1) for i in range(nx + 1)
                if i in (0, nx) or j in (0, ny)]
    return Mesh(nodes, np.array(triangles), boundary)


def load_mesh(path):
    """Read a mesh from a plain-text file.

    Format (whitespace separated, ``#`` starts a comment line)::

        <num_nodes> <num_triangles>
        x y boundary_flag        (num_nodes lines; flag 0 = interior)
        i j k                    (num_triangles lines; 0-based indices)

    Raises
    ------
    ValueError
        On parse failures (with the offending line number), out-of-range
        indices, or nonpositive triangle areas.
    """
    rows = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            stripped = raw.strip()
            if not stripped or stripped.startswith("#"):
                continue
            rows.append((lineno, stripped.split()))

    if not rows:
        raise ValueError("%s: empty mesh file" % path)

    def parse(lineno, tokens, count, kind):
        try:
            return [kind(t) for t in tokens[:count]]
        except ValueError:
            raise ValueError("%s: line %d: expected %d %s values, got %r"
                             % (path, lineno, count, kind.__name__,
                                " ".join(tokens)))

    lineno, header = rows[0]
    if len(header) != 2:
        raise ValueError("%s: line %d: header must be "
                         "'<num_nodes> <num_triangles>'" % (path, lineno))
    n_nodes, n_tri = parse(lineno, header, 2, int)
    if len(rows) != 1 + n_nodes + n_tri:
        raise ValueError("%s: expected %d data lines, found %d"
                         % (path, 1 + n_nodes + n_tri, len(rows)))

    nodes = np.empty((n_nodes, 2))
    boundary = []
    for idx in range(n_nodes):
        lineno, tokens = rows[1 + idx]
        if len(tokens) != 3:
            raise ValueError("%s: line %d: node lines are 'x y flag'"
                             % (path, lineno))
        x, y = parse(lineno, tokens[:2], 2, float)
        (flag,) = parse(lineno, tokens[2:], 1, int)
        nodes[idx] = (x, y)
        if flag != 0:
            boundary.append(idx)

    triangles = np.empty((n_tri, 3), dtype=int)
    for idx in range(n_tri):
        lineno, tokens = rows[1 + n_nodes + idx]
        if len(tokens) != 3:
            raise ValueError("%s: line %d: triangle lines are 'i j k'"
                             % (path, lineno))
        tri = parse(lineno, tokens, 3, int)
        if min(tri) < 0 or max(tri) >= n_nodes:
            raise ValueError("%s: line %d: node index out of range in %r"
                             % (path, lineno, tri))
        triangles[idx] = tri

    try:
        return Mesh(nodes, triangles, boundary)
    except ValueError as exc:
        raise ValueError("%s: %s" % (path, exc))
