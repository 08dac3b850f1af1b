"""Tetrahedral meshes: generation, file I/O, queries.

The mesh generator subdivides an axis-aligned box into cubes, splits each
cube into 6 tetrahedra sharing the main diagonal, and optionally grades the
mesh towards an embedded polyline by conforming longest-edge bisection.

Face orientation convention: every face stores one global unit normal.  For
an interior face the normal points from the lower to the higher adjacent
tet index; for a boundary face it points outward.  This convention fixes
the sign of the lowest-order face-flux degrees of freedom globally.
"""
from __future__ import annotations

import numpy as np

from .errors import (
    ClassificationError,
    InvalidGeometryError,
    InvalidParameterError,
    MeshFormatError,
    TopologyError,
)

TAG_INTERIOR = -1
TAG_DIRICHLET = 0
TAG_NEUMANN = 1

_TAG_NAMES = {TAG_DIRICHLET: "dirichlet", TAG_NEUMANN: "neumann"}
_TAG_IDS = {v: k for k, v in _TAG_NAMES.items()}

# Local faces of a tet, entry k = face opposite vertex k.
_LOCAL_FACES = np.array([[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]])

# The six Kuhn tets of the unit cube; vertex v of the cube is indexed by the
# binary triple (v & 1, (v >> 1) & 1, (v >> 2) & 1).  All six share the main
# diagonal 0-7, so the subdivision is conforming across neighboring cubes.
_KUHN_TETS = np.array([
    [0, 1, 3, 7],
    [0, 3, 2, 7],
    [0, 2, 6, 7],
    [0, 6, 4, 7],
    [0, 4, 5, 7],
    [0, 5, 1, 7],
])


class TetMesh:
    """Immutable tetrahedral mesh with oriented faces and boundary tags.

    Parameters
    ----------
    vertices : (n_v, 3) float array
    tets : (n_T, 4) int array
        Vertex indices; each tet must have positive signed volume.
    tag_rule : callable or None
        Optional ``rule(centroid, normal) -> "dirichlet" | "neumann"``
        applied to every boundary face.  When omitted all boundary faces
        are tagged Dirichlet.

    Derived attributes
    ------------------
    faces : (n_F, 3) int, canonical (sorted) vertex triples
    face_normals, face_areas : global orientation data
    face_tets : (n_F, 2) int, adjacent tets (-1 when boundary)
    face_signs : (n_F, 2) int, +1 where the global normal exits the tet
    tet_faces : (n_T, 4) int, global face opposite each local vertex
    tet_face_signs : (n_T, 4) int
    face_tags : (n_F,) int, -1 interior / 0 dirichlet / 1 neumann
    """

    def __init__(self, vertices, tets, tag_rule=None):
        self.vertices = np.ascontiguousarray(vertices, dtype=float)
        self.tets = np.ascontiguousarray(tets, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise InvalidGeometryError("vertices must be (n, 3)")
        if self.tets.ndim != 2 or self.tets.shape[1] != 4:
            raise InvalidGeometryError("tets must be (n, 4)")
        self._build_geometry()
        self._build_faces()
        self._locator = None
        if tag_rule is not None:
            self.face_tags = _classify(self, tag_rule)
        self._validate()

    # -- construction helpers -------------------------------------------------

    def _build_geometry(self):
        v = self.vertices[self.tets]
        d = v[:, 1:] - v[:, :1]
        self.tet_volumes = np.einsum(
            "ij,ij->i", d[:, 0], np.cross(d[:, 1], d[:, 2])) / 6.0
        if np.any(self.tet_volumes <= 0.0):
            bad = int(np.argmin(self.tet_volumes))
            raise InvalidGeometryError(
                f"tet {bad} has non-positive volume {self.tet_volumes[bad]:g}")
        self.tet_centroids = v.mean(axis=1)

    def _build_faces(self):
        nt = len(self.tets)
        tri = np.sort(self.tets[:, _LOCAL_FACES], axis=2).reshape(-1, 3)
        faces, inverse = np.unique(tri, axis=0, return_inverse=True)
        self.faces = faces
        nf = len(faces)
        self.tet_faces = inverse.reshape(nt, 4)

        face_tets = np.full((nf, 2), -1, dtype=np.int64)
        slot = np.zeros(nf, dtype=np.int8)
        for t in range(nt):
            for k in range(4):
                f = self.tet_faces[t, k]
                if slot[f] >= 2:
                    raise TopologyError(f"face {f} shared by more than 2 tets")
                face_tets[f, slot[f]] = t
                slot[f] += 1
        self.face_tets = face_tets

        a = self.vertices[faces[:, 0]]
        n = np.cross(self.vertices[faces[:, 1]] - a,
                     self.vertices[faces[:, 2]] - a)
        areas = 0.5 * np.linalg.norm(n, axis=1)
        if np.any(areas <= 0.0):
            raise InvalidGeometryError("degenerate face (zero area)")
        n = n / (2.0 * areas)[:, None]
        centroid = (a + self.vertices[faces[:, 1]] + self.vertices[faces[:, 2]]) / 3.0
        # Global normal: out of the first (lower-index) adjacent tet.
        outward = np.einsum(
            "ij,ij->i", n, centroid - self.tet_centroids[face_tets[:, 0]]) > 0.0
        n[~outward] *= -1.0
        self.face_normals = n
        self.face_areas = areas
        self.face_centroids = centroid

        signs = np.zeros((nf, 2), dtype=np.int64)
        signs[:, 0] = 1
        signs[face_tets[:, 1] >= 0, 1] = -1
        self.face_signs = signs

        tfs = np.empty((len(self.tets), 4), dtype=np.int64)
        for k in range(4):
            f = self.tet_faces[:, k]
            tfs[:, k] = np.where(face_tets[f, 0] == np.arange(len(self.tets)),
                                 signs[f, 0], signs[f, 1])
        self.tet_face_signs = tfs

        self.boundary_faces = np.nonzero(face_tets[:, 1] < 0)[0]
        self.face_tags = np.full(nf, TAG_INTERIOR, dtype=np.int64)
        self.face_tags[self.boundary_faces] = TAG_DIRICHLET

    def _validate(self):
        interior = self.face_tets[:, 1] >= 0
        if np.any(self.face_signs[interior].sum(axis=1) != 0):
            raise TopologyError("interior face with non-opposite orientation signs")
        if np.any(self.face_tags[self.boundary_faces] == TAG_INTERIOR):
            raise TopologyError("untagged boundary face")

    # -- queries --------------------------------------------------------------

    @property
    def n_tets(self):
        return len(self.tets)

    @property
    def n_faces(self):
        return len(self.faces)

    def faces_tagged(self, tag):
        """Boundary face indices carrying ``tag`` ('dirichlet'/'neumann')."""
        return np.nonzero(self.face_tags == _TAG_IDS[tag])[0]

    def count_boundary_tags(self):
        return {name: int(np.count_nonzero(self.face_tags == tid))
                for tid, name in _TAG_NAMES.items()}

    def edge_lengths(self, tet_index):
        """Lengths of the six edges of one tet."""
        v = self.vertices[self.tets[tet_index]]
        pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
        return np.array([np.linalg.norm(v[i] - v[j]) for i, j in pairs])

    def longest_edges(self):
        """Longest edge length per tet, vectorized."""
        v = self.vertices[self.tets]
        best = np.zeros(len(self.tets))
        for i, j in [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]:
            d = np.linalg.norm(v[:, i] - v[:, j], axis=1)
            np.maximum(best, d, out=best)
        return best

    def _get_locator(self):
        if self._locator is None:
            self._locator = _LocateGrid(self)
        return self._locator


def with_tags(mesh, rule):
    """Return a shallow copy of ``mesh`` re-tagged by ``rule``.

    Used by :func:`boundary_classify`; geometry arrays are shared.
    """
    out = TetMesh.__new__(TetMesh)
    out.__dict__.update(mesh.__dict__)
    out.face_tags = _classify(mesh, rule)
    out._validate()
    return out


def _classify(mesh, rule):
    tags = np.full(mesh.n_faces, TAG_INTERIOR, dtype=np.int64)
    for f in mesh.boundary_faces:
        label = rule(mesh.face_centroids[f], mesh.face_normals[f])
        if label not in _TAG_IDS:
            raise ClassificationError(
                f"rule returned {label!r} for boundary face {f}")
        tags[f] = _TAG_IDS[label]
    return tags


def boundary_classify(mesh, rule):
    """Tag every boundary face as dirichlet or neumann via ``rule``.

    ``rule(centroid, normal)`` must return one of the two tag names for each
    boundary face; anything else raises :class:`ClassificationError`.
    """
    return with_tags(mesh, rule)


def rule_z_neumann(centroid, normal):
    """Canonical box rule: faces with +-z normal are Neumann, rest Dirichlet."""
    return "neumann" if abs(normal[2]) > 0.99 else "dirichlet"


def rule_all_dirichlet(centroid, normal):
    return "dirichlet"


# -- generation ----------------------------------------------------------------

def generate_box_mesh(bounds, h_far, refine_polyline=None, h_near=None,
                      band=0.0, tag_rule=None):
    """Structured tet mesh of a box, optionally graded towards a polyline.

    Parameters
    ----------
    bounds : ((x0,y0,z0), (x1,y1,z1))
    h_far : target cell size of the structured background grid.
    refine_polyline : (k, 3) array of points or None
        Polyline near which the mesh is refined.
    h_near : target edge scale near the polyline; every tet intersecting the
        ``band`` neighborhood of the polyline ends with longest edge
        <= 2 * h_near.
    band : distance from the polyline within which refinement applies.
    tag_rule : optional boundary classification rule (default: all Dirichlet).
    """
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)
    extent = hi - lo
    if np.any(extent <= 0.0):
        raise InvalidGeometryError(f"degenerate box, extent {extent}")
    if h_far <= 0.0:
        raise InvalidParameterError("h_far must be positive")

    ncell = np.maximum(1, np.rint(extent / h_far).astype(int))
    verts, tets = _kuhn_grid(lo, hi, ncell)

    if refine_polyline is not None:
        poly = np.atleast_2d(np.asarray(refine_polyline, dtype=float))
        if h_near is None or h_near <= 0.0:
            raise InvalidParameterError("h_near must be positive when refining")
        if band <= 0.0:
            raise InvalidParameterError("band must be positive when refining")
        if np.any(poly < lo - 1e-12) or np.any(poly > hi + 1e-12):
            raise InvalidGeometryError("refine_polyline leaves the box")
        if h_near > h_far:
            raise InvalidParameterError("h_near must not exceed h_far")
        verts, tets = _refine_near_polyline(verts, tets, poly, 2.0 * h_near, band)

    mesh = TetMesh(verts, tets, tag_rule)
    box_volume = float(np.prod(extent))
    if abs(mesh.tet_volumes.sum() - box_volume) > 1e-12 * box_volume:
        raise InvalidGeometryError("generated mesh does not fill the box")
    return mesh


def _kuhn_grid(lo, hi, ncell):
    nx, ny, nz = (int(n) for n in ncell)
    xs = np.linspace(lo[0], hi[0], nx + 1)
    ys = np.linspace(lo[1], hi[1], ny + 1)
    zs = np.linspace(lo[2], hi[2], nz + 1)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    verts = np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    tets = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                corner = [vid(i + (c & 1), j + ((c >> 1) & 1), k + ((c >> 2) & 1))
                          for c in range(8)]
                for loc in _KUHN_TETS:
                    tets.append([corner[loc[0]], corner[loc[1]],
                                 corner[loc[2]], corner[loc[3]]])
    tets = np.array(tets, dtype=np.int64)
    # Flip negatively oriented Kuhn tets once, up front.
    v = verts[tets]
    d = v[:, 1:] - v[:, :1]
    vol = np.einsum("ij,ij->i", d[:, 0], np.cross(d[:, 1], d[:, 2]))
    flip = vol < 0
    tets[flip, 0], tets[flip, 1] = tets[flip, 1].copy(), tets[flip, 0].copy()
    return verts, tets


def point_segment_distance(points, a, b):
    """Distance from each point to segment [a, b]."""
    points = np.atleast_2d(points)
    ab = b - a
    denom = float(ab @ ab)
    if denom == 0.0:
        return np.linalg.norm(points - a, axis=1)
    t = np.clip((points - a) @ ab / denom, 0.0, 1.0)
    proj = a + t[:, None] * ab
    return np.linalg.norm(points - proj, axis=1)


def point_polyline_distance(points, poly):
    """Distance from each point to the closest polyline segment."""
    points = np.atleast_2d(points)
    if len(poly) == 1:
        return np.linalg.norm(points - poly[0], axis=1)
    dist = np.full(len(points), np.inf)
    for a, b in zip(poly[:-1], poly[1:]):
        np.minimum(dist, point_segment_distance(points, a, b), out=dist)
    return dist


def _refine_near_polyline(verts, tets, poly, max_edge, band, max_passes=40):
    """Conforming longest-edge bisection until every tet near ``poly`` has
    longest edge <= max_edge.

    A pass marks the longest edge of every oversized tet within the
    (conservatively inflated) band and then recursively bisects every tet
    containing a marked edge, always splitting the longest marked edge first.
    Splitting order within a shared face depends only on edge lengths and
    vertex ids, so neighboring tets triangulate shared faces identically.
    """
    verts = [tuple(p) for p in verts]
    tets = [tuple(t) for t in tets]
    pairs = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])

    for _ in range(max_passes):
        coords = np.asarray(verts)
        tarr = np.array(tets, dtype=np.int64)
        v = coords[tarr]
        centroid = v.mean(axis=1)
        edge_len = np.linalg.norm(v[:, pairs[:, 0]] - v[:, pairs[:, 1]], axis=2)
        longest = edge_len.max(axis=1)
        # Conservative band test: a tet intersects the band whenever its
        # centroid is within band + (max vertex-to-centroid distance).
        radius = np.linalg.norm(v - centroid[:, None, :], axis=2).max(axis=1)
        cdist = point_polyline_distance(centroid, poly)
        oversized = (longest > max_edge) & (cdist <= band + radius)
        if not oversized.any():
            return coords, tarr
        marked = set()
        which = edge_len[oversized].argmax(axis=1)
        for t, k in zip(tarr[oversized], which):
            a, b = t[pairs[k][0]], t[pairs[k][1]]
            marked.add((a, b) if a < b else (b, a))
        tets = _bisect_marked(verts, tets, marked)
    raise InvalidParameterError(
        f"refinement did not reach edge target {max_edge:g} in {max_passes} passes")


def _bisect_marked(verts, tets, marked):
    """Recursively bisect every tet containing a marked edge."""
    # Cheap pre-filter: keep untouched tets out of the Python recursion.
    tarr = np.array(tets, dtype=np.int64)
    pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]
    lo = np.stack([np.minimum(tarr[:, i], tarr[:, j]) for i, j in pairs], axis=1)
    hi = np.stack([np.maximum(tarr[:, i], tarr[:, j]) for i, j in pairs], axis=1)
    keys = lo.astype(np.int64) * (1 << 32) + hi
    marked_keys = np.array([(a << 32) + b for a, b in marked], dtype=np.int64)
    affected = np.isin(keys, marked_keys).any(axis=1)

    midpoint = {}
    out = [tets[i] for i in np.nonzero(~affected)[0]]
    stack = [tets[i] for i in np.nonzero(affected)[0]]
    coords_cache = {}

    def coord(i):
        c = coords_cache.get(i)
        if c is None:
            c = np.asarray(verts[i])
            coords_cache[i] = c
        return c

    def mid(key):
        m = midpoint.get(key)
        if m is None:
            p = tuple((np.asarray(verts[key[0]]) + np.asarray(verts[key[1]])) / 2.0)
            verts.append(p)
            m = len(verts) - 1
            midpoint[key] = m
        return m

    marked = set(marked)
    while stack:
        tet = stack.pop()
        cand = None
        cand_len = -1.0
        for i in range(4):
            for j in range(i + 1, 4):
                a, b = tet[i], tet[j]
                key = (a, b) if a < b else (b, a)
                if key not in marked:
                    continue
                length = float(np.linalg.norm(coord(key[0]) - coord(key[1])))
                if length > cand_len or (length == cand_len and key < cand):
                    cand, cand_len = key, length
        if cand is None:
            out.append(tet)
            continue
        m = mid(cand)
        ia = tet.index(cand[0])
        ib = tet.index(cand[1])
        child_a = list(tet)
        child_a[ia] = m
        child_b = list(tet)
        child_b[ib] = m
        stack.append(tuple(child_a))
        stack.append(tuple(child_b))
    return out


# -- point location -------------------------------------------------------------

class _LocateGrid:
    """Uniform background grid bucketing tets by bounding box."""

    def __init__(self, mesh):
        self.mesh = mesh
        lo = mesh.vertices.min(axis=0)
        hi = mesh.vertices.max(axis=0)
        span = np.maximum(hi - lo, 1e-300)
        n = max(1, min(64, int(round(len(mesh.tets) ** (1.0 / 3.0)))))
        self.lo = lo
        self.inv_h = n / span
        self.n = n
        cells = [[] for _ in range(n ** 3)]
        v = mesh.vertices[mesh.tets]
        tlo = np.floor((v.min(axis=1) - lo) * self.inv_h).astype(int).clip(0, n - 1)
        thi = np.floor((v.max(axis=1) - lo) * self.inv_h).astype(int).clip(0, n - 1)
        for t in range(len(mesh.tets)):
            for i in range(tlo[t, 0], thi[t, 0] + 1):
                for j in range(tlo[t, 1], thi[t, 1] + 1):
                    for k in range(tlo[t, 2], thi[t, 2] + 1):
                        cells[(i * n + j) * n + k].append(t)
        self.cells = [np.array(c, dtype=np.int64) for c in cells]
        # Affine inverse maps for barycentric coordinates, stored transposed
        # so that lam = (x - base) @ t_inv.
        base = v[:, 0]
        T = np.stack([v[:, 1] - base, v[:, 2] - base, v[:, 3] - base], axis=2)
        self.t_inv = np.linalg.inv(T).transpose(0, 2, 1)
        self.base = base

    def cell_of(self, pts):
        idx = np.floor((pts - self.lo) * self.inv_h).astype(int)
        idx = idx.clip(0, self.n - 1)
        return (idx[:, 0] * self.n + idx[:, 1]) * self.n + idx[:, 2]


def locate_points(mesh, points, tol=1e-10):
    """Containing tet index per point, -1 for points outside the mesh.

    Candidates are tested in ascending tet index so points on shared faces
    resolve to the lowest adjacent index.  Barycentric coordinates are
    accepted down to ``-tol``.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    grid = mesh._get_locator()
    cells = grid.cell_of(points)
    result = np.full(len(points), -1, dtype=np.int64)
    order = np.argsort(cells, kind="stable")
    sorted_cells = cells[order]
    starts = np.searchsorted(sorted_cells, np.arange(grid.n ** 3), side="left")
    ends = np.searchsorted(sorted_cells, np.arange(grid.n ** 3), side="right")
    for c in np.unique(sorted_cells):
        qi = order[starts[c]:ends[c]]
        cand = grid.cells[c]
        if len(cand) == 0:
            continue
        pts = points[qi]
        unresolved = np.ones(len(qi), dtype=bool)
        for t in cand:
            if not unresolved.any():
                break
            lam = (pts[unresolved] - grid.base[t]) @ grid.t_inv[t]
            lam0 = 1.0 - lam.sum(axis=1)
            ok = (lam.min(axis=1) >= -tol) & (lam0 >= -tol)
            if ok.any():
                idx = np.nonzero(unresolved)[0][ok]
                result[qi[idx]] = t
                unresolved[idx] = False
    return result


def locate_point(mesh, x, tol=1e-10):
    """Containing tet index for one point, or None when outside."""
    t = int(locate_points(mesh, np.asarray(x, dtype=float)[None, :], tol)[0])
    return None if t < 0 else t


def barycentric(mesh, tet_index, x):
    """Barycentric coordinates of ``x`` in one tet."""
    v = mesh.vertices[mesh.tets[tet_index]]
    T = np.stack([v[1] - v[0], v[2] - v[0], v[3] - v[0]], axis=1)
    lam = np.linalg.solve(T, np.asarray(x, dtype=float) - v[0])
    return np.concatenate([[1.0 - lam.sum()], lam])


# -- MSH 2.2 ASCII -----------------------------------------------------------------

_DEFAULT_TAG_MAP = {1: "dirichlet", 2: "neumann"}


def load_gmsh(path, tag_map=None):
    """Read an MSH 2.2 ASCII file with tets (type 4) and triangles (type 2).

    Triangle physical groups are mapped to boundary tags through ``tag_map``
    (default: 1 -> dirichlet, 2 -> neumann).  Any other element type is a
    format error; a tagged triangle that is not a boundary face of the tet
    mesh is a topology error.
    """
    tag_map = dict(_DEFAULT_TAG_MAP if tag_map is None else tag_map)
    with open(path) as fh:
        lines = [ln.strip() for ln in fh]
    try:
        i = lines.index("$MeshFormat")
    except ValueError:
        raise MeshFormatError("missing $MeshFormat section") from None
    version = lines[i + 1].split()
    if version[0] != "2.2" or version[1] != "0":
        raise MeshFormatError(f"unsupported MSH version/format: {lines[i + 1]!r}")

    i = lines.index("$Nodes")
    n_nodes = int(lines[i + 1])
    nodes = np.empty((n_nodes, 3))
    node_ids = {}
    for k in range(n_nodes):
        parts = lines[i + 2 + k].split()
        node_ids[int(parts[0])] = k
        nodes[k] = [float(parts[1]), float(parts[2]), float(parts[3])]

    i = lines.index("$Elements")
    n_elem = int(lines[i + 1])
    tets = []
    tris = []
    for k in range(n_elem):
        parts = lines[i + 2 + k].split()
        eid, etype, ntags = int(parts[0]), int(parts[1]), int(parts[2])
        tags = [int(x) for x in parts[3:3 + ntags]]
        conn = [node_ids[int(x)] for x in parts[3 + ntags:]]
        if etype == 4:
            tets.append(conn)
        elif etype == 2:
            phys = tags[0] if tags else 0
            tris.append((tuple(sorted(conn)), phys, eid))
        else:
            raise MeshFormatError(
                f"unsupported element type {etype} (element {eid})")
    if not tets:
        raise MeshFormatError("no tetrahedra in file")

    tets = np.array(tets, dtype=np.int64)
    v = nodes[tets]
    d = v[:, 1:] - v[:, :1]
    vol = np.einsum("ij,ij->i", d[:, 0], np.cross(d[:, 1], d[:, 2]))
    flip = vol < 0
    tets[flip, 0], tets[flip, 1] = tets[flip, 1].copy(), tets[flip, 0].copy()

    mesh = TetMesh(nodes, tets)
    face_index = {tuple(f): i for i, f in enumerate(mesh.faces)}
    boundary = set(mesh.boundary_faces.tolist())
    tags = mesh.face_tags.copy()
    for conn, phys, eid in tris:
        f = face_index.get(conn)
        if f is None or f not in boundary:
            raise TopologyError(
                f"triangle element {eid} is not a boundary face of the tet mesh")
        label = tag_map.get(phys)
        if label is None:
            raise MeshFormatError(
                f"triangle element {eid} has unmapped physical tag {phys}")
        tags[f] = _TAG_IDS[label]
    mesh.face_tags = tags
    mesh._validate()
    return mesh


def write_gmsh(mesh, path):
    """Write MSH 2.2 ASCII with physical tags 1=dirichlet, 2=neumann."""
    with open(path, "w") as fh:
        fh.write("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n")
        fh.write(f"$Nodes\n{len(mesh.vertices)}\n")
        for i, p in enumerate(mesh.vertices):
            fh.write(f"{i + 1} {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        fh.write("$EndNodes\n")
        n_elem = len(mesh.boundary_faces) + len(mesh.tets)
        fh.write(f"$Elements\n{n_elem}\n")
        eid = 1
        for f in mesh.boundary_faces:
            phys = 1 if mesh.face_tags[f] == TAG_DIRICHLET else 2
            a, b, c = (int(x) + 1 for x in mesh.faces[f])
            fh.write(f"{eid} 2 2 {phys} {phys} {a} {b} {c}\n")
            eid += 1
        for t in mesh.tets:
            a, b, c, d = (int(x) + 1 for x in t)
            fh.write(f"{eid} 4 2 1 1 {a} {b} {c} {d}\n")
            eid += 1
        fh.write("$EndElements\n")


# -- internal dump format -----------------------------------------------------------

def dump_mesh(mesh, path):
    """Write the versioned plain-text dump (header ``EMDIM-MESH 1``)."""
    with open(path, "w") as fh:
        fh.write("EMDIM-MESH 1\n")
        fh.write(f"vertices {len(mesh.vertices)}\n")
        for p in mesh.vertices:
            fh.write(f"v {p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        fh.write(f"tets {len(mesh.tets)}\n")
        for t in mesh.tets:
            fh.write(f"t {t[0]} {t[1]} {t[2]} {t[3]}\n")
        fh.write(f"boundary {len(mesh.boundary_faces)}\n")
        for f in mesh.boundary_faces:
            a, b, c = mesh.faces[f]
            fh.write(f"b {a} {b} {c} {_TAG_NAMES[int(mesh.face_tags[f])]}\n")


def load_mesh_dump(path):
    """Read a mesh written by :func:`dump_mesh`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "EMDIM-MESH 1":
        raise MeshFormatError(f"bad header in {path}")
    i = 1
    kind, count = lines[i].split()
    if kind != "vertices":
        raise MeshFormatError("expected vertices section")
    nv = int(count)
    verts = np.array([[float(x) for x in lines[i + 1 + k].split()[1:4]]
                      for k in range(nv)])
    i += 1 + nv
    kind, count = lines[i].split()
    if kind != "tets":
        raise MeshFormatError("expected tets section")
    nt = int(count)
    tets = np.array([[int(x) for x in lines[i + 1 + k].split()[1:5]]
                     for k in range(nt)], dtype=np.int64)
    i += 1 + nt
    kind, count = lines[i].split()
    if kind != "boundary":
        raise MeshFormatError("expected boundary section")
    nb = int(count)
    mesh = TetMesh(verts, tets)
    face_index = {tuple(f): j for j, f in enumerate(mesh.faces)}
    tags = mesh.face_tags.copy()
    for k in range(nb):
        parts = lines[i + 1 + k].split()
        tri = tuple(sorted(int(x) for x in parts[1:4]))
        f = face_index.get(tri)
        if f is None:
            raise TopologyError(f"boundary record {parts} matches no face")
        tags[f] = _TAG_IDS[parts[4]]
    mesh.face_tags = tags
    mesh._validate()
    return mesh
