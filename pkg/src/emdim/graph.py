"""Embedded 1D networks: topology, P1 meshes, synthetic trees.

A network edge is a straight segment with its own radius; bifurcations are
nodes of degree three or more, degree-one nodes carry either a Dirichlet
value or a zero/tip Neumann condition, and degree-two nodes are plain
continuation points.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError, InvalidParameterError, MeshFormatError

CLASS_INTERNAL = "internal"
CLASS_DIRICHLET = "dirichlet"
CLASS_NEUMANN_TIP = "neumann_tip"
CLASS_BIFURCATION = "bifurcation"


@dataclass
class Network1D:
    """Embedded graph with per-edge radii and endpoint conditions.

    Parameters
    ----------
    nodes : (n, 3) float array
    edges : sequence of (a, b, radius, n_sub)
        Node pair, tube radius and subdivision count per edge.
    dirichlet_values : mapping node -> potential value
    neumann_tips : iterable of node indices, or None
        Defaults to every degree-1 node without a Dirichlet value.
    """

    nodes: np.ndarray
    edges: list
    dirichlet_values: dict = field(default_factory=dict)
    neumann_tips: set | None = None

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 3)
        self.edge_nodes = np.array([[e[0], e[1]] for e in self.edges], dtype=np.int64)
        self.edge_radius = np.array([e[2] for e in self.edges], dtype=float)
        self.edge_subdiv = np.array(
            [e[3] if len(e) > 3 else 1 for e in self.edges], dtype=np.int64)
        self.dirichlet_values = dict(self.dirichlet_values)

        if len(self.edge_nodes) == 0:
            raise InvalidParameterError("network needs at least one edge")
        if np.any(self.edge_subdiv < 1):
            raise InvalidParameterError("edge subdivision count must be >= 1")
        if np.any(self.edge_radius <= 0.0):
            raise InvalidParameterError("edge radius must be positive")

        d = self.nodes[self.edge_nodes[:, 1]] - self.nodes[self.edge_nodes[:, 0]]
        self.edge_lengths = np.linalg.norm(d, axis=1)
        if np.any(self.edge_lengths <= 0.0):
            raise InvalidParameterError("zero-length edge")
        self.edge_tangents = d / self.edge_lengths[:, None]

        degree = np.zeros(len(self.nodes), dtype=np.int64)
        for a, b in self.edge_nodes:
            degree[a] += 1
            degree[b] += 1
        if np.any(degree == 0):
            raise InvalidParameterError("isolated node in network")
        self.degree = degree
        self._check_connected()

        tips = set(int(n) for n in np.nonzero(degree == 1)[0])
        dir_nodes = set(self.dirichlet_values)
        if not dir_nodes <= tips:
            raise InvalidParameterError(
                "Dirichlet values are only supported at degree-1 nodes")
        if self.neumann_tips is None:
            self.neumann_tips = tips - dir_nodes
        else:
            self.neumann_tips = set(int(n) for n in self.neumann_tips)
        if (self.neumann_tips | dir_nodes) != tips or (self.neumann_tips & dir_nodes):
            raise InvalidParameterError(
                "every degree-1 node needs exactly one endpoint condition")

        self.node_class = []
        for n in range(len(self.nodes)):
            if degree[n] >= 3:
                self.node_class.append(CLASS_BIFURCATION)
            elif degree[n] == 2:
                self.node_class.append(CLASS_INTERNAL)
            elif n in dir_nodes:
                self.node_class.append(CLASS_DIRICHLET)
            else:
                self.node_class.append(CLASS_NEUMANN_TIP)

        slender = self.edge_radius > 0.1 * self.edge_lengths
        if np.any(slender):
            warnings.warn(
                f"{int(slender.sum())} edge(s) have radius > 0.1 * length; "
                "the thin-tube reduction may be inaccurate", stacklevel=2)

    def _check_connected(self):
        adj = [[] for _ in range(len(self.nodes))]
        for a, b in self.edge_nodes:
            adj[a].append(b)
            adj[b].append(a)
        seen = np.zeros(len(self.nodes), dtype=bool)
        stack = [0]
        seen[0] = True
        while stack:
            for m in adj[stack.pop()]:
                if not seen[m]:
                    seen[m] = True
                    stack.append(m)
        if not seen.all():
            raise InvalidParameterError("network graph is not connected")

    @property
    def n_edges(self):
        return len(self.edge_nodes)

    def total_length(self):
        return float(self.edge_lengths.sum())

    def bifurcations(self):
        return [n for n, c in enumerate(self.node_class) if c == CLASS_BIFURCATION]

    def incident_edges(self, v):
        return [e for e in range(self.n_edges) if v in self.edge_nodes[e]]


def classify_incidence(net, v):
    """Split the edges at bifurcation ``v`` by orientation.

    Returns ``(incoming, outgoing)``: incoming edges have their tangent
    pointing toward ``v`` (second endpoint), outgoing away from it.
    """
    if net.node_class[v] != CLASS_BIFURCATION:
        raise InvalidParameterError(f"node {v} is not a bifurcation")
    incoming, outgoing = [], []
    for e in net.incident_edges(v):
        (incoming if net.edge_nodes[e, 1] == v else outgoing).append(e)
    return incoming, outgoing


class GraphMesh:
    """P1 mesh on a network: equispaced points per edge, global dof order.

    Dof numbering is deterministic: interior points edge by edge first,
    then one dof per network node.  Each 1D element (segment) stores its
    two dof indices, endpoint coordinates, length, parent edge and radius.
    """

    def __init__(self, net):
        self.network = net
        n_nodes = len(net.nodes)
        interior_counts = net.edge_subdiv - 1
        offsets = np.concatenate([[0], np.cumsum(interior_counts)])
        self.n_interior = int(offsets[-1])
        self.n_dof = self.n_interior + n_nodes
        self.node_dof = self.n_interior + np.arange(n_nodes)

        points = []
        seg_dofs = []
        seg_edge = []
        for e in range(net.n_edges):
            a, b = net.edge_nodes[e]
            n_e = int(net.edge_subdiv[e])
            pa, pb = net.nodes[a], net.nodes[b]
            ts = np.linspace(0.0, 1.0, n_e + 1)
            pts = pa[None, :] + ts[:, None] * (pb - pa)[None, :]
            dofs = np.empty(n_e + 1, dtype=np.int64)
            dofs[0] = self.node_dof[a]
            dofs[-1] = self.node_dof[b]
            dofs[1:-1] = offsets[e] + np.arange(n_e - 1)
            for k in range(n_e):
                seg_dofs.append((dofs[k], dofs[k + 1]))
                seg_edge.append(e)
            points.append((dofs, pts))
        self._edge_points = points

        self.seg_dofs = np.array(seg_dofs, dtype=np.int64)
        self.seg_edge = np.array(seg_edge, dtype=np.int64)
        self.seg_radius = net.edge_radius[self.seg_edge]
        self.seg_length = net.edge_lengths[self.seg_edge] / net.edge_subdiv[self.seg_edge]

        coords = np.zeros((self.n_dof, 3))
        for dofs, pts in points:
            coords[dofs] = pts
        self.dof_points = coords
        self.seg_a = coords[self.seg_dofs[:, 0]]
        self.seg_b = coords[self.seg_dofs[:, 1]]

    @property
    def n_segments(self):
        return len(self.seg_dofs)

    def edge_dofs(self, e):
        """Dof indices along edge ``e``, ordered from endpoint a to b."""
        return self._edge_points[e][0]

    def total_length(self):
        return float(self.seg_length.sum())


def build_graph_mesh(net):
    """Build the P1 mesh of a network (one dof per mesh point)."""
    return GraphMesh(net)


def generate_random_tree(depth, branching=0.5, segment_length=0.05,
                         radius=1e-3, seed=0, root=(0.5, 0.5, 0.05),
                         direction=(0.0, 0.0, 1.0), spread=0.6,
                         length_decay=0.97, bounds=((0.05, 0.05, 0.02),
                                                    (0.95, 0.95, 0.98)),
                         max_rejects=40, max_segments=None,
                         prune_fraction=0.2):
    """Seeded random tree: root Dirichlet, leaves Neumann tips.

    Every frontier node extends by one segment and forks into a second
    child with probability ``branching``; growth directions stay inside a
    cone of half-angle ``spread`` radians around the parent direction.
    New segments are rejected when they leave ``bounds`` or pass within one
    radius of a non-adjacent segment.  A child that cannot be placed in
    ``max_rejects`` attempts is pruned (its parent becomes a leaf there);
    growth stops once ``max_segments`` is reached.

    Raises :class:`GenerationError` when pruning exceeds ``prune_fraction``
    of the placed segments, i.e. the separation constraint cannot be
    honored at this depth/branching.
    """
    if depth < 1:
        raise InvalidParameterError("depth must be >= 1")
    rng = np.random.default_rng(seed)
    root = np.asarray(root, dtype=float)
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)
    lo = np.asarray(bounds[0], dtype=float)
    hi = np.asarray(bounds[1], dtype=float)

    nodes = [root]
    edges = []
    cell = max(segment_length, 4.0 * radius)
    occupied = {}

    def cell_key(p):
        return tuple(np.floor(p / cell).astype(int))

    def nearby_segments(p):
        k = cell_key(p)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for dk in (-1, 0, 1):
                    yield from occupied.get((k[0] + di, k[1] + dj, k[2] + dk), ())

    def register(idx, a, b):
        for p in (a, b, 0.5 * (a + b)):
            occupied.setdefault(cell_key(p), []).append(idx)

    def seg_seg_distance(p1, p2, p3, p4):
        # Closest distance between two segments, clamped coordinates.
        d1, d2 = p2 - p1, p4 - p3
        r = p1 - p3
        a, e, f = d1 @ d1, d2 @ d2, d2 @ r
        b, c = d1 @ d2, d1 @ r
        denom = a * e - b * b
        s = np.clip((b * f - c * e) / denom, 0.0, 1.0) if denom > 1e-30 else 0.0
        t = np.clip((b * s + f) / e, 0.0, 1.0) if e > 1e-30 else 0.0
        s = np.clip((b * t - c) / a, 0.0, 1.0) if a > 1e-30 else 0.0
        return np.linalg.norm((p1 + s * d1) - (p3 + t * d2))

    def acceptable(a, b, parent_node):
        if np.any(b < lo) or np.any(b > hi):
            return False
        for si in set(nearby_segments(a)) | set(nearby_segments(b)):
            ea, eb = edges[si][0], edges[si][1]
            if parent_node in (ea, eb):
                continue
            if seg_seg_distance(a, b, nodes[ea], nodes[eb]) < radius:
                return False
        return True

    def cone_sample(axis):
        # Uniform in a cone of half-angle `spread` around `axis`.
        cos_t = 1.0 - rng.random() * (1.0 - np.cos(spread))
        phi = 2.0 * np.pi * rng.random()
        sin_t = np.sqrt(max(0.0, 1.0 - cos_t * cos_t))
        helper = np.array([1.0, 0.0, 0.0])
        if abs(axis[0]) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        u = np.cross(axis, helper)
        u /= np.linalg.norm(u)
        v = np.cross(axis, u)
        d = cos_t * axis + sin_t * (np.cos(phi) * u + np.sin(phi) * v)
        return d / np.linalg.norm(d)

    pruned = 0
    frontier = [(0, direction, segment_length)]
    for level in range(depth):
        next_frontier = []
        for node, ndir, nlen in frontier:
            if max_segments is not None and len(edges) >= max_segments:
                break
            # The root keeps degree 1 so it can carry the Dirichlet value.
            n_children = 2 if (node != 0 and rng.random() < branching) else 1
            for _c in range(n_children):
                if max_segments is not None and len(edges) >= max_segments:
                    break
                placed = False
                for _try in range(max_rejects):
                    d = cone_sample(ndir)
                    b = nodes[node] + nlen * d
                    if acceptable(nodes[node], b, node):
                        nodes.append(b)
                        child = len(nodes) - 1
                        edges.append((node, child, radius, 1))
                        register(len(edges) - 1, nodes[node], b)
                        next_frontier.append((child, d, nlen * length_decay))
                        placed = True
                        break
                if not placed:
                    pruned += 1
                    if pruned > prune_fraction * max(len(edges), 8):
                        raise GenerationError(
                            "rejection budget exhausted while growing the "
                            "tree; reduce depth or branching")
        frontier = next_frontier
    net = Network1D(np.array(nodes), edges, dirichlet_values={0: 0.0})
    return net


# -- graph file format ---------------------------------------------------------

def save_graph(net, path):
    """Write the versioned plain-text graph file (header ``EMDIM-GRAPH 1``)."""
    with open(path, "w") as fh:
        fh.write("EMDIM-GRAPH 1\n")
        fh.write(f"nodes {len(net.nodes)}\n")
        for i, p in enumerate(net.nodes):
            cls = net.node_class[i]
            line = f"n {i} {p[0]:.17g} {p[1]:.17g} {p[2]:.17g} {cls}"
            if i in net.dirichlet_values:
                line += f" {net.dirichlet_values[i]:.17g}"
            fh.write(line + "\n")
        fh.write(f"edges {net.n_edges}\n")
        for e in range(net.n_edges):
            a, b = net.edge_nodes[e]
            fh.write(f"e {e} {a} {b} {net.edge_radius[e]:.17g} "
                     f"{net.edge_subdiv[e]}\n")


def load_graph(path):
    """Read a network written by :func:`save_graph`."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "EMDIM-GRAPH 1":
        raise MeshFormatError(f"bad header in {path}")
    i = 1
    kind, count = lines[i].split()
    if kind != "nodes":
        raise MeshFormatError("expected nodes section")
    n = int(count)
    nodes = np.zeros((n, 3))
    dirichlet = {}
    tips = set()
    for k in range(n):
        parts = lines[i + 1 + k].split()
        idx = int(parts[1])
        nodes[idx] = [float(parts[2]), float(parts[3]), float(parts[4])]
        if parts[5] == CLASS_DIRICHLET:
            dirichlet[idx] = float(parts[6])
        elif parts[5] == CLASS_NEUMANN_TIP:
            tips.add(idx)
    i += 1 + n
    kind, count = lines[i].split()
    if kind != "edges":
        raise MeshFormatError("expected edges section")
    m = int(count)
    edges = []
    for k in range(m):
        parts = lines[i + 1 + k].split()
        edges.append((int(parts[2]), int(parts[3]), float(parts[4]), int(parts[5])))
    return Network1D(nodes, edges, dirichlet_values=dirichlet,
                     neumann_tips=tips or None)
