"""Exchange terms between the 3D mesh and the 1D network.

The trace of the 3D potential on the tube wall is approximated by sampling
the cellwise-constant field on circles centered at 1D quadrature points, in
the plane normal to the local tangent.  The same sampling stencils feed the
cross coupling block, the (negated) self coupling block and the line-source
load, which keeps the assembled system exactly symmetric.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .assembly1d import as_line_field
from .errors import CouplingGeometryError, InvalidParameterError
from .mesh import locate_points


@dataclass
class AverageStencil:
    """Sparse circle-average row at one 1D quadrature point.

    ``weights`` are non-negative and sum to one whenever every circle
    sample lands inside the mesh; samples outside are dropped and the rest
    renormalized, falling back to the tet containing the axis point when
    every sample is lost.
    """

    point: np.ndarray          # quadrature point on the network
    radius: float              # circle radius (tube radius of the edge)
    qweight: float             # 1D quadrature weight (includes length)
    hat_dofs: np.ndarray       # the two P1 dofs of the parent segment
    hat_vals: np.ndarray       # their values at the quadrature point
    tets: np.ndarray           # tets hit by the circle samples
    weights: np.ndarray        # matching averaging weights

    def apply(self, cell_values):
        """Average a cellwise field over the circle."""
        return float(np.dot(self.weights, cell_values[self.tets]))


def _orthonormal_pair(tangent):
    """Deterministic orthonormal basis of the plane normal to ``tangent``."""
    a = int(np.argmin(np.abs(tangent)))
    helper = np.zeros(3)
    helper[a] = 1.0
    n1 = helper - np.dot(helper, tangent) * tangent
    n1 /= np.linalg.norm(n1)
    n2 = np.cross(tangent, n1)
    return n1, n2


def build_average_stencils(mesh, gmesh, n_circle=8, n_quad=2):
    """Build the circle-average stencils for every segment quadrature point.

    Parameters
    ----------
    n_circle : number of equally spaced samples per circle (>= 4).
    n_quad : Gauss points per 1D segment (1 or 2).

    Raises :class:`CouplingGeometryError` when a quadrature point itself
    leaves the 3D mesh.
    """
    if n_circle < 4:
        raise InvalidParameterError("n_circle must be >= 4")
    if n_quad not in (1, 2):
        raise InvalidParameterError("n_quad must be 1 or 2")
    if n_quad == 1:
        xi = np.array([0.5])
        wq = np.array([1.0])
    else:
        xi = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
        wq = np.array([0.5, 0.5])

    net = gmesh.network
    # Half-step offset keeps samples off mesh symmetry planes, where the
    # containing tet would be decided by tie-breaking.
    theta = 2.0 * np.pi * (np.arange(n_circle) + 0.5) / n_circle
    cos_t, sin_t = np.cos(theta), np.sin(theta)

    # Gather all sample points first, then locate them in one batch.
    points, axis_pts = [], []
    meta = []
    for s in range(gmesh.n_segments):
        e = gmesh.seg_edge[s]
        tangent = net.edge_tangents[e]
        n1, n2 = _orthonormal_pair(tangent)
        radius = gmesh.seg_radius[s]
        a, b = gmesh.seg_a[s], gmesh.seg_b[s]
        for q in range(len(xi)):
            x0 = a + xi[q] * (b - a)
            circle = x0[None, :] + radius * (np.outer(cos_t, n1) + np.outer(sin_t, n2))
            points.append(circle)
            axis_pts.append(x0)
            meta.append((s, q, x0, radius, e))
    circle_tets = locate_points(mesh, np.concatenate(points)).reshape(-1, n_circle)
    axis_tets = locate_points(mesh, np.asarray(axis_pts))

    stencils = []
    for k, (s, q, x0, radius, e) in enumerate(meta):
        hits = circle_tets[k]
        inside = hits >= 0
        if inside.any():
            tets, counts = np.unique(hits[inside], return_counts=True)
            weights = counts / counts.sum()
        else:
            if axis_tets[k] < 0:
                raise CouplingGeometryError(
                    f"network edge {e} leaves the 3D mesh near {x0}")
            tets = np.array([axis_tets[k]])
            weights = np.array([1.0])
        stencils.append(AverageStencil(
            point=x0,
            radius=float(radius),
            qweight=float(wq[q] * gmesh.seg_length[s]),
            hat_dofs=gmesh.seg_dofs[s].copy(),
            hat_vals=np.array([1.0 - xi[q], xi[q]]),
            tets=tets,
            weights=weights,
        ))
    return stencils


def assemble_coupling_cross(stencils, n_dof, n_tets, eps_g=1.0):
    """Cross block: rows are network hats, columns are tets.

    Entry (i, j) accumulates 4 pi eps_g * w_q * hat_i(s_q) * stencil_q(j).
    """
    eps = as_line_field(eps_g)
    rows, cols, vals = [], [], []
    for st in stencils:
        c = 4.0 * np.pi * float(np.asarray(eps(st.point[None, :]))[0]) * st.qweight
        for d, hv in zip(st.hat_dofs, st.hat_vals):
            rows.append(np.full(len(st.tets), d))
            cols.append(st.tets)
            vals.append(c * hv * st.weights)
    if not rows:
        return sp.csr_matrix((n_dof, n_tets))
    return sp.coo_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n_dof, n_tets)).tocsr()


def assemble_coupling_self(stencils, n_tets, eps_g=1.0):
    """Self block, stored with its minus sign (negative semi-definite)."""
    eps = as_line_field(eps_g)
    rows, cols, vals = [], [], []
    for st in stencils:
        c = -4.0 * np.pi * float(np.asarray(eps(st.point[None, :]))[0]) * st.qweight
        outer = c * np.outer(st.weights, st.weights)
        rows.append(np.repeat(st.tets, len(st.tets)))
        cols.append(np.tile(st.tets, len(st.tets)))
        vals.append(outer.ravel())
    if not rows:
        return sp.csr_matrix((n_tets, n_tets))
    return sp.coo_matrix((np.concatenate(vals),
                          (np.concatenate(rows), np.concatenate(cols))),
                         shape=(n_tets, n_tets)).tocsr()


def assemble_line_rhs(stencils, n_tets, g):
    """Line-source load on the cell potentials: 2 pi R g against averages."""
    gfield = as_line_field(g)
    out = np.zeros(n_tets)
    for st in stencils:
        gval = float(np.asarray(gfield(st.point[None, :]))[0])
        out[st.tets] += 2.0 * np.pi * st.radius * gval * st.qweight * st.weights
    return out


def apply_average(stencils, cell_values):
    """Circle averages of a cellwise field at every quadrature point."""
    return np.array([st.apply(cell_values) for st in stencils])
