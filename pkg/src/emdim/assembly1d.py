"""P1 operators on the network mesh: tube-weighted stiffness, reaction mass,
charge source, tip flux data and the Dirichlet multiplier rows.

Junction balance is natural here: the stiffness rows of a bifurcation dof
sum the contributions of all incident edges, which enforces conservation of
the area-weighted one-dimensional fluxes without explicit constraint rows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graph import CLASS_DIRICHLET, CLASS_NEUMANN_TIP, GraphMesh

_GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def as_line_field(value):
    """Wrap constants as callables on (n, 3) points of the network."""
    if callable(value):
        return value
    c = float(value)
    return lambda pts: np.full(len(np.atleast_2d(pts)), c)


def _segment_eps(gmesh, eps_g):
    field = as_line_field(eps_g)
    mid = 0.5 * (gmesh.seg_a + gmesh.seg_b)
    return np.asarray(field(mid), dtype=float)


def _accumulate(gmesh, local):
    """Scatter (n_seg, 2, 2) local matrices into the global sparse matrix."""
    dofs = gmesh.seg_dofs
    rows = np.repeat(dofs, 2, axis=1).ravel()
    cols = np.tile(dofs, (1, 2)).ravel()
    mat = sp.coo_matrix((local.reshape(len(dofs), 4).ravel(), (rows, cols)),
                        shape=(gmesh.n_dof, gmesh.n_dof))
    return mat.tocsr()


def assemble_graph_stiffness(gmesh, eps_g=1.0):
    """Tube stiffness: pi R^2 eps_g * (P1 stiffness) per edge."""
    eps = _segment_eps(gmesh, eps_g)
    coef = np.pi * gmesh.seg_radius ** 2 * eps / gmesh.seg_length
    local = np.einsum("s,ij->sij", coef,
                      np.array([[1.0, -1.0], [-1.0, 1.0]]))
    return _accumulate(gmesh, local)


def assemble_graph_reaction(gmesh, eps_g=1.0, lumped=False):
    """Reaction mass scaled by 4 pi eps_g; consistent unless ``lumped``.

    The scaling carries no radius factor: the exchange term acts per unit
    length of the network regardless of the tube cross-section.
    """
    eps = _segment_eps(gmesh, eps_g)
    coef = 4.0 * np.pi * eps * gmesh.seg_length / 6.0
    if lumped:
        element = np.array([[3.0, 0.0], [0.0, 3.0]])
    else:
        element = np.array([[2.0, 1.0], [1.0, 2.0]])
    local = np.einsum("s,ij->sij", coef, element)
    return _accumulate(gmesh, local)


def assemble_graph_source(gmesh, q_over_eps0):
    """Charge load: integral of pi R^2 (q/eps0) against each hat function,
    two-point Gauss per segment."""
    q = as_line_field(q_over_eps0)
    out = np.zeros(gmesh.n_dof)
    for xi in _GAUSS2:
        pts = gmesh.seg_a + xi * (gmesh.seg_b - gmesh.seg_a)
        vals = (np.pi * gmesh.seg_radius ** 2 * np.asarray(q(pts))
                * gmesh.seg_length * 0.5)
        np.add.at(out, gmesh.seg_dofs[:, 0], vals * (1.0 - xi))
        np.add.at(out, gmesh.seg_dofs[:, 1], vals * xi)
    return out


def assemble_tip_neumann(gmesh, g, flux_factor=1.0):
    """Right-hand-side entries imposing the tip slope at Neumann tips.

    The prescribed outward slope -flux_factor * g / eps_g turns into the
    boundary term -flux_factor * pi R^2 g(tip) at the tip dof, independent
    of the parametrization direction of the incident edge.
    """
    net = gmesh.network
    gfield = as_line_field(g)
    out = np.zeros(gmesh.n_dof)
    for n, cls in enumerate(net.node_class):
        if cls != CLASS_NEUMANN_TIP:
            continue
        e = net.incident_edges(n)[0]
        radius = net.edge_radius[e]
        val = gfield(net.nodes[n][None, :])
        out[gmesh.node_dof[n]] += (-flux_factor * np.pi * radius ** 2
                                   * float(np.asarray(val)[0]))
    return out


def assemble_dirichlet_multiplier(gmesh):
    """Multiplier rows pinning the Dirichlet nodes.

    Returns (L_D, values): one row per Dirichlet node with a single unit
    entry at that node's dof, and the vector of prescribed values.
    """
    net = gmesh.network
    nodes = sorted(n for n, c in enumerate(net.node_class)
                   if c == CLASS_DIRICHLET)
    rows = np.arange(len(nodes))
    cols = gmesh.node_dof[nodes] if nodes else np.zeros(0, dtype=np.int64)
    mat = sp.coo_matrix((np.ones(len(nodes)), (rows, cols)),
                        shape=(len(nodes), gmesh.n_dof)).tocsr()
    values = np.array([net.dirichlet_values[n] for n in nodes])
    return mat, values


@dataclass
class GasSplitting:
    """Reconstruction data for the tube interior.

    The potential inside a tube is the axis value plus a parabolic radial
    profile whose amplitude is fixed by the sectionwise-constant charge:
    ``phi(r, s) = axis(s) + amp(s) * r**2`` with ``amp = -q/(4 eps0 eps_g)``.
    ``amp`` is data, recomputed from the charge whenever it changes.
    """

    gmesh: GraphMesh
    phi_axis: np.ndarray       # dof coefficients of the axis potential
    q_over_eps0: object        # charge field on the network
    eps_g: object = 1.0

    def radial_amplitude(self, pts):
        q = as_line_field(self.q_over_eps0)(np.atleast_2d(pts))
        eps = as_line_field(self.eps_g)(np.atleast_2d(pts))
        return -np.asarray(q) / (4.0 * np.asarray(eps))

    def radial_profile(self, r):
        return np.asarray(r) ** 2
