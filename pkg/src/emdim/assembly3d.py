"""Dual-mixed operators on the tet mesh: face-flux elements and cellwise
constant potentials.

Flux degrees of freedom carry the total flux across a face in the direction
of the mesh's global face normal, so the divergence and boundary-multiplier
matrices are integer valued and their signs can be audited directly against
the orientation data.
"""
from __future__ import annotations

import numpy as np
import scipy.io
import scipy.sparse as sp

from .errors import CoefficientError
from .mesh import TAG_DIRICHLET, TAG_NEUMANN

# Degree-2 quadrature on the tetrahedron (4 points, equal weights).
_B2A = 0.5854101966249685
_B2B = 0.1381966011250105
_QUAD_TET = np.full((4, 4), _B2B)
np.fill_diagonal(_QUAD_TET, _B2A)

# Edge-midpoint rule on triangles, exact for quadratics.
_QUAD_TRI = np.array([[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]])


class DofLayout3D:
    """Index bookkeeping for the 3D blocks.

    Flux dofs are mesh faces, potential dofs are tets, multiplier dofs run
    over the Neumann boundary faces in ascending face order.
    """

    def __init__(self, mesh):
        self.n_flux = mesh.n_faces
        self.n_pot = mesh.n_tets
        self.neumann_faces = np.nonzero(mesh.face_tags == TAG_NEUMANN)[0]
        self.dirichlet_faces = np.nonzero(mesh.face_tags == TAG_DIRICHLET)[0]
        self.n_mult = len(self.neumann_faces)


def as_volume_field(value):
    """Wrap constants as callables on (n, 3) point arrays."""
    if callable(value):
        return value
    c = float(value)
    return lambda pts: np.full(len(np.atleast_2d(pts)), c)


def _tet_quad_points(mesh):
    """All degree-2 quadrature points, shape (n_T, 4, 3), weights V/4."""
    v = mesh.vertices[mesh.tets]
    return np.einsum("qk,tkd->tqd", _QUAD_TET, v)


def assemble_flux_mass(mesh, eps_s=1.0):
    """Mass matrix of the face-flux basis weighted by 1/eps_s.

    Exact for affine tets with cellwise-constant permittivity (the
    integrand is quadratic and a degree-2 rule is used).  Raises
    :class:`CoefficientError` when eps_s is non-positive at any
    quadrature point.
    """
    eps = as_volume_field(eps_s)
    v = mesh.vertices[mesh.tets]
    xq = _tet_quad_points(mesh)
    vals = eps(xq.reshape(-1, 3)).reshape(len(mesh.tets), 4)
    if np.any(vals <= 0.0):
        raise CoefficientError("eps_s must be positive everywhere")

    vol = mesh.tet_volumes
    # diff[t, q, i, :] = x_q - p_i with p_i the vertex opposite local face i
    diff = xq[:, :, None, :] - v[:, None, :, :]
    dots = np.einsum("tqid,tqjd->tqij", diff, diff)
    w = (vol / 4.0)[:, None] / vals
    q = np.einsum("tq,tqij->tij", w, dots)
    sig = mesh.tet_face_signs
    local = q * sig[:, :, None] * sig[:, None, :] / (9.0 * vol * vol)[:, None, None]

    rows = np.repeat(mesh.tet_faces, 4, axis=1).ravel()
    cols = np.tile(mesh.tet_faces, (1, 4)).ravel()
    mat = sp.coo_matrix((local.reshape(len(mesh.tets), -1).ravel(),
                         (rows, cols)),
                        shape=(mesh.n_faces, mesh.n_faces))
    return mat.tocsr()


def assemble_divergence(mesh):
    """Divergence block: row per tet, entry -sign for each of its faces."""
    rows = np.repeat(np.arange(mesh.n_tets), 4)
    cols = mesh.tet_faces.ravel()
    vals = -mesh.tet_face_signs.ravel().astype(float)
    return sp.coo_matrix((vals, (rows, cols)),
                         shape=(mesh.n_tets, mesh.n_faces)).tocsr()


def assemble_neumann_multiplier(mesh, layout=None):
    """Multiplier block: one +1 per Neumann boundary face (outward normal)."""
    layout = layout or DofLayout3D(mesh)
    n = layout.n_mult
    rows = np.arange(n)
    cols = layout.neumann_faces
    return sp.coo_matrix((np.ones(n), (rows, cols)),
                         shape=(n, mesh.n_faces)).tocsr()


def _face_means(mesh, faces, func, with_normals=False):
    """Edge-midpoint-rule means of ``func`` over the given faces."""
    if len(faces) == 0:
        return np.zeros(0)
    tri = mesh.vertices[mesh.faces[faces]]
    pts = np.einsum("qk,fkd->fqd", _QUAD_TRI, tri).reshape(-1, 3)
    if with_normals:
        normals = np.repeat(mesh.face_normals[faces], 3, axis=0)
        vals = func(pts, normals)
    else:
        vals = func(pts)
    return np.asarray(vals).reshape(len(faces), 3).mean(axis=1)


def assemble_rhs_dirichlet(mesh, phi_bar):
    """Boundary load from the Dirichlet potential data.

    Entry per Dirichlet face: minus the face mean of ``phi_bar`` (the flux
    basis has unit total flux along the global outward normal).
    """
    layout = DofLayout3D(mesh)
    out = np.zeros(mesh.n_faces)
    out[layout.dirichlet_faces] = -_face_means(
        mesh, layout.dirichlet_faces, as_volume_field(phi_bar))
    return out


def assemble_rhs_neumann(mesh, nu, layout=None):
    """Constraint data: prescribed total flux per Neumann face.

    ``nu`` may be ``nu(points)`` or ``nu(points, normals)``; the entry for
    face j is mean(nu) * area, i.e. the prescribed integral of the normal
    flux over that face.
    """
    layout = layout or DofLayout3D(mesh)
    if len(layout.neumann_faces) == 0:
        return np.zeros(0)
    if callable(nu):
        try:
            means = _face_means(mesh, layout.neumann_faces, nu, with_normals=True)
        except TypeError:
            means = _face_means(mesh, layout.neumann_faces, nu)
    else:
        means = _face_means(mesh, layout.neumann_faces, as_volume_field(nu))
    return means * mesh.face_areas[layout.neumann_faces]


def rt0_interpolate(mesh, field):
    """Face-flux dofs of a vector field: total flux through each face.

    Uses the edge-midpoint rule per face (exact for quadratic normal
    traces).  ``field(points) -> (n, 3)`` vectors.
    """
    tri = mesh.vertices[mesh.faces]
    pts = np.einsum("qk,fkd->fqd", _QUAD_TRI, tri).reshape(-1, 3)
    vec = np.asarray(field(pts)).reshape(mesh.n_faces, 3, 3)
    normal_comp = np.einsum("fqd,fd->fq", vec, mesh.face_normals).mean(axis=1)
    return normal_comp * mesh.face_areas


def export_matrix(matrix, path, comment=""):
    """Write a sparse matrix in Matrix Market coordinate format."""
    scipy.io.mmwrite(str(path), sp.coo_matrix(matrix), comment=comment)
