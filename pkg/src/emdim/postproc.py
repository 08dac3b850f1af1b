"""Error norms, tube-interior reconstruction and VTK/CSV output."""
from __future__ import annotations

import numpy as np

from .errors import EmdimError, InvalidParameterError, MeshFormatError
from .mesh import point_polyline_distance

# Degree-2 quadrature on the tetrahedron (shared with assembly, restated
# here so postprocessing has no dependency on the assembly modules).
_B2A = 0.5854101966249685
_B2B = 0.1381966011250105
_QUAD_TET = np.full((4, 4), _B2B)
np.fill_diagonal(_QUAD_TET, _B2A)


class FieldSet(dict):
    """Named output fields; values are arrays matching their carriers."""

    def cell_fields(self, n_tets):
        return {k: v for k, v in self.items()
                if np.ndim(v) >= 1 and len(v) == n_tets}


def l2_error_cells(mesh, phi_cells, phi_exact, r_cut=0.0, polyline=None):
    """L2 distance between a cellwise field and a callable exact solution.

    Degree-2 quadrature per tet.  With ``r_cut > 0`` cells whose centroid
    lies within ``r_cut`` of ``polyline`` are excluded.
    """
    phi_cells = np.asarray(phi_cells)
    v = mesh.vertices[mesh.tets]
    xq = np.einsum("qk,tkd->tqd", _QUAD_TET, v)
    vals = np.asarray(phi_exact(xq.reshape(-1, 3))).reshape(mesh.n_tets, 4)
    diff2 = (phi_cells[:, None] - vals) ** 2
    contrib = diff2.mean(axis=1) * mesh.tet_volumes
    if r_cut > 0.0:
        if polyline is None:
            raise InvalidParameterError("r_cut needs the polyline")
        dist = point_polyline_distance(mesh.tet_centroids,
                                       np.atleast_2d(polyline))
        contrib = contrib[dist > r_cut]
    return float(np.sqrt(contrib.sum()))


def rt0_cell_vectors(mesh, flux):
    """Centroid values of the flux field reconstructed from face dofs."""
    flux = np.asarray(flux)
    v = mesh.vertices[mesh.tets]
    centroid = mesh.tet_centroids
    out = np.zeros((mesh.n_tets, 3))
    for k in range(4):
        f = mesh.tet_faces[:, k]
        coef = (mesh.tet_face_signs[:, k] * flux[f]
                / (3.0 * mesh.tet_volumes))
        out += coef[:, None] * (centroid - v[:, k])
    return out


def reconstruct_gas(split, r, s, edge=0):
    """Evaluate the tube-interior potential and field at (radius, arclength).

    ``split`` is a :class:`~emdim.assembly1d.GasSplitting`; ``s`` is the
    arclength along ``edge`` measured from its first endpoint.  Returns
    ``(phi, e_tangential, e_radial)``.  The axis slope is the P1 segment
    slope; the amplitude slope is a central difference on the 1D mesh.
    """
    gmesh = split.gmesh
    net = gmesh.network
    radius = net.edge_radius[edge]
    if not 0.0 <= r <= radius:
        raise InvalidParameterError(
            f"radial coordinate {r} outside the tube (radius {radius})")
    length = net.edge_lengths[edge]
    s = float(np.clip(s, 0.0, length))
    dofs = gmesh.edge_dofs(edge)
    n_seg = len(dofs) - 1
    h = length / n_seg
    k = min(int(s / h), n_seg - 1)
    xi = s / h - k
    a, b = dofs[k], dofs[k + 1]

    phi_ax = (1.0 - xi) * split.phi_axis[a] + xi * split.phi_axis[b]
    slope_ax = (split.phi_axis[b] - split.phi_axis[a]) / h

    pt = (1.0 - xi) * gmesh.dof_points[a] + xi * gmesh.dof_points[b]
    amp = float(split.radial_amplitude(pt[None, :])[0])
    ds = min(h, 1e-4 * max(length, 1.0))
    tangent = net.edge_tangents[edge]
    amp_p = float(split.radial_amplitude((pt + ds * tangent)[None, :])[0])
    amp_m = float(split.radial_amplitude((pt - ds * tangent)[None, :])[0])
    damp = (amp_p - amp_m) / (2.0 * ds)

    phi = phi_ax + amp * r * r
    e_radial = -2.0 * r * amp
    e_tangential = -(slope_ax + damp * r * r)
    return float(phi), float(e_tangential), float(e_radial)


def convergence_table(rows, csv_path=None):
    """Least-squares slope of log(error) against log(parameter).

    ``rows`` is a sequence of (parameter, error) pairs; optionally writes
    them as CSV with a header.  Raises on non-positive entries or fewer
    than three distinct parameters.
    """
    rows = [(float(r), float(e)) for r, e in rows]
    if any(r <= 0.0 or e <= 0.0 for r, e in rows):
        raise InvalidParameterError("convergence data must be positive")
    params = sorted({r for r, _ in rows})
    if len(params) < 3:
        raise InvalidParameterError("need at least 3 distinct parameters")
    x = np.log([r for r, _ in rows])
    y = np.log([e for _, e in rows])
    slope = float(np.polyfit(x, y, 1)[0])
    if csv_path is not None:
        write_errors_csv(rows, csv_path)
    return slope


def write_errors_csv(rows, path):
    with open(path, "w") as fh:
        fh.write("R,error\n")
        for r, e in rows:
            fh.write(f"{r:.17g},{e:.17g}\n")


# -- VTK legacy ASCII ---------------------------------------------------------

def export_vtk(mesh, fields, path):
    """Unstructured-grid VTK with cell data; values keep 17 digits."""
    fields = fields or {}
    try:
        fh = open(path, "w")
    except OSError as exc:
        raise EmdimError(f"cannot write {path}: {exc}") from exc
    with fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("emdim fields\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(mesh.vertices)} double\n")
        for p in mesh.vertices:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        fh.write(f"CELLS {mesh.n_tets} {5 * mesh.n_tets}\n")
        for t in mesh.tets:
            fh.write(f"4 {t[0]} {t[1]} {t[2]} {t[3]}\n")
        fh.write(f"CELL_TYPES {mesh.n_tets}\n")
        fh.write("10\n" * mesh.n_tets)
        cell_fields = {k: np.asarray(v) for k, v in fields.items()
                       if len(np.asarray(v)) == mesh.n_tets}
        if cell_fields:
            fh.write(f"CELL_DATA {mesh.n_tets}\n")
            for name, vals in cell_fields.items():
                if vals.ndim == 1:
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    for v in vals:
                        fh.write(f"{v:.17g}\n")
                else:
                    fh.write(f"VECTORS {name} double\n")
                    for v in vals:
                        fh.write(f"{v[0]:.17g} {v[1]:.17g} {v[2]:.17g}\n")


def export_graph_vtk(gmesh, phi_graph, path):
    """Polyline VTK of the network with the solved potential as point data."""
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("emdim network\nASCII\nDATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {gmesh.n_dof} double\n")
        for p in gmesh.dof_points:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        fh.write(f"CELLS {gmesh.n_segments} {3 * gmesh.n_segments}\n")
        for a, b in gmesh.seg_dofs:
            fh.write(f"2 {a} {b}\n")
        fh.write(f"CELL_TYPES {gmesh.n_segments}\n")
        fh.write("3\n" * gmesh.n_segments)
        if phi_graph is not None:
            fh.write(f"POINT_DATA {gmesh.n_dof}\n")
            fh.write("SCALARS potential double 1\nLOOKUP_TABLE default\n")
            for v in np.asarray(phi_graph):
                fh.write(f"{v:.17g}\n")


def read_vtk_cell_data(path):
    """Minimal reparse of :func:`export_vtk` output.

    Returns (n_points, n_cells, {name: array}); scalar cell fields only.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].startswith("# vtk DataFile Version 3.0"):
        raise MeshFormatError("not a supported VTK file")
    n_points = n_cells = 0
    fields = {}
    in_cell_data = False
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if parts[:1] == ["POINTS"]:
            n_points = int(parts[1])
            i += n_points
        elif parts[:1] == ["CELLS"]:
            n_cells = int(parts[1])
            i += n_cells
        elif parts[:1] == ["CELL_DATA"]:
            in_cell_data = True
        elif parts[:1] == ["POINT_DATA"]:
            in_cell_data = False
        elif parts[:1] == ["SCALARS"]:
            name = parts[1]
            count = n_cells if in_cell_data else n_points
            vals = [float(lines[i + 2 + k]) for k in range(count)]
            fields[name] = np.array(vals)
            i += count + 1
        i += 1
    return n_points, n_cells, fields
