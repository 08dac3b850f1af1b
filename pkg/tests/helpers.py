"""Shared oracles for the test suite, independent of the assembly code."""
import numpy as np


def duffy_quadrature(order=6):
    """Gauss-Legendre quadrature on the reference tet via the Duffy map.

    Returns (points, weights) on {x,y,z >= 0, x+y+z <= 1}; exact for all
    polynomials well beyond degree 4 at order 6.
    """
    x, w = np.polynomial.legendre.leggauss(order)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    pts, wts = [], []
    for iu, u in enumerate(x):
        for iv, v in enumerate(x):
            for iw, t in enumerate(x):
                px = u
                py = v * (1.0 - u)
                pz = t * (1.0 - u) * (1.0 - v)
                jac = (1.0 - u) ** 2 * (1.0 - v)
                pts.append([px, py, pz])
                wts.append(w[iu] * w[iv] * w[iw] * jac)
    return np.array(pts), np.array(wts)


def tet_integral(verts, func, order=6):
    """Integral of ``func(points)`` over the tet with the Duffy rule."""
    pts, wts = duffy_quadrature(order)
    v0 = verts[0]
    jac = np.stack([verts[1] - v0, verts[2] - v0, verts[3] - v0], axis=1)
    vol_scale = abs(np.linalg.det(jac))
    world = v0 + pts @ jac.T
    return vol_scale * np.dot(wts, func(world))


def rt0_basis_on_tet(verts, signs):
    """RT0 basis functions of one tet under the total-flux normalization.

    ``signs[i]`` is the orientation of the global normal of the face
    opposite vertex i relative to the tet.  Returns a list of callables.
    """
    d = verts[1:] - verts[0]
    vol = abs(np.linalg.det(d)) / 6.0

    def make(i):
        return lambda x: signs[i] * (np.atleast_2d(x) - verts[i]) / (3.0 * vol)

    return [make(i) for i in range(4)]


def interior_edges(mesh):
    """Mesh edges all of whose surrounding faces are interior."""
    from collections import defaultdict

    edge_faces = defaultdict(list)
    for f, tri in enumerate(mesh.faces):
        a, b, c = tri
        for e in [(a, b), (a, c), (b, c)]:
            edge_faces[tuple(sorted(e))].append(f)
    out = []
    for e, faces in sorted(edge_faces.items()):
        if all(mesh.face_tets[f, 1] >= 0 for f in faces):
            out.append(e)
    return out


def edge_cycle_flux(mesh, edge):
    """Divergence-free flux vector circulating around one interior edge.

    Walks the ring of tets sharing ``edge``; each ring tet gains one unit of
    inflow and one of outflow through its two faces containing the edge, so
    the cellwise divergence vanishes exactly and all touched faces are
    interior.
    """
    a, b = edge
    ring_tets = [t for t in range(mesh.n_tets)
                 if a in mesh.tets[t] and b in mesh.tets[t]]
    u = np.zeros(mesh.n_faces)
    t = ring_tets[0]
    f_prev = -1
    start = t
    while True:
        cycle_faces = [f for f in mesh.tet_faces[t]
                       if a in mesh.faces[f] and b in mesh.faces[f]]
        assert len(cycle_faces) == 2
        f_out = cycle_faces[0] if cycle_faces[0] != f_prev else cycle_faces[1]
        k = list(mesh.tet_faces[t]).index(f_out)
        u[f_out] = mesh.tet_face_signs[t, k]
        t1, t2 = mesh.face_tets[f_out]
        t = int(t2 if t1 == t else t1)
        assert t >= 0, "edge touches the boundary"
        f_prev = f_out
        if t == start:
            break
    return u
