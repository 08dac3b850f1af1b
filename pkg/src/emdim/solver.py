"""Global saddle-point system assembly, block-diagonal preconditioning and
restarted GMRES.

Unknown ordering: (flux dofs, cell potentials, network potentials, boundary
flux multipliers, network Dirichlet multipliers).  The middle 1D block is
stored negated (``-stiffness - reaction``) and the self-coupling block
carries its minus sign from assembly, which makes the global matrix
symmetric; accordingly the 1D load enters the right-hand side negated as
well, so the assembled rows agree with the strong equations.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import AssemblyError, PreconditionerError


@dataclass
class BlockLayout:
    n_flux: int
    n_pot: int
    n_graph: int
    n_mult: int
    n_dir: int

    @property
    def total(self):
        return self.n_flux + self.n_pot + self.n_graph + self.n_mult + self.n_dir

    @property
    def offsets(self):
        o = np.cumsum([0, self.n_flux, self.n_pot, self.n_graph, self.n_mult])
        return {"flux": 0, "pot": int(o[1]), "graph": int(o[2]),
                "mult": int(o[3]), "dir": int(o[4])}


@dataclass
class BlockSystem:
    """Assembled sparse system plus the blocks the preconditioner needs."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    layout: BlockLayout
    a_flux: sp.csr_matrix
    div: sp.csr_matrix
    coupling_self: sp.csr_matrix
    coupling_cross: sp.csr_matrix
    graph_block: sp.csr_matrix      # negated stiffness + reaction
    mult: sp.csr_matrix
    graph_dirichlet: sp.csr_matrix

    @property
    def has_graph_dirichlet(self):
        return self.layout.n_dir > 0

    def symmetry_defect(self):
        d = self.matrix - self.matrix.T
        m = abs(self.matrix).max()
        return abs(d).max() / m if m > 0 else 0.0


@dataclass
class SolverReport:
    iterations: int = 0
    restarts: int = 0
    residual: float = np.inf
    converged: bool = False
    wall_time: float = 0.0
    precond_setup_time: float = 0.0
    history: list = field(default_factory=list)
    stagnated: bool = False

    def to_dict(self):
        return {
            "iterations": self.iterations,
            "restarts": self.restarts,
            "residual": self.residual,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "precond_setup_time": self.precond_setup_time,
            "stagnated": self.stagnated,
        }


@dataclass
class Solution:
    flux: np.ndarray
    phi_cells: np.ndarray
    phi_graph: np.ndarray
    lam_neumann: np.ndarray
    lam_dirichlet: np.ndarray


def _empty(shape):
    return sp.csr_matrix(shape)


def assemble_global(a_flux, div, coupling_self, coupling_cross, graph_stiffness,
                    graph_reaction, mult, graph_dirichlet, rhs_dirichlet,
                    rhs_line, rhs_graph, rhs_neumann, rhs_graph_dirichlet):
    """Build the symmetric 5x5 block system from the assembled pieces.

    Matrix blocks are placed with the signs they were assembled with; the
    1D diagonal block is formed as ``-(stiffness + reaction)`` and the
    matching 1D right-hand side (source plus tip terms) enters negated, so
    the stored third block row is the negated strong equation and the
    overall matrix is symmetric.
    """
    n_flux, n_pot = div.shape[1], div.shape[0]
    n_graph = graph_stiffness.shape[0]
    n_mult = mult.shape[0]
    n_dir = graph_dirichlet.shape[0]
    layout = BlockLayout(n_flux, n_pot, n_graph, n_mult, n_dir)

    checks = [
        ("flux mass", a_flux.shape, (n_flux, n_flux)),
        ("self coupling", coupling_self.shape, (n_pot, n_pot)),
        ("cross coupling", coupling_cross.shape, (n_graph, n_pot)),
        ("graph reaction", graph_reaction.shape, (n_graph, n_graph)),
        ("neumann multiplier", mult.shape, (n_mult, n_flux)),
        ("graph dirichlet", graph_dirichlet.shape, (n_dir, n_graph)),
    ]
    for name, got, want in checks:
        if got != want:
            raise AssemblyError(f"{name} block is {got}, expected {want}")
    for name, vec, want in [("dirichlet rhs", rhs_dirichlet, n_flux),
                            ("line rhs", rhs_line, n_pot),
                            ("graph rhs", rhs_graph, n_graph),
                            ("neumann rhs", rhs_neumann, n_mult),
                            ("graph dirichlet rhs", rhs_graph_dirichlet, n_dir)]:
        if len(vec) != want:
            raise AssemblyError(f"{name} has length {len(vec)}, expected {want}")

    graph_block = (-(graph_stiffness + graph_reaction)).tocsr()
    cross_t = coupling_cross.T.tocsr()
    blocks = [
        [a_flux, div.T, None, mult.T, None],
        [div, coupling_self, cross_t, None, None],
        [None, coupling_cross, graph_block, None, graph_dirichlet.T],
        [mult, None, None, None, None],
        [None, None, graph_dirichlet, None, None],
    ]
    matrix = sp.bmat(blocks, format="csr")
    rhs = np.concatenate([rhs_dirichlet, rhs_line, -np.asarray(rhs_graph),
                          rhs_neumann, rhs_graph_dirichlet])
    return BlockSystem(matrix, rhs, layout, a_flux.tocsr(), div.tocsr(),
                       coupling_self.tocsr(), coupling_cross.tocsr(),
                       graph_block, mult.tocsr(), graph_dirichlet.tocsr())


class BlockPreconditioner:
    """Nested Schur-complement block-diagonal preconditioner.

    Applies ``diag(A^-1, -S^-1, -(E S^-1 E^T)^-1)`` where ``S`` is the
    Schur complement of the flux mass block over the (cell, graph,
    boundary-multiplier) variables, formed with ``diag(A)^-1``, and ``E``
    selects the graph Dirichlet rows.  The first block is applied either
    with the inverted diagonal ("lumped", default) or with an inner CG
    solve ("exact"); ``S`` itself is always formed from the diagonal so it
    stays sparse.
    """

    def __init__(self, system, a_inverse="lumped", shift=0.0, cg_tol=1e-12):
        if a_inverse not in ("lumped", "exact"):
            raise PreconditionerError(f"unknown a_inverse option {a_inverse!r}")
        t0 = time.perf_counter()
        self.system = system
        self.mode = a_inverse
        self.cg_tol = cg_tol
        lay = system.layout

        diag = system.a_flux.diagonal()
        if np.any(diag <= 0.0):
            raise PreconditionerError("flux mass diagonal not positive")
        self.inv_diag = 1.0 / diag

        B = system.div
        L = system.mult
        Dinv = sp.diags(self.inv_diag)
        BD = (B @ Dinv).tocsr()
        schur = sp.bmat([
            [system.coupling_self - BD @ B.T, system.coupling_cross.T,
             -(BD @ L.T) if lay.n_mult else _empty((lay.n_pot, 0))],
            [system.coupling_cross, system.graph_block, None],
            [(-(L @ Dinv @ B.T)) if lay.n_mult else None, None,
             (-(L @ Dinv @ L.T)) if lay.n_mult else None],
        ], format="csc")
        if shift:
            schur = schur - shift * sp.eye(schur.shape[0], format="csc")
        try:
            self.schur_lu = spla.splu(schur)
        except RuntimeError as exc:
            raise PreconditionerError(
                f"Schur factorization failed ({exc}); try a_s_inverse='exact' "
                "or a nonzero shift") from exc

        self.n_dir = lay.n_dir
        if lay.n_dir:
            # E = [0, L_D, 0] over the Schur variable ordering.
            cols = system.graph_dirichlet.T.toarray()
            rhs = np.zeros((schur.shape[0], lay.n_dir))
            rhs[lay.n_pot:lay.n_pot + lay.n_graph, :] = cols
            sol = np.column_stack([self.schur_lu.solve(rhs[:, k])
                                   for k in range(lay.n_dir)])
            small = cols.T @ sol[lay.n_pot:lay.n_pot + lay.n_graph, :]
            try:
                self.dir_factor = np.linalg.inv(small)
            except np.linalg.LinAlgError as exc:
                raise PreconditionerError(
                    "graph Dirichlet reduction is singular") from exc
        self.setup_time = time.perf_counter() - t0

    def _apply_a_inverse(self, r):
        if self.mode == "lumped":
            return self.inv_diag * r
        x, info = spla.cg(self.system.a_flux, r, rtol=self.cg_tol,
                          maxiter=1000, x0=self.inv_diag * r)
        if info != 0:
            raise PreconditionerError(f"inner CG did not converge (info={info})")
        return x

    def apply(self, r):
        lay = self.system.layout
        o = lay.offsets
        out = np.empty_like(r)
        out[:lay.n_flux] = self._apply_a_inverse(r[:lay.n_flux])
        mid = r[o["pot"]:o["dir"]]
        out[o["pot"]:o["dir"]] = -self.schur_lu.solve(mid)
        if lay.n_dir:
            out[o["dir"]:] = -self.dir_factor @ r[o["dir"]:]
        return out


class IdentityPreconditioner:
    def apply(self, r):
        return r

    setup_time = 0.0


def gmres(system, b=None, precond=None, tol=1e-10, restart=200, max_iter=2000,
          stagnation_factor=1.0 - 1e-12):
    """Right-preconditioned restarted GMRES.

    ``system`` is a :class:`BlockSystem` (its rhs is used) or a sparse
    matrix with ``b`` given.  Returns ``(x, report)``; the residual history
    stores the true relative residual (right preconditioning makes the
    least-squares residual equal the unpreconditioned one).  When a full
    restart cycle produces no residual reduction the solve stops and
    reports stagnation with the best iterate.
    """
    if tol <= 0.0 or not tol < 1.0:
        raise ValueError("tol must be in (0, 1)")
    if restart < 1:
        raise ValueError("restart must be >= 1")
    if isinstance(system, BlockSystem):
        A, b = system.matrix, system.rhs
    else:
        A = sp.csr_matrix(system)
        if b is None:
            raise ValueError("b is required when passing a bare matrix")
        b = np.asarray(b, dtype=float)
    M = precond if precond is not None else IdentityPreconditioner()

    t0 = time.perf_counter()
    n = len(b)
    norm_b = np.linalg.norm(b)
    report = SolverReport()
    if norm_b == 0.0:
        report.converged = True
        report.residual = 0.0
        report.wall_time = time.perf_counter() - t0
        return np.zeros(n), report

    x = np.zeros(n)
    total_iters = 0
    while True:
        r = b - A @ x
        beta = np.linalg.norm(r)
        rel = beta / norm_b
        report.history.append(rel)
        if rel <= tol:
            report.converged = True
            break
        if total_iters >= max_iter:
            break
        cycle_start = rel

        m = min(restart, max_iter - total_iters)
        V = np.zeros((n, m + 1))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[:, 0] = r / beta
        k_used = 0
        converged_inner = False
        for k in range(m):
            w = A @ M.apply(V[:, k])
            for i in range(k + 1):
                H[i, k] = V[:, i] @ w
                w -= H[i, k] * V[:, i]
            H[k + 1, k] = np.linalg.norm(w)
            breakdown = H[k + 1, k] == 0.0
            if not breakdown:
                V[:, k + 1] = w / H[k + 1, k]
            for i in range(k):
                hi = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
                H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
                H[i, k] = hi
            denom = np.hypot(H[k, k], H[k + 1, k])
            if denom == 0.0:
                # Rank-deficient column (singular operator); keep identity
                # rotation and let the least-squares fallback handle it.
                cs[k], sn[k] = 1.0, 0.0
            else:
                cs[k] = H[k, k] / denom
                sn[k] = H[k + 1, k] / denom
            H[k, k] = denom
            H[k + 1, k] = 0.0
            g[k + 1] = -sn[k] * g[k]
            g[k] = cs[k] * g[k]
            k_used = k + 1
            total_iters += 1
            rel = abs(g[k + 1]) / norm_b
            report.history.append(rel)
            if rel <= tol:
                converged_inner = True
                break
            if breakdown:
                break
        Hk = H[:k_used, :k_used]
        if np.any(np.abs(np.diag(Hk)) == 0.0):
            y = np.linalg.lstsq(Hk, g[:k_used], rcond=None)[0]
        else:
            y = np.linalg.solve(Hk, g[:k_used])
        x = x + M.apply(V[:, :k_used] @ y)
        report.restarts += 1

        if converged_inner or total_iters >= max_iter:
            r = b - A @ x
            rel = np.linalg.norm(r) / norm_b
            report.history.append(rel)
            report.converged = rel <= tol
            break
        if rel >= cycle_start * stagnation_factor:
            report.stagnated = True
            break

    report.iterations = total_iters
    report.residual = float(np.linalg.norm(b - A @ x) / norm_b)
    report.converged = report.residual <= tol
    report.wall_time = time.perf_counter() - t0
    if isinstance(M, BlockPreconditioner):
        report.precond_setup_time = M.setup_time
    return x, report


def extract_solution(system, x):
    """Split the solution vector into its physical fields."""
    lay = system.layout
    if len(x) != lay.total:
        raise AssemblyError(f"solution length {len(x)} != {lay.total}")
    o = lay.offsets
    return Solution(
        flux=x[:lay.n_flux].copy(),
        phi_cells=x[o["pot"]:o["graph"]].copy(),
        phi_graph=x[o["graph"]:o["mult"]].copy(),
        lam_neumann=x[o["mult"]:o["dir"]].copy(),
        lam_dirichlet=x[o["dir"]:].copy(),
    )


def multiplier_diagnostic(system, mesh, solution):
    """Report on the boundary multiplier against the two candidate
    identities.

    Returns a dict with the max deviation of lambda_N from (a) minus the
    mean normal flux and (b) the face potential trace proxy (the adjacent
    cell value).  In the assembled symmetric arrangement the multiplier
    converges to the potential trace on the constrained boundary, not to
    the negated flux; both numbers are reported for inspection.
    """
    from .assembly3d import DofLayout3D

    layout = DofLayout3D(mesh)
    faces = layout.neumann_faces
    if len(faces) == 0:
        return {"vs_neg_flux": 0.0, "vs_cell_potential": 0.0}
    flux_density = solution.flux[faces] / mesh.face_areas[faces]
    cells = mesh.face_tets[faces, 0]
    pot = solution.phi_cells[cells]
    return {
        "vs_neg_flux": float(np.max(np.abs(solution.lam_neumann + flux_density))),
        "vs_cell_potential": float(np.max(np.abs(solution.lam_neumann - pot))),
    }
