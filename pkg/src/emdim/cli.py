"""Command-line driver: run, sweep, gen, verify.

Exit codes: 0 success, 1 configuration error, 2 solver/verification failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="emdim",
        description="Coupled 3D-1D electrostatics solver")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, desc in [("run", "solve one case and export fields"),
                       ("sweep", "radius sweep with convergence table"),
                       ("gen", "generate mesh/graph files"),
                       ("verify", "check manufactured-solution consistency")]:
        p = sub.add_parser(name, help=desc)
        p.add_argument("--config", required=True, help="INI config path")
        p.add_argument("--out", default="out", help="output directory")
        p.add_argument("--threads", type=int, default=1,
                       help="cap on worker threads")
        p.add_argument("--seed", type=int, default=None,
                       help="override the configured seed")
    return parser


def _load(args):
    from .config import load_config

    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    os.makedirs(args.out, exist_ok=True)
    return cfg


def _case_of(cfg):
    from .cases import tc1_case, tc2_case, tc3_case

    if cfg.case == "tc1":
        return tc1_case(cfg.radius) if cfg.bounds is None else \
            tc1_case(cfg.radius, bounds=cfg.bounds)
    if cfg.case == "tc2":
        if cfg.bounds is None:
            return tc2_case(cfg.radius, tip_height=cfg.tip_height)
        return tc2_case(cfg.radius, bounds=cfg.bounds,
                        tip_height=cfg.tip_height)
    return tc3_case(seed=cfg.seed, scale=cfg.scale)


def _solver_options(cfg):
    from .driver import SolverOptions

    return SolverOptions(tol=cfg.tol, restart=cfg.restart,
                         max_iter=cfg.max_iter, precond=cfg.precond,
                         a_s_inverse=cfg.a_s_inverse, shift=cfg.shift,
                         n_circle=cfg.n_circle, n_quad=cfg.n_quad)


def _build_mesh(cfg, case):
    from .driver import tc1_mesh
    from .mesh import generate_box_mesh

    if cfg.case in ("tc1", "tc2"):
        return tc1_mesh(case, h_far=cfg.h_far, h_near=cfg.h_near,
                        band=cfg.band)
    return generate_box_mesh(case.bounds, cfg.h_far,
                             tag_rule=case.boundary_rule)


def _write_errors_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("R,error,iterations,residual\n")
        for r, e, it, res in rows:
            etxt = "" if e is None else f"{e:.17g}"
            fh.write(f"{r:.17g},{etxt},{it},{res:.17g}\n")


def _write_summary(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_run(args):
    from .config import config_mapping
    from .driver import solve_case
    from .postproc import export_graph_vtk, export_vtk, rt0_cell_vectors
    from .reporting import save_residual_plot

    cfg = _load(args)
    case = _case_of(cfg)
    if cfg.case == "tc3":
        from .driver import ProblemData, solve_problem

        case.network.dirichlet_values[0] = case.root_value
        mesh = _build_mesh(cfg, case)
        data = ProblemData(eps_s=case.eps_s, eps_g=case.eps_g,
                           q_over_eps0=case.q_over_eps0, g=case.g,
                           g_tip=case.g_tip, nu=case.nu,
                           phi_bar=case.phi_bar)
        result = solve_problem(mesh, case.network, data, _solver_options(cfg))
        error = None
    else:
        mesh = _build_mesh(cfg, case)
        result, error = solve_case(case, mesh, n_e=cfg.n_e,
                                   options=_solver_options(cfg))
    report = result.report

    out = args.out
    if "csv" in cfg.formats:
        _write_errors_csv(os.path.join(out, "errors.csv"),
                          [(cfg.radius, error, report.iterations,
                            report.residual)])
    if "json" in cfg.formats:
        _write_summary(os.path.join(out, "summary.json"), {
            "case": cfg.case,
            "l2_error": error,
            "iterations": report.iterations,
            "slope": None,
            "solver": report.to_dict(),
            "n_tets": result.mesh.n_tets,
            "n_faces": result.mesh.n_faces,
            "n_graph_dofs": result.gmesh.n_dof,
            "config": config_mapping(cfg),
        })
    if "vtk" in cfg.formats:
        fields = {"potential": result.solution.phi_cells,
                  "flux": rt0_cell_vectors(result.mesh, result.solution.flux)}
        export_vtk(result.mesh, fields, os.path.join(out, "fields.vtk"))
        export_graph_vtk(result.gmesh, result.solution.phi_graph,
                         os.path.join(out, "graph.vtk"))
    if "png" in cfg.formats:
        save_residual_plot(report.history,
                           os.path.join(out, "residuals.png"))
    print(f"{cfg.case}: {report.iterations} iterations, "
          f"residual {report.residual:.3e}"
          + (f", l2 error {error:.6e}" if error is not None else ""))
    return 0 if report.converged else 2


def cmd_sweep(args):
    from .config import config_mapping
    from .driver import solve_case
    from .errors import ConfigError
    from .postproc import convergence_table
    from .reporting import save_convergence_plot
    from .cases import tc1_case

    cfg = _load(args)
    if len(cfg.radii) < 3:
        raise ConfigError("sweep needs at least 3 radii", key="sweep.radii")
    base = _case_of(cfg)
    if cfg.case != "tc1":
        raise ConfigError("sweep is defined for the tc1 case", key="case.name")
    mesh = _build_mesh(cfg, base)

    rows = []
    aborted = None
    for R in cfg.radii:
        case = tc1_case(R, bounds=(tuple(base.bounds[0]),
                                   tuple(base.bounds[1])))
        result, error = solve_case(case, mesh, n_e=cfg.n_e,
                                   options=_solver_options(cfg))
        rows.append((R, error, result.report.iterations,
                     result.report.residual))
        print(f"R={R:g}: error={error:.6e} "
              f"iterations={result.report.iterations}")
        if not result.report.converged:
            aborted = R
            break

    out = args.out
    if "csv" in cfg.formats:
        _write_errors_csv(os.path.join(out, "errors.csv"), rows)
    slope = None
    if aborted is None:
        slope = convergence_table([(r, e) for r, e, _, _ in rows])
        if "png" in cfg.formats:
            save_convergence_plot([(r, e) for r, e, _, _ in rows], slope,
                                  os.path.join(out, "convergence.png"))
        print(f"fitted slope {slope:.3f}")
    if "json" in cfg.formats:
        _write_summary(os.path.join(out, "summary.json"), {
            "case": cfg.case,
            "slope": slope,
            "errors": [{"R": r, "error": e} for r, e, _, _ in rows],
            "aborted_at": aborted,
            "config": config_mapping(cfg),
        })
    return 0 if aborted is None else 2


def cmd_gen(args):
    from .graph import save_graph
    from .mesh import dump_mesh

    cfg = _load(args)
    case = _case_of(cfg)
    out = args.out
    if cfg.case == "tc3":
        net = case.network
    else:
        net = case.network(cfg.n_e)
    graph_path = os.path.join(out, "graph.txt")
    save_graph(net, graph_path)
    print(f"graph: {len(net.nodes)} nodes, {net.n_edges} edges -> {graph_path}")

    mesh = _build_mesh(cfg, case)
    mesh_path = os.path.join(out, "mesh.txt")
    dump_mesh(mesh, mesh_path)
    volume = float(mesh.tet_volumes.sum())
    print(f"mesh: {mesh.n_tets} tets, {mesh.n_faces} faces, "
          f"volume {volume:.12g} -> {mesh_path}")
    return 0


def cmd_verify(args):
    from .cases import verify_manufactured
    from .errors import ConfigError

    cfg = _load(args)
    if cfg.case != "tc1":
        raise ConfigError("verification needs the manufactured tc1 case",
                          key="case.name")
    case = _case_of(cfg)
    report = verify_manufactured(case)
    print("manufactured-solution residuals:")
    print(report)
    ok = report.max_residual <= cfg.verify_threshold
    print("PASS" if ok else "FAIL",
          f"(threshold {cfg.verify_threshold:g})")
    return 0 if ok else 2


def main(argv=None):
    args = _build_parser().parse_args(argv)
    os.environ.setdefault("OMP_NUM_THREADS", str(args.threads))
    os.environ.setdefault("OPENBLAS_NUM_THREADS", str(args.threads))
    from .errors import ConfigError, EmdimError

    handler = {"run": cmd_run, "sweep": cmd_sweep,
               "gen": cmd_gen, "verify": cmd_verify}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        key = f" (key: {exc.key})" if exc.key else ""
        print(f"config error: {exc}{key}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except EmdimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
