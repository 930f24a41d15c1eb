"""Command-line runner: ``surfheat --config study.cfg``.

Exit codes: 0 all checks pass, 2 a rate check failed, 1 operational error.
"""

import argparse
import logging
import os
import sys
import time
from dataclasses import replace

import numpy as np

from . import fem, mesh as meshmod, verification as ver
from .config import parse_config
from .errors import SurfheatError
from .geometry import get_surface
from .timestepping import TimeGrid

log = logging.getLogger("surfheat")

EXIT_OK, EXIT_ERROR, EXIT_ASSERT = 0, 1, 2

LOG_LEVELS = {"quiet": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging():
    level = LOG_LEVELS.get(os.environ.get("SURFHEAT_LOG", "quiet").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger("surfheat").setLevel(level)


def write_coo(matrix, path):
    """Coordinate text format: ``row col value`` per stored entry."""
    m = matrix.to_scipy().tocoo()
    with open(path, "w") as fh:
        for i, j, v in zip(m.row, m.col, m.data):
            fh.write(f"{i} {j} {v:.17g}\n")


def write_slab(Y, path):
    with open(path, "w") as fh:
        for i, v in enumerate(Y):
            fh.write(f"{i} {v:.17g}\n")


class Dumper:
    def __init__(self, cfg, problem):
        self.cfg = cfg
        self.problem = problem
        self.slabs = set(cfg.dump_slabs)
        self.seen_meshes = set()

    def __call__(self, mesh, grid, n, t_n, Y):
        out = self.cfg.output_dir
        tag = f"L{mesh.level}_N{grid.N}"
        if self.cfg.dump_mesh and mesh.level not in self.seen_meshes:
            self.seen_meshes.add(mesh.level)
            meshmod.write_off(mesh, os.path.join(out, f"mesh_{mesh.surface.name}_L{mesh.level}.off"))
        if n in self.slabs:
            write_slab(Y, os.path.join(out, f"slab_{tag}_n{n}.txt"))
        if self.cfg.dump_matrices and n == 1:
            c = self.problem.coeffs
            s = self.problem.surface
            write_coo(fem.assemble_mass(mesh, s), os.path.join(out, f"M_{tag}.txt"))
            write_coo(fem.assemble_tilde_stiffness(mesh, s, c.A, t_n),
                      os.path.join(out, f"K_{tag}_n1.txt"))
            if c.b is not None:
                write_coo(fem.assemble_advection(mesh, s, c.b, t_n), os.path.join(out, f"B_{tag}_n1.txt"))
            if c.c is not None:
                write_coo(fem.assemble_reaction(mesh, s, c.c, t_n), os.path.join(out, f"C_{tag}_n1.txt"))


def _dump_meshes(cfg, surface, levels):
    if not cfg.dump_mesh:
        return
    for level in levels:
        m = meshmod.build_mesh(surface, level)
        meshmod.write_off(m, os.path.join(cfg.output_dir, f"mesh_{surface.name}_L{level}.off"))


def execute(cfg):
    """Run the configured study; returns the list of reports."""
    if cfg.kind in ("spatial", "temporal", "single-solve"):
        problem = ver.get_problem(cfg.problem, cfg.surface)
        resid = problem.certify(seed=cfg.seed)
        log.info("problem %s certified, max residual %.2e", problem.label, resid)
        hook = Dumper(cfg, problem)
        if cfg.kind == "spatial":
            rep = ver.spatial_study(problem, cfg.levels, cfg.kappa, cfg.T, cfg.tol, cfg.max_iter, hook)
        elif cfg.kind == "temporal":
            rep = ver.temporal_study(problem, cfg.fixed_level, cfg.taus, cfg.T, cfg.tol,
                                     cfg.max_iter, hook)
        else:
            m = meshmod.build_mesh(problem.surface, cfg.fixed_level)
            tau = cfg.taus[0] if cfg.taus else cfg.kappa * m.h**2
            grid = TimeGrid.from_step(cfg.T, tau)
            _, linf, l2, h1 = ver.run_solve(problem, m, grid, cfg.tol, cfg.max_iter, hook)
            row = ver.ReportRow(m.level, m.h, m.gamma_h, grid.tau, grid.N, linf, l2, h1,
                                rho_ratio=linf / (ver.rho(m.h) * m.h))
            rep = ver.ConvergenceReport("single-solve", problem.label, [row], "h",
                                        {"T": cfg.T, "solver_tol": cfg.tol})
        return [rep]
    surface = get_surface(cfg.surface)
    _dump_meshes(cfg, surface, cfg.levels)
    if cfg.kind == "projection":
        A = None
        if surface.name == "sphere":
            A = ver.sphere_full().coeffs.A
        z, gz = _projection_target(surface)
        return list(ver.projection_study(surface, z, gz, cfg.levels, A=A, t_n=0.5, tol=cfg.tol))
    return [ver.geometry_study(surface, cfg.levels)]


def _projection_target(surface):
    if surface.name == "sphere":
        return ver._xy, ver._grad_xy
    return (lambda x: x[:, 0].copy(),
            lambda x: np.tile([1.0, 0.0, 0.0], (x.shape[0], 1)))


def _report_error(exc):
    print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
    cause = exc.__cause__
    while cause is not None:
        print(f"  caused by: {type(cause).__name__}: {cause}", file=sys.stderr)
        cause = cause.__cause__


def run(cfg, no_timestamp=False, stream=None):
    stream = sys.stdout if stream is None else stream
    try:
        os.makedirs(cfg.output_dir, exist_ok=True)
        reports = execute(cfg)
    except (SurfheatError, ValueError, OSError) as exc:
        _report_error(exc)
        return EXIT_ERROR
    stamp = "" if no_timestamp else "_" + time.strftime("%Y%m%dT%H%M%S")
    failed = False
    for rep in reports:
        base = os.path.join(cfg.output_dir, f"{rep.study}_{rep.label}{stamp}")
        rep.to_csv(base + ".csv")
        checks = ver.check_report(rep, cfg.min_eoc)
        md = rep.to_markdown()
        if checks:
            md += "\n" + "\n".join(f"- {c}" for c in checks) + "\n"
        with open(base + ".md", "w") as fh:
            fh.write(md)
        print(md, file=stream)
        if not all(c.ok for c in checks):
            failed = True
            if rep.study == "temporal":
                print("diagnostic: temporal EOC below floor; the spatial error probably "
                      "dominates. Try a finer fixed_level.", file=stream)
    return EXIT_ASSERT if failed else EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="surfheat", description=__doc__.splitlines()[0])
    p.add_argument("--config", required=True, help="study config file (key = value lines)")
    p.add_argument("--output-dir", help="override output_dir from the config")
    p.add_argument("--dump-mesh", action="store_true", help="write meshes in OFF format")
    p.add_argument("--dump-slabs", help="comma list of slab indices n to write")
    p.add_argument("--dump-matrices", action="store_true",
                   help="write slab-1 matrices in coordinate text format")
    p.add_argument("--no-timestamp", action="store_true", help="omit timestamp from file names")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    _setup_logging()
    try:
        cfg = parse_config(args.config)
        over = {}
        if args.output_dir:
            over["output_dir"] = args.output_dir
        if args.dump_mesh:
            over["dump_mesh"] = True
        if args.dump_matrices:
            over["dump_matrices"] = True
        if args.dump_slabs:
            over["dump_slabs"] = [int(x) for x in args.dump_slabs.split(",") if x.strip()]
        cfg = replace(cfg, **over)
    except (SurfheatError, ValueError) as exc:
        _report_error(exc)
        return EXIT_ERROR
    return run(cfg, no_timestamp=args.no_timestamp)


if __name__ == "__main__":
    sys.exit(main())
