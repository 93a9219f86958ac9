"""Experiment orchestration: build, solve, measure, write artifacts.

run_experiment assembles everything for one problem configuration, runs
the preconditioned solve, and (when an output directory is set) writes
report.json, residuals.csv and three legacy-VTK slices of the solution.
run_sweep repeats that over a list of ppw values and tabulates the
results in table.csv.
"""

import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .blockjacobi import BlockJacobi, apply_block_jacobi
from .errors import ConfigError
from .krylov import KrylovConfig, SolveReport, gmres_solve, rprr_tolerance
from .leafprec import homogenize
from .mesh import apply_global, assemble_rhs, build_leaves, build_mesh
from .problems import (ErrorMetrics, ManufacturedProblem, compute_error,
                       kappa_for_ppw, make_problem)
from .spectral import build_basis, eig_factor, interp_matrix

REFERENCE_TOL = 1e-14


@dataclass
class ExperimentConfig:
    problem: str = "plane"
    leaves: int = 2
    order: int = 16
    ppw: float | None = None
    kappa: float | None = None
    tol: float | None = None
    digits: int | None = None
    threads: int = 1
    restart: int = 200
    max_iterations: int = 5000
    inner_tol: float = 1e-10
    inner_maxit: int = 200
    flexible: bool = False
    deterministic: bool = True
    reference: bool = False
    out: str | None = None

    def resolve(self) -> "ExperimentConfig":
        if self.leaves < 1:
            raise ConfigError("leaves must be >= 1")
        if self.order < 4:
            raise ConfigError("order must be >= 4")
        if (self.ppw is None) == (self.kappa is None):
            raise ConfigError("specify exactly one of ppw or kappa")
        if self.kappa is None:
            self.kappa = kappa_for_ppw(self.ppw, self.leaves, self.order)
        if self.tol is None:
            if self.digits is not None:
                self.tol = rprr_tolerance(self.digits)
            else:
                self.tol = 1e-8
        if not 0 < self.tol < 1:
            raise ConfigError(f"tolerance must lie in (0, 1), got {self.tol}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        return self


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    report: SolveReport
    errors: ErrorMetrics
    solution: np.ndarray
    N: int
    setup_time: float
    mesh: object = field(repr=False, default=None)
    leaves: object = field(repr=False, default=None)


def _parallel_vdot(pool: ThreadPoolExecutor, chunk: int):
    def vdot(x, y):
        pieces = [(x[i:i + chunk], y[i:i + chunk])
                  for i in range(0, len(x), chunk)]
        return sum(pool.map(lambda p: np.vdot(p[0], p[1]), pieces))
    return vdot


def run_experiment(config: ExperimentConfig,
                   problem: ManufacturedProblem | None = None
                   ) -> ExperimentResult:
    """Build the discretization, solve, and emit artifacts per config."""
    cfg = config.resolve()
    if problem is None:
        problem = make_problem(cfg.problem, cfg.kappa)

    t0 = time.perf_counter()
    mesh = build_mesh(cfg.leaves)
    basis = build_basis(cfg.order, mesh.h)
    eig = eig_factor(basis)
    leaves = build_leaves(mesh, cfg.order, problem.kappa, problem.eta,
                          problem.b, basis=basis)
    precs = [homogenize(leaf, eig, inner_tol_interior=cfg.inner_tol,
                        inner_tol_schur=cfg.inner_tol,
                        inner_maxit=cfg.inner_maxit)
             for leaf in leaves]
    J = BlockJacobi(mesh=mesh, precs=precs)
    rhs = assemble_rhs(problem.spec(), mesh, leaves)
    setup_time = time.perf_counter() - t0

    pool = ThreadPoolExecutor(cfg.threads) if cfg.threads > 1 else None
    vdot = None
    if pool is not None and not cfg.deterministic:
        vdot = _parallel_vdot(pool, max(4096, len(rhs) // (4 * cfg.threads)))
    try:
        apply_A = lambda v: apply_global(mesh, leaves, v, pool=pool)
        apply_P = lambda v: apply_block_jacobi(J, v, pool=pool)
        kcfg = KrylovConfig(restart=cfg.restart,
                            max_iterations=cfg.max_iterations,
                            rel_reduction=cfg.tol, flexible=cfg.flexible)
        x, report = gmres_solve(apply_A, apply_P, rhs, cfg=kcfg, vdot=vdot)
        report.inner_iterations = J.total_inner_iterations()
        report.inner_iterations["preconditioner_applications"] = len(J.applications)

        e_it = e_ref = None
        if problem.u is not None:
            e_it = compute_error(x, problem, mesh, leaves)
            if cfg.reference:
                J.reset_stats()
                ref_cfg = KrylovConfig(restart=cfg.restart,
                                       max_iterations=cfg.max_iterations,
                                       rel_reduction=REFERENCE_TOL,
                                       flexible=cfg.flexible,
                                       record_history=False)
                x_ref, _ = gmres_solve(apply_A, apply_P, rhs, cfg=ref_cfg,
                                       vdot=vdot)
                e_ref = compute_error(x_ref, problem, mesh, leaves)
    finally:
        if pool is not None:
            pool.shutdown()

    result = ExperimentResult(config=cfg, report=report,
                              errors=ErrorMetrics(E_h_it=e_it, E_h=e_ref),
                              solution=x, N=len(rhs), setup_time=setup_time,
                              mesh=mesh, leaves=leaves)
    if cfg.out is not None:
        write_artifacts(result, Path(cfg.out))
    return result


def run_sweep(config: ExperimentConfig, ppw_values) -> list[ExperimentResult]:
    """Run one experiment per ppw value; table.csv lands in config.out."""
    results = []
    for ppw in ppw_values:
        sub = None
        if config.out is not None:
            sub = str(Path(config.out) / f"ppw_{ppw:g}")
        cfg = ExperimentConfig(**{**asdict(config), "ppw": ppw, "kappa": None,
                                  "out": sub})
        results.append(run_experiment(cfg))
    if config.out is not None:
        write_table(results, Path(config.out) / "table.csv")
    return results


# -- artifacts ---------------------------------------------------------------

def write_artifacts(result: ExperimentResult, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    write_report(result, outdir / "report.json")
    write_residuals(result.report, outdir / "residuals.csv")
    for axis, name in enumerate("xyz"):
        field2d, spacing = sample_plane(result.mesh, result.leaves,
                                        result.solution, axis, 0.5)
        write_vtk_slice(outdir / f"slice_{name}.vtk", axis, 0.5, field2d,
                        spacing)


def write_report(result: ExperimentResult, path: Path):
    r = result.report
    payload = {
        "config": asdict(result.config),
        "N": result.N,
        "setup_time": result.setup_time,
        "report": {
            "converged": r.converged,
            "iterations": r.iterations,
            "achieved_reduction": r.achieved_reduction,
            "wall_time": r.wall_time,
            "true_residual": r.true_residual,
            "monitored": r.monitored,
            "breakdown": r.breakdown,
            "inner_iterations": r.inner_iterations,
        },
        "errors": {
            "E_h_it": result.errors.E_h_it,
            "E_h": result.errors.E_h,
            "digits_it": ErrorMetrics.digits(result.errors.E_h_it),
            "digits": ErrorMetrics.digits(result.errors.E_h),
        },
    }
    path.write_text(json.dumps(payload, indent=2))


def write_residuals(report: SolveReport, path: Path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "relative_residual"])
        for k, r in enumerate(report.residual_history, start=1):
            w.writerow([k, f"{r:.16e}"])


def write_table(results: list[ExperimentResult], path: Path):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["ppw", "kappa", "leaves", "order", "N", "tol",
                    "iterations", "converged", "E_h_it", "E_h", "wall_time"])
        for res in results:
            c = res.config
            w.writerow([c.ppw, c.kappa, c.leaves, c.order, res.N, c.tol,
                        res.report.iterations, res.report.converged,
                        res.errors.E_h_it, res.errors.E_h,
                        res.report.wall_time])


# -- solution slices ---------------------------------------------------------

def sample_plane(mesh, leaves, u, axis: int, value: float, res: int = 129):
    """Resample the solution on an axis-aligned plane to a uniform raster.

    Interpolation uses each leaf's interior tensor grid (a full m^3
    Chebyshev product), which is accurate to the discretization order and
    avoids the removed edge nodes. Returns (res x res complex array,
    spacing); the 2D axes are the two tangential axes in increasing order.
    """
    L = mesh.L
    h = mesh.h
    n = leaves[0].n
    m = leaves[0].basis.m
    ref = leaves[0].basis.ref_nodes[1:-1]  # interior reference nodes
    t_axes = [a for a in range(3) if a != axis]
    pts = np.linspace(0.0, 1.0, res)
    cells = np.minimum((pts * L).astype(int), L - 1)
    locals_ = pts * L - cells
    g_fixed = min(int(value * L), L - 1)
    w_fixed = interp_matrix(ref, np.array([value * L - g_fixed]))[0]

    out = np.empty((res, res), dtype=complex)
    for c1 in range(L):
        sel1 = np.nonzero(cells == c1)[0]
        E1 = interp_matrix(ref, locals_[sel1])
        for c2 in range(L):
            sel2 = np.nonzero(cells == c2)[0]
            E2 = interp_matrix(ref, locals_[sel2])
            g = [0, 0, 0]
            g[axis] = g_fixed
            g[t_axes[0]] = c1
            g[t_axes[1]] = c2
            tau = mesh.leaf_id(*g)
            cube = u[tau * n:tau * n + m ** 3].reshape(m, m, m)  # (z, y, x)
            cube_axis = 2 - axis  # x is the last cube axis
            Uf = np.tensordot(w_fixed, cube, axes=(0, cube_axis))
            # Uf axes are the tangential axes in decreasing spatial order
            out[np.ix_(sel1, sel2)] = E1 @ Uf.T @ E2.T
    return out, pts[1] - pts[0]


def write_vtk_slice(path: Path, axis: int, value: float,
                    field2d: np.ndarray, spacing: float):
    """Legacy ASCII VTK structured-points file with Re/Im/|u| scalars."""
    res1, res2 = field2d.shape
    t_axes = [a for a in range(3) if a != axis]
    dims = [1, 1, 1]
    dims[t_axes[0]] = res1
    dims[t_axes[1]] = res2
    origin = [0.0, 0.0, 0.0]
    origin[axis] = value
    sp = [1.0, 1.0, 1.0]
    sp[t_axes[0]] = spacing
    sp[t_axes[1]] = spacing
    # VTK iterates the lower-numbered axis fastest; that is field2d's first
    flat = field2d.T.reshape(-1)
    lines = [
        "# vtk DataFile Version 3.0",
        f"solution slice at axis {axis} = {value}",
        "ASCII",
        "DATASET STRUCTURED_POINTS",
        f"DIMENSIONS {dims[0]} {dims[1]} {dims[2]}",
        f"ORIGIN {origin[0]} {origin[1]} {origin[2]}",
        f"SPACING {sp[0]} {sp[1]} {sp[2]}",
        f"POINT_DATA {res1 * res2}",
    ]
    for name, data in (("re_u", flat.real), ("im_u", flat.imag),
                       ("abs_u", np.abs(flat))):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(f"{v:.10e}" for v in data)
    Path(path).write_text("\n".join(lines) + "\n")
