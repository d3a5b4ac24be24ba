"""Main optimal-design interface and command-line entry point."""

from typing import Any, Dict, List, Optional, Sequence
import argparse
import logging
import math
import os
import sys

import numpy as np

from .core.geometry.base import Mesh
from .core.geometry.primitives import build_mesh, refine
from .core.geometry.types import GeometryError, ShapeType
from .core.fields.types import FieldError
from .core.operations.transfer import transfer_element, transfer_nodal
from .design.duality import DualReport, dual_report
from .design.optimizer import formulation_gap, solve_design
from .design.types import DesignError, DesignSolution
from .diagnostics.oracle import RadialOracle, radial_oracle
from .diagnostics.regularity import DiagnosticsReport, diagnose
from .document.config import ConfigError, RunConfig, parse_config
from .document.io import (error_block, export_vtk, write_field_csv, write_iteration_log,
                          write_mesh_csv, write_summary, write_table_csv)
from .lamination.laminate import RESOLUTION, LaminateRow, laminate_convergence
from .lamination.types import LaminationError
from .material.types import MaterialError
from .solver.types import SolverError

logger = logging.getLogger(__name__)

COMMANDS = ("solve", "oracle", "laminate", "dual-check", "diagnose")

# Errors reported in the summary instead of propagating.
_REPORTED_ERRORS = (ConfigError, GeometryError, FieldError, MaterialError, SolverError,
                    DesignError, LaminationError)

LAMINATE_COLUMNS = ("delta", "epsilon", "laminate_energy", "homogenized_energy", "gap",
                    "cell_limit_energy", "sampled_energy")


class DesignSystem:
    """The main interface for running optimal-design computations."""

    def __init__(self, config: RunConfig) -> None:
        """Initialize the system.

        Args:
            config: Validated run configuration.
        """
        self.config = config
        self.version: str = "0.1.0"
        self._mesh: Optional[Mesh] = None

    @property
    def mesh(self) -> Mesh:
        """Mesh of the configured domain, built on first use."""
        if self._mesh is None:
            self.config.check_area(self.config.domain.area)
            self._mesh = build_mesh(self.config.domain)
            self.config.check_area(self._mesh.total_area)
        return self._mesh

    def solve(self, mesh: Optional[Mesh] = None) -> DesignSolution:
        return solve_design(mesh or self.mesh, self.config.model,
                            self.config.load.function(), self.config.solve)

    def oracle(self) -> RadialOracle:
        """Disk oracle for the configured problem.

        Raises:
            ConfigError: If the domain is not a disk or the load is not constant.
        """
        domain = self.config.domain
        if domain.shape is not ShapeType.DISK:
            raise ConfigError("the oracle needs a disk domain", "domain")
        if not self.config.load.is_constant:
            raise ConfigError("the oracle needs a constant load", "f")
        cx, cy, radius = domain.parameters
        try:
            return radial_oracle(radius, self.config.model, self.config.load.value, (cx, cy))
        except ValueError as error:
            raise ConfigError(str(error), "f") from None

    def dual_check(self, solution: DesignSolution) -> DualReport:
        return dual_report(solution, self.config.restarts, self.config.model,
                           self.config.solve, self.config.seed)

    def laminate(self, solution: DesignSolution) -> List[LaminateRow]:
        """Laminate table for a solution, on a mesh resolving every period.

        The design is transferred to a mesh refined until its size is at most
        min(epsilons) / 8.
        """
        required = min(self.config.epsilons) / RESOLUTION
        fine = build_mesh(self.config.domain.with_target_h(required / math.sqrt(2.0)))
        while fine.h > required * (1.0 + 1e-12):
            fine = refine(fine)
        logger.info("Laminate mesh: %d elements, h=%.4g", fine.n_elements, fine.h)
        theta = transfer_element(solution.theta_hat, fine)
        u = transfer_nodal(solution.u_hat, fine)
        return laminate_convergence(theta, u, self.config.model, self.config.deltas,
                                    self.config.epsilons)

    def diagnose(self) -> DiagnosticsReport:
        """Solve on successively refined meshes and collect diagnostics per level."""
        report = DiagnosticsReport()
        mesh = self.mesh
        for level in range(self.config.levels):
            if level:
                mesh = refine(mesh)
            solution = self.solve(mesh)
            report = report.merge(diagnose(solution, level, self.config.r_exp,
                                           self.config.band))
        return report


def _solution_summary(solution: DesignSolution) -> Dict[str, Any]:
    primal, dual = solution.primal_energy, solution.dual_energy
    return {
        "mu_hat": solution.mu_hat,
        "branch": solution.branch,
        "volume": solution.volume,
        "primal_energy": primal,
        "dual_energy": dual,
        "gap": abs(primal + dual) / abs(primal) if primal else abs(dual),
        "kkt_residual": solution.kkt_residual,
        "state_residual": solution.state_residual,
        "bisection_steps": solution.bisection_steps,
        "fallback": solution.fallback,
        "formulation_gap": formulation_gap(solution, solution.model),
        "n_nodes": solution.mesh.n_nodes,
        "n_elements": solution.mesh.n_elements,
        "h": solution.mesh.h,
    }


def _oracle_summary(oracle: RadialOracle) -> Dict[str, Any]:
    return {
        "r0": oracle.r0,
        "t_hat": oracle.t_hat,
        "mu_hat": oracle.mu_hat,
        "c": oracle.model.c,
        "dual_energy": oracle.dual_energy(),
        "primal_energy": oracle.primal_energy(),
    }


def _write_solution(system: DesignSystem, solution: DesignSolution, out_dir: str) -> None:
    write_mesh_csv(solution.mesh, out_dir)
    fields = [solution.u_hat, solution.theta_hat, solution.sigma_hat]
    for field, name in zip(fields, ("u", "theta", "sigma")):
        write_field_csv(field, os.path.join(out_dir, f"{name}.csv"), name)
    write_table_csv(os.path.join(out_dir, "sweep.csv"), ["mu", "volume"], solution.sweep)
    if system.config.iteration_log:
        write_iteration_log(solution.history, os.path.join(out_dir, "iterations.csv"))
    if system.config.vtk:
        export_vtk(solution.mesh, fields, os.path.join(out_dir, "solution.vtk"))


def _oracle_comparison(system: DesignSystem, solution: DesignSolution) -> Dict[str, Any]:
    oracle = system.oracle()
    _, theta, _ = oracle.sample(solution.mesh)
    difference = np.abs(solution.theta_hat.values - theta.values)
    mismatch = float(np.dot(solution.mesh.areas, difference))
    t_hat = solution.mu_hat ** (system.config.model.p - 1.0)
    return {
        "t_hat": oracle.t_hat,
        "t_hat_error": abs(t_hat - oracle.t_hat) / oracle.t_hat,
        "theta_l1_mismatch": mismatch,
    }


def _dispatch(system: DesignSystem, command: str, out_dir: str) -> Dict[str, Any]:
    config = system.config
    if command == "oracle":
        oracle = system.oracle()
        radius = config.domain.parameters[2]
        r = np.linspace(0.0, radius, 101)
        write_table_csv(os.path.join(out_dir, "oracle_profile.csv"),
                        ["r", "sigma", "theta", "grad_u", "u"],
                        zip(r, oracle.sigma_magnitude(r), oracle.theta(r),
                            oracle.grad_u_magnitude(r), oracle.u(r)))
        summary = _oracle_summary(oracle)
        print(f"r0={summary['r0']:.12g} t_hat={summary['t_hat']:.12g} "
              f"mu_hat={summary['mu_hat']:.12g}")
        return {"oracle": summary}

    if command == "diagnose":
        report = system.diagnose()
        with open(os.path.join(out_dir, "diagnostics.txt"), "w") as handle:
            handle.write(report.to_text())
        return {"diagnostics": report.to_dict()}

    solution = system.solve()
    _write_solution(system, solution, out_dir)
    result: Dict[str, Any] = {"solution": _solution_summary(solution)}
    if config.domain.shape is ShapeType.DISK and config.load.is_constant:
        result["oracle"] = _oracle_comparison(system, solution)
    if command == "dual-check":
        report = system.dual_check(solution)
        result["dual_check"] = {
            "primal_value": report.primal_value,
            "dual_value": report.dual_value,
            "gap": report.gap,
            "relative_gap": report.relative_gap,
            "div_residual": report.div_residual,
            "flux_spread": report.flux_spread,
            "relative_flux_spread": report.relative_flux_spread,
            "flux_norm": report.flux_norm,
            "minmax_value": report.minmax_value,
            "restarts": report.restarts,
        }
    elif command == "laminate":
        rows = system.laminate(solution)
        write_table_csv(os.path.join(out_dir, "laminate.csv"), LAMINATE_COLUMNS,
                        ([getattr(row, name) for name in LAMINATE_COLUMNS] for row in rows))
        result["laminate"] = [{name: getattr(row, name) for name in LAMINATE_COLUMNS}
                              for row in rows]
    return result


def run(command: str, config: RunConfig, out_dir: str) -> int:
    """Run one command and write its artifacts.

    The summary file ``summary.json`` always embeds the resolved
    configuration. Library errors are written into its ``error`` block.

    Args:
        command: One of ``COMMANDS``.
        config: Validated configuration.
        out_dir: Output directory, created if needed.

    Returns:
        0 on success, 1 when the computation failed, 2 for configuration errors.
    """
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}; expected one of {COMMANDS}")
    os.makedirs(out_dir, exist_ok=True)
    system = DesignSystem(config)
    summary: Dict[str, Any] = {"command": command, "config": config.to_dict(),
                               "version": system.version}
    status = 0
    try:
        summary.update(_dispatch(system, command, out_dir))
        summary["status"] = "ok"
    except _REPORTED_ERRORS as error:
        logger.error("%s failed: %s", command, error)
        summary["status"] = "error"
        summary["error"] = error_block(error)
        status = 2 if isinstance(error, ConfigError) else 1
    write_summary(os.path.join(out_dir, "summary.json"), summary)
    return status


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="composite-design",
        description="Optimal two-phase design for the p-Laplacian")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", help="Path of the key = value configuration file")
    parser.add_argument("--out", default="out", help="Output directory")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    parser.add_argument("--seed", type=int, default=None, help="Seed for random restarts")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Log progress")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Log errors only")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Console entry point."""
    args = _parser().parse_args(argv)
    level = logging.INFO if args.verbose else logging.ERROR if args.quiet else logging.WARNING
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as handle:
            config = parse_config(handle.read()).with_overrides(args.threads, args.seed)
    except (ConfigError, OSError) as error:
        if isinstance(error, OSError):
            error = ConfigError(f"cannot read {args.config}: {error.strerror}")
        os.makedirs(args.out, exist_ok=True)
        write_summary(os.path.join(args.out, "summary.json"),
                      {"command": args.command, "status": "error", "error": error_block(error)})
        logger.error("invalid configuration: %s", error)
        return 2
    return run(args.command, config, args.out)


if __name__ == "__main__":
    sys.exit(main())
