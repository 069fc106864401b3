"""This module contains the laboratory's command line interface.

Every subcommand reads a run configuration (defaults, an optional JSON config file, then the flags), runs one
computation and writes its artifacts as CSV or JSON files into the output directory. Configuration errors end the
run with exit status 2, errors of the computation with exit status 3.

The most important functionalities include functions to
    - compute a spectrum with its eigenfunctions (spectrum)
    - scan the edge states of rotated boundary conditions (edge)
    - build a heat kernel spectrally, by images or as a path sum (kernel)
    - compare kernels and search the closest path-representable kernel (compare)
    - evolve a classical trajectory and audit its bounces (classical)
    - measure the distance of a boundary condition to the classically representable set (distance)
"""

import argparse
import logging
import math
import os
import sys

import numpy as np
import pandas as pd

import analyze as ana
import bc_core as bc
import classical_sim as cs
import config
import propagator as pr
import spectral as sp
import storage
from exceptions import BCSpecError, ConfigError
from validators import validate_config

logger = logging.getLogger(__name__)

E_MAX_GROWTH = 4.0
E_MAX_ATTEMPTS = 6


class _Parser(argparse.ArgumentParser):
    """argument parser that reports usage errors as configuration errors instead of exiting"""

    def error(self, message):
        raise ConfigError(message)


def _float(text: str):
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got '{text}'")


def _floats(text: str):
    try:
        return [float(value) for value in text.split(",") if value.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def build_parser():
    """build the argument parser with one subcommand per computation ('argparse.ArgumentParser')"""
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with configuration knobs; flags override it")
    common.add_argument("--verbose", action="store_true", help="log the progress of the computation")
    common.add_argument("--out", help="output directory (default: current directory)")

    quantum = _Parser(add_help=False)
    quantum.add_argument("--family", help=f"named boundary condition: {', '.join(bc.FAMILY_NAMES)}")
    quantum.add_argument("--matrix", type=_floats, help="boundary unitary as r1,i1,r2,i2,r3,i3,r4,i4 (row-major)")
    quantum.add_argument("--eps", type=_float, help="flux phase of pseudo_periodic and delta_circle")
    quantum.add_argument("--a", type=_float, help="delta strength of delta_circle")
    quantum.add_argument("--rho0", type=_float, help="reflectivity at x = 0 (inf allowed)")
    quantum.add_argument("--rho1", type=_float, help="reflectivity at x = 1 (inf allowed)")
    quantum.add_argument("--branch", help="representable branch M0 or M1 built from --rho0 and --rho1")
    quantum.add_argument("--cayley", help="Cayley branch of the reported generator: plus or minus")
    quantum.add_argument("--grid-n", dest="grid_n", type=int, help="number of grid points on [0, 1]")

    parser = _Parser(prog="bcspec", description="Numerical laboratory for self-adjoint boundary conditions of the "
                                                "one-dimensional Hamiltonian on [0, 1].")
    parser.add_argument("--version", action="version", version=f"%(prog)s {config.__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    spectrum = commands.add_parser("spectrum", parents=[common, quantum], help="eigenvalues and eigenfunctions")
    spectrum.add_argument("--levels", type=int, help="number of levels to report")
    spectrum.add_argument("--e-max", dest="e_max", type=_float, help="upper end of the energy window")

    edge = commands.add_parser("edge", parents=[common, quantum], help="edge states of U·e^{it}")
    edge.add_argument("--t", dest="t_values", type=_floats, help="comma-separated phases t")

    kernel_flags = _Parser(add_help=False)
    kernel_flags.add_argument("--tau", type=_float, help="Euclidean time")
    kernel_flags.add_argument("--modes", type=int, help="number of modes of the spectral sum")
    kernel_flags.add_argument("--method", help="spectral, images, lattice or monte_carlo")
    kernel_flags.add_argument("--paths", type=int, help="number of Monte-Carlo paths")
    kernel_flags.add_argument("--seed", type=int, help="Monte-Carlo seed")
    kernel_flags.add_argument("--y", type=_float, help="source point of a Monte-Carlo kernel row")
    kernel_flags.add_argument("--lattice-n", dest="lattice_n", type=int, help="number of lattice nodes")
    commands.add_parser("kernel", parents=[common, quantum, kernel_flags], help="heat kernel")
    compare = commands.add_parser("compare", parents=[common, quantum, kernel_flags],
                                  help="kernel distances and representability report")
    compare.add_argument("--budget-scale", dest="budget_scale", type=int, help="multiplier of the search budget")

    classical = commands.add_parser("classical", parents=[common], help="classical trajectory with bounces")
    classical.add_argument("--domain", help="interval, disk or rectangle")
    classical.add_argument("--size", type=_floats, help="length, radius, or width,height")
    classical.add_argument("--alpha", help="identity, swap or a rotation angle of the disk boundary")
    classical.add_argument("--rho0", type=_float, help="reflectivity at x = 0 (uniform reflectivity in 2D)")
    classical.add_argument("--rho1", type=_float, help="reflectivity at the far end of the interval")
    classical.add_argument("--x0", type=_floats, help="initial position")
    classical.add_argument("--v0", type=_floats, help="initial velocity")
    classical.add_argument("--t-final", dest="t_final", type=_float, help="final time")
    classical.add_argument("--max-bounces", dest="max_bounces", type=int, help="bounce budget")
    classical.add_argument("--strict", action="store_const", const=True, help="fail on absorption")

    commands.add_parser("distance", parents=[common, quantum], help="distance to the representable set")
    return parser


def boundary_unitary(run_config):
    """build the boundary unitary of a configuration from its family, its representable branch or its matrix

    :param run_config: the configuration ('config.RunConfig')
    :return: the boundary condition ('bc_core.BoundaryUnitary')
    """
    if run_config.family is not None:
        return bc.named_family(run_config.family, eps=run_config.eps, a=run_config.a, rho0=run_config.rho0,
                               rho1=run_config.rho1)
    if run_config.branch is not None:
        return bc.classical_to_quantum(bc.RepresentableFamily(run_config.branch, (run_config.rho0, run_config.rho1)))
    return bc.unitary_from_record(run_config.matrix)


def _output(run_config, name: str):
    return os.path.join(run_config.out, name)


def _solve_levels(u, run_config):
    """solve until the window holds the requested number of levels, growing a window guessed from Weyl's law"""
    e_max = run_config.e_max if run_config.e_max else ((run_config.levels + 2) * math.pi) ** 2
    kappa_max = pr.kappa_bound(u)
    for _ in range(E_MAX_ATTEMPTS):
        solution = sp.eigenvalues(sp.SpectralProblem(u, e_max, kappa_max, run_config.grid_n))
        if len(solution) >= run_config.levels or run_config.e_max:
            return solution.first(run_config.levels)
        logger.debug("window E <= %.6g holds %d level(s), growing it", e_max, len(solution))
        e_max *= E_MAX_GROWTH
    return solution.first(run_config.levels)


def run_spectrum(run_config):
    """compute the lowest levels and write spectrum.csv and eigenfunctions.csv

    :param run_config: the configuration ('config.RunConfig')
    """
    u = boundary_unitary(run_config)
    solution = _solve_levels(u, run_config)
    table = ana.spectrum_frame(solution)
    frames = []
    for number, level in enumerate(solution, start=1):
        for copy, samples in enumerate(level.eigenfunctions, start=1):
            frame = ana.eigenfunction_frame(solution.grid, samples)
            frame.insert(0, "copy", copy)
            frame.insert(0, "level", number)
            frames.append(frame)
    functions = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(
        columns=["level", "copy"] + ana.EIGENFUNCTION_COLUMNS)
    storage.write_csv(table, _output(run_config, "spectrum.csv"), run_config)
    storage.write_csv(functions, _output(run_config, "eigenfunctions.csv"), run_config)
    print(table.to_string(index=False))


def run_edge(run_config):
    """scan the edge states of U·e^{it} and write edge.csv

    :param run_config: the configuration ('config.RunConfig')
    """
    u = boundary_unitary(run_config)
    table = sp.edge_state_scan(u, run_config.t_values)
    storage.write_csv(table, _output(run_config, "edge.csv"), run_config)
    print(table.to_string(index=False))


def _family_name(run_config):
    if run_config.family is not None:
        return run_config.family
    return {"M0": "robin_m0", "M1": "robin_m1"}.get(run_config.branch, "matrix")


def _compute_kernel(u, run_config, grid_n: int = None):
    """the kernel of the configured method; a 'propagator.KernelEstimate' row for monte_carlo"""
    grid_n = grid_n if grid_n else run_config.grid_n
    method = run_config.method
    if method == "spectral":
        return pr.spectral_kernel(u, run_config.tau, grid_n, run_config.modes)
    if method == "images":
        return pr.image_kernel(_family_name(run_config), run_config.tau, grid_n, eps=run_config.eps)
    rules = pr.rules_for_family(_family_name(run_config), run_config.eps, run_config.a)
    if method == "lattice":
        return pr.lattice_kernel(rules, run_config.tau, run_config.lattice_n)
    return pr.monte_carlo_kernel(rules, run_config.tau, sp.uniform_grid(grid_n), run_config.y, run_config.paths,
                                 run_config.seed)


def run_kernel(run_config):
    """build the heat kernel with the configured method and write kernel.csv

    :param run_config: the configuration ('config.RunConfig')
    """
    u = boundary_unitary(run_config)
    kernel = _compute_kernel(u, run_config)
    if isinstance(kernel, pr.KernelEstimate):
        table = ana.kernel_row_frame(kernel)
        summary = {"method": kernel.method, "y": kernel.y, "max_stderr": float(np.max(kernel.stderr)),
                   "surviving_mass": kernel.metadata["surviving_mass"]}
    else:
        table = ana.kernel_frame(kernel)
        summary = {"method": kernel.method, "tau": kernel.tau, "grid_n": len(kernel.grid),
                   "trace": kernel.trace, "hermiticity_defect": kernel.hermiticity_defect}
    storage.write_csv(table, _output(run_config, "kernel.csv"), run_config, run_config.seed)
    print(ana.report_frame(summary).to_string(index=False))


def _kernel_comparison(u, run_config):
    """compare the spectral kernel of U with the kernel of the configured method"""
    if run_config.method == "spectral":
        return {"method": "spectral"}
    other = _compute_kernel(u, run_config)
    if isinstance(other, pr.KernelEstimate):
        target = pr.spectral_kernel(u, run_config.tau, run_config.grid_n, run_config.modes)
        exact = target.at(other.x, np.full(len(other.x), other.y))
        deviation = np.abs(other.values - exact)
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(other.stderr > 0, deviation / other.stderr, np.where(deviation > 0, np.inf, 0.0))
        return {"method": other.method, "sup": float(deviation.max()), "max_standard_errors": float(scores.max()),
                "paths": run_config.paths}
    target = pr.spectral_kernel(u, run_config.tau, len(other.grid), run_config.modes)
    l2, sup = pr.kernel_distance(target, other)
    return {"method": other.method, "L2": l2, "sup": sup}


def run_compare(run_config):
    """compare kernels of the boundary condition and write compare.json with the representability report

    :param run_config: the configuration ('config.RunConfig')
    """
    u = boundary_unitary(run_config)
    comparison = _kernel_comparison(u, run_config)
    budget = {key: value * run_config.budget_scale for key, value in pr.DEFAULT_BUDGET.items()}
    seed = run_config.seed if run_config.seed is not None else 0
    report = pr.representability_report(u, run_config.tau, budget, seed=seed)
    record = {"U": bc.unitary_to_record(u), "kernel_distance": comparison, "representability": report.to_dict()}
    storage.write_json(record, _output(run_config, "compare.json"), run_config, run_config.seed)
    print(str(report))


def _classical_bc(run_config):
    alpha = run_config.alpha
    if isinstance(alpha, str) and alpha not in ("identity", "swap"):
        alpha = float(alpha)
    if run_config.domain == "interval":
        return bc.ClassicalBC(alpha, (run_config.rho0, run_config.rho1))
    return bc.ClassicalBC(alpha, run_config.rho0)


def run_classical(run_config):
    """evolve a classical trajectory and write trajectory.csv and audit.csv

    :param run_config: the configuration ('config.RunConfig')
    """
    domain = cs.Domain(run_config.domain, run_config.size)
    trajectory = cs.evolve(domain, _classical_bc(run_config), run_config.x0, run_config.v0, run_config.t_final,
                           run_config.max_bounces, run_config.strict)
    storage.write_csv(ana.trajectory_frame(trajectory), _output(run_config, "trajectory.csv"), run_config)
    storage.write_csv(cs.momentum_audit(trajectory), _output(run_config, "audit.csv"), run_config)
    summary = {"status": trajectory.status, "t_final": trajectory.t_final, "bounces": len(trajectory.bounces),
               "action": cs.action(trajectory)}
    print(ana.report_frame(summary).to_string(index=False))


def _generator_record(u, branch: str):
    try:
        generator = bc.cayley(u, branch)
    except BCSpecError as error:
        return {"branch": branch, "singular": error.message}
    return {"branch": branch, "entries": generator.entries}


def run_distance(run_config):
    """measure the distance of U to the representable set and write distance.json

    :param run_config: the configuration ('config.RunConfig')
    """
    u = boundary_unitary(run_config)
    distance, point = bc.manifold_distance(u)
    record = {"U": bc.unitary_to_record(u), "manifold_distance": distance, "closest": point.to_dict(),
              "eigenphases": bc.eigenphases(u)[0], "generator": _generator_record(u, run_config.cayley)}
    if run_config.family is not None:
        record["classical_label"] = bc.classical_label(run_config.family)
    storage.write_json(record, _output(run_config, "distance.json"), run_config)
    print(ana.report_frame({"manifold_distance": distance, "closest": str(point)}).to_string(index=False))


COMMANDS = {"spectrum": run_spectrum, "edge": run_edge, "kernel": run_kernel, "compare": run_compare,
            "classical": run_classical, "distance": run_distance}


def run(argv=None):
    """run one command of the laboratory

    :param argv: the command-line arguments without the program name; sys.argv by default ('list')
    :return: the exit status: 0 on success, 2 on a configuration error, 3 on an error of the computation ('int')
    """
    try:
        arguments = vars(build_parser().parse_args(argv))
        logging.basicConfig(level=logging.DEBUG if arguments.pop("verbose") else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        config_path = arguments.pop("config")
        run_config = validate_config(config.RunConfig.from_sources(arguments, config_path))
        logger.info("running %s with %s", run_config.command, run_config)
        COMMANDS[run_config.command](run_config)
    except ConfigError as error:
        print(f"error: {error}", file=sys.stderr)
        return 2
    except BCSpecError as error:
        print(f"{error.name}: {error}", file=sys.stderr)
        return 3
    return 0


def cli():
    """expose the laboratory on the command line"""
    sys.exit(run())


if __name__ == "__main__":
    cli()
