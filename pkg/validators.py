"""This module contains the validators of a run configuration.

Each validator checks one group of knobs of a RunConfig and raises a ConfigError describing the first knob that
does not meet the preconditions of the computation it feeds. validate_config runs the validators a command needs.
"""

import math

import bc_core as bc
import classical_sim as cs
from exceptions import ConfigError

COMMANDS = ("spectrum", "edge", "kernel", "compare", "classical", "distance")
KERNEL_METHODS = ("spectral", "images", "lattice", "monte_carlo")
BRANCHES = ("M0", "M1")
CAYLEY_BRANCHES = ("plus", "minus")


def _positive_int(value, name: str, minimum: int = 1):
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(f"{name} must be an integer >= {minimum}, got {value!r}.")


def _positive_float(value, name: str):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value) or value <= 0:
        raise ConfigError(f"{name} must be a positive number, got {value!r}.")


def _finite_list(values, name: str, length: int = None):
    if not isinstance(values, (list, tuple)) or len(values) == 0:
        raise ConfigError(f"{name} must be a non-empty list of numbers, got {values!r}.")
    if any(isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value)
           for value in values):
        raise ConfigError(f"{name} must contain finite numbers only, got {values!r}.")
    if length is not None and len(values) != length:
        raise ConfigError(f"{name} must contain {length} number(s), got {len(values)}.")


def _check_reflectivities(run_config):
    for name in ("rho0", "rho1"):
        value = getattr(run_config, name)
        if isinstance(value, bool) or not isinstance(value, (int, float)) or math.isnan(value) or value <= 0:
            raise ConfigError(f"{name} must be positive (inf allowed), got {value!r}.")


class Validator:
    """Base class of the run configuration validators.

    Attributes:
        commands ('tuple'): the commands whose configuration the validator checks
    """
    commands = COMMANDS

    def applies_to(self, command: str):
        """True if the validator checks the configuration of the command ('bool')"""
        return command in self.commands

    def validate(self, run_config):
        """check the knobs of the configuration

        :param run_config: the configuration ('config.RunConfig')

        raise:
            a ConfigError in case a knob does not meet its requirements
        """
        raise NotImplementedError


class CommandValidator(Validator):
    """This class is used to validate that the configuration names a known command."""

    def applies_to(self, command: str):
        return True

    def validate(self, run_config):
        if run_config.command not in COMMANDS:
            raise ConfigError(f"Unknown command {run_config.command!r}, expected one of {', '.join(COMMANDS)}.")


class BoundaryValidator(Validator):
    """This class is used to validate the boundary condition of a quantum command: exactly one of a family name,
    an 8-real matrix and a representable branch, with finite family parameters and a known Cayley branch."""
    commands = ("spectrum", "edge", "kernel", "compare", "distance")

    def validate(self, run_config):
        given = [value for value in (run_config.family, run_config.matrix, run_config.branch) if value is not None]
        if len(given) != 1:
            raise ConfigError("Give exactly one of --family, --matrix and --branch.")
        if run_config.branch is not None and run_config.branch not in BRANCHES:
            raise ConfigError(f"branch must be 'M0' or 'M1', got {run_config.branch!r}.")
        if run_config.family is not None and run_config.family not in bc.FAMILY_NAMES:
            raise ConfigError(f"Unknown family {run_config.family!r}, expected one of "
                              f"{', '.join(bc.FAMILY_NAMES)}.")
        if run_config.matrix is not None:
            _finite_list(run_config.matrix, "matrix", 8)
        for name in ("eps", "a"):
            value = getattr(run_config, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"{name} must be a finite number, got {value!r}.")
        _check_reflectivities(run_config)
        if run_config.cayley not in CAYLEY_BRANCHES:
            raise ConfigError(f"cayley must be 'plus' or 'minus', got {run_config.cayley!r}.")


class SpectrumValidator(Validator):
    """This class is used to validate the knobs of the spectral commands."""
    commands = ("spectrum", "edge")

    def validate(self, run_config):
        _positive_int(run_config.levels, "levels")
        _positive_int(run_config.grid_n, "grid_n", 16)
        if run_config.e_max is not None:
            _positive_float(run_config.e_max, "e_max")
        if run_config.command == "edge":
            _finite_list(run_config.t_values, "t")
            if any(value == 0 or not abs(value) < 2 * math.pi for value in run_config.t_values):
                raise ConfigError(f"Every phase t must be nonzero and lie in (-2π, 2π), got {run_config.t_values}.")


class KernelValidator(Validator):
    """This class is used to validate the knobs of the kernel commands. Monte-Carlo kernels need a seed, so that
    a rerun reproduces them."""
    commands = ("kernel", "compare")

    def validate(self, run_config):
        _positive_float(run_config.tau, "tau")
        _positive_int(run_config.grid_n, "grid_n", 2)
        if run_config.modes is not None:
            _positive_int(run_config.modes, "modes")
        if run_config.method not in KERNEL_METHODS:
            raise ConfigError(f"Unknown kernel method {run_config.method!r}, expected one of "
                              f"{', '.join(KERNEL_METHODS)}.")
        _positive_int(run_config.lattice_n, "lattice_n", 32)
        _positive_int(run_config.budget_scale, "budget_scale")
        if run_config.seed is not None:
            _positive_int(run_config.seed, "seed", 0)
        if run_config.method == "monte_carlo":
            if run_config.seed is None:
                raise ConfigError(f"The {run_config.command} command with method monte_carlo needs --seed.")
            _positive_int(run_config.paths, "paths", 2)
            if not 0 <= run_config.y <= 1:
                raise ConfigError(f"The source point y must lie in [0, 1], got {run_config.y!r}.")


class ClassicalValidator(Validator):
    """This class is used to validate the billiard of the classical command."""
    commands = ("classical",)

    def validate(self, run_config):
        if run_config.domain not in cs.DOMAIN_KINDS:
            raise ConfigError(f"Unknown domain {run_config.domain!r}, expected one of "
                              f"{', '.join(cs.DOMAIN_KINDS)}.")
        dimension = 1 if run_config.domain == "interval" else 2
        _finite_list(run_config.size, "size", 2 if run_config.domain == "rectangle" else 1)
        _finite_list(run_config.x0, "x0", dimension)
        _finite_list(run_config.v0, "v0", dimension)
        _positive_float(run_config.t_final, "t_final")
        _positive_int(run_config.max_bounces, "max_bounces", 0)
        alpha = run_config.alpha
        if isinstance(alpha, str) and alpha not in ("identity", "swap"):
            try:
                float(alpha)
            except ValueError:
                raise ConfigError(f"alpha must be 'identity', 'swap' or a rotation angle, got {alpha!r}.")
        _check_reflectivities(run_config)


VALIDATORS = (CommandValidator(), BoundaryValidator(), SpectrumValidator(), KernelValidator(), ClassicalValidator())


def validate_config(run_config):
    """run every validator that applies to the command of the configuration

    :param run_config: the configuration ('config.RunConfig')
    :return: the configuration, unchanged ('config.RunConfig')
    """
    for validator in VALIDATORS:
        if validator.applies_to(run_config.command):
            validator.validate(run_config)
    return run_config
