"""This module contains the run configuration of the boundary-condition laboratory.

A RunConfig is assembled from three layers: the built-in defaults, an optional JSON config file and the
command-line flags, where later layers override earlier ones. The environment variable BCSPEC_THREADS caps the
number of worker threads used by the parallel computations.
"""

import json
import logging
import os
from dataclasses import asdict, dataclass, field, fields

from exceptions import ConfigError

logger = logging.getLogger(__name__)

__version__ = "1.0.0"
THREADS_VARIABLE = "BCSPEC_THREADS"


def worker_count():
    """return the number of worker threads, capped by BCSPEC_THREADS

    :return: the number of worker threads, at least one ('int')
    """
    value = os.environ.get(THREADS_VARIABLE)
    if value is None or value.strip() == "":
        return max(1, os.cpu_count() or 1)
    try:
        count = int(value)
    except ValueError:
        raise ConfigError(f"{THREADS_VARIABLE} must be a positive integer, got '{value}'.")
    if count < 1:
        raise ConfigError(f"{THREADS_VARIABLE} must be a positive integer, got '{value}'.")
    return count


@dataclass
class RunConfig:
    """The effective configuration of one command.

    Attributes:
        command ('str'): the subcommand (spectrum, edge, kernel, compare, classical, distance)
        family ('str'): a named boundary-condition family
        matrix ('list'): a boundary unitary given as 8 reals (alternative to family)
        eps, a, rho0, rho1 ('float'): the family parameters
        branch ('str'): a representable branch, M0 or M1, built from rho0 and rho1 (alternative to family)
        cayley ('str'): the Cayley branch of the reported generator, plus or minus
        levels ('int'): the number of levels to report
        e_max ('float'): the upper end of the energy window
        t_values ('list'): the phases of an edge-state scan
        tau ('float'): the Euclidean time of a heat kernel
        grid_n ('int'): the number of grid points
        modes ('int'): the number of modes of a spectral sum
        method ('str'): the kernel method (spectral, images, lattice, monte_carlo)
        paths ('int'): the number of Monte-Carlo paths
        seed ('int'): the Monte-Carlo seed
        y ('float'): the source point of a Monte-Carlo kernel row
        lattice_n ('int'): the number of lattice nodes
        budget_scale ('int'): the multiplier of the representability search budget
        domain ('str'): the billiard domain (interval, disk, rectangle)
        size ('list'): the domain size (length, radius or width and height)
        alpha: the classical boundary map ('str' or 'float')
        x0, v0 ('list'): the initial position and velocity of a classical trajectory
        t_final ('float'): the final time of a classical trajectory
        max_bounces ('int'): the bounce budget of a classical trajectory
        strict ('bool'): raise AbsorbedEarly instead of reporting absorption
        out ('str'): the output directory
    """
    command: str = None
    family: str = None
    matrix: list = None
    eps: float = 0.0
    a: float = 0.0
    rho0: float = 1.0
    rho1: float = 1.0
    branch: str = None
    cayley: str = "plus"
    levels: int = 10
    e_max: float = None
    t_values: list = field(default_factory=lambda: [0.4, 0.2, 0.1])
    tau: float = 0.1
    grid_n: int = 201
    modes: int = None
    method: str = "spectral"
    paths: int = 100000
    seed: int = None
    y: float = 0.5
    lattice_n: int = 401
    budget_scale: int = 1
    domain: str = "interval"
    size: list = field(default_factory=lambda: [1.0])
    alpha: object = "identity"
    x0: list = field(default_factory=lambda: [0.25])
    v0: list = field(default_factory=lambda: [1.0])
    t_final: float = 10.0
    max_bounces: int = 10000
    strict: bool = False
    out: str = "."

    def to_dict(self):
        """return the configuration as a JSON-compatible dictionary ('dict')"""
        return asdict(self)

    @classmethod
    def field_names(cls):
        """return the names of all configuration knobs ('set')"""
        return {item.name for item in fields(cls)}

    @classmethod
    def from_sources(cls, flags: dict, config_path: str = None):
        """assemble the configuration from the defaults, a JSON config file and the command-line flags

        :param flags: the command-line values; None means "not given" ('dict')
        :param config_path: the path of a JSON config file ('str')
        :return: the effective configuration ('config.RunConfig')
        """
        values = {}
        if config_path:
            values.update(load_config_file(config_path))
        values.update({key: value for key, value in flags.items() if value is not None})
        unknown = set(values) - cls.field_names()
        if unknown:
            raise ConfigError(f"Unknown configuration key(s): {', '.join(sorted(unknown))}.")
        return cls(**values)


def load_config_file(path: str):
    """read a JSON config file

    :param path: the path of the file ('str')
    :return: the knobs stored in the file ('dict')
    """
    try:
        with open(path, encoding="utf-8") as handle:
            values = json.load(handle)
    except OSError as error:
        raise ConfigError(f"Cannot read config file '{path}': {error.strerror}.")
    except json.JSONDecodeError as error:
        raise ConfigError(f"Config file '{path}' is not valid JSON: {error.msg} (line {error.lineno}).")
    if not isinstance(values, dict):
        raise ConfigError(f"Config file '{path}' must contain a JSON object.")
    logger.debug("loaded %d knob(s) from %s", len(values), path)
    return values
