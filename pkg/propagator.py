"""This module contains the Euclidean propagators (heat kernels) of -d²/dx² on [0, 1] under a boundary condition.

The kernel K_τ(x, y) of e^{-τH} is computed in independent ways: as a spectral sum over the exact levels, by the
method of images for the families that possess images, and as a path sum over classically constrained walks,
either on a lattice or by Monte-Carlo sampling. A representability report compares the kernel of an arbitrary
boundary condition with every kernel a path sum can produce.

The most important functionalities include functions to
    - build spectral, image, lattice and Monte-Carlo kernels
    - compare and compose kernels on a common grid
    - search the path-representable families for the kernel closest to a given boundary condition
    - evolve wave packets in real time by the spectral expansion
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import RegularGridInterpolator
from scipy.linalg import eigh
from scipy.special import erfcx

import bc_core as bc
import config
import spectral as sp
from exceptions import BadSeed, BCSpecError, GridMismatch, InsufficientImages, InsufficientModes, InvalidParams, \
    UnsupportedFamily, UnsupportedRho

logger = logging.getLogger(__name__)

DEFAULT_GRID_N = 201
TAIL_EXPONENT = 40.0
IMAGE_TAIL = 1e-14
MC_STEPS = 32
MC_BATCH_SIZE = 2 ** 15
DEFAULT_LATTICE_N = 2000
IMAGE_FAMILIES = ("dirichlet", "neumann", "periodic", "pseudo_periodic", "dirichlet_neumann", "neumann_dirichlet")
DEFAULT_BUDGET = {"eps": 64, "a": 64, "rho": 32, "refine": 200}
REPORT_GRID_N = 65
CANONICAL_TOLERANCE = 1e-6


def free_gaussian(u, tau: float):
    """the free heat kernel G(u) = e^{-u²/4τ}/√(4πτ) of H = -d²/dx²"""
    return np.exp(-np.square(u) / (4.0 * tau)) / math.sqrt(4.0 * math.pi * tau)


def trapezoid_weights(grid):
    """return the trapezoid quadrature weights of a uniform grid ('numpy.ndarray')"""
    h = grid[1] - grid[0]
    weights = np.full(len(grid), h)
    weights[[0, -1]] = 0.5 * h
    return weights


class HeatKernel:
    """The kernel K_τ(x_i, y_j) of e^{-τH} sampled on a uniform grid.

    Attributes:
        tau ('float'): the Euclidean time
        grid ('numpy.ndarray'): the uniform sample points in [0, 1]
        values ('numpy.ndarray'): the complex matrix K(x_i, y_j) (read-only)
        method ('str'): spectral, images, lattice, monte_carlo or composed
        metadata ('dict'): truncation data (modes, images, steps, paths, seed)
    """

    def __init__(self, tau: float, grid, values, method: str, metadata: dict = None):
        if not tau > 0:
            raise InvalidParams(f"Euclidean time tau must be positive, got {tau}.")
        values = np.array(values, dtype=complex)
        if values.shape != (len(grid), len(grid)):
            raise InvalidParams(f"Kernel values of shape {values.shape} do not match a grid of {len(grid)} points.")
        values.setflags(write=False)
        self.tau = float(tau)
        self.grid = np.asarray(grid, dtype=float)
        self.values = values
        self.method = method
        self.metadata = metadata if metadata else {}

    def __str__(self):
        return f"{self.method} heat kernel at tau = {self.tau:.6g} on {len(self.grid)} points"

    @property
    def weights(self):
        """the trapezoid weights of the grid ('numpy.ndarray', read-only)"""
        return trapezoid_weights(self.grid)

    @property
    def trace(self):
        """the quadrature trace ∫K(x, x)dx ('float', read-only)"""
        return float(np.real(trapezoid(np.diag(self.values), self.grid)))

    @property
    def hermiticity_defect(self):
        """max |K(x, y) - conj(K(y, x))| ('float', read-only)"""
        return float(np.max(np.abs(self.values - self.values.conj().T)))

    def row_integrals(self):
        """return ∫K(x, y)dy for every grid point x ('numpy.ndarray')"""
        return self.values @ self.weights

    def at(self, x, y):
        """interpolate the kernel at arbitrary points

        :param x: the first arguments ('numpy.ndarray' or 'float')
        :param y: the second arguments, broadcast against x ('numpy.ndarray' or 'float')
        :return: the interpolated kernel values ('numpy.ndarray')
        """
        x, y = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
        points = np.stack([x.ravel(), y.ravel()], axis=-1)
        real = RegularGridInterpolator((self.grid, self.grid), self.values.real)(points)
        imag = RegularGridInterpolator((self.grid, self.grid), self.values.imag)(points)
        return (real + 1j * imag).reshape(x.shape)


class KernelEstimate:
    """A kernel row K(x, y) at fixed source point y.

    Attributes:
        x ('numpy.ndarray'): the end points
        y ('float'): the source point
        values ('numpy.ndarray'): the complex kernel values
        stderr ('numpy.ndarray'): the standard errors (zero for deterministic methods)
        method ('str'): lattice or monte_carlo
        metadata ('dict'): resolution, paths, seed and surviving mass
    """

    def __init__(self, x, y: float, values, stderr, method: str, metadata: dict):
        self.x = np.asarray(x, dtype=float)
        self.y = float(y)
        self.values = np.asarray(values, dtype=complex)
        self.stderr = np.asarray(stderr, dtype=float)
        self.method = method
        self.metadata = metadata

    def __str__(self):
        return f"{self.method} kernel row at y = {self.y:.6g} ({len(self.x)} end points)"


class PathRules:
    """The classical constraints a path of the Euclidean path sum must obey at the boundary.

    Attributes:
        cbc ('bc_core.ClassicalBC'): where a walker re-emerges (α) and with which reflectivity (ρ)
        flux_phase ('float'): the phase ε collected per winding through the glued endpoints
        site_potential ('tuple'): an optional delta weight (location, strength a) at the glued point
        mode ('str'): the walker rule: reflect, absorb, reflect_absorb, absorb_reflect or wrap
    """

    def __init__(self, cbc: bc.ClassicalBC, flux_phase: float = 0.0, site_potential: tuple = None):
        if cbc.is_rotation:
            raise InvalidParams("Rotations of the boundary do not exist on the interval.")
        rho = cbc.endpoint_rho()
        if any(value != 1.0 and not math.isinf(value) for value in rho):
            raise UnsupportedRho(rho)
        if cbc.alpha == "swap":
            if rho == (1.0, 1.0):
                mode = "wrap"
            elif all(math.isinf(value) for value in rho):
                mode = "absorb"
            else:
                raise UnsupportedRho(rho, "gluing the endpoints needs the same rho at both ends")
        else:
            mode = {(False, False): "reflect", (True, True): "absorb", (False, True): "reflect_absorb",
                    (True, False): "absorb_reflect"}[(math.isinf(rho[0]), math.isinf(rho[1]))]
        if not math.isfinite(flux_phase):
            raise InvalidParams("The flux phase must be finite.")
        if (flux_phase != 0.0 or site_potential is not None) and mode != "wrap":
            raise InvalidParams("Flux phases and site potentials need glued endpoints (alpha = swap, rho = 1).")
        if site_potential is not None:
            location, strength = site_potential
            if location % 1.0 != 0.0:
                raise InvalidParams("The delta site must sit at the glued point x = 0 = 1.")
            if not math.isfinite(strength):
                raise InvalidParams("The delta strength must be finite.")
            site_potential = (0.0, float(strength))
        self.cbc = cbc
        self.flux_phase = float(flux_phase)
        self.site_potential = site_potential
        self.mode = mode

    def __str__(self):
        return f"path rules '{self.mode}' ({self.cbc}, flux {self.flux_phase:.6g}, site {self.site_potential})"

    @property
    def strength(self):
        """the delta strength a, zero without site potential ('float', read-only)"""
        return self.site_potential[1] if self.site_potential else 0.0

    @property
    def image_family(self):
        """the family whose image sum reproduces a step of the walk ('str', read-only)"""
        return {"reflect": "neumann", "absorb": "dirichlet", "reflect_absorb": "neumann_dirichlet",
                "absorb_reflect": "dirichlet_neumann", "wrap": "pseudo_periodic"}[self.mode]

    def kinetic_unitary(self):
        """the boundary condition of the walk without its site potential ('bc_core.BoundaryUnitary')"""
        if self.mode == "wrap":
            return bc.named_family("pseudo_periodic", eps=self.flux_phase)
        return _image_unitary(self.image_family)

    def unitary(self):
        """the continuum boundary condition the path sum converges to ('bc_core.BoundaryUnitary')"""
        if self.site_potential is not None:
            return bc.named_family("delta_circle", a=self.strength, eps=self.flux_phase)
        return self.kinetic_unitary()


def _image_unitary(family: str):
    if family == "dirichlet_neumann":
        return bc.BoundaryUnitary(np.diag([-1.0, 1.0]), label=family)
    if family == "neumann_dirichlet":
        return bc.BoundaryUnitary(np.diag([1.0, -1.0]), label=family)
    return bc.named_family(family)


def rules_for_family(name: str, eps: float = 0.0, a: float = 0.0):
    """return the path rules whose path sum reproduces a named family

    :param name: dirichlet, neumann, periodic, pseudo_periodic or delta_circle ('str')
    :param eps: the flux phase ('float')
    :param a: the delta strength ('float')
    :return: the path rules ('propagator.PathRules')
    """
    # total absorption restricts paths as a Dirichlet condition, total reflection as a Neumann condition
    if name == "dirichlet":
        return PathRules(bc.ClassicalBC("identity", math.inf))
    if name == "neumann":
        return PathRules(bc.ClassicalBC("identity", 1.0))
    if name == "periodic":
        return PathRules(bc.ClassicalBC("swap", 1.0))
    if name == "pseudo_periodic":
        return PathRules(bc.ClassicalBC("swap", 1.0), flux_phase=eps)
    if name == "delta_circle":
        return PathRules(bc.ClassicalBC("swap", 1.0), flux_phase=eps, site_potential=(0.0, a))
    raise UnsupportedFamily(name)


def kappa_bound(u: bc.BoundaryUnitary):
    """return a search bound on κ that covers every negative level E = -κ² of a boundary condition

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :return: twice the strongest binding Robin coefficient plus a margin, capped at the default bound ('float')
    """
    coefficients, _ = bc.robin_coefficients(u)
    finite = coefficients[np.isfinite(coefficients)]
    strongest = max(0.0, float(np.max(finite))) if len(finite) else 0.0
    return min(sp.DEFAULT_KAPPA_MAX, 2.0 * strongest + 10.0)


def spectral_kernel(u: bc.BoundaryUnitary, tau: float, grid_n: int = DEFAULT_GRID_N, n_modes: int = None,
                    kappa_max: float = None):
    """build the heat kernel as the spectral sum Σ e^{-τE_n} ψ_n(x) conj(ψ_n(y))

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param tau: the Euclidean time ('float')
    :param grid_n: the number of grid points ('int')
    :param n_modes: the number of modes to include (counted with multiplicity); all modes up to 40/τ by default
    :param kappa_max: the negative-energy search bound; derived from U by default ('float')
    :return: the kernel ('propagator.HeatKernel')
    """
    if not tau > 0:
        raise InvalidParams(f"Euclidean time tau must be positive, got {tau}.")
    e_required = TAIL_EXPONENT / tau
    problem = sp.SpectralProblem(u, e_required, kappa_max if kappa_max else kappa_bound(u), grid_n)
    solution = sp.eigenvalues(problem)
    energies = solution.expanded_energies()
    modes = np.concatenate([level.eigenfunctions for level in solution], axis=0).T
    e_included = e_required
    if n_modes is not None:
        if n_modes < 1:
            raise InvalidParams(f"n_modes must be positive, got {n_modes}.")
        if n_modes < len(energies):
            raise InsufficientModes(float(energies[n_modes - 1]), e_required)

    values = (modes * np.exp(-tau * energies)) @ modes.conj().T
    tail = 2.0 * math.exp(-tau * e_included) * (1.0 + 1.0 / (2.0 * math.pi * tau * math.sqrt(e_included)))
    metadata = {"modes": int(len(energies)), "e_cut": e_included, "tail_bound": tail}
    logger.info("spectral kernel at tau = %.6g from %d modes (tail bound %.3e)", tau, len(energies), tail)
    return HeatKernel(tau, sp.uniform_grid(grid_n), values, "spectral", metadata)


def required_images(family: str, tau: float):
    """return the smallest number of images per side that leaves a Gaussian tail of at most 1e-14

    :param family: an image family ('str')
    :param tau: the Euclidean time ('float')
    :return: the number of images ('int')
    """
    period = 1.0 if family in ("periodic", "pseudo_periodic") else 2.0
    count = 1
    # omitted shifts start at a distance of count·period - (2 - period) and decay geometrically
    while 8.0 * free_gaussian(count * period - (2.0 - period), tau) > IMAGE_TAIL:
        count += 1
    return count


def image_sum(family: str, x, y, tau: float, n_images: int, eps: float = 0.0, strength: float = 0.0,
              step_time: float = None):
    """evaluate the image sum of a family for broadcastable arrays of points

    :param family: an image family ('str')
    :param x: the end points ('numpy.ndarray')
    :param y: the source points ('numpy.ndarray')
    :param tau: the Euclidean time ('float')
    :param n_images: the number of images per side ('int')
    :param eps: the flux phase of pseudo_periodic ('float')
    :param strength: a delta strength at the integers, weighted by the exact local-time factor ('float')
    :param step_time: the time of the local-time factor, tau by default ('float')
    :return: the kernel values ('numpy.ndarray')
    """
    x = np.asarray(x, dtype=float)[..., None]
    y = np.asarray(y, dtype=float)[..., None]
    shifts = np.arange(-n_images, n_images + 1)
    if family in ("periodic", "pseudo_periodic"):
        terms = free_gaussian(x - y - shifts, tau) * np.exp(1j * eps * shifts)
        if strength:
            terms = terms * local_time_factor(y, x - shifts, strength, step_time if step_time else tau)
        return terms.sum(axis=-1)
    if family not in IMAGE_FAMILIES:
        raise UnsupportedFamily(family)
    direct = free_gaussian(x - y + 2 * shifts, tau)
    mirrored = free_gaussian(x + y + 2 * shifts, tau)
    if family == "dirichlet":
        return (direct - mirrored).sum(axis=-1).astype(complex)
    if family == "neumann":
        return (direct + mirrored).sum(axis=-1).astype(complex)
    signs = np.where(shifts % 2 == 0, 1.0, -1.0)
    if family == "dirichlet_neumann":
        return (signs * (direct - mirrored)).sum(axis=-1).astype(complex)
    return (signs * (direct + mirrored)).sum(axis=-1).astype(complex)


def image_kernel(family: str, tau: float, grid_n: int = DEFAULT_GRID_N, n_images: int = None, eps: float = 0.0):
    """build the heat kernel by the method of images

    :param family: dirichlet, neumann, periodic, pseudo_periodic, dirichlet_neumann or neumann_dirichlet ('str')
    :param tau: the Euclidean time ('float')
    :param grid_n: the number of grid points ('int')
    :param n_images: the number of images per side; chosen for a 1e-14 tail by default ('int')
    :param eps: the flux phase of pseudo_periodic ('float')
    :return: the kernel ('propagator.HeatKernel')
    """
    if family not in IMAGE_FAMILIES:
        raise UnsupportedFamily(family)
    if not tau > 0:
        raise InvalidParams(f"Euclidean time tau must be positive, got {tau}.")
    needed = required_images(family, tau)
    if n_images is None:
        n_images = needed
    elif n_images < needed:
        raise InsufficientImages(n_images, needed)
    grid = sp.uniform_grid(grid_n)
    x, y = np.meshgrid(grid, grid, indexing="ij")
    values = image_sum(family, x, y, tau, n_images, eps if family == "pseudo_periodic" else 0.0)
    return HeatKernel(tau, grid, values, "images", {"images": n_images, "family": family, "eps": eps})


def _lattice_propagator(rules: PathRules, n: int, tau: float, n_steps: int = None):
    """(lattice, T) with T the symmetrized transfer matrix of e^{-τ(H + V)} on the lattice unknowns"""
    lattice = sp.fd_hamiltonian(rules.kinetic_unitary(), n)
    dense = lattice.matrix.toarray()
    potential = np.zeros(dense.shape[0])
    if rules.site_potential is not None:
        # the glued node carries the cell weight h, so the delta becomes a/h on its coordinate
        potential[0] = rules.strength / lattice.spacing
    if not np.any(dense.imag):
        dense = dense.real
    if n_steps is None:
        energies, vectors = eigh(dense + np.diag(potential))
        transfer = (vectors * np.exp(-tau * energies)) @ vectors.conj().T
    else:
        step = tau / n_steps
        energies, vectors = eigh(dense)
        kinetic = (vectors * np.exp(-step * energies)) @ vectors.conj().T
        half = np.exp(-0.5 * step * potential)
        transfer = np.linalg.matrix_power(half[:, None] * kinetic * half[None, :], n_steps)
    return lattice, transfer


def lattice_kernel(rules: PathRules, tau: float, n: int = 401, n_steps: int = None):
    """build the lattice path-sum kernel on the N lattice nodes

    :param rules: the path rules ('propagator.PathRules')
    :param tau: the Euclidean time ('float')
    :param n: the number of lattice nodes ('int')
    :param n_steps: the number of symmetric Trotter slices of the site weight; exact exponential by default ('int')
    :return: the kernel on the lattice nodes ('propagator.HeatKernel')
    """
    if not tau > 0:
        raise InvalidParams(f"Euclidean time tau must be positive, got {tau}.")
    lattice, transfer = _lattice_propagator(rules, n, tau, n_steps)
    values = lattice.nodal @ transfer @ lattice.nodal.conj().T / lattice.spacing
    metadata = {"nodes": n, "steps": n_steps if n_steps else 1, "rules": rules.mode}
    return HeatKernel(tau, lattice.grid, values, "lattice", metadata)


def _check_seed(seed):
    if isinstance(seed, bool) or not isinstance(seed, (int, np.integer)) or seed < 0:
        raise BadSeed(seed)
    return int(seed)


def local_time_factor(start, end, strength: float, step_time: float):
    """return E[exp(-a·ℓ)] for a Brownian bridge of variance 2t from start to end, where ℓ is the time spent at the
    nearest integer (delta site); the exact conditional expectation of the Feynman-Kac weight of one step

    :param start: the start points ('numpy.ndarray')
    :param end: the end points, unwrapped ('numpy.ndarray')
    :param strength: the delta strength a ('float')
    :param step_time: the step time t ('float')
    :return: the weight factors ('numpy.ndarray')
    """
    start, end = np.broadcast_arrays(np.asarray(start, dtype=float), np.asarray(end, dtype=float))
    site = np.rint(0.5 * (start + end))
    spread = (np.abs(start - site) + np.abs(end - site)) / math.sqrt(2.0)
    shift = (end - start) / math.sqrt(2.0)
    rate = strength / math.sqrt(2.0)
    argument = (spread + rate * step_time) / math.sqrt(2.0 * step_time)
    crossing = np.exp(-(spread ** 2 - shift ** 2) / (2.0 * step_time))
    return 1.0 - rate * math.sqrt(0.5 * math.pi * step_time) * erfcx(argument) * crossing


def _advance(rules: PathRules, position, free_end, weight, step_time: float):
    """apply one step of the boundary rules to a batch of walkers"""
    if rules.mode == "reflect":
        folded = np.mod(free_end, 2.0)
        return 1.0 - np.abs(1.0 - folded), weight
    if rules.mode == "wrap":
        winding = np.floor(free_end)
        weight = weight * np.exp(-1j * rules.flux_phase * winding)
        if rules.site_potential is not None:
            weight = weight * local_time_factor(position, free_end, rules.strength, step_time)
        return free_end - winding, weight
    if rules.mode == "absorb":
        inside = (free_end > 0.0) & (free_end < 1.0)
        end = np.clip(free_end, 0.0, 1.0)
        survive = (1.0 - np.exp(-position * end / step_time)) * (1.0 - np.exp(-(1.0 - position) * (1.0 - end) / step_time))
        return end, weight * np.where(inside, survive, 0.0)
    if rules.mode == "reflect_absorb":
        end = np.abs(free_end)
        inside = end < 1.0
        end = np.minimum(end, 1.0)
        survive = 1.0 - np.exp(-(1.0 - position) * (1.0 - end) / step_time)
        return end, weight * np.where(inside, survive, 0.0)
    end = np.where(free_end > 1.0, 2.0 - free_end, free_end)
    inside = end > 0.0
    end = np.maximum(end, 0.0)
    survive = 1.0 - np.exp(-position * end / step_time)
    return end, weight * np.where(inside, survive, 0.0)


def _walk_batch(rules: PathRules, tau: float, x, y: float, n_steps: int, size: int, seed_sequence):
    """run one batch of walkers; returns (Σ f, Σ |f|², Σ |weight|) over the batch for every end point"""
    generator = np.random.Generator(np.random.Philox(seed_sequence))
    step_time = tau / n_steps
    position = np.full(size, y)
    weight = np.ones(size, dtype=complex)
    for _ in range(n_steps - 1):
        free_end = position + generator.normal(0.0, math.sqrt(2.0 * step_time), size)
        position, weight = _advance(rules, position, free_end, weight, step_time)
    family = rules.image_family
    images = required_images(family, step_time)
    # the last step is integrated exactly: the walker lands on x with the one-step image kernel
    density = image_sum(family, x[None, :], position[:, None], step_time, images, rules.flux_phase, rules.strength)
    samples = weight[:, None] * density
    return samples.sum(axis=0), np.square(np.abs(samples)).sum(axis=0), float(np.abs(weight).sum())


def monte_carlo_kernel(rules: PathRules, tau: float, x, y: float, paths: int, seed: int, n_steps: int = MC_STEPS,
                       batch_size: int = MC_BATCH_SIZE):
    """estimate a kernel row K(x, y) by a Gaussian-increment walk that obeys the path rules

    Batches use counter-based generators spawned from the master seed and a fixed partition of the paths, so the
    estimate does not depend on how the batches are scheduled.

    :param rules: the path rules ('propagator.PathRules')
    :param tau: the Euclidean time ('float')
    :param x: the end points ('numpy.ndarray')
    :param y: the source point ('float')
    :param paths: the number of walkers ('int')
    :param seed: the master seed ('int')
    :param n_steps: the number of time steps of every walk ('int')
    :param batch_size: the number of walkers per batch ('int')
    :return: the estimated row with standard errors ('propagator.KernelEstimate')
    """
    seed = _check_seed(seed)
    if paths < 2 or n_steps < 1:
        raise InvalidParams("Monte-Carlo sums need at least two paths and one step.")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    sizes = [batch_size] * (paths // batch_size) + ([paths % batch_size] if paths % batch_size else [])
    sequences = np.random.SeedSequence(seed).spawn(len(sizes))
    with ThreadPoolExecutor(max_workers=config.worker_count()) as pool:
        results = list(pool.map(lambda job: _walk_batch(rules, tau, x, y, n_steps, job[0], job[1]),
                                zip(sizes, sequences)))
    total = sum(result[0] for result in results)
    squares = sum(result[1] for result in results)
    mass = sum(result[2] for result in results) / paths
    mean = total / paths
    variance = np.maximum(squares / paths - np.square(np.abs(mean)), 0.0) * paths / (paths - 1)
    metadata = {"paths": paths, "seed": seed, "steps": n_steps, "batches": len(sizes), "surviving_mass": mass}
    logger.info("monte carlo kernel from %d paths in %d batches (seed %d)", paths, len(sizes), seed)
    return KernelEstimate(x, y, mean, np.sqrt(variance / paths), "monte_carlo", metadata)


def path_kernel(rules: PathRules, tau: float, x, y: float, method: str = "lattice", resolution: int = None,
                paths: int = 100000, seed: int = None, n_steps: int = None):
    """evaluate the path-sum kernel K(x, y) of a set of path rules

    :param rules: the path rules ('propagator.PathRules')
    :param tau: the Euclidean time ('float')
    :param x: the end points ('numpy.ndarray' or 'float')
    :param y: the source point ('float')
    :param method: "lattice" or "monte_carlo" ('str')
    :param resolution: the number of lattice nodes ('int')
    :param paths: the number of Monte-Carlo walkers ('int')
    :param seed: the Monte-Carlo master seed, mandatory for monte_carlo ('int')
    :param n_steps: Trotter slices (lattice) or time steps (monte_carlo) ('int')
    :return: the kernel row ('propagator.KernelEstimate')
    """
    if not tau > 0:
        raise InvalidParams(f"Euclidean time tau must be positive, got {tau}.")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if method == "monte_carlo":
        return monte_carlo_kernel(rules, tau, x, y, paths, seed, n_steps if n_steps else MC_STEPS)
    if method != "lattice":
        raise InvalidParams(f"Path sums are computed by 'lattice' or 'monte_carlo', got '{method}'.")
    n = resolution if resolution else DEFAULT_LATTICE_N
    lattice, transfer = _lattice_propagator(rules, n, tau, n_steps)
    position = y * (n - 1)
    left = min(int(math.floor(position)), n - 2)
    fraction = position - left
    columns = lattice.nodal @ transfer @ lattice.nodal[[left, left + 1]].conj().T / lattice.spacing
    row = (1.0 - fraction) * columns[:, 0] + fraction * columns[:, 1]
    values = np.interp(x, lattice.grid, row.real) + 1j * np.interp(x, lattice.grid, row.imag)
    metadata = {"nodes": n, "steps": n_steps if n_steps else 1, "rules": rules.mode}
    return KernelEstimate(x, y, values, np.zeros(len(x)), "lattice", metadata)


def _check_grids(first: HeatKernel, second: HeatKernel):
    if len(first.grid) != len(second.grid) or not np.allclose(first.grid, second.grid, rtol=0.0, atol=1e-14):
        raise GridMismatch(f"Kernels live on different grids ({len(first.grid)} and {len(second.grid)} points).")


def kernel_distance(first: HeatKernel, second: HeatKernel):
    """measure the distance of two kernels on the same grid at the same time

    :param first: a kernel ('propagator.HeatKernel')
    :param second: another kernel ('propagator.HeatKernel')
    :return: the quadrature L² distance and the sup distance ('tuple')
    """
    _check_grids(first, second)
    if abs(first.tau - second.tau) > 1e-12 * max(first.tau, second.tau):
        raise GridMismatch(f"Kernels belong to different times ({first.tau:.12g} and {second.tau:.12g}).")
    difference = np.abs(first.values - second.values)
    weights = first.weights
    l2 = math.sqrt(float(weights @ np.square(difference) @ weights))
    return l2, float(difference.max())


def compose(first: HeatKernel, second: HeatKernel):
    """compose two kernels by quadrature, K(x, z) = ∫K₁(x, y)K₂(y, z)dy

    :param first: the kernel at τ₁ ('propagator.HeatKernel')
    :param second: the kernel at τ₂ ('propagator.HeatKernel')
    :return: the kernel at τ₁ + τ₂ ('propagator.HeatKernel')
    """
    _check_grids(first, second)
    values = (first.values * first.weights) @ second.values
    return HeatKernel(first.tau + second.tau, first.grid, values, "composed",
                      {"from": [first.method, second.method]})


class RepresentabilityReport:
    """The closest path-representable kernel to the kernel of a boundary condition.

    Attributes:
        best_family ('str'): the family of the closest kernel
        best_params ('dict'): its parameters
        residual_L2 ('float'): the quadrature L² kernel distance
        residual_sup ('float'): the sup kernel distance
        manifold_distance ('float'): the Frobenius distance of U to M0 ∪ M1 ∪ pseudo_periodic
        manifold_point ('dict'): the closest point of that set
        budget ('dict'): the search budget
        seed ('int'): the seed recorded with the report
        tau ('float'): the Euclidean time
        candidates ('int'): the number of kernels compared
    """

    def __init__(self, best_family, best_params, residual_l2, residual_sup, manifold_distance, manifold_point,
                 budget, seed, tau, candidates):
        self.best_family = best_family
        self.best_params = best_params
        self.residual_L2 = residual_l2
        self.residual_sup = residual_sup
        self.manifold_distance = manifold_distance
        self.manifold_point = manifold_point
        self.budget = budget
        self.seed = seed
        self.tau = tau
        self.candidates = candidates

    def __str__(self):
        return (f"closest path-representable family {self.best_family} {self.best_params}: "
                f"residual L2 {self.residual_L2:.3e}, sup {self.residual_sup:.3e}")

    def to_dict(self):
        """return the report as a JSON-compatible record ('dict')"""
        return {"best_family": self.best_family, "best_params": self.best_params, "residual_L2": self.residual_L2,
                "residual_sup": self.residual_sup, "manifold_distance": self.manifold_distance,
                "manifold_point": self.manifold_point, "budget": self.budget, "seed": self.seed, "tau": self.tau,
                "candidates": self.candidates}


class _Channel:
    """one family of candidate kernels with its search coordinates"""

    def __init__(self, name, grid, bounds, step, build):
        self.name = name
        self.grid = grid
        self.bounds = bounds
        self.step = step
        self.build = build


def _strength(phi):
    return 2.0 * math.tan(phi)


def _channels(tau: float, grid_n: int, budget: dict, delta_channel: bool):
    theta = np.linspace(bc.THETA_LOWER, bc.THETA_UPPER, budget["rho"], endpoint=False)
    eps = np.linspace(0.0, 2.0 * math.pi, budget["eps"], endpoint=False)
    phi = np.linspace(-0.5 * math.pi, 0.5 * math.pi, budget["a"] + 2)[1:-1]
    robin_bounds = [(bc.THETA_LOWER, bc.THETA_UPPER)] * 2

    def robin(branch):
        def build(coordinates):
            rho = bc.theta_to_rho(coordinates)
            u = bc.classical_to_quantum(bc.RepresentableFamily(branch, tuple(rho)))
            return spectral_kernel(u, tau, grid_n), u
        return build

    def pseudo(coordinates):
        return image_kernel("pseudo_periodic", tau, grid_n, eps=coordinates[0]), \
            bc.named_family("pseudo_periodic", eps=coordinates[0])

    def delta(coordinates):
        u = bc.named_family("delta_circle", a=_strength(coordinates[0]))
        return spectral_kernel(u, tau, grid_n), u

    channels = [_Channel("pseudo_periodic", [[value] for value in eps], [(-math.inf, math.inf)],
                         2.0 * math.pi / budget["eps"], pseudo)]
    if delta_channel:
        channels.append(_Channel("delta_circle", [[value] for value in phi], [(-0.5 * math.pi, 0.5 * math.pi)],
                                 math.pi / (budget["a"] + 1), delta))
    grid = [[first, second] for first in theta for second in theta]
    channels.append(_Channel("robin_m0", grid, robin_bounds, (bc.THETA_UPPER - bc.THETA_LOWER) / budget["rho"],
                             robin("M0")))
    channels.append(_Channel("robin_m1", grid, robin_bounds, (bc.THETA_UPPER - bc.THETA_LOWER) / budget["rho"],
                             robin("M1")))
    return channels


def _channel_params(name: str, coordinates):
    if name == "pseudo_periodic":
        return {"eps": float(coordinates[0] % (2.0 * math.pi))}
    if name == "delta_circle":
        return {"a": _strength(coordinates[0])}
    rho = bc.theta_to_rho(coordinates)
    return {"rho0": bc._json_rho(float(rho[0])), "rho1": bc._json_rho(float(rho[1]))}


def _canonical_name(u: bc.BoundaryUnitary):
    for name in ("dirichlet", "neumann", "periodic"):
        if np.linalg.norm(u.entries - bc.named_family(name).entries) <= CANONICAL_TOLERANCE:
            return name
    return None


def representability_report(u: bc.BoundaryUnitary, tau: float, budget: dict = None, grid_n: int = REPORT_GRID_N,
                            seed: int = 0, delta_channel: bool = True):
    """search the path-representable kernels for the one closest to the kernel of a boundary condition

    The candidates are the image kernels of Dirichlet, Neumann and periodic conditions, the image kernels of the
    flux family pseudo_periodic(ε), the delta-weighted wrap kernels delta_circle(a) and the spectral kernels of the
    Robin families M0 and M1. Every channel is scanned on a grid and its best point refined by coordinate descent.

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param tau: the Euclidean time ('float')
    :param budget: grid sizes "eps", "a", "rho" and refinement evaluations "refine" ('dict')
    :param grid_n: the number of kernel grid points ('int')
    :param seed: the seed recorded in the report ('int')
    :param delta_channel: whether delta-weighted wrap kernels are candidates ('bool')
    :return: the report ('propagator.RepresentabilityReport')
    """
    budget = dict(DEFAULT_BUDGET, **(budget if budget else {}))
    target = spectral_kernel(u, tau, grid_n)
    evaluated = 0

    def distance(kernel):
        return kernel_distance(target, kernel)[0]

    best = None
    for name in ("dirichlet", "neumann", "periodic"):
        kernel = image_kernel(name, tau, grid_n)
        evaluated += 1
        value = distance(kernel)
        if best is None or value < best[0]:
            best = (value, name, {}, kernel)

    for channel in _channels(tau, grid_n, budget, delta_channel):
        def objective(coordinates, channel=channel):
            try:
                return distance(channel.build(coordinates)[0])
            except BCSpecError as error:
                logger.debug("candidate %s %s skipped: %s", channel.name, coordinates, error)
                return math.inf

        with ThreadPoolExecutor(max_workers=config.worker_count()) as pool:
            scanned = list(pool.map(objective, channel.grid))
        evaluated += len(scanned)
        start = channel.grid[int(np.argmin(scanned))]
        value, coordinates = bc.coordinate_descent(objective, start, channel.bounds, channel.step, budget["refine"])
        evaluated += budget["refine"]
        logger.debug("channel %s: grid %.3e, refined %.3e", channel.name, min(scanned), value)
        if value < best[0]:
            kernel, unitary = channel.build(coordinates)
            canonical = _canonical_name(unitary)
            name, params = (canonical, {}) if canonical else (channel.name, _channel_params(channel.name, coordinates))
            best = (value, name, params, kernel)

    residual_l2, residual_sup = kernel_distance(target, best[3])
    manifold, point = bc.manifold_distance(u)
    report = RepresentabilityReport(best[1], best[2], residual_l2, residual_sup, manifold, point.to_dict(), budget,
                                    seed, tau, evaluated)
    logger.info("%s", report)
    return report


class RealTimeKernel:
    """The truncated real-time propagator Σ e^{-iE_n t} ψ_n(x) conj(ψ_n(y)).

    Attributes:
        t ('float'): the time
        grid ('numpy.ndarray'): the sample points
        values ('numpy.ndarray'): the complex kernel matrix
        metadata ('dict'): the number of modes and the energy cut
    """

    def __init__(self, t: float, grid, values, metadata: dict):
        self.t = t
        self.grid = grid
        self.values = values
        self.metadata = metadata

    def apply(self, psi):
        """propagate a sampled wave function by quadrature ('numpy.ndarray')"""
        return self.values @ (trapezoid_weights(self.grid) * psi)


def _modes(u: bc.BoundaryUnitary, e_cut: float, grid_n: int):
    solution = sp.eigenvalues(sp.SpectralProblem(u, e_cut, kappa_bound(u), grid_n))
    modes = np.concatenate([level.eigenfunctions for level in solution], axis=0).T
    return solution.expanded_energies(), modes, solution.grid


def realtime_kernel(u: bc.BoundaryUnitary, t: float, grid_n: int = DEFAULT_GRID_N, e_cut: float = 1e4):
    """build the real-time propagator as the analytic continuation τ → it of the spectral sum, truncated at e_cut

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param t: the time ('float')
    :param grid_n: the number of grid points ('int')
    :param e_cut: the largest included energy ('float')
    :return: the truncated propagator ('propagator.RealTimeKernel')
    """
    energies, modes, grid = _modes(u, e_cut, grid_n)
    values = (modes * np.exp(-1j * t * energies)) @ modes.conj().T
    return RealTimeKernel(t, grid, values, {"modes": int(len(energies)), "e_cut": e_cut})


class PacketEvolution:
    """A Gaussian wave packet evolved in real time.

    Attributes:
        grid ('numpy.ndarray'): the sample points
        initial ('numpy.ndarray'): the normalized packet at t = 0
        final ('numpy.ndarray'): the packet at time t
        norm ('float'): the norm of the evolved packet (1 up to truncation)
        left ('float'): the probability in [0, 1/2]
        right ('float'): the probability in [1/2, 1]
    """

    def __init__(self, grid, initial, final):
        self.grid = grid
        self.initial = initial
        self.final = final
        density = np.square(np.abs(final))
        half = grid <= 0.5
        self.norm = float(trapezoid(density, grid))
        self.left = float(trapezoid(density[half], grid[half]))
        self.right = float(trapezoid(density[grid >= 0.5], grid[grid >= 0.5]))


def evolve_packet(u: bc.BoundaryUnitary, x0: float, width: float, k0: float, t: float, grid_n: int = None,
                  e_cut: float = None):
    """evolve the Gaussian packet e^{-(x-x0)²/4w² + ik0x} by the spectral expansion

    A packet that travels through the boundary either re-enters at the opposite end (glued boundaries), is
    reflected, or splits into both, e.g. at a delta on the circle with transmission 4k²/(4k² + a²).

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param x0: the initial centre ('float')
    :param width: the initial width w ('float')
    :param k0: the mean momentum ('float')
    :param t: the time ('float')
    :param grid_n: the number of grid points; derived from the energy cut by default ('int')
    :param e_cut: the largest included energy; ten momentum widths above k0 by default ('float')
    :return: the evolved packet ('propagator.PacketEvolution')
    """
    if not width > 0:
        raise InvalidParams(f"The packet width must be positive, got {width}.")
    if e_cut is None:
        e_cut = (abs(k0) + 10.0 / (2.0 * width)) ** 2
    if grid_n is None:
        grid_n = max(801, int(8 * math.sqrt(e_cut)))
    energies, modes, grid = _modes(u, e_cut, grid_n)
    packet = np.exp(-np.square(grid - x0) / (4.0 * width ** 2) + 1j * k0 * grid)
    packet = packet / math.sqrt(trapezoid(np.square(np.abs(packet)), grid))
    weights = trapezoid_weights(grid)
    coefficients = modes.conj().T @ (weights * packet)
    final = modes @ (np.exp(-1j * t * energies) * coefficients)
    return PacketEvolution(grid, packet, final)
