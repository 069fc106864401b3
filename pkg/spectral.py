"""This module contains the exact spectrum of H = -d²/dx² on [0, 1] under an arbitrary boundary unitary.

Eigenvalues are roots of the secular determinant of the boundary condition applied to the two-dimensional
solution space of -ψ'' = z²ψ. Real energies E = k² are searched along real k, negative energies E = -κ² along the
imaginary axis z = iκ.

The most important functionalities include functions to
    - evaluate the secular determinant D(z) and its 2x2 matrix
    - find all levels in an energy window with their multiplicities and normalized eigenfunctions
    - assemble the finite-difference Hamiltonian that serves as an independent cross-check
    - scan the edge states of the rotated boundary conditions U·e^{it}
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import sparse
from scipy.linalg import cholesky, eigh, solve_triangular
from scipy.optimize import brentq, minimize_scalar

import analyze as ana
import bc_core as bc
import config
from exceptions import InvalidParams, NonHermitianAssembly, NoMinusOneEigenvalue, NotAnEigenvalue, \
    SearchBudgetExceeded

logger = logging.getLogger(__name__)

K_STEP = math.pi / 8
K_FLOOR = 1e-7
KAPPA_SWITCH = 1.0  # above this the decaying basis {e^{-κx}, e^{κ(x-1)}} replaces {cosh, sinh}
ROOT_XTOL = 1e-14
TANGENT_TOL = 1e-9
MULTIPLICITY_TOL = 1e-8
EIGEN_TOL = 1e-6
MERGE_TOL = 1e-9
HERMITICITY_TOL = 1e-8
MAX_NEGATIVE_LEVELS = 2
CHUNK_SIZE = 512
DEFAULT_KAPPA_MAX = 1e3
DEFAULT_GRID_N = 201
DEFAULT_MAX_EVALUATIONS = 2_000_000
GAUSS_NODES, GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(32)
PANEL_SCALE = 8.0  # at most this much of k or κ per Gauss panel


def uniform_grid(grid_n: int):
    """return the uniform grid of grid_n points on [0, 1] ('numpy.ndarray')"""
    return np.linspace(0.0, 1.0, grid_n)


def gauss_rule(frequency: float):
    """return a composite Gauss-Legendre rule on [0, 1] that integrates products of eigenfunctions with k or κ up to
    the given frequency to rounding accuracy

    :param frequency: the largest k or κ involved ('float')
    :return: the nodes and the weights ('tuple' of 'numpy.ndarray')
    """
    panels = 1 + int(math.ceil(abs(frequency) / PANEL_SCALE))
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    nodes = edges[:-1, None] + half * (GAUSS_NODES + 1.0)
    return nodes.ravel(), (half * GAUSS_WEIGHTS).ravel()


class SpectralProblem:
    """A spectral problem: the boundary condition with the search window and the eigenfunction resolution.

    Attributes:
        U ('bc_core.BoundaryUnitary'): the boundary condition
        search_E_max ('float'): the upper end of the energy window
        search_kappa_max ('float'): the negative-energy window reaches down to -search_kappa_max²
        grid_n ('int'): the number of grid points on which eigenfunctions are sampled
        max_evaluations ('int'): the number of secular evaluations the search may spend
    """

    def __init__(self, U: bc.BoundaryUnitary, search_E_max: float, search_kappa_max: float = DEFAULT_KAPPA_MAX,
                 grid_n: int = DEFAULT_GRID_N, max_evaluations: int = DEFAULT_MAX_EVALUATIONS):
        if not search_E_max > 0:
            raise InvalidParams(f"search_E_max must be positive, got {search_E_max}.")
        if not search_kappa_max > 0:
            raise InvalidParams(f"search_kappa_max must be positive, got {search_kappa_max}.")
        if int(grid_n) != grid_n or grid_n < 16:
            raise InvalidParams(f"grid_n must be an integer >= 16, got {grid_n}.")
        if max_evaluations < 1:
            raise InvalidParams(f"max_evaluations must be positive, got {max_evaluations}.")
        self.U = U
        self.search_E_max = float(search_E_max)
        self.search_kappa_max = float(search_kappa_max)
        self.grid_n = int(grid_n)
        self.max_evaluations = int(max_evaluations)

    def __str__(self):
        return (f"spectral problem for {self.U} on E in [{-self.search_kappa_max ** 2:.6g}, "
                f"{self.search_E_max:.6g}]")


class Level:
    """One energy level with its eigenfunctions.

    Attributes:
        energy ('float'): the eigenvalue E
        multiplicity ('int'): 1 or 2
        eigenfunctions ('numpy.ndarray'): array of shape (multiplicity, grid_n), L²-normalized and orthonormal
        boundary_data ('tuple'): the 'bc_core.BoundaryData' of each eigenfunction
        coefficients ('numpy.ndarray'): the eigenfunctions in the basis of the secular matrix, shape (2, multiplicity)
    """

    def __init__(self, energy: float, multiplicity: int, eigenfunctions, boundary_data, coefficients=None):
        self.energy = float(energy)
        self.multiplicity = int(multiplicity)
        self.eigenfunctions = eigenfunctions
        self.boundary_data = tuple(boundary_data)
        self.coefficients = coefficients

    def __str__(self):
        return f"E = {self.energy:.12g} (multiplicity {self.multiplicity})"

    def evaluate(self, x):
        """sample the eigenfunctions at arbitrary points of [0, 1]

        :param x: the points ('numpy.ndarray')
        :return: array of shape (multiplicity, len(x)) ('numpy.ndarray')
        """
        value, axis = _energy_axis(self.energy)
        return self.coefficients.T @ _basis_samples(value, axis, np.asarray(x, dtype=float))


class EigenSolution:
    """The sorted levels of a spectral problem.

    Attributes:
        levels ('list'): the 'spectral.Level' records in strictly increasing order of energy
        grid ('numpy.ndarray'): the grid the eigenfunctions are sampled on
    """

    def __init__(self, levels: list, grid):
        self.levels = levels
        self.grid = grid

    def __len__(self):
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)

    def __getitem__(self, index):
        return self.levels[index]

    @property
    def energies(self):
        """the energies of all levels ('numpy.ndarray', read-only)"""
        return np.array([level.energy for level in self.levels])

    @property
    def multiplicities(self):
        """the multiplicities of all levels ('list', read-only)"""
        return [level.multiplicity for level in self.levels]

    def expanded_energies(self):
        """return the energies repeated according to their multiplicity ('numpy.ndarray')"""
        return np.repeat(self.energies, self.multiplicities)

    def first(self, count: int):
        """return the solution restricted to its lowest levels

        :param count: the number of levels to keep ('int')
        :return: the truncated solution ('spectral.EigenSolution')
        """
        return EigenSolution(self.levels[:count], self.grid)


class _BudgetExhausted(Exception):
    def __init__(self, found, unswept):
        super().__init__("secular evaluation budget exhausted")
        self.found = found
        self.unswept = unswept


class _EvaluationBudget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, count: int):
        self.used += count
        return self.used <= self.limit


def _trig_matrices(z):
    """boundary-value matrices of the basis {cos(zx), sin(zx)/z}, rows = endpoints, columns = basis functions"""
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-8
    safe = np.where(small, 1.0, z)
    sin_over_z = np.where(small, 1.0 - z ** 2 / 6.0, np.sin(safe) / safe)
    z_sin = np.where(small, z ** 2, safe * np.sin(safe))
    cos_z = np.cos(z)
    phi = np.zeros(z.shape + (2, 2), dtype=complex)
    phidot = np.zeros(z.shape + (2, 2), dtype=complex)
    phi[..., 0, 0] = 1.0
    phi[..., 1, 0] = cos_z
    phi[..., 1, 1] = sin_over_z
    phidot[..., 0, 1] = -1.0
    phidot[..., 1, 0] = -z_sin
    phidot[..., 1, 1] = cos_z
    return phi, phidot


def _decay_matrices(kappa):
    """boundary-value matrices of the basis {e^{-κx}, e^{κ(x-1)}}"""
    kappa = np.asarray(kappa, dtype=float)
    tail = np.exp(-kappa)
    phi = np.zeros(kappa.shape + (2, 2), dtype=complex)
    phidot = np.zeros(kappa.shape + (2, 2), dtype=complex)
    phi[..., 0, 0] = 1.0
    phi[..., 0, 1] = tail
    phi[..., 1, 0] = tail
    phi[..., 1, 1] = 1.0
    phidot[..., 0, 0] = kappa
    phidot[..., 0, 1] = -kappa * tail
    phidot[..., 1, 0] = -kappa * tail
    phidot[..., 1, 1] = kappa
    return phi, phidot


def _axis_matrices(values, axis: str):
    """boundary-value matrices along the real k axis or the imaginary κ axis"""
    values = np.atleast_1d(np.asarray(values, dtype=float))
    if axis == "real":
        return _trig_matrices(values)
    phi = np.empty(values.shape + (2, 2), dtype=complex)
    phidot = np.empty(values.shape + (2, 2), dtype=complex)
    near = values <= KAPPA_SWITCH
    phi[near], phidot[near] = _trig_matrices(1j * values[near])
    phi[~near], phidot[~near] = _decay_matrices(values[~near])
    return phi, phidot


def _basis_samples(value: float, axis: str, x):
    """the two basis solutions matching _axis_matrices, sampled on x; shape (2, len(x))"""
    if axis == "imag" and value > KAPPA_SWITCH:
        return np.array([np.exp(-value * x), np.exp(value * (x - 1.0))], dtype=complex)
    z = complex(value) if axis == "real" else 1j * value
    if abs(z) < 1e-8:
        return np.array([np.ones_like(x), x], dtype=complex)
    return np.array([np.cos(z * x), np.sin(z * x) / z], dtype=complex)


def _secular_parts(u_entries, phi, phidot):
    identity = np.eye(2)
    matrix = (identity - u_entries) @ phi - 1j * (identity + u_entries) @ phidot
    return matrix, phi + 1j * phidot


def secular_matrix(u: bc.BoundaryUnitary, z: complex):
    """return the 2x2 secular matrix (I - U)Φ(z) - i(I + U)Φ̇(z) in the basis {cos(zx), sin(zx)/z}

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param z: the spectral parameter, E = z² ('complex')
    :return: the secular matrix ('numpy.ndarray')
    """
    phi, phidot = _trig_matrices(np.array([z]))
    return _secular_parts(u.entries, phi, phidot)[0][0]


def secular_value(u: bc.BoundaryUnitary, z: complex):
    """evaluate the secular determinant D(z); E = z² is an eigenvalue iff D(z) = 0

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param z: the spectral parameter ('complex')
    :return: D(z) ('complex')
    """
    return complex(np.linalg.det(secular_matrix(u, z)))


def _reduced_secular(u_entries, root_det, values, axis):
    """D / (√det U · |det P|): real on both axes, bounded by 4, continuous across the basis switch"""
    phi, phidot = _axis_matrices(values, axis)
    matrix, boundary_map = _secular_parts(u_entries, phi, phidot)
    return np.real(np.linalg.det(matrix) / (root_det * np.abs(np.linalg.det(boundary_map))))


def _scattering_matrix(u_entries, value, axis):
    """(S, N) with S = (Φ - iΦ̇)(Φ + iΦ̇)⁻¹ unitary and N = S - U the normalized secular matrix"""
    phi, phidot = _axis_matrices([value], axis)
    phi, phidot = phi[0], phidot[0]
    scattering = np.linalg.solve((phi + 1j * phidot).T, (phi - 1j * phidot).T).T
    return scattering, scattering - u_entries


def _singular_values(u_entries, value, axis):
    return np.linalg.svd(_scattering_matrix(u_entries, value, axis)[1], compute_uv=False)


def _classify_root(u_entries, value, axis):
    """multiplicity of a root candidate, 0 if the secular matrix is not singular there"""
    largest, smallest = _singular_values(u_entries, value, axis)
    if largest <= MULTIPLICITY_TOL:
        return 2
    return 1 if smallest <= EIGEN_TOL else 0


def _tangential_root(u_entries, guess, low, high, axis):
    """polish a touching root where both eigenphases of U†S cross zero together"""
    def phase_sum(value):
        scattering = _scattering_matrix(u_entries, value, axis)[0]
        return float(np.imag(np.trace(u_entries.conj().T @ scattering)))

    width = 1e-6 * max(1.0, abs(guess))
    left, right = max(low, guess - width), min(high, guess + width)
    if left < right and phase_sum(left) * phase_sum(right) < 0:
        return brentq(phase_sum, left, right, xtol=ROOT_XTOL)
    return guess


def _axis_roots(u: bc.BoundaryUnitary, low: float, high: float, axis: str, budget: _EvaluationBudget):
    """all roots of the reduced secular function with parameter in [low, high] on one axis

    :return: a sorted list of (parameter, multiplicity) pairs
    """
    u_entries = u.entries
    root_det = np.sqrt(u.determinant)
    count = max(2, int(math.ceil((high - low) / K_STEP)) + 1)
    grid = np.linspace(low, high, count)

    values = []
    exhausted = False
    for start in range(0, count, CHUNK_SIZE):
        chunk = grid[start:start + CHUNK_SIZE]
        values.append(_reduced_secular(u_entries, root_det, chunk, axis))
        if not budget.spend(len(chunk)):
            exhausted = start + CHUNK_SIZE < count
            break
    values = np.concatenate(values)
    grid = grid[:len(values)]

    def reduced(value):
        budget.spend(1)
        return float(_reduced_secular(u_entries, root_det, [value], axis)[0])

    candidates = []
    for index in range(len(grid) - 1):
        if values[index] == 0.0:
            candidates.append(grid[index])
        elif values[index] * values[index + 1] < 0:
            candidates.append(brentq(reduced, grid[index], grid[index + 1], xtol=ROOT_XTOL))

    roots = [(value, _classify_root(u_entries, value, axis)) for value in candidates]
    magnitude = np.abs(values)
    for index in range(1, len(grid) - 1):
        neighbours = max(magnitude[index - 1], magnitude[index + 1])
        if values[index] == 0.0 or magnitude[index] > min(magnitude[index - 1], magnitude[index + 1]) \
                or magnitude[index] >= 0.5 * neighbours:
            continue
        low_end = grid[index - 1] if values[index - 1] * values[index] > 0 else grid[index]
        high_end = grid[index + 1] if values[index] * values[index + 1] > 0 else grid[index]
        if low_end == high_end:
            continue
        sign = math.copysign(1.0, values[index])
        trough = minimize_scalar(lambda value: sign * reduced(value), bounds=(low_end, high_end), method="bounded",
                                 options={"xatol": 1e-12})
        if trough.fun < 0:
            # a close pair inside one scan cell
            roots.append((brentq(reduced, low_end, trough.x, xtol=ROOT_XTOL), 1))
            roots.append((brentq(reduced, trough.x, high_end, xtol=ROOT_XTOL), 1))
        elif trough.fun <= TANGENT_TOL:
            value = _tangential_root(u_entries, trough.x, low_end, high_end, axis)
            multiplicity = _classify_root(u_entries, value, axis)
            if multiplicity:
                logger.debug("tangential root at %s = %.15g (multiplicity %d)", axis, value, multiplicity)
                roots.append((value, multiplicity))

    roots = _merge_roots([root for root in roots if root[1] > 0])
    if exhausted:
        raise _BudgetExhausted(roots, float(grid[-1]))
    return roots


def _merge_roots(roots):
    merged = []
    for value, multiplicity in sorted(roots):
        if merged and abs(value - merged[-1][0]) <= MERGE_TOL * max(1.0, abs(value)):
            merged[-1] = (merged[-1][0], max(merged[-1][1], multiplicity))
        else:
            merged.append((value, multiplicity))
    return merged


def _negative_roots(u: bc.BoundaryUnitary, kappa_max: float, budget: _EvaluationBudget):
    """negative levels as (E, multiplicity), at most two counted with multiplicity"""
    roots = _axis_roots(u, K_FLOOR, kappa_max, "imag", budget)
    levels = [(-kappa ** 2, multiplicity) for kappa, multiplicity in reversed(roots)]
    kept, total = [], 0
    for energy, multiplicity in levels:
        if total + multiplicity > MAX_NEGATIVE_LEVELS:
            logger.warning("discarding negative root E = %.12g beyond the two allowed edge levels", energy)
            continue
        kept.append((energy, multiplicity))
        total += multiplicity
    return kept


def _zero_root(u: bc.BoundaryUnitary):
    multiplicity = _classify_root(u.entries, 0.0, "real")
    return [(0.0, multiplicity)] if multiplicity else []


def _energy_axis(energy: float):
    if energy >= 0:
        return math.sqrt(energy), "real"
    return math.sqrt(-energy), "imag"


def _level_functions(u: bc.BoundaryUnitary, energy: float, x, multiplicity: int = None):
    """normalized eigenfunctions of one level and their boundary data"""
    value, axis = _energy_axis(energy)
    largest, smallest = _singular_values(u.entries, value, axis)
    if smallest > EIGEN_TOL:
        raise NotAnEigenvalue(energy, float(smallest))
    if multiplicity is None:
        multiplicity = 2 if largest <= MULTIPLICITY_TOL else 1

    phi, phidot = _axis_matrices([value], axis)
    phi, phidot = phi[0], phidot[0]
    if multiplicity == 2:
        coefficients = np.eye(2, dtype=complex)
    else:
        matrix = _secular_parts(u.entries, phi, phidot)[0]
        coefficients = np.linalg.svd(matrix)[2][-1].conj().reshape(2, 1)

    nodes, weights = gauss_rule(value)
    basis = _basis_samples(value, axis, nodes)
    gram = coefficients.conj().T @ ((basis.conj() * weights) @ basis.T) @ coefficients
    samples = coefficients.T @ _basis_samples(value, axis, x)
    upper = cholesky(0.5 * (gram + gram.conj().T), lower=False)
    inverse = solve_triangular(upper, np.eye(multiplicity, dtype=complex), lower=False)
    coefficients = coefficients @ inverse
    samples = inverse.T @ samples

    for index in range(multiplicity):
        peak = samples[index, np.argmax(np.abs(samples[index]))]
        phase = peak / abs(peak)
        samples[index] /= phase
        coefficients[:, index] /= phase

    data = [bc.BoundaryData(phi @ coefficients[:, index], phidot @ coefficients[:, index])
            for index in range(multiplicity)]
    return samples, data, coefficients


def eigenfunction(u: bc.BoundaryUnitary, energy: float, grid_n: int = DEFAULT_GRID_N):
    """return the normalized eigenfunction(s) of an eigenvalue, sampled on the uniform grid

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param energy: the eigenvalue ('float')
    :param grid_n: the number of grid points ('int')
    :return: array of shape (multiplicity, grid_n); a degenerate level gives an orthonormal pair ('numpy.ndarray')
    """
    return _level_functions(u, energy, uniform_grid(grid_n))[0]


def _build_levels(u: bc.BoundaryUnitary, roots, x):
    levels = []
    for energy, multiplicity in sorted(roots):
        samples, data, coefficients = _level_functions(u, energy, x, multiplicity)
        levels.append(Level(energy, multiplicity, samples, data, coefficients))
    return levels


def eigenvalues(problem: SpectralProblem):
    """find all levels of a spectral problem with energies in [-search_kappa_max², search_E_max]

    :param problem: the spectral problem ('spectral.SpectralProblem')
    :return: the sorted levels with their eigenfunctions ('spectral.EigenSolution')
    """
    u = problem.U
    budget = _EvaluationBudget(problem.max_evaluations)
    x = uniform_grid(problem.grid_n)
    roots = []
    axis = "imag"
    try:
        roots.extend(_negative_roots(u, problem.search_kappa_max, budget))
        roots.extend(_zero_root(u))
        axis = "real"
        positive = _axis_roots(u, K_FLOOR, math.sqrt(problem.search_E_max), "real", budget)
        roots.extend((k ** 2, multiplicity) for k, multiplicity in positive if k ** 2 <= problem.search_E_max)
    except _BudgetExhausted as exhausted:
        if axis == "real":
            partial = roots + [(k ** 2, multiplicity) for k, multiplicity in exhausted.found]
            unswept = (exhausted.unswept ** 2, problem.search_E_max)
        else:
            partial = [(-kappa ** 2, multiplicity) for kappa, multiplicity in exhausted.found]
            unswept = (-problem.search_kappa_max ** 2, -exhausted.unswept ** 2)
        logger.warning("secular budget of %d evaluations exhausted", problem.max_evaluations)
        raise SearchBudgetExceeded(_build_levels(u, _dedupe_zero(partial), x), unswept)

    solution = EigenSolution(_build_levels(u, _dedupe_zero(roots), x), x)
    logger.info("found %d level(s) in [%.6g, %.6g] using %d secular evaluations", len(solution),
                -problem.search_kappa_max ** 2, problem.search_E_max, budget.used)
    return solution


def _dedupe_zero(roots):
    """drop roots that collapse onto the separately detected E = 0 level"""
    if not any(energy == 0.0 for energy, _ in roots):
        return roots
    return [(energy, multiplicity) for energy, multiplicity in roots if energy == 0.0 or abs(energy) > 1e-12]


def weyl_count(solution: EigenSolution, energy: float):
    """count the levels (with multiplicity) up to an energy

    :param solution: the levels ('spectral.EigenSolution')
    :param energy: the counting energy ('float')
    :return: the number of levels with E <= energy ('int')
    """
    return int(sum(level.multiplicity for level in solution if level.energy <= energy))


def stokes_defect(first: Level, second: Level):
    """return the largest boundary form between the eigenfunctions of two levels; zero for a self-adjoint domain

    :param first: a level ('spectral.Level')
    :param second: another level of the same boundary condition ('spectral.Level')
    :return: max |i·Σ[conj(φ̇₁)φ₂ - conj(φ₁)φ̇₂]| ('float')
    """
    return max(abs(bc.boundary_form(a, b)) for a in first.boundary_data for b in second.boundary_data)


class LatticeHamiltonian:
    """The finite-difference Hamiltonian with the boundary condition eliminated from the ghost nodes.

    The unknowns are the boundary coordinates c = Q†φ along the non-Dirichlet eigen-directions Q of U followed by
    the interior nodal values. With the weights W = diag(1/2 per boundary coordinate, 1 per interior node) the
    matrix W^{1/2} H W^{-1/2} is Hermitian.

    Attributes:
        matrix ('scipy.sparse.csr_matrix'): the symmetrized Hermitian matrix W^{1/2} H W^{-1/2}
        nodal ('numpy.ndarray'): maps a symmetrized vector to the N nodal values, shape (N, unknowns)
        grid ('numpy.ndarray'): the N nodes x_j = j/(N - 1)
        defect ('float'): the relative Hermiticity defect before symmetrization
        boundary_vectors ('numpy.ndarray'): the non-Dirichlet eigen-directions Q of U
    """

    def __init__(self, matrix, nodal, grid, defect, boundary_vectors):
        self.matrix = matrix
        self.nodal = nodal
        self.grid = grid
        self.defect = defect
        self.boundary_vectors = boundary_vectors

    @property
    def spacing(self):
        """the lattice spacing h = 1/(N - 1) ('float', read-only)"""
        return float(self.grid[1] - self.grid[0])

    def __str__(self):
        return f"lattice Hamiltonian on {len(self.grid)} nodes ({self.matrix.shape[0]} unknowns)"


def fd_hamiltonian(u: bc.BoundaryUnitary, n: int):
    """assemble the second-order finite-difference Hamiltonian of a boundary condition

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param n: the number of nodes, at least 32 ('int')
    :return: the assembled lattice Hamiltonian ('spectral.LatticeHamiltonian')
    """
    if int(n) != n or n < 32:
        raise InvalidParams(f"The finite-difference grid needs N >= 32 nodes, got {n}.")
    n = int(n)
    h = 1.0 / (n - 1)
    coefficients, vectors = bc.robin_coefficients(u)
    free = np.isfinite(coefficients)
    q = vectors[:, free]
    robin = coefficients[free]
    m = q.shape[1]
    n_inner = n - 2

    inner = sparse.diags([-np.ones(n_inner - 1), 2.0 * np.ones(n_inner), -np.ones(n_inner - 1)], [-1, 0, 1],
                         dtype=complex) / h ** 2
    if m:
        edge = sparse.diags((2.0 - 2.0 * h * robin) / h ** 2).astype(complex)
        to_inner = sparse.lil_matrix((m, n_inner), dtype=complex)
        to_edge = sparse.lil_matrix((n_inner, m), dtype=complex)
        to_inner[:, 0] = (-2.0 * q[0].conj() / h ** 2).reshape(m, 1)
        to_inner[:, n_inner - 1] = to_inner[:, n_inner - 1].toarray() + (-2.0 * q[1].conj() / h ** 2).reshape(m, 1)
        to_edge[0, :] = -q[0] / h ** 2
        to_edge[n_inner - 1, :] = to_edge[n_inner - 1, :].toarray() - q[1] / h ** 2
        matrix = sparse.bmat([[edge, to_inner], [to_edge, inner]], format="csr")
    else:
        matrix = inner.tocsr()

    root_weights = np.concatenate([np.full(m, math.sqrt(0.5)), np.ones(n_inner)])
    scaled = sparse.diags(root_weights) @ matrix @ sparse.diags(1.0 / root_weights)
    difference = abs(scaled - scaled.conj().T).max()
    defect = float(difference / abs(scaled).max())
    if defect > HERMITICITY_TOL:
        raise NonHermitianAssembly(defect)
    scaled = (0.5 * (scaled + scaled.conj().T)).tocsr()

    nodal = np.zeros((n, m + n_inner), dtype=complex)
    nodal[0, :m] = q[0]
    nodal[n - 1, :m] = q[1]
    nodal[1:n - 1, m:] = np.eye(n_inner)
    nodal = nodal / root_weights
    return LatticeHamiltonian(scaled, nodal, np.linspace(0.0, 1.0, n), defect, q)


class FDSpectrum:
    """The eigenvalues of a finite-difference Hamiltonian.

    Attributes:
        levels ('numpy.ndarray'): the sorted eigenvalues, repeated by multiplicity
        defect ('float'): the relative Hermiticity defect of the assembly
        n ('int'): the number of nodes
    """

    def __init__(self, levels, defect: float, n: int):
        self.levels = levels
        self.defect = defect
        self.n = n

    def __str__(self):
        return f"finite-difference spectrum on {self.n} nodes, lowest level {self.levels[0]:.12g}"


def fd_spectrum(u: bc.BoundaryUnitary, n: int):
    """compute the spectrum of the finite-difference Hamiltonian (independent cross-check of the secular solver)

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param n: the number of nodes ('int')
    :return: the lattice levels and the Hermiticity defect ('spectral.FDSpectrum')
    """
    lattice = fd_hamiltonian(u, n)
    levels = eigh(lattice.matrix.toarray(), eigvals_only=True)
    return FDSpectrum(np.sort(levels), lattice.defect, n)


def fd_convergence(u: bc.BoundaryUnitary, sizes, level_index: int, exact: float):
    """measure the convergence of one finite-difference level towards its exact value

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param sizes: increasing grid sizes N ('list')
    :param level_index: the index of the level in the sorted lattice spectrum ('int')
    :param exact: the exact level ('float')
    :return: a table of N, h, E_fd, error and the observed order ('pandas.DataFrame')
    """
    rows = []
    for n in sizes:
        level = fd_spectrum(u, n).levels[level_index]
        rows.append({"N": n, "h": 1.0 / (n - 1), "E_fd": level, "error": abs(level - exact)})
    return ana.convergence_frame(rows)


def _edge_row(u: bc.BoundaryUnitary, t: float, kappa_max: float):
    budget = _EvaluationBudget(DEFAULT_MAX_EVALUATIONS)
    levels = _negative_roots(u.times_phase(t), kappa_max, budget)
    energies = [energy for energy, multiplicity in levels for _ in range(multiplicity)]
    return t, sorted(energies)


def edge_state_scan(u: bc.BoundaryUnitary, t_values, kappa_max: float = DEFAULT_KAPPA_MAX):
    """report the negative levels of the rotated boundary conditions U·e^{it}

    :param u: a boundary condition with eigenvalue -1 ('bc_core.BoundaryUnitary')
    :param t_values: the non-zero phases t ('list')
    :param kappa_max: the negative-energy search bound ('float')
    :return: one row per t with the edge levels, NaN where absent ('pandas.DataFrame')
    """
    distance = float(np.min(np.abs(u.eigenvalues + 1.0)))
    if distance > bc.SPECTRUM_TOLERANCE:
        raise NoMinusOneEigenvalue(distance)
    t_values = [float(t) for t in t_values]
    if any(t == 0.0 or not math.isfinite(t) for t in t_values):
        raise InvalidParams("Edge-state scans need finite phases t != 0.")
    with ThreadPoolExecutor(max_workers=config.worker_count()) as pool:
        rows = list(pool.map(lambda t: _edge_row(u, t, kappa_max), t_values))
    return ana.edge_frame(rows)
