"""This module contains the algebra of quantum boundary conditions on the interval [0, 1].

A self-adjoint extension of -d²/dx² is fixed by a 2x2 unitary U through

    (φ - iφ̇) = U (φ + iφ̇),

where φ = (ψ(0), ψ(1)) are the boundary values and φ̇ = (-ψ'(0), ψ'(1)) the outward normal derivatives.

The most important functionalities include functions to
    - validate boundary unitaries and evaluate the boundary residual of boundary data
    - compute the Cayley transforms A± and their inverses
    - build the named families (Dirichlet, Neumann, periodic, pseudo-periodic, delta on the circle, Robin)
    - embed classical (α, ρ) boundary conditions into U(2) (the manifolds M0 and M1)
    - measure the distance from an arbitrary unitary to the classically representable set
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.linalg import schur

import config
from exceptions import InvalidParams, NotUnitary, SingularCayley, UnknownFamily

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-12
SPECTRUM_TOLERANCE = 1e-9  # distance of an eigenvalue of U to ±1 that counts as "present"
FAMILY_NAMES = ("dirichlet", "neumann", "periodic", "pseudo_periodic", "delta_circle", "robin_m0", "robin_m1")
CLASSICAL_ALIASES = {
    "dirichlet": "neumann (total absorption), alpha = identity, rho = inf",
    "neumann": "dirichlet (total reflection), alpha = identity, rho = 1",
    "periodic": "periodic, alpha = swap, rho = 1",
    "pseudo_periodic": "periodic with flux phase per winding, alpha = swap, rho = 1",
}

# manifold_distance search grid
RHO_GRID_POINTS = 101
RHO_GRID_MAX = 10.0
EPS_GRID_POINTS = 256
REFINE_RELATIVE_STEP = 1e-8
THETA_UPPER = math.pi / 4  # theta = arctan(1 - rho) lies in [-pi/2, pi/4) for rho in (0, inf]
THETA_LOWER = -math.pi / 2


def _frozen(array):
    """return a read-only complex copy of an array"""
    array = np.array(array, dtype=complex)
    array.setflags(write=False)
    return array


class BoundaryUnitary:
    """Every instance represents one self-adjoint extension of the Laplacian on [0, 1].

    Attributes:
        entries ('numpy.ndarray'): the 2x2 complex unitary matrix U (read-only)
        label ('str'): the family name of the boundary condition, if any
        tolerance ('float'): the tolerance that was used to validate unitarity
        deviation ('float'): the max-norm of U·U† - I measured at validation
    """

    def __init__(self, entries, label: str = None, tolerance: float = DEFAULT_TOLERANCE):
        entries = np.asarray(entries, dtype=complex)
        if entries.shape != (2, 2):
            raise InvalidParams(f"A boundary unitary must be a 2x2 matrix, got shape {entries.shape}.")
        if not np.all(np.isfinite(entries)):
            raise InvalidParams("A boundary unitary must have finite entries.")
        deviation = unitarity_deviation(entries)
        if deviation > tolerance:
            raise NotUnitary(deviation, tolerance)
        self.entries = _frozen(entries)
        self.label = label
        self.tolerance = tolerance
        self.deviation = deviation

    def __str__(self):
        name = self.label if self.label else "custom"
        return f"{name} boundary condition U = {np.array2string(self.entries, precision=6)}"

    def __matmul__(self, other):
        """compose two boundary conditions; the product is validated at the tolerance of the left factor"""
        return BoundaryUnitary(self.entries @ other.entries, tolerance=self.tolerance)

    @property
    def eigenvalues(self):
        """the two eigenvalues of U ('numpy.ndarray', read-only)"""
        return np.linalg.eigvals(self.entries)

    @property
    def determinant(self):
        """det U, a complex number of modulus one ('complex', read-only)"""
        return complex(np.linalg.det(self.entries))

    def times_phase(self, t: float):
        """return the boundary condition U·e^{it}

        :param t: the phase ('float')
        :return: the rotated boundary condition ('bc_core.BoundaryUnitary')
        """
        return BoundaryUnitary(self.entries * np.exp(1j * t), tolerance=self.tolerance)

    def has_eigenvalue(self, value: complex, tol: float = SPECTRUM_TOLERANCE):
        """check whether U has the given eigenvalue

        :param value: the candidate eigenvalue ('complex')
        :param tol: the admitted distance ('float')
        :return: True if an eigenvalue of U lies within tol of value ('bool')
        """
        return bool(np.min(np.abs(self.eigenvalues - value)) <= tol)


class BoundaryData:
    """Boundary values of a wave function on the two-point boundary {0, 1}.

    Attributes:
        phi ('numpy.ndarray'): (ψ(0), ψ(1))
        phidot ('numpy.ndarray'): (-ψ'(0), ψ'(1)), the outward normal derivatives
    """

    def __init__(self, phi, phidot):
        phi = np.asarray(phi, dtype=complex).reshape(2)
        phidot = np.asarray(phidot, dtype=complex).reshape(2)
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(phidot))):
            raise InvalidParams("Boundary data must be finite.")
        self.phi = _frozen(phi)
        self.phidot = _frozen(phidot)

    def __str__(self):
        return f"phi = {self.phi}, phidot = {self.phidot}"

    def __mul__(self, scalar):
        return BoundaryData(scalar * self.phi, scalar * self.phidot)

    __rmul__ = __mul__

    @classmethod
    def from_derivatives(cls, psi0, psi1, dpsi0, dpsi1):
        """build boundary data from ψ(0), ψ(1), ψ'(0) and ψ'(1) using the outward normal convention"""
        return cls((psi0, psi1), (-dpsi0, dpsi1))


class HermitianBC:
    """A Robin-type boundary relation φ̇ = A φ (plus branch) or φ = A φ̇ (minus branch).

    Attributes:
        entries ('numpy.ndarray'): the 2x2 Hermitian matrix A (read-only)
        branch ('str'): either "plus" or "minus"
        defect ('float'): the Hermiticity defect max|A - A†| before symmetrization
    """

    def __init__(self, entries, branch: str = "plus", tolerance: float = DEFAULT_TOLERANCE):
        if branch not in ("plus", "minus"):
            raise InvalidParams(f"Cayley branch must be 'plus' or 'minus', got '{branch}'.")
        entries = np.asarray(entries, dtype=complex)
        self.defect = float(np.max(np.abs(entries - entries.conj().T)))
        if self.defect > max(1e-6, 1e6 * tolerance):
            raise InvalidParams(f"Matrix is not Hermitian (defect {self.defect:.3e}).")
        self.entries = _frozen(0.5 * (entries + entries.conj().T))
        self.branch = branch

    def __str__(self):
        return f"A_{self.branch} = {np.array2string(self.entries, precision=6)}"


class ClassicalBC:
    """A classical boundary condition: where the particle re-emerges (α) and how its normal momentum is scaled (ρ).

    Attributes:
        alpha: "identity", "swap" (exchange of the endpoints of the interval, gluing of opposite sides of a
               rectangle) or a real rotation angle of the disk boundary ('str' or 'float')
        rho: the reflectivity density: a positive number or inf, a pair (ρ(0), ρ(1)) for the interval, or a
             callable mapping a boundary point to a positive number or inf
    """

    def __init__(self, alpha="identity", rho=1.0):
        if isinstance(alpha, str):
            if alpha not in ("identity", "swap"):
                raise InvalidParams(f"alpha must be 'identity', 'swap' or a rotation angle, got '{alpha}'.")
        else:
            alpha = float(alpha)
            if not math.isfinite(alpha):
                raise InvalidParams("The rotation angle of alpha must be finite.")
            if alpha % (2 * math.pi) == 0.0:
                alpha = "identity"
        if isinstance(rho, (tuple, list)):
            rho = tuple(float(value) for value in rho)
            if len(rho) != 2:
                raise InvalidParams("rho given per endpoint needs exactly two values.")
            _check_rho(rho)
        elif not callable(rho):
            rho = float(rho)
            _check_rho((rho,))
        self.alpha = alpha
        self.rho = rho

    def __str__(self):
        return f"alpha = {self.alpha}, rho = {self.rho}"

    @property
    def is_rotation(self):
        """True if alpha is a rotation of the disk boundary by a non-zero angle ('bool', read-only)"""
        return not isinstance(self.alpha, str)

    def rho_at(self, point):
        """return the reflectivity at a boundary point

        :param point: the boundary point ('numpy.ndarray')
        :return: ρ at the point, possibly inf ('float')
        """
        if callable(self.rho):
            value = float(self.rho(point))
            _check_rho((value,))
            return value
        if isinstance(self.rho, tuple):
            return self.rho[0] if float(np.asarray(point).ravel()[0]) == 0.0 else self.rho[1]
        return self.rho

    def endpoint_rho(self):
        """return (ρ(0), ρ(1)) for the interval ('tuple')"""
        if callable(self.rho):
            return float(self.rho(np.array([0.0]))), float(self.rho(np.array([1.0])))
        if isinstance(self.rho, tuple):
            return self.rho
        return self.rho, self.rho


class RepresentableFamily:
    """A point of the classically representable set of boundary conditions.

    Attributes:
        branch ('str'): "M0" (local Robin), "M1" (cross-coupled Robin) or "pseudo_periodic"
        params ('tuple'): (ρ0, ρ1) with ρ in (0, inf] for M0/M1, (ε,) with ε in [0, 2π) for pseudo_periodic
    """

    def __init__(self, branch: str, params):
        params = tuple(float(value) for value in np.atleast_1d(params))
        if branch in ("M0", "M1"):
            if len(params) != 2:
                raise InvalidParams(f"{branch} needs two reflectivities (rho0, rho1).")
            _check_rho(params)
        elif branch == "pseudo_periodic":
            if len(params) != 1 or not math.isfinite(params[0]):
                raise InvalidParams("pseudo_periodic needs one finite phase eps.")
            params = (params[0] % (2 * math.pi),)
        else:
            raise InvalidParams(f"Unknown representable branch '{branch}'.")
        self.branch = branch
        self.params = params

    def __str__(self):
        return f"{self.branch}{self.params}"

    def to_dict(self):
        """return the family as a JSON-compatible record ('dict')"""
        if self.branch == "pseudo_periodic":
            return {"branch": self.branch, "eps": self.params[0]}
        return {"branch": self.branch, "rho0": _json_rho(self.params[0]), "rho1": _json_rho(self.params[1])}


def _json_rho(value: float):
    return "inf" if math.isinf(value) else value


def _check_rho(values):
    for value in values:
        if math.isnan(value) or value <= 0:
            raise InvalidParams(f"Reflectivity rho must be positive or inf, got {value}.")


def unitarity_deviation(matrix):
    """return the max-norm of M·M† - I

    :param matrix: a square complex matrix ('numpy.ndarray')
    :return: the deviation from unitarity ('float')
    """
    matrix = np.asarray(matrix, dtype=complex)
    return float(np.max(np.abs(matrix @ matrix.conj().T - np.eye(matrix.shape[0]))))


def validate_unitary(matrix, tol: float = DEFAULT_TOLERANCE, label: str = None):
    """validate a 2x2 matrix as a boundary unitary

    :param matrix: the candidate matrix ('numpy.ndarray' or nested 'list')
    :param tol: the admitted max-norm deviation of M·M† from I ('float')
    :param label: an optional family name ('str')
    :return: the validated boundary condition ('bc_core.BoundaryUnitary')
    """
    if not tol > 0:
        raise InvalidParams(f"Validation tolerance must be positive, got {tol}.")
    return BoundaryUnitary(matrix, label=label, tolerance=tol)


def cayley(u: BoundaryUnitary, branch: str = "plus"):
    """compute the Cayley transform of a boundary unitary.

    The plus branch A₊ = -i(I - U)(I + U)⁻¹ gives φ̇ = A₊φ and is singular when -1 is an eigenvalue of U; the
    minus branch A₋ = i(I + U)(I - U)⁻¹ gives φ = A₋φ̇ and is singular when +1 is an eigenvalue.

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param branch: "plus" or "minus" ('str')
    :return: the Hermitian boundary relation ('bc_core.HermitianBC')
    """
    identity = np.eye(2)
    matrix = u.entries
    if branch == "plus":
        if u.has_eigenvalue(-1.0):
            raise SingularCayley(-1, branch)
        entries = -1j * np.linalg.solve(identity + matrix, identity - matrix)
    elif branch == "minus":
        if u.has_eigenvalue(1.0):
            raise SingularCayley(1, branch)
        entries = 1j * np.linalg.solve(identity - matrix, identity + matrix)
    else:
        raise InvalidParams(f"Cayley branch must be 'plus' or 'minus', got '{branch}'.")
    relation = HermitianBC(entries, branch, tolerance=u.tolerance)
    if relation.defect > 10 * u.tolerance:
        logger.debug("Cayley transform symmetrized (defect %.3e)", relation.defect)
    return relation


def inverse_cayley(a: HermitianBC, tol: float = DEFAULT_TOLERANCE):
    """map a Hermitian boundary relation back to its boundary unitary

    :param a: the relation φ̇ = Aφ (plus) or φ = Aφ̇ (minus) ('bc_core.HermitianBC')
    :param tol: the tolerance of the resulting unitary ('float')
    :return: U = (I - iA)(I + iA)⁻¹ for plus, U = (A - iI)(A + iI)⁻¹ for minus ('bc_core.BoundaryUnitary')
    """
    identity = np.eye(2)
    matrix = a.entries
    if a.branch == "plus":
        entries = np.linalg.solve((identity + 1j * matrix).T, (identity - 1j * matrix).T).T
    else:
        entries = np.linalg.solve((matrix + 1j * identity).T, (matrix - 1j * identity).T).T
    return BoundaryUnitary(entries, tolerance=tol)


def bc_residual(u: BoundaryUnitary, data: BoundaryData):
    """evaluate the boundary condition (φ - iφ̇) - U(φ + iφ̇)

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param data: the boundary values and normal derivatives ('bc_core.BoundaryData')
    :return: the residual, zero iff the data lies in the domain of the extension ('numpy.ndarray')
    """
    return (data.phi - 1j * data.phidot) - u.entries @ (data.phi + 1j * data.phidot)


def boundary_form(first: BoundaryData, second: BoundaryData):
    """evaluate the boundary term left by integrating the Laplacian by parts twice (Stokes identity)

    :param first: boundary data of ψ₁ ('bc_core.BoundaryData')
    :param second: boundary data of ψ₂ ('bc_core.BoundaryData')
    :return: i·Σ[conj(φ̇₁)φ₂ - conj(φ₁)φ̇₂] ('complex')
    """
    return complex(1j * (np.vdot(first.phidot, second.phi) - np.vdot(first.phi, second.phidot)))


def eigenphases(u: BoundaryUnitary):
    """return the orthonormal eigenvectors of U with their eigenphases in (-π, π]

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :return: a tuple of the phases ('numpy.ndarray') and the eigenvectors as columns ('numpy.ndarray')
    """
    # U is normal, so its complex Schur form is diagonal and the Schur vectors are orthonormal eigenvectors
    triangular, vectors = schur(u.entries, output="complex")
    return np.angle(np.diag(triangular)), vectors


def robin_coefficients(u: BoundaryUnitary):
    """return the Robin coefficients a_j = -tan(θ_j/2) of the eigen-directions of U

    Directions with eigenvalue -1 are Dirichlet directions and get the coefficient -inf.

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :return: the coefficients ('numpy.ndarray') and the eigenvectors ('numpy.ndarray')
    """
    phases, vectors = eigenphases(u)
    coefficients = np.where(np.abs(np.exp(1j * phases) + 1.0) <= SPECTRUM_TOLERANCE, -np.inf,
                            -np.tan(phases / 2.0))
    return coefficients, vectors


def dirichlet_projector(u: BoundaryUnitary):
    """return the orthogonal projector onto the eigenspace of U with eigenvalue -1

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :return: the 2x2 projector, zero if -1 is not an eigenvalue ('numpy.ndarray')
    """
    phases, vectors = eigenphases(u)
    selected = vectors[:, np.abs(np.exp(1j * phases) + 1.0) <= SPECTRUM_TOLERANCE]
    return selected @ selected.conj().T


def classical_label(name: str):
    """return the classical alias of a quantum family name (path restrictions for Dirichlet and Neumann are
    interchanged in the Euclidean picture)

    :param name: the quantum family name ('str')
    :return: the classical description ('str')
    """
    return CLASSICAL_ALIASES.get(name, "no classical (alpha, rho) realization")


def named_family(name: str, eps: float = 0.0, a: float = 0.0, rho0: float = 1.0, rho1: float = 1.0):
    """build the exact boundary unitary of a named family

    :param name: one of "dirichlet", "neumann", "periodic", "pseudo_periodic", "delta_circle", "robin_m0",
                 "robin_m1" ('str')
    :param eps: the flux phase of pseudo_periodic (and of a twisted delta_circle) ('float')
    :param a: the strength of the delta potential of delta_circle ('float')
    :param rho0: the reflectivity at x = 0 for the Robin families ('float')
    :param rho1: the reflectivity at x = 1 for the Robin families ('float')
    :return: the boundary condition ('bc_core.BoundaryUnitary')
    """
    if name == "dirichlet":
        return BoundaryUnitary(-np.eye(2), label=name)
    if name == "neumann":
        return BoundaryUnitary(np.eye(2), label=name)
    if name == "periodic":
        return BoundaryUnitary([[0, 1], [1, 0]], label=name)
    if name == "pseudo_periodic":
        _check_finite(eps=eps)
        return BoundaryUnitary(_pseudo_periodic_matrix(eps), label=name)
    if name == "delta_circle":
        _check_finite(a=a, eps=eps)
        matrix = np.array([[1j * a, 2], [2, 1j * a]]) / (2 - 1j * a)
        twist = np.diag([1.0, np.exp(1j * eps)])
        return BoundaryUnitary(twist @ matrix @ twist.conj().T, label=name)
    if name == "robin_m0":
        return classical_to_quantum(RepresentableFamily("M0", (rho0, rho1)))
    if name == "robin_m1":
        return classical_to_quantum(RepresentableFamily("M1", (rho0, rho1)))
    raise UnknownFamily(name)


def _check_finite(**values):
    for key, value in values.items():
        if not math.isfinite(value):
            raise InvalidParams(f"Parameter {key} must be a finite real number, got {value}.")


def _pseudo_periodic_matrix(eps):
    """return [[0, e^{-iε}], [e^{iε}, 0]], vectorized over an array of phases"""
    eps = np.asarray(eps, dtype=float)
    matrix = np.zeros(eps.shape + (2, 2), dtype=complex)
    matrix[..., 0, 1] = np.exp(-1j * eps)
    matrix[..., 1, 0] = np.exp(1j * eps)
    return matrix


def rho_to_theta(rho):
    """map reflectivities ρ in (0, inf] to θ = arctan(1 - ρ) in [-π/2, π/4)"""
    rho = np.asarray(rho, dtype=float)
    return np.where(np.isinf(rho), THETA_LOWER, np.arctan(1.0 - np.where(np.isinf(rho), 0.0, rho)))


def theta_to_rho(theta):
    """map θ in [-π/2, π/4) back to ρ = 1 - tan θ (inf at θ = -π/2)"""
    theta = np.asarray(theta, dtype=float)
    at_limit = theta <= THETA_LOWER
    return np.where(at_limit, np.inf, 1.0 - np.tan(np.where(at_limit, 0.0, theta)))


def _m0_matrices(theta0, theta1):
    """diag(e^{-2iθ0}, e^{-2iθ1}): the Cayley image of A = diag(tan θ0, tan θ1), vectorized"""
    theta0, theta1 = np.broadcast_arrays(np.asarray(theta0, dtype=float), np.asarray(theta1, dtype=float))
    matrix = np.zeros(theta0.shape + (2, 2), dtype=complex)
    matrix[..., 0, 0] = np.exp(-2j * theta0)
    matrix[..., 1, 1] = np.exp(-2j * theta1)
    return matrix


def _m1_matrices(theta0, theta1):
    """unitary polar factor of the Cayley image of φ̇(0) = b₁φ(1), φ̇(1) = b₀φ(0), with b = tan θ, vectorized.

    With c = cos, s = sin the image (I - iA)(I + iA)⁻¹ equals N / cos(θ₁ - θ₀) where
    N = [[cos(θ₀ + θ₁), -2i s₁c₀], [-2i s₀c₁, cos(θ₀ + θ₁)]]; it is unitary when θ₀ = θ₁.
    """
    theta0, theta1 = np.broadcast_arrays(np.asarray(theta0, dtype=float), np.asarray(theta1, dtype=float))
    numerator = np.zeros(theta0.shape + (2, 2), dtype=complex)
    diagonal = np.cos(theta0 + theta1)
    numerator[..., 0, 0] = diagonal
    numerator[..., 1, 1] = diagonal
    numerator[..., 0, 1] = -2j * np.sin(theta1) * np.cos(theta0)
    numerator[..., 1, 0] = -2j * np.sin(theta0) * np.cos(theta1)
    left, _, right = np.linalg.svd(numerator)
    sign = np.where(np.cos(theta1 - theta0) < 0, -1.0, 1.0)
    return sign[..., None, None] * (left @ right)


def _family_matrices(branch: str, coordinates):
    """return the unitaries of a representable branch at search coordinates (θ0, θ1) or (ε,)"""
    if branch == "M0":
        return _m0_matrices(coordinates[0], coordinates[1])
    if branch == "M1":
        return _m1_matrices(coordinates[0], coordinates[1])
    return _pseudo_periodic_matrix(coordinates[0])


def classical_to_quantum(family: RepresentableFamily):
    """embed a classically representable boundary condition into U(2).

    M0 is the local Robin relation φ̇(0) = (1 - ρ0)φ(0), φ̇(1) = (1 - ρ1)φ(1); M1 the cross relation
    φ̇(0) = (1 - ρ1)φ(1), φ̇(1) = (1 - ρ0)φ(0), mapped to the nearest unitary when ρ0 ≠ ρ1; pseudo_periodic the
    anti-diagonal phase matrix. ρ = inf is the Dirichlet limit.

    :param family: the representable family point ('bc_core.RepresentableFamily')
    :return: the boundary condition ('bc_core.BoundaryUnitary')
    """
    if family.branch == "pseudo_periodic":
        coordinates = family.params
        label = "pseudo_periodic"
    else:
        coordinates = tuple(rho_to_theta(family.params))
        label = "robin_m0" if family.branch == "M0" else "robin_m1"
    return BoundaryUnitary(_family_matrices(family.branch, coordinates), label=label)


def _scan_branch(branch: str, target):
    """coarse grid scan of one branch; returns (distance, coordinates)"""
    if branch == "pseudo_periodic":
        grid = (np.linspace(0.0, 2 * math.pi, EPS_GRID_POINTS, endpoint=False),)
    else:
        rho = np.append(np.linspace(RHO_GRID_MAX / RHO_GRID_POINTS, RHO_GRID_MAX, RHO_GRID_POINTS), np.inf)
        theta = rho_to_theta(rho)
        grid = np.meshgrid(theta, theta, indexing="ij")
    distances = np.linalg.norm(_family_matrices(branch, grid) - target, axis=(-2, -1))
    best = np.unravel_index(np.argmin(distances), distances.shape)
    return float(distances[best]), [float(axis[best]) for axis in grid]


def coordinate_descent(objective, start, bounds, step: float, max_evaluations: int):
    """minimize a function by coordinate-wise pattern search; only improvements are accepted and the step is
    halved whenever no coordinate move improves, down to a relative step of 1e-8

    :param objective: the function to minimize, called with a list of coordinates ('callable')
    :param start: the starting coordinates ('list')
    :param bounds: a (low, high) pair per coordinate; high is excluded ('list')
    :param step: the initial step ('float')
    :param max_evaluations: the evaluation budget ('int')
    :return: a tuple of the smallest value found ('float') and its coordinates ('list')
    """
    current = list(start)
    value = objective(current)
    evaluations = 1
    while evaluations < max_evaluations and step > REFINE_RELATIVE_STEP * max(1.0, max(abs(c) for c in current)):
        improved = False
        for index, (low, high) in enumerate(bounds):
            for direction in (1.0, -1.0):
                trial = list(current)
                trial[index] = min(max(current[index] + direction * step, low), high - 1e-15)
                if trial[index] == current[index]:
                    continue
                trial_value = objective(trial)
                evaluations += 1
                if trial_value < value:
                    current, value, improved = trial, trial_value, True
                    break
        if not improved:
            step *= 0.5
    return value, current


def _refine_branch(branch: str, target, start, max_iterations: int):
    def objective(coordinates):
        return float(np.linalg.norm(_family_matrices(branch, coordinates) - target))

    if branch == "pseudo_periodic":
        return coordinate_descent(objective, start, [(-math.inf, math.inf)], 2 * math.pi / EPS_GRID_POINTS,
                                  max_iterations)
    return coordinate_descent(objective, start, [(THETA_LOWER, THETA_UPPER)] * 2, 0.05, max_iterations)


def manifold_distance(u: BoundaryUnitary, max_iterations: int = 2000):
    """measure how far a boundary condition lies from the classically representable set M0 ∪ M1 ∪ pseudo_periodic.

    The infimum of the Frobenius distance is found by a grid scan of every branch (101x101 reflectivities in
    (0, 10] plus inf, 256 flux phases) followed by coordinate-descent refinement of the best point per branch.

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :param max_iterations: the refinement budget (objective evaluations per branch) ('int')
    :return: a tuple of the distance ('float') and the closest representable point ('bc_core.RepresentableFamily')
    """
    target = u.entries
    branches = ("M0", "M1", "pseudo_periodic")
    with ThreadPoolExecutor(max_workers=min(len(branches), config.worker_count())) as pool:
        scans = list(pool.map(lambda branch: _scan_branch(branch, target), branches))

    results = []
    for branch, (distance, start) in zip(branches, scans):
        refined, coordinates = _refine_branch(branch, target, start, max_iterations)
        if refined > distance:
            refined, coordinates = distance, start
        results.append((refined, branch, coordinates))
        logger.debug("manifold_distance %s: grid %.3e, refined %.3e", branch, distance, refined)

    distance, branch, coordinates = min(results, key=lambda item: item[0])
    if branch == "pseudo_periodic":
        params = (coordinates[0],)
    else:
        params = tuple(float(value) for value in theta_to_rho(coordinates))
    return distance, RepresentableFamily(branch, params)


def unitary_to_record(u: BoundaryUnitary):
    """serialize a boundary unitary as 8 reals, row-major with real and imaginary parts interleaved

    :param u: the boundary condition ('bc_core.BoundaryUnitary')
    :return: [re U00, im U00, re U01, im U01, re U10, im U10, re U11, im U11] ('list')
    """
    flat = u.entries.ravel()
    return [float(value) for pair in zip(flat.real, flat.imag) for value in pair]


def unitary_from_record(values, tol: float = DEFAULT_TOLERANCE):
    """deserialize 8 reals (see unitary_to_record) into a validated boundary unitary

    :param values: the 8 reals ('list')
    :param tol: the validation tolerance ('float')
    :return: the boundary condition ('bc_core.BoundaryUnitary')
    """
    values = [float(value) for value in values]
    if len(values) != 8:
        raise InvalidParams(f"A boundary unitary record needs 8 reals, got {len(values)}.")
    flat = np.array(values[0::2]) + 1j * np.array(values[1::2])
    return validate_unitary(flat.reshape(2, 2), tol)
