"""This module contains every error that the boundary-condition laboratory can raise.

All errors derive from BCSpecError. Each one stores the quantities that caused it as attributes together with a
readable message, so that the command line interface can forward the error name and its diagnostic unchanged.
"""


class BCSpecError(Exception):
    """Base class of all errors raised by the laboratory.

    Attributes:
        message ('str'): the error message that can be displayed
    """
    name = "BCSpecError"

    def __init__(self, message: str):
        self.message = message
        super().__init__(self.message)

    def __str__(self):
        return f'{self.message}'


class NotUnitary(BCSpecError):
    """Indicate that a 2x2 matrix failed the unitarity check.

    Attributes:
        deviation ('float'): the max-norm of M·M† − I
        tolerance ('float'): the tolerance the matrix was checked against
    """
    name = "NotUnitary"

    def __init__(self, deviation: float, tolerance: float):
        self.deviation = deviation
        self.tolerance = tolerance
        super().__init__(f"Matrix is not unitary: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}.")


class SingularCayley(BCSpecError):
    """Indicate that the Cayley transform becomes singular because U has the forbidden eigenvalue of the branch.

    Attributes:
        eigenvalue ('int'): the forbidden eigenvalue (-1 for the plus branch, +1 for the minus branch)
        branch ('str'): the requested branch
    """
    name = "SingularCayley"

    def __init__(self, eigenvalue: int, branch: str):
        self.eigenvalue = eigenvalue
        self.branch = branch
        super().__init__(f"Cayley transform becomes singular: U has eigenvalue {eigenvalue:+d} "
                         f"(branch '{branch}').")


class UnknownFamily(BCSpecError):
    """Indicate that a boundary-condition family name is not known.

    Attributes:
        family ('str'): the requested family name
    """
    name = "UnknownFamily"

    def __init__(self, family: str):
        self.family = family
        super().__init__(f"Unknown boundary-condition family '{family}'.")


class InvalidParams(BCSpecError):
    """Indicate that the parameters of a family are outside their admitted range."""
    name = "InvalidParams"


class SearchBudgetExceeded(BCSpecError):
    """Indicate that the eigenvalue search ran out of secular evaluations.

    Attributes:
        partial ('list'): the levels found before the budget was exhausted
        unswept ('tuple'): the energy window (E_low, E_high) that was not scanned
    """
    name = "SearchBudgetExceeded"

    def __init__(self, partial: list, unswept: tuple):
        self.partial = partial
        self.unswept = unswept
        super().__init__(f"Eigenvalue search budget exceeded with {len(partial)} level(s) found; "
                         f"energies in [{unswept[0]:.6g}, {unswept[1]:.6g}] were not swept.")


class NotAnEigenvalue(BCSpecError):
    """Indicate that an energy is not an eigenvalue of the boundary condition.

    Attributes:
        energy ('float'): the requested energy
        secular ('float'): the smallest singular value of the normalized secular matrix at that energy
    """
    name = "NotAnEigenvalue"

    def __init__(self, energy: float, secular: float):
        self.energy = energy
        self.secular = secular
        super().__init__(f"E = {energy:.12g} is not an eigenvalue (secular value {secular:.3e}).")


class NonHermitianAssembly(BCSpecError):
    """Indicate that the finite-difference Hamiltonian is not Hermitian after boundary elimination.

    Attributes:
        defect ('float'): the relative Hermiticity defect of the assembled matrix
    """
    name = "NonHermitianAssembly"

    def __init__(self, defect: float):
        self.defect = defect
        super().__init__(f"Finite-difference Hamiltonian has Hermiticity defect {defect:.3e}.")


class NoMinusOneEigenvalue(BCSpecError):
    """Indicate that an edge-state scan was requested for a unitary without eigenvalue -1.

    Attributes:
        distance ('float'): the distance of the closest eigenvalue of U to -1
    """
    name = "NoMinusOneEigenvalue"

    def __init__(self, distance: float):
        self.distance = distance
        super().__init__(f"U has no eigenvalue -1 (closest eigenvalue at distance {distance:.3e}).")


class InsufficientModes(BCSpecError):
    """Indicate that a spectral sum would be truncated above its tail bound.

    Attributes:
        e_included ('float'): the largest included energy
        e_required ('float'): the energy the included modes must reach
    """
    name = "InsufficientModes"

    def __init__(self, e_included: float, e_required: float):
        self.e_included = e_included
        self.e_required = e_required
        super().__init__(f"Included modes reach E = {e_included:.6g}, the tail bound requires E >= {e_required:.6g}.")


class InsufficientImages(BCSpecError):
    """Indicate that the requested number of images leaves a Gaussian tail above 1e-14.

    Attributes:
        n_images ('int'): the requested number of images
        n_required ('int'): the number of images needed
    """
    name = "InsufficientImages"

    def __init__(self, n_images: int, n_required: int):
        self.n_images = n_images
        self.n_required = n_required
        super().__init__(f"{n_images} image(s) requested, at least {n_required} needed for a 1e-14 tail.")


class UnsupportedFamily(BCSpecError):
    """Indicate that no method of images exists for the requested family.

    Attributes:
        family ('str'): the requested family name
    """
    name = "UnsupportedFamily"

    def __init__(self, family: str):
        self.family = family
        super().__init__(f"No image representation exists for family '{family}'.")


class UnsupportedRho(BCSpecError):
    """Indicate that a path sum was requested for a reflectivity that has no path weight.

    Attributes:
        rho ('tuple'): the offending reflectivity values
    """
    name = "UnsupportedRho"

    def __init__(self, rho: tuple, reason: str = "only rho in {1, inf} has a path weight"):
        self.rho = rho
        super().__init__(f"Unsupported reflectivity {rho}: {reason}.")


class BadSeed(BCSpecError):
    """Indicate that a Monte-Carlo computation received no usable seed."""
    name = "BadSeed"

    def __init__(self, seed):
        self.seed = seed
        super().__init__(f"Monte-Carlo path sums need a non-negative integer seed, got {seed!r}.")


class GridMismatch(BCSpecError):
    """Indicate that two kernels cannot be compared because their grids or times differ."""
    name = "GridMismatch"


class StalledAtBoundary(BCSpecError):
    """Indicate that a classical trajectory keeps hitting the boundary without making progress.

    Attributes:
        time ('float'): the time at which the trajectory stalled
    """
    name = "StalledAtBoundary"

    def __init__(self, time: float):
        self.time = time
        super().__init__(f"Trajectory stalled at the boundary at t = {time:.15g}.")


class AbsorbedEarly(BCSpecError):
    """Indicate that a classical trajectory was absorbed (rho = inf) before the final time.

    Attributes:
        time ('float'): the absorption time
        point ('numpy.ndarray'): the absorbing boundary point
    """
    name = "AbsorbedEarly"

    def __init__(self, time: float, point):
        self.time = time
        self.point = point
        super().__init__(f"Trajectory absorbed at t = {time:.15g}.")


class VariationMismatch(BCSpecError):
    """Indicate that a variation field does not match the bounces of its trajectory."""
    name = "VariationMismatch"

    def __init__(self, n_bounces: int, n_variations: int):
        self.n_bounces = n_bounces
        self.n_variations = n_variations
        super().__init__(f"Trajectory has {n_bounces} bounce(s) but the variation field has {n_variations}.")


class ConfigError(BCSpecError):
    """Indicate that a run configuration is not usable."""
    name = "ConfigError"
