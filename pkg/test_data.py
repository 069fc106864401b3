import math

import numpy as np

import bc_core as bc
import classical_sim as cs


class DataForTesting:
    """This class creates the test data of the laboratory that can be used to test its computations at runtime or
    using pytest. It provides boundary conditions with closed-form spectra and kernels, one boundary condition
    without a classical description, classical boundary conditions and billiard tables.

    Attributes:
        dirichlet, neumann, periodic (bc_core.BoundaryUnitary): the named boundary conditions -I, I and the swap
        pseudo (bc_core.BoundaryUnitary): the pseudo-periodic boundary condition with flux ε = π/2
        delta (bc_core.BoundaryUnitary): the delta on the circle with strength a = 1
        edge (bc_core.BoundaryUnitary): -e^{0.2i}·I, a rotated Dirichlet condition with two edge states
        mixed (bc_core.BoundaryUnitary): diag(-1, 1), Dirichlet at x = 0 and Neumann at x = 1
        generic (bc_core.BoundaryUnitary): the inverse Cayley transform of [[1, 1+i], [1-i, -2]], which lies
                                           away from the classically representable set
        elastic, damped, glued, absorbing (bc_core.ClassicalBC): (identity, 1), (identity, 0.5), (swap, 1) and
                                                                  (identity, inf)
        interval, disk, rectangle (classical_sim.Domain): [0, 1], the unit disk and [0, 2] x [0, 1]
    """

    def create_unitaries(self):
        """create the quantum boundary conditions"""
        self.dirichlet = bc.named_family("dirichlet")
        self.neumann = bc.named_family("neumann")
        self.periodic = bc.named_family("periodic")
        self.pseudo = bc.named_family("pseudo_periodic", eps=math.pi / 2)
        self.delta = bc.named_family("delta_circle", a=1.0)
        self.edge = bc.BoundaryUnitary(-np.exp(0.2j) * np.eye(2))
        self.mixed = bc.BoundaryUnitary(np.diag([-1.0, 1.0]))
        self.generic = bc.inverse_cayley(bc.HermitianBC([[1, 1 + 1j], [1 - 1j, -2]]))

    def create_classical(self):
        """create the classical boundary conditions and the billiard tables"""
        self.elastic = bc.ClassicalBC("identity", 1.0)
        self.damped = bc.ClassicalBC("identity", 0.5)
        self.glued = bc.ClassicalBC("swap", 1.0)
        self.absorbing = bc.ClassicalBC("identity", math.inf)
        self.interval = cs.Domain("interval", [1.0])
        self.disk = cs.Domain("disk", [1.0])
        self.rectangle = cs.Domain("rectangle", [2.0, 1.0])

    def create_test_data(self):
        """create all test data"""
        self.create_unitaries()
        self.create_classical()


class DataForTestingPytest(DataForTesting):
    """This class creates the test data provided by the DataForTesting class before every test, so that the
    laboratory's main functionalities can be tested using pytest.

    Attributes:
        rng (numpy.random.Generator): a seeded generator for randomized checks
        additional attributes: see the documentation of the DataForTesting class
    """
    def setup_method(self):
        """create the test data and a fresh seeded generator"""
        self.create_test_data()
        self.rng = np.random.default_rng(20240101)
