import math

import numpy as np
import pytest

import bc_core as bc
import test_data
from exceptions import InvalidParams, NotUnitary, SingularCayley, UnknownFamily


def _domain_data(u, w):
    """boundary data with φ + iφ̇ = w, which satisfies the boundary condition of u"""
    w = np.asarray(w, dtype=complex)
    image = u.entries @ w
    return bc.BoundaryData((w + image) / 2, (w - image) / 2j)


class TestBoundaryUnitary(test_data.DataForTestingPytest):
    """This class tests the boundary unitaries and the named families of the algebra module (bc_core.py) using the
    test data it inherits from the DataForTestingPytest class.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_named_families(self):
        """test that the named families have their closed-form matrices"""
        assert np.allclose(self.dirichlet.entries, -np.eye(2))
        assert np.allclose(self.neumann.entries, np.eye(2))
        assert np.allclose(self.periodic.entries, [[0, 1], [1, 0]])
        assert np.allclose(self.pseudo.entries, [[0, -1j], [1j, 0]], atol=1e-15)
        assert np.allclose(self.delta.entries, np.array([[1j, 2], [2, 1j]]) / (2 - 1j))
        assert self.pseudo.label == "pseudo_periodic"

    def test_unknown_family(self):
        """test that unknown names and invalid parameters are rejected"""
        with pytest.raises(UnknownFamily):
            bc.named_family("mobius")
        with pytest.raises(InvalidParams):
            bc.named_family("robin_m0", rho0=0.0)
        with pytest.raises(InvalidParams):
            bc.named_family("pseudo_periodic", eps=math.inf)

    def test_validate_unitary(self):
        """test that non-unitary matrices are rejected with their deviation"""
        with pytest.raises(NotUnitary) as error:
            bc.validate_unitary([[1, 1], [0, 1]])
        assert error.value.deviation == pytest.approx(1.0)
        assert error.value.name == "NotUnitary"
        with pytest.raises(InvalidParams):
            bc.validate_unitary(np.eye(3))
        assert bc.validate_unitary([[1, 1e-7], [0, 1]], tol=1e-6).deviation < 1e-6

    def test_entries_are_read_only(self):
        """test that the matrix of a boundary condition cannot be modified after validation"""
        with pytest.raises(ValueError):
            self.neumann.entries[0, 0] = 2.0

    def test_phase_rotation(self):
        """test that rotating Dirichlet by e^{0.2i} gives the edge-state boundary condition"""
        rotated = self.dirichlet.times_phase(0.2)
        assert np.allclose(rotated.entries, self.edge.entries)
        assert self.edge.has_eigenvalue(-np.exp(0.2j))
        assert not self.edge.has_eigenvalue(-1.0)
        assert abs(self.periodic.determinant + 1) < 1e-15

    def test_record_round_trip(self):
        """test that the 8-real record restores the matrix"""
        record = bc.unitary_to_record(self.delta)
        assert len(record) == 8
        assert np.array_equal(bc.unitary_from_record(record).entries, self.delta.entries)
        with pytest.raises(InvalidParams):
            bc.unitary_from_record(record[:7])


class TestCayley(test_data.DataForTestingPytest):
    """This class tests the Cayley transforms and the boundary forms of the algebra module (bc_core.py).

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_round_trip(self):
        """test that random Hermitian matrices survive inverse_cayley followed by cayley on both branches"""
        for _ in range(100):
            raw = self.rng.normal(size=(2, 2)) + 1j * self.rng.normal(size=(2, 2))
            a = raw + raw.conj().T
            for branch in ("plus", "minus"):
                u = bc.inverse_cayley(bc.HermitianBC(a, branch), tol=1e-10)
                assert np.max(np.abs(bc.cayley(u, branch).entries - a)) <= 1e-10

    def test_singular_branches(self):
        """test that ±I raise SingularCayley on the branch that needs the inverse of I ± U"""
        with pytest.raises(SingularCayley):
            bc.cayley(self.dirichlet, "plus")
        with pytest.raises(SingularCayley):
            bc.cayley(self.neumann, "minus")
        assert np.allclose(bc.cayley(self.neumann, "plus").entries, 0)
        assert np.allclose(bc.cayley(self.dirichlet, "minus").entries, 0)

    def test_known_images(self):
        """test the inverse Cayley images of diag(1, -1) and cot(0.1)·I"""
        u = bc.inverse_cayley(bc.HermitianBC(np.diag([1.0, -1.0])))
        assert np.allclose(u.entries, np.diag([-1j, 1j]))
        u = bc.inverse_cayley(bc.HermitianBC(np.eye(2) / math.tan(0.1)))
        assert np.allclose(u.entries, self.edge.entries)

    def test_non_hermitian_relation(self):
        """test that a clearly non-Hermitian relation is rejected"""
        with pytest.raises(InvalidParams):
            bc.HermitianBC([[0, 1], [0, 0]])
        with pytest.raises(InvalidParams):
            bc.HermitianBC(np.eye(2), branch="sideways")

    def test_boundary_residual(self):
        """test that boundary data of the domain has zero residual and that Dirichlet data fits U = -I"""
        for u in (self.delta, self.generic, self.pseudo):
            data = _domain_data(u, self.rng.normal(size=2) + 1j * self.rng.normal(size=2))
            assert np.max(np.abs(bc.bc_residual(u, data))) < 1e-13
        dirichlet_data = bc.BoundaryData.from_derivatives(0.0, 0.0, 1.0, -2.0)
        assert np.allclose(bc.bc_residual(self.dirichlet, dirichlet_data), 0)
        assert np.max(np.abs(bc.bc_residual(self.neumann, dirichlet_data))) > 1

    def test_boundary_form_vanishes_on_domain(self):
        """test that the Stokes boundary form vanishes for two data of the same domain"""
        for u in (self.delta, self.generic, self.edge):
            first = _domain_data(u, self.rng.normal(size=2) + 1j * self.rng.normal(size=2))
            second = _domain_data(u, self.rng.normal(size=2) + 1j * self.rng.normal(size=2))
            assert abs(bc.boundary_form(first, second)) < 1e-13
        inside = _domain_data(self.neumann, [1.0, 0.0])
        outside = bc.BoundaryData([0.0, 0.0], [1.0, 0.0])
        assert abs(bc.boundary_form(inside, outside)) > 0.1


class TestRobinData(test_data.DataForTestingPytest):
    """This class tests the spectral data of U used by the lattice and edge computations.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_robin_coefficients(self):
        """test the Robin coefficients of Neumann, Dirichlet and the mixed condition"""
        coefficients, _ = bc.robin_coefficients(self.neumann)
        assert np.allclose(coefficients, 0)
        coefficients, _ = bc.robin_coefficients(self.dirichlet)
        assert np.all(np.isneginf(coefficients))
        coefficients, _ = bc.robin_coefficients(self.mixed)
        assert sorted(np.isneginf(coefficients)) == [False, True]

    def test_eigenphases(self):
        """test that the eigenphases and eigenvectors diagonalize U"""
        phases, vectors = bc.eigenphases(self.generic)
        assert np.allclose(self.generic.entries @ vectors, vectors * np.exp(1j * phases))
        assert np.allclose(vectors.conj().T @ vectors, np.eye(2))
        phases, _ = bc.eigenphases(self.periodic)
        assert sorted(np.round(np.cos(phases), 12)) == [-1.0, 1.0]

    def test_dirichlet_projector(self):
        """test the projector onto the -1 eigenspace"""
        assert np.allclose(bc.dirichlet_projector(self.mixed), np.diag([1.0, 0.0]))
        assert np.allclose(bc.dirichlet_projector(self.neumann), 0)
        assert np.allclose(bc.dirichlet_projector(self.dirichlet), np.eye(2))

    def test_classical_label(self):
        """test that Dirichlet and Neumann exchange their classical names"""
        assert bc.classical_label("dirichlet").startswith("neumann")
        assert bc.classical_label("neumann").startswith("dirichlet")
        assert "no classical" in bc.classical_label("delta_circle")


class TestRepresentableSet(test_data.DataForTestingPytest):
    """This class tests the classical boundary conditions and the distance to the representable set.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_classical_bc(self):
        """test the normalization of alpha and the reflectivity lookup"""
        assert bc.ClassicalBC(0.0).alpha == "identity"
        assert bc.ClassicalBC(math.pi / 2).is_rotation
        assert not self.glued.is_rotation
        split = bc.ClassicalBC("identity", (0.5, math.inf))
        assert split.rho_at(np.array([0.0])) == 0.5
        assert math.isinf(split.rho_at(np.array([1.0])))
        assert split.endpoint_rho() == (0.5, math.inf)
        with pytest.raises(InvalidParams):
            bc.ClassicalBC("mirror")
        with pytest.raises(InvalidParams):
            bc.ClassicalBC("identity", -1.0)

    def test_embedding_limits(self):
        """test that the Robin embeddings reach Neumann at rho = 1 and Dirichlet at rho = inf"""
        for branch in ("M0", "M1"):
            neumann = bc.classical_to_quantum(bc.RepresentableFamily(branch, (1.0, 1.0)))
            dirichlet = bc.classical_to_quantum(bc.RepresentableFamily(branch, (math.inf, math.inf)))
            assert np.allclose(neumann.entries, np.eye(2))
            assert np.allclose(dirichlet.entries, -np.eye(2))
        flux = bc.classical_to_quantum(bc.RepresentableFamily("pseudo_periodic", (math.pi / 2,)))
        assert np.allclose(flux.entries, self.pseudo.entries)

    def test_m1_is_unitary_off_the_symmetric_slice(self):
        """test that the cross-coupled embedding stays unitary for rho0 != rho1"""
        u = bc.named_family("robin_m1", rho0=0.3, rho1=4.0)
        assert bc.unitarity_deviation(u.entries) < 1e-12

    def test_family_record(self):
        """test that infinite reflectivities are serialized as strings"""
        record = bc.RepresentableFamily("M0", (math.inf, 2.0)).to_dict()
        assert record == {"branch": "M0", "rho0": "inf", "rho1": 2.0}
        with pytest.raises(InvalidParams):
            bc.RepresentableFamily("M2", (1.0, 1.0))

    def test_coordinate_descent(self):
        """test that the pattern search finds the minimum of a quadratic"""
        value, point = bc.coordinate_descent(lambda c: (c[0] - 0.3) ** 2 + (c[1] + 0.2) ** 2, [0.0, 0.0],
                                             [(-1.0, 1.0), (-1.0, 1.0)], 0.1, 10000)
        assert value < 1e-12
        assert point == pytest.approx([0.3, -0.2], abs=1e-6)

    def test_representable_points_have_zero_distance(self):
        """test that named representable families lie on the representable set"""
        for u in (self.neumann, self.dirichlet, self.periodic, self.pseudo,
                  bc.named_family("robin_m0", rho0=0.5, rho1=3.0)):
            distance, _ = bc.manifold_distance(u)
            assert distance <= 1e-6

    def test_generic_condition_is_not_representable(self):
        """test that the generic condition keeps a finite distance and that the reported point attains it"""
        distance, point = bc.manifold_distance(self.generic)
        assert distance > 0.05
        attained = np.linalg.norm(bc.classical_to_quantum(point).entries - self.generic.entries)
        assert attained == pytest.approx(distance, abs=1e-9)

    def test_delta_is_not_representable(self):
        """test that the delta on the circle lies off the representable set"""
        distance, _ = bc.manifold_distance(self.delta)
        assert distance > 0
