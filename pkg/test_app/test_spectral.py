import math

import numpy as np
import pytest
from scipy.integrate import trapezoid
from scipy.optimize import brentq

import bc_core as bc
import spectral as sp
import test_data
from exceptions import InvalidParams, NoMinusOneEigenvalue, NotAnEigenvalue, SearchBudgetExceeded


def _solve(u, e_max, kappa_max=sp.DEFAULT_KAPPA_MAX, grid_n=sp.DEFAULT_GRID_N):
    return sp.eigenvalues(sp.SpectralProblem(u, e_max, kappa_max, grid_n))


def _roots(function, low, high, step=1e-3):
    """all sign changes of a smooth function on [low, high], polished by brentq"""
    grid = np.arange(low, high, step)
    values = np.array([function(value) for value in grid])
    return [brentq(function, grid[index], grid[index + 1], xtol=1e-15)
            for index in np.flatnonzero(values[:-1] * values[1:] < 0)]


def _delta_oracle(a, e_max):
    """levels of the ring with a delta of strength a: even from 2k·tan(k/2) = a, odd at (2πn)²"""
    k_max = math.sqrt(e_max)
    energies = [k ** 2 for k in _roots(lambda k: 2 * k * math.sin(k / 2) - a * math.cos(k / 2), 1e-9, k_max)]
    energies += [(2 * math.pi * n) ** 2 for n in range(1, int(k_max / (2 * math.pi)) + 1)]
    if a < 0:
        kappa = brentq(lambda value: 2 * value * math.tanh(value / 2) + a, 1e-9, 50.0, xtol=1e-15)
        energies.append(-kappa ** 2)
    return sorted(energies)


class TestSecularSolver(test_data.DataForTestingPytest):
    """This class tests the exact eigenvalue solver of the spectral module (spectral.py) against closed-form
    spectra, using the test data it inherits from the DataForTestingPytest class.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_problem_validation(self):
        """test that spectral problems reject empty windows and coarse grids"""
        with pytest.raises(InvalidParams):
            sp.SpectralProblem(self.dirichlet, -1.0)
        with pytest.raises(InvalidParams):
            sp.SpectralProblem(self.dirichlet, 100.0, grid_n=8)

    def test_secular_value(self):
        """test that the secular determinant vanishes exactly at the Dirichlet levels"""
        assert abs(sp.secular_value(self.dirichlet, math.pi)) < 1e-12
        assert abs(sp.secular_value(self.dirichlet, 2.0)) > 0.1
        assert abs(sp.secular_value(self.neumann, 0.0)) < 1e-12

    def test_dirichlet_levels(self):
        """test that the Dirichlet levels are n²π² with multiplicity one"""
        solution = _solve(self.dirichlet, 1100.0).first(10)
        exact = np.array([(n * math.pi) ** 2 for n in range(1, 11)])
        assert len(solution) == 10
        assert np.max(np.abs(solution.energies - exact) / exact) <= 1e-10
        assert solution.multiplicities == [1] * 10

    def test_neumann_levels(self):
        """test that the Neumann levels are 0 and n²π²"""
        solution = _solve(self.neumann, 1000.0).first(10)
        assert solution.energies[0] == pytest.approx(0.0, abs=1e-12)
        exact = np.array([(n * math.pi) ** 2 for n in range(1, 10)])
        assert np.max(np.abs(solution.energies[1:] - exact) / exact) <= 1e-10

    def test_periodic_levels(self):
        """test that the periodic levels are 4π²n², doubly degenerate for n >= 1"""
        solution = _solve(self.periodic, 700.0)
        assert solution.energies[0] == pytest.approx(0.0, abs=1e-12)
        assert solution.multiplicities == [1, 2, 2, 2, 2]
        exact = np.array([(2 * math.pi * n) ** 2 for n in range(1, 5)])
        assert np.max(np.abs(solution.energies[1:] - exact) / exact) <= 1e-10

    def test_mixed_levels(self):
        """test that Dirichlet at 0 and Neumann at 1 give ((n + 1/2)π)²"""
        solution = _solve(self.mixed, 250.0).first(5)
        exact = np.array([((n + 0.5) * math.pi) ** 2 for n in range(5)])
        assert np.max(np.abs(solution.energies - exact) / exact) <= 1e-10

    @pytest.mark.parametrize("eps", [0.3, math.pi / 2, 2.0])
    def test_flux_levels(self, eps):
        """test that a flux ε shifts the ring levels to (2πn + ε)²"""
        solution = _solve(bc.named_family("pseudo_periodic", eps=eps), 700.0)
        exact = sorted((2 * math.pi * n + eps) ** 2 for n in range(-6, 7))[:8]
        assert np.max(np.abs(solution.expanded_energies()[:8] - exact)) <= 1e-9

    @pytest.mark.parametrize("a", [1.0, 5.0, -2.0])
    def test_delta_levels(self, a):
        """test that the delta on the circle matches the matching conditions of the ring"""
        solution = _solve(bc.named_family("delta_circle", a=a), 700.0)
        exact = _delta_oracle(a, 700.0)[:8]
        assert np.max(np.abs(solution.expanded_energies()[:8] - exact)) <= 1e-8

    def test_budget_exceeded(self):
        """test that an exhausted budget reports the levels found so far and the window left unswept"""
        problem = sp.SpectralProblem(self.dirichlet, 1e6, search_kappa_max=1.0, max_evaluations=1000)
        with pytest.raises(SearchBudgetExceeded) as error:
            sp.eigenvalues(problem)
        partial = [level.energy for level in error.value.partial]
        assert partial[:3] == pytest.approx([math.pi ** 2, 4 * math.pi ** 2, 9 * math.pi ** 2], rel=1e-10)
        assert error.value.unswept[1] == 1e6

    def test_weyl_count(self):
        """test the level counting function"""
        assert sp.weyl_count(_solve(self.dirichlet, 1100.0), 100.0) == 3
        assert sp.weyl_count(_solve(self.periodic, 700.0), 50.0) == 3

    def test_weyl_growth(self):
        """test that the level count stays within two of √E/π for coupled and glued boundary conditions"""
        for u in (self.delta, self.generic, self.periodic, self.pseudo):
            solution = _solve(u, 1e4)
            for energy in np.linspace(100.0, 1e4, 25):
                assert abs(sp.weyl_count(solution, energy) - math.sqrt(energy) / math.pi) <= 2


class TestEigenfunctions(test_data.DataForTestingPytest):
    """This class tests the eigenfunctions and their boundary data.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_dirichlet_ground_state(self):
        """test that the Dirichlet ground state is √2·sin(πx)"""
        grid = sp.uniform_grid(201)
        psi = sp.eigenfunction(self.dirichlet, math.pi ** 2, 201)
        assert psi.shape == (1, 201)
        assert np.max(np.abs(psi[0] - math.sqrt(2) * np.sin(math.pi * grid))) < 1e-8

    def test_degenerate_pair(self):
        """test that a degenerate periodic level gives an orthonormal pair"""
        grid = sp.uniform_grid(401)
        pair = sp.eigenfunction(self.periodic, 4 * math.pi ** 2, 401)
        gram = trapezoid(pair.conj()[:, None, :] * pair[None, :, :], grid, axis=-1)
        assert pair.shape == (2, 401)
        assert np.allclose(gram, np.eye(2), atol=1e-12)

    def test_not_an_eigenvalue(self):
        """test that an energy off the spectrum is rejected"""
        with pytest.raises(NotAnEigenvalue):
            sp.eigenfunction(self.dirichlet, 5.0)

    def test_orthonormal_levels(self):
        """test that the levels of coupled boundary conditions are orthonormal in L²[0, 1]"""
        for u in (self.delta, self.generic):
            solution = _solve(u, 400.0)
            nodes, weights = sp.gauss_rule(20.0)
            functions = np.concatenate([level.evaluate(nodes) for level in solution])
            gram = (functions.conj() * weights) @ functions.T
            assert len(functions) >= 5
            assert np.max(np.abs(gram - np.eye(len(functions)))) < 1e-8

    def test_evaluate_matches_grid_samples(self):
        """test that a level sampled at arbitrary points agrees with its stored grid samples"""
        level = _solve(self.generic, 100.0)[1]
        assert np.allclose(level.evaluate(sp.uniform_grid(sp.DEFAULT_GRID_N)), level.eigenfunctions, atol=1e-13)

    def test_boundary_data_lies_in_domain(self):
        """test that the eigenfunctions obey the boundary condition and that the boundary form vanishes"""
        solution = _solve(self.generic, 400.0)
        for level in solution:
            for data in level.boundary_data:
                assert np.max(np.abs(bc.bc_residual(self.generic, data))) < 1e-8
        assert sp.stokes_defect(solution[0], solution[1]) < 1e-8


class TestLatticeHamiltonian(test_data.DataForTestingPytest):
    """This class tests the finite-difference Hamiltonian that cross-checks the secular solver.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_small_lattice_rejected(self):
        """test that lattices below 32 nodes are rejected"""
        with pytest.raises(InvalidParams):
            sp.fd_hamiltonian(self.dirichlet, 16)

    def test_hermitian_assembly(self):
        """test that the symmetrized lattice Hamiltonian is Hermitian for a generic boundary condition"""
        lattice = sp.fd_hamiltonian(self.generic, 200)
        dense = lattice.matrix.toarray()
        assert np.max(np.abs(dense - dense.conj().T)) == 0.0
        assert lattice.defect < sp.HERMITICITY_TOL
        assert lattice.spacing == pytest.approx(1 / 199)

    @pytest.mark.parametrize("name, eps, index, exact", [
        ("dirichlet", 0.0, 0, math.pi ** 2),
        ("neumann", 0.0, 1, math.pi ** 2),
        ("pseudo_periodic", math.pi / 2, 0, (math.pi / 2) ** 2),
    ])
    def test_second_order_convergence(self, name, eps, index, exact):
        """test that the lattice levels converge to the exact levels at second order"""
        table = sp.fd_convergence(bc.named_family(name, eps=eps), [250, 500, 1000], index, exact)
        assert list(table["N"]) == [250, 500, 1000]
        assert table["error"].iloc[-1] < table["error"].iloc[0]
        assert 1.8 <= table["order"].iloc[-1] <= 2.2

    def test_lattice_levels_approach_secular_levels(self):
        """test that the lattice spectrum of the generic condition is close to the secular one"""
        exact = _solve(self.generic, 400.0).expanded_energies()[:4]
        lattice = sp.fd_spectrum(self.generic, 1000).levels[:4]
        assert np.max(np.abs(lattice - exact)) < 1e-2 * max(1.0, np.max(np.abs(exact)))

    def test_neumann_zero_mode(self):
        """test that the constant function is the lowest lattice level of the Neumann condition"""
        assert abs(sp.fd_spectrum(self.neumann, 500).levels[0]) < 1e-8


class TestEdgeStates(test_data.DataForTestingPytest):
    """This class tests the edge-state scan of rotated boundary conditions.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_edge_level_diverges(self):
        """test that a single edge level exists and that E·tan²(t/2) tends to -1"""
        table = sp.edge_state_scan(self.mixed, [0.4, 0.2, 0.1, 0.05])
        assert list(table["n_negative"]) == [1, 1, 1, 1]
        assert -1.01 <= table["E_tan2"].iloc[-1] <= -0.99
        assert list(table["E_edge_1"]) == sorted(table["E_edge_1"], reverse=True)
        assert table["E_edge_2"].isna().all()

    def test_dirichlet_edge_pair(self):
        """test the symmetric and antisymmetric edge levels of the rotated Dirichlet condition"""
        t = 0.4
        cot = 1.0 / math.tan(t / 2)
        symmetric = brentq(lambda kappa: kappa * math.tanh(kappa / 2) - cot, 1e-6, 50.0, xtol=1e-15)
        antisymmetric = brentq(lambda kappa: kappa / math.tanh(kappa / 2) - cot, 1e-6, 50.0, xtol=1e-15)
        row = sp.edge_state_scan(self.dirichlet, [t]).iloc[0]
        assert row["n_negative"] == 2
        assert row["E_edge_1"] == pytest.approx(-symmetric ** 2, abs=1e-8)
        assert row["E_edge_2"] == pytest.approx(-antisymmetric ** 2, abs=1e-8)

    def test_requires_minus_one(self):
        """test that a scan needs the eigenvalue -1"""
        with pytest.raises(NoMinusOneEigenvalue):
            sp.edge_state_scan(self.neumann, [0.1])
        with pytest.raises(InvalidParams):
            sp.edge_state_scan(self.dirichlet, [0.0])

    def test_edge_eigenfunctions_decay(self):
        """test that the edge levels of -e^{0.2i}·I are localized at the ends of the interval"""
        negative = [level for level in _solve(self.edge, 100.0) if level.energy < 0]
        assert sum(level.multiplicity for level in negative) == 2
        for level in negative:
            kappa = math.sqrt(-level.energy)
            assert kappa == pytest.approx(9.967, abs=1e-2)
            for values in np.abs(level.evaluate(np.array([0.0, 0.5, 1.0]))):
                assert values[1] <= 2 * math.exp(-kappa / 2) * max(values[0], values[2])

    def test_negative_phases(self):
        """test that rotating Dirichlet by a negative phase gives a repulsive Robin condition without edge levels"""
        table = sp.edge_state_scan(self.dirichlet, [-0.2, 0.2])
        assert list(table["n_negative"]) == [0, 2]
        assert math.isnan(table["E_edge_1"].iloc[0])
