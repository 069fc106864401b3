import math

import numpy as np
import pytest

import bc_core as bc
import classical_sim as cs
import test_data
from exceptions import AbsorbedEarly, InvalidParams, VariationMismatch


class TestEvolve(test_data.DataForTestingPytest):
    """This class tests the exact event-driven integration of the classical module (classical_sim.py) using the
    test data it inherits from the DataForTestingPytest class.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_elastic_interval(self):
        """test that an elastic particle bounces at t = 0.75 and t = 1.75 and returns to its start"""
        trajectory = cs.evolve(self.interval, self.elastic, 0.25, 1.0, 2.0)
        assert [bounce.time for bounce in trajectory.bounces] == [0.75, 1.75]
        assert [bounce.point[0] for bounce in trajectory.bounces] == [1.0, 0.0]
        assert trajectory.status == "completed"
        assert trajectory.final_position[0] == pytest.approx(0.25, abs=1e-15)
        assert trajectory.final_velocity[0] == 1.0
        assert cs.action(trajectory) == pytest.approx(2.0, abs=1e-15)

    def test_glued_interval(self):
        """test that gluing the endpoints lets the particle wrap around from 1 to 0"""
        trajectory = cs.evolve(self.interval, self.glued, 0.25, 1.0, 1.0)
        bounce = trajectory.bounces[0]
        assert bounce.time == 0.75
        assert (bounce.point[0], bounce.point_out[0]) == (1.0, 0.0)
        assert trajectory.final_position[0] == pytest.approx(0.25, abs=1e-15)
        assert trajectory.final_velocity[0] == 1.0

    def test_damped_interval(self):
        """test the bounce times, the final position and the action under rho = 0.5"""
        trajectory = cs.evolve(self.interval, self.damped, 0.5, 1.0, 3.0)
        assert [bounce.time for bounce in trajectory.bounces] == [0.5, 2.5]
        assert [bounce.velocity_out[0] for bounce in trajectory.bounces] == [-0.5, 0.25]
        assert trajectory.final_position[0] == pytest.approx(0.125, abs=1e-15)
        assert cs.action(trajectory) == pytest.approx(1.03125, abs=1e-15)

    def test_single_flight_action(self):
        """test the action of a flight without bounces"""
        trajectory = cs.evolve(self.interval, self.elastic, 0.125, 1.0, 0.75)
        assert trajectory.bounces == []
        assert cs.action(trajectory) == 0.75

    def test_speed_ledger(self):
        """test that every bounce multiplies the speed by the reflectivity of the wall"""
        trajectory = cs.evolve(self.interval, self.damped, 0.5, 1.0, 40.0)
        speeds = [abs(bounce.velocity_out[0]) for bounce in trajectory.bounces]
        assert speeds == [0.5 ** count for count in range(1, len(speeds) + 1)]

    def test_split_reflectivity(self):
        """test that a wall with rho = inf ends the trajectory and that strict mode raises"""
        split = bc.ClassicalBC("identity", (0.5, math.inf))
        trajectory = cs.evolve(self.interval, split, 0.25, 1.0, 2.0)
        assert trajectory.status == "absorbed"
        assert trajectory.t_final == 0.75
        assert trajectory.final_position[0] == 1.0
        with pytest.raises(AbsorbedEarly) as error:
            cs.evolve(self.interval, self.absorbing, 0.25, -1.0, 2.0, strict=True)
        assert error.value.time == 0.25

    def test_bounce_budget(self):
        """test that the trajectory stops at the hit point once the bounce budget is exhausted"""
        trajectory = cs.evolve(self.interval, self.elastic, 0.25, 1.0, 10.0, max_bounces=1)
        assert trajectory.status == "max_bounces"
        assert len(trajectory.bounces) == 1
        assert trajectory.t_final == 1.75
        assert trajectory.final_position[0] == 0.0

    def test_invalid_input(self):
        """test that boundary starts, bad times and rotations off the disk are rejected"""
        with pytest.raises(InvalidParams):
            cs.evolve(self.interval, self.elastic, 1.0, 1.0, 1.0)
        with pytest.raises(InvalidParams):
            cs.evolve(self.interval, self.elastic, 0.5, 1.0, 0.0)
        with pytest.raises(InvalidParams):
            cs.evolve(self.rectangle, bc.ClassicalBC(math.pi / 2), [0.5, 0.5], [1.0, 0.0], 1.0)
        with pytest.raises(InvalidParams):
            cs.evolve(self.disk, self.elastic, [0.5], [1.0], 1.0)
        with pytest.raises(InvalidParams):
            cs.Domain("triangle", [1.0])

    def test_rectangle_corner(self):
        """test that a flight into a corner bounces off both walls and comes straight back"""
        trajectory = cs.evolve(self.rectangle, self.elastic, [1.0, 0.5], [1.0, 0.5], 2.0)
        assert [bounce.time for bounce in trajectory.bounces] == [1.0, 1.0]
        assert np.array_equal(trajectory.bounces[0].point, [2.0, 1.0])
        assert np.allclose(trajectory.final_position, [1.0, 0.5], atol=1e-15)
        assert np.array_equal(trajectory.final_velocity, [-1.0, -0.5])

    def test_rectangle_gluing(self):
        """test that gluing opposite walls of the rectangle is a translation"""
        trajectory = cs.evolve(self.rectangle, self.glued, [0.5, 0.5], [1.0, 0.0], 2.0)
        bounce = trajectory.bounces[0]
        assert np.array_equal(bounce.point_out, [0.0, 0.5])
        assert np.array_equal(bounce.normal_out, [-1.0, 0.0])
        assert np.allclose(trajectory.final_position, [0.5, 0.5], atol=1e-15)

    def test_disk_hits_stay_on_the_circle(self):
        """test that every bounce point of a disk trajectory lies on the circle"""
        trajectory = cs.evolve(self.disk, self.elastic, [0.1, 0.2], [1.0, 0.3], 20.0)
        assert len(trajectory.bounces) > 5
        for bounce in trajectory.bounces:
            assert abs(np.linalg.norm(bounce.point) - 1.0) < 1e-15
            assert abs(np.linalg.norm(bounce.velocity_out) - np.linalg.norm([1.0, 0.3])) < 1e-12

    def test_position_lookup(self):
        """test that positions can be looked up at any time of the trajectory"""
        trajectory = cs.evolve(self.interval, self.elastic, 0.25, 1.0, 2.0)
        assert trajectory.position_at(0.5)[0] == 0.75
        assert trajectory.position_at(1.25)[0] == 0.5
        with pytest.raises(InvalidParams):
            trajectory.position_at(3.0)

    def test_ensemble_matches_single_runs(self):
        """test that an ensemble gives the trajectories of the single runs in order"""
        states = [(self.rng.uniform(-0.5, 0.5, 2), self.rng.normal(size=2)) for _ in range(20)]
        ensemble = cs.evolve_ensemble(self.disk, self.damped, states, 3.0)
        for (x0, v0), trajectory in zip(states, ensemble):
            single = cs.evolve(self.disk, self.damped, x0, v0, 3.0)
            assert [bounce.time for bounce in trajectory.bounces] == [bounce.time for bounce in single.bounces]

    def test_time_reversal(self):
        """test that the time-reversed final state retraces the bounces backwards"""
        for domain, x0, v0 in ((self.interval, 0.25, 1.0), (self.disk, [0.1, 0.2], [1.0, 0.3])):
            forward = cs.evolve(domain, self.elastic, x0, v0, 7.0)
            start, velocity = cs.time_reverse(forward)
            backward = cs.evolve(domain, self.elastic, start, velocity, 7.0)
            assert len(backward.bounces) == len(forward.bounces)
            for first, second in zip(forward.bounces, reversed(backward.bounces)):
                assert np.max(np.abs(first.point - second.point)) < 1e-12
                assert abs(first.time - (7.0 - second.time)) < 1e-12
            assert np.max(np.abs(backward.final_position - domain.vector(x0, "x0"))) < 1e-12


class TestVariations(test_data.DataForTestingPytest):
    """This class tests the boundary term of the first variation of the action.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_interval_has_no_tangent_directions(self):
        """test that the admissible variation on the interval vanishes and so does the boundary term"""
        trajectory = cs.evolve(self.interval, self.damped, 0.5, 1.0, 3.0)
        variation = cs.tangential_variation(trajectory)
        assert all(not np.any(value) for value in variation.before)
        assert cs.boundary_term(trajectory, variation) == 0.0

    def test_tangential_variations_vanish_on_the_disk(self):
        """test that tangential variations carried by α_* give a vanishing boundary term on random disk
        trajectories"""
        rules = (self.elastic, self.damped, bc.ClassicalBC(math.pi / 2), bc.ClassicalBC("swap", 0.7))
        for index in range(10000):
            radius, angle = math.sqrt(self.rng.uniform(0.0, 0.81)), self.rng.uniform(0.0, 2 * math.pi)
            x0 = [radius * math.cos(angle), radius * math.sin(angle)]
            trajectory = cs.evolve(self.disk, rules[index % 4], x0, self.rng.normal(size=2), 4.0, max_bounces=5)
            amplitudes = self.rng.normal(size=len(trajectory.bounces))
            term = cs.boundary_term(trajectory, cs.tangential_variation(trajectory, amplitudes))
            assert abs(term) <= 1e-12 * max(1, len(trajectory.bounces)) * (1.0 + np.max(np.abs(amplitudes), initial=0.0))

    def test_normal_variation_is_detected(self):
        """test that a normal variation gives -(1 + rho)|n·v| per bounce"""
        trajectory = cs.evolve(self.disk, self.damped, [0.1, 0.2], [1.0, 0.3], 10.0)
        expected = math.fsum(-(1.0 + bounce.rho) * abs(float(bounce.normal @ bounce.velocity_in))
                             for bounce in trajectory.bounces)
        term = cs.boundary_term(trajectory, cs.normal_variation(trajectory))
        assert len(trajectory.bounces) > 0
        assert term == pytest.approx(expected, abs=1e-12)
        assert term < 0

    def test_variation_mismatch(self):
        """test that a variation must be given at every bounce"""
        trajectory = cs.evolve(self.interval, self.elastic, 0.25, 1.0, 2.0)
        with pytest.raises(VariationMismatch):
            cs.tangential_variation(trajectory, [1.0, 1.0, 1.0])
        with pytest.raises(VariationMismatch):
            cs.boundary_term(trajectory, cs.VariationField([], []))


class TestMomentumAudit(test_data.DataForTestingPytest):
    """This class tests the momentum audit of classical trajectories.

    Attributes: see the documentation of the DataForTestingPytest class
    """

    def test_damped_interval_audit(self):
        """test the normal ratio and the kinetic energy ledger under rho = 0.5"""
        audit = cs.momentum_audit(cs.evolve(self.interval, self.damped, 0.5, 1.0, 3.0))
        assert list(audit["bounce"]) == [1, 2]
        assert list(audit["normal_ratio"]) == [0.5, 0.5]
        assert list(audit["tangential_ratio"]) == [1.0, 1.0]
        assert list(audit["loss_factor"]) == [0.25, 0.25]

    def test_elastic_disk_audit(self):
        """test that elastic bounces in the disk conserve both momentum components in size and the energy"""
        audit = cs.momentum_audit(cs.evolve(self.disk, self.elastic, [0.1, 0.2], [1.0, 0.3], 10.0))
        assert np.allclose(audit["normal_ratio"], 1.0, atol=1e-12)
        assert np.allclose(audit["tangential_ratio"], 1.0, atol=1e-12)
        assert np.allclose(audit["loss_factor"], 1.0, atol=1e-12)
        assert np.allclose(audit["rotation"], 0.0, atol=1e-12)

    def test_rotated_disk_audit(self):
        """test that a quarter rotation of the boundary turns the tangential momentum by π/2"""
        audit = cs.momentum_audit(cs.evolve(self.disk, bc.ClassicalBC(math.pi / 2), [0.1, 0.2], [1.0, 0.3], 10.0))
        assert len(audit) > 0
        assert np.allclose(audit["rotation"], math.pi / 2, atol=1e-12)
        assert np.allclose(audit["tangential_ratio"], 1.0, atol=1e-12)
        assert np.allclose(audit["normal_ratio"], 1.0, atol=1e-12)
