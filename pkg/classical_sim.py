"""This module contains the classical side of the laboratory: free motion in the interval, the disk and the
rectangle under a classical boundary condition (α, ρ).

Between two boundary events the particle flies in a straight line, so every flight is integrated exactly by
intersecting the line with the boundary. At a boundary point x⁻ hit with velocity v the particle re-emerges at
x⁺ = α(x⁻) with the velocity

    v_out = α_*(tangential part of v) − ρ(x⁻)·(n(x⁻)·v)·n(x⁺)

where n is the exterior normal. ρ = inf absorbs the particle.

The most important functionalities include functions to
    - evolve a trajectory and evolve an ensemble of trajectories
    - evaluate the action S = ∫ |ẋ|² dt of a trajectory
    - evaluate the boundary term of the first variation of the action for a variation field
    - audit the momentum and the kinetic energy at every bounce
    - build the time-reversed initial state of a trajectory
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

import analyze as ana
import config
from exceptions import AbsorbedEarly, InvalidParams, StalledAtBoundary, VariationMismatch

logger = logging.getLogger(__name__)

DOMAIN_KINDS = ("interval", "disk", "rectangle")
GRAZING_TOLERANCE = 1e-14  # |n·v| below this is a tangential continuation, not a bounce
STALL_INTERVAL = 1e-15
CORNER_ALLOWANCE = 1  # consecutive zero-length flights allowed, e.g. the second wall of a rectangle corner
DEFAULT_MAX_BOUNCES = 10000


def _rotation(angle: float):
    return np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])


class Domain:
    """A billiard table with the flat metric.

    Attributes:
        kind ('str'): "interval" ([0, L]), "disk" (radius R around the origin) or "rectangle" ([0, W] x [0, H])
        size ('tuple'): (L,), (R,) or (W, H)
        dimension ('int'): 1 for the interval, 2 otherwise
    """

    def __init__(self, kind: str = "interval", size=(1.0,)):
        if kind not in DOMAIN_KINDS:
            raise InvalidParams(f"Unknown domain '{kind}', expected one of {', '.join(DOMAIN_KINDS)}.")
        size = tuple(float(value) for value in np.atleast_1d(size))
        expected = 2 if kind == "rectangle" else 1
        if len(size) != expected:
            raise InvalidParams(f"A {kind} needs {expected} size value(s), got {len(size)}.")
        if not all(math.isfinite(value) and value > 0 for value in size):
            raise InvalidParams(f"The size of a {kind} must be positive and finite, got {size}.")
        self.kind = kind
        self.size = size
        self.dimension = 1 if kind == "interval" else 2

    def __str__(self):
        return f"{self.kind} {self.size}"

    def vector(self, values, label: str):
        """convert a position or a velocity to an array of the domain's dimension

        :param values: the coordinates ('list', 'tuple', 'float' or 'numpy.ndarray')
        :param label: the name used in the error message ('str')
        :return: the coordinates ('numpy.ndarray')
        """
        vector = np.atleast_1d(np.asarray(values, dtype=float)).ravel()
        if len(vector) != self.dimension or not np.all(np.isfinite(vector)):
            raise InvalidParams(f"{label} must be {self.dimension} finite number(s) for a {self.kind}.")
        return vector

    def contains(self, point):
        """True if the point lies strictly inside the domain ('bool')"""
        if self.kind == "disk":
            return float(point @ point) < self.size[0] ** 2
        return bool(np.all(point > 0) and np.all(point < np.array(self.size)))

    def tangent(self, normal):
        """return the positively oriented unit tangent at a boundary point, empty for the interval

        :param normal: the exterior normal at the point ('numpy.ndarray')
        :return: the tangent ('numpy.ndarray'), or None for the interval
        """
        if self.kind == "interval":
            return None
        return np.array([-normal[1], normal[0]])

    def next_hit(self, position, velocity):
        """find where a straight flight meets the boundary

        :param position: the start of the flight, inside the domain or on its boundary ('numpy.ndarray')
        :param velocity: the constant velocity ('numpy.ndarray')
        :return: the flight time (inf if the flight never ends), the boundary point and its exterior normal ('tuple')
        """
        if self.kind == "disk":
            return self._disk_hit(position, velocity)
        delay, hit_axis, wall = math.inf, None, None
        for axis, length in enumerate(self.size):
            speed = velocity[axis]
            if speed > 0:
                candidate, candidate_wall = (length - position[axis]) / speed, length
            elif speed < 0:
                candidate, candidate_wall = position[axis] / -speed, 0.0
            else:
                continue
            if candidate < delay:
                delay, hit_axis, wall = max(candidate, 0.0), axis, candidate_wall
        if hit_axis is None:
            return math.inf, None, None
        hit = position + velocity * delay
        hit[hit_axis] = wall
        if self.kind == "rectangle":
            # a corner stays on the rectangle even when the other coordinate overshoots by rounding
            other = 1 - hit_axis
            hit[other] = min(max(hit[other], 0.0), self.size[other])
        normal = np.zeros(self.dimension)
        normal[hit_axis] = 1.0 if wall > 0 else -1.0
        return delay, hit, normal

    def _disk_hit(self, position, velocity):
        radius = self.size[0]
        speed_squared = float(velocity @ velocity)
        if speed_squared == 0.0:
            return math.inf, None, None
        b = float(position @ velocity)
        c = float(position @ position) - radius ** 2
        root = math.sqrt(max(b * b - speed_squared * c, 0.0))
        if b <= 0:
            delay = (root - b) / speed_squared
        else:
            delay = -c / (b + root) if b + root > 0 else 0.0
        delay = max(delay, 0.0)
        hit = position + velocity * delay
        hit = hit * (radius / math.hypot(*hit))
        return delay, hit, hit / radius

    def glue(self, alpha, point, normal):
        """apply the boundary map α to a boundary point

        :param alpha: "identity", "swap" or a rotation angle ('str' or 'float')
        :param point: the boundary point x⁻ ('numpy.ndarray')
        :param normal: the exterior normal at x⁻ ('numpy.ndarray')
        :return: the point x⁺, the exterior normal at x⁺ and the matrix of the pushforward α_* ('tuple')
        """
        identity = np.eye(self.dimension)
        if alpha == "identity":
            return point.copy(), normal.copy(), identity
        if self.kind == "disk":
            angle = math.pi if alpha == "swap" else float(alpha)
            rotation = _rotation(angle)
            point_out = rotation @ point
            point_out = point_out * (self.size[0] / math.hypot(*point_out))
            return point_out, point_out / self.size[0], rotation
        if alpha != "swap":
            raise InvalidParams(f"A rotation of the boundary is only defined for the disk, not for a {self.kind}.")
        # opposite walls are glued by a translation
        axis = int(np.flatnonzero(normal)[0])
        point_out = point.copy()
        point_out[axis] = 0.0 if normal[axis] > 0 else self.size[axis]
        return point_out, -normal, identity


class Segment:
    """One free flight.

    Attributes:
        t_start, t_end ('float'): the start and end time
        start ('numpy.ndarray'): the position at t_start
        velocity ('numpy.ndarray'): the constant velocity
    """

    def __init__(self, t_start: float, t_end: float, start, velocity):
        self.t_start = t_start
        self.t_end = t_end
        self.start = start
        self.velocity = velocity

    def position_at(self, time: float):
        """return the position at a time inside the segment ('numpy.ndarray')"""
        return self.start + self.velocity * (time - self.t_start)


class Bounce:
    """One boundary event.

    Attributes:
        time ('float'): the time of the event
        point, point_out ('numpy.ndarray'): x⁻ and x⁺ = α(x⁻)
        normal, normal_out ('numpy.ndarray'): the exterior normals at x⁻ and x⁺
        pushforward ('numpy.ndarray'): the matrix of α_* acting on tangent vectors at x⁻
        velocity_in, velocity_out ('numpy.ndarray'): the velocity before and after the event
        rho ('float'): the reflectivity at x⁻
    """

    def __init__(self, time, point, point_out, normal, normal_out, pushforward, velocity_in, velocity_out, rho):
        self.time = time
        self.point = point
        self.point_out = point_out
        self.normal = normal
        self.normal_out = normal_out
        self.pushforward = pushforward
        self.velocity_in = velocity_in
        self.velocity_out = velocity_out
        self.rho = rho

    def __str__(self):
        return f"bounce at t = {self.time:.12g}, x = {self.point}, rho = {self.rho}"


class Trajectory:
    """A piecewise free trajectory.

    Attributes:
        domain ('classical_sim.Domain'): the billiard table
        cbc ('bc_core.ClassicalBC'): the boundary condition
        segments ('list'): the 'classical_sim.Segment' flights of positive length in time order
        bounces ('list'): the 'classical_sim.Bounce' events in time order
        status ('str'): "completed", "absorbed" or "max_bounces"
        t_final ('float'): the time the trajectory ends
        final_position, final_velocity ('numpy.ndarray'): the state at t_final
    """

    def __init__(self, domain, cbc, segments, bounces, status, t_final, final_position, final_velocity):
        self.domain = domain
        self.cbc = cbc
        self.segments = segments
        self.bounces = bounces
        self.status = status
        self.t_final = t_final
        self.final_position = final_position
        self.final_velocity = final_velocity

    def __str__(self):
        return (f"{self.status} trajectory in the {self.domain} until t = {self.t_final:.12g} with "
                f"{len(self.bounces)} bounce(s)")

    def position_at(self, time: float):
        """return the position at a time of the trajectory; at a bounce time the outgoing position

        :param time: a time in [0, t_final] ('float')
        :return: the position ('numpy.ndarray')
        """
        if not 0.0 <= time <= self.t_final:
            raise InvalidParams(f"Time {time} lies outside the trajectory [0, {self.t_final}].")
        for segment in reversed(self.segments):
            if segment.t_start <= time:
                return segment.position_at(min(time, segment.t_end))
        return self.final_position


def evolve(domain: Domain, cbc, x0, v0, t_final: float, max_bounces: int = DEFAULT_MAX_BOUNCES,
           strict: bool = False):
    """integrate a trajectory exactly from one boundary event to the next

    :param domain: the billiard table ('classical_sim.Domain')
    :param cbc: the boundary condition ('bc_core.ClassicalBC')
    :param x0: the initial position, strictly inside the domain ('list' or 'numpy.ndarray')
    :param v0: the initial velocity ('list' or 'numpy.ndarray')
    :param t_final: the final time, positive ('float')
    :param max_bounces: the number of bounces after which the trajectory stops ('int')
    :param strict: raise AbsorbedEarly instead of ending with status "absorbed" ('bool')
    :return: the trajectory ('classical_sim.Trajectory')
    """
    position = domain.vector(x0, "x0")
    velocity = domain.vector(v0, "v0")
    if not domain.contains(position):
        raise InvalidParams(f"x0 = {position} does not lie strictly inside the {domain}.")
    if not (math.isfinite(t_final) and t_final > 0):
        raise InvalidParams(f"The final time must be positive and finite, got {t_final}.")
    if max_bounces < 0:
        raise InvalidParams("max_bounces must not be negative.")
    if cbc.is_rotation and domain.kind != "disk":
        raise InvalidParams(f"A rotation of the boundary is only defined for the disk, not for a {domain.kind}.")

    time, status, stalled = 0.0, "completed", 0
    segments, bounces = [], []
    while True:
        delay, hit, normal = domain.next_hit(position, velocity)
        if time + delay >= t_final:
            segments.append(Segment(time, t_final, position, velocity))
            position = position + velocity * (t_final - time)
            time = t_final
            break
        stalled = stalled + 1 if delay < STALL_INTERVAL else 0
        if stalled > CORNER_ALLOWANCE:
            raise StalledAtBoundary(time)
        if delay > 0:
            segments.append(Segment(time, time + delay, position, velocity))
        time += delay
        normal_speed = float(normal @ velocity)
        if abs(normal_speed) < GRAZING_TOLERANCE:
            position, velocity = hit, velocity - normal_speed * normal
            continue
        if len(bounces) == max_bounces:
            logger.warning("bounce budget of %d exhausted at t = %.12g", max_bounces, time)
            position, status = hit, "max_bounces"
            break
        rho = cbc.rho_at(hit)
        if math.isinf(rho):
            position, status = hit, "absorbed"
            if strict:
                raise AbsorbedEarly(time, hit)
            break
        point_out, normal_out, pushforward = domain.glue(cbc.alpha, hit, normal)
        tangential = velocity - normal_speed * normal
        velocity_out = pushforward @ tangential - rho * normal_speed * normal_out
        bounces.append(Bounce(time, hit, point_out, normal, normal_out, pushforward, velocity, velocity_out, rho))
        position, velocity = point_out, velocity_out

    logger.debug("evolved %s: %d bounce(s), status %s", domain, len(bounces), status)
    return Trajectory(domain, cbc, segments, bounces, status, time, position, velocity)


def evolve_ensemble(domain: Domain, cbc, states, t_final: float, max_bounces: int = DEFAULT_MAX_BOUNCES):
    """evolve many initial states; the result does not depend on the number of workers

    :param domain: the billiard table ('classical_sim.Domain')
    :param cbc: the boundary condition ('bc_core.ClassicalBC')
    :param states: pairs (x0, v0) ('list')
    :param t_final: the final time ('float')
    :param max_bounces: the bounce budget of every trajectory ('int')
    :return: the trajectories in the order of the states ('list')
    """
    with ThreadPoolExecutor(max_workers=config.worker_count()) as executor:
        return list(executor.map(lambda state: evolve(domain, cbc, state[0], state[1], t_final, max_bounces),
                                 states))


def action(trajectory: Trajectory):
    """return the action S = Σ |v|²·(t_end − t_start) over the flights, without a factor ½ ('float')"""
    return math.fsum(float(segment.velocity @ segment.velocity) * (segment.t_end - segment.t_start)
                     for segment in trajectory.segments)


class VariationField:
    """A variation δx of a trajectory evaluated just before and just after each bounce.

    Attributes:
        before ('list'): δx(t_m⁻) per bounce ('numpy.ndarray' each)
        after ('list'): δx(t_m⁺) per bounce ('numpy.ndarray' each)
        tangential ('list'): per bounce, True if δx(t_m⁻) is tangent to the boundary
    """

    def __init__(self, before: list, after: list, tangential: list = None):
        if len(before) != len(after):
            raise InvalidParams("A variation field needs as many values after the bounces as before.")
        self.before = before
        self.after = after
        self.tangential = tangential if tangential is not None else [False] * len(before)

    def __len__(self):
        return len(self.before)


def tangential_variation(trajectory: Trajectory, amplitudes=None):
    """build the admissible variation: tangent to the boundary at every bounce and carried across it by α_*

    :param trajectory: the trajectory ('classical_sim.Trajectory')
    :param amplitudes: one amplitude per bounce, all 1 by default ('list' or 'numpy.ndarray')
    :return: the variation field; it vanishes on the interval, which has no tangent directions
             ('classical_sim.VariationField')
    """
    count = len(trajectory.bounces)
    amplitudes = np.ones(count) if amplitudes is None else np.asarray(amplitudes, dtype=float)
    if len(amplitudes) != count:
        raise VariationMismatch(count, len(amplitudes))
    before, after = [], []
    for bounce, amplitude in zip(trajectory.bounces, amplitudes):
        tangent = trajectory.domain.tangent(bounce.normal)
        if tangent is None:
            displacement = np.zeros(trajectory.domain.dimension)
        else:
            displacement = amplitude * tangent
        before.append(displacement)
        after.append(bounce.pushforward @ displacement)
    return VariationField(before, after, [True] * count)


def normal_variation(trajectory: Trajectory):
    """build the inadmissible variation δx(t_m⁻) = n(x⁻), δx(t_m⁺) = n(x⁺) ('classical_sim.VariationField')"""
    return VariationField([bounce.normal.copy() for bounce in trajectory.bounces],
                          [bounce.normal_out.copy() for bounce in trajectory.bounces])


def boundary_term(trajectory: Trajectory, variation: VariationField):
    """evaluate the boundary contribution Σ_m [δx(t_m⁺)·v_out − δx(t_m⁻)·v_in] to the first variation of the action

    :param trajectory: the trajectory ('classical_sim.Trajectory')
    :param variation: the variation at every bounce ('classical_sim.VariationField')
    :return: the boundary term; it vanishes for admissible variations ('float')
    """
    if len(variation) != len(trajectory.bounces):
        raise VariationMismatch(len(trajectory.bounces), len(variation))
    return math.fsum(float(after @ bounce.velocity_out) - float(before @ bounce.velocity_in)
                     for bounce, before, after in zip(trajectory.bounces, variation.before, variation.after))


def _tangential_part(velocity, normal):
    return velocity - float(normal @ velocity) * normal


def momentum_audit(trajectory: Trajectory):
    """check the normal and tangential laws and the kinetic energy at every bounce

    normal_ratio is |n(x⁺)·v_out| / |n(x⁻)·v_in| and equals ρ; tangential_ratio compares the norms of the
    tangential parts and equals 1 (also on the interval, where both parts vanish); rotation is the signed angle
    from the tangential part of v_in to that of v_out; loss_factor is the ratio of the kinetic energies.

    :param trajectory: the trajectory ('classical_sim.Trajectory')
    :return: a data frame with one row per bounce ('pandas.core.frame.DataFrame')
    """
    rows = []
    for number, bounce in enumerate(trajectory.bounces, start=1):
        normal_in = abs(float(bounce.normal @ bounce.velocity_in))
        normal_out = abs(float(bounce.normal_out @ bounce.velocity_out))
        tangential_in = _tangential_part(bounce.velocity_in, bounce.normal)
        tangential_out = _tangential_part(bounce.velocity_out, bounce.normal_out)
        norm_in, norm_out = np.linalg.norm(tangential_in), np.linalg.norm(tangential_out)
        if norm_in == 0.0 and norm_out == 0.0:
            tangential_ratio, rotation = 1.0, 0.0
        else:
            tangential_ratio = norm_out / norm_in if norm_in > 0 else math.inf
            cross = tangential_in[0] * tangential_out[1] - tangential_in[1] * tangential_out[0]
            rotation = math.atan2(cross, float(tangential_in @ tangential_out))
        kinetic_in = float(bounce.velocity_in @ bounce.velocity_in)
        kinetic_out = float(bounce.velocity_out @ bounce.velocity_out)
        rows.append((number, bounce.time, bounce.rho, normal_out / normal_in, tangential_ratio, rotation, kinetic_in,
                     kinetic_out, kinetic_out / kinetic_in))
    return ana.audit_frame(rows)


def time_reverse(trajectory: Trajectory):
    """return the initial state that retraces an elastic trajectory backwards

    For α = identity or swap and ρ = 1, evolving this state for t_final visits the bounces in reverse order.

    :param trajectory: the trajectory ('classical_sim.Trajectory')
    :return: the final position and the reversed final velocity ('tuple')
    """
    return trajectory.final_position.copy(), -trajectory.final_velocity
