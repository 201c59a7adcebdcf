"""
Tube geometry - moving obstacles, point-to-set distances and the residuals
whose non-positivity (with margin) makes a time-varying ball a valid tube.

Every function accepts points with a trailing dimension axis, so the same
code serves scalar queries and batched training evaluations.
"""

from dataclasses import dataclass

import numpy as np

from state.scenario import Ball, Box, Obstacle, SinusoidalMotion, TrasScenario, TubeSlice


# -----------------------------
# Obstacle motion
# -----------------------------
def obstacle_offset(obs: Obstacle, t) -> np.ndarray:
    """Translation of the obstacle at time(s) t, shape (..., n)"""
    t = np.asarray(t, dtype=float)
    offset = np.zeros(t.shape + (obs.dim,))
    motion = obs.motion
    if isinstance(motion, SinusoidalMotion):
        offset[..., motion.axis] = motion.amplitude * np.sin(motion.omega * t + motion.phase)
    return offset


def obstacle_center_at(obs: Obstacle, t: float) -> np.ndarray:
    """Ball: moved center (n,). Box: moved corners stacked as [lo, hi] (2, n)."""
    offset = obstacle_offset(obs, t)
    if isinstance(obs.shape, Ball):
        return obs.shape.c + offset
    return np.stack([obs.shape.lo_arr + offset, obs.shape.hi_arr + offset])


# -----------------------------
# Distances
# -----------------------------
def _safe_unit(v: np.ndarray, norm: np.ndarray) -> np.ndarray:
    norm = np.asarray(norm)[..., None]
    return np.where(norm > 0, v / np.where(norm > 0, norm, 1.0), 0.0)


def signed_distance_and_grad(x, obs: Obstacle, t):
    """
    Signed distance to U_j(t) and its gradient w.r.t. x.

    Positive outside (equal to the Euclidean point-to-set distance), negative
    penetration depth inside. x has shape (..., n); t broadcasts against x[..., 0].
    """
    x = np.asarray(x, dtype=float)
    offset = obstacle_offset(obs, np.broadcast_to(t, x.shape[:-1]))
    shape = obs.shape

    if isinstance(shape, Ball):
        rel = x - (shape.c + offset)
        norm = np.linalg.norm(rel, axis=-1)
        return norm - shape.radius, _safe_unit(rel, norm)

    rel = x - (shape.mid + offset)
    q = np.abs(rel) - shape.half
    outside = np.maximum(q, 0.0)
    out_norm = np.linalg.norm(outside, axis=-1)
    out_grad = _safe_unit(outside * np.sign(rel), out_norm)

    axis = np.argmax(q, axis=-1)
    inside_depth = np.take_along_axis(q, axis[..., None], axis=-1)[..., 0]
    in_grad = np.zeros_like(x)
    np.put_along_axis(in_grad, axis[..., None], np.sign(np.take_along_axis(rel, axis[..., None], axis=-1)), axis=-1)

    is_out = out_norm > 0
    dist = np.where(is_out, out_norm, inside_depth)
    grad = np.where(is_out[..., None], out_grad, in_grad)
    return dist, grad


def point_to_set_distance(x, obs: Obstacle, t) -> np.ndarray | float:
    """d(x, U_j(t)) = inf over the moved set of ||x - z||; zero inside or on the boundary"""
    x = np.asarray(x, dtype=float)
    offset = obstacle_offset(obs, np.broadcast_to(t, x.shape[:-1]))
    shape = obs.shape

    if isinstance(shape, Ball):
        dist = np.maximum(0.0, np.linalg.norm(x - (shape.c + offset), axis=-1) - shape.radius)
    else:
        lo = shape.lo_arr + offset
        hi = shape.hi_arr + offset
        dist = np.linalg.norm(x - np.clip(x, lo, hi), axis=-1)

    return float(dist) if np.ndim(dist) == 0 else dist


def signed_distance(x, obs: Obstacle, t) -> np.ndarray | float:
    dist, _ = signed_distance_and_grad(x, obs, t)
    return float(dist) if np.ndim(dist) == 0 else dist


def distance_and_grad(x, obs: Obstacle, t):
    """Unsigned distance and its gradient (zero inside the obstacle)"""
    dist, grad = signed_distance_and_grad(x, obs, t)
    inside = dist <= 0
    return np.where(inside, 0.0, dist), np.where(inside[..., None], 0.0, grad)


def contains(x, obs: Obstacle, t) -> bool:
    """Membership predicate x in U_j(t), boundary included"""
    x = np.asarray(x, dtype=float)
    moved = obstacle_center_at(obs, t)
    if isinstance(obs.shape, Ball):
        return bool(np.linalg.norm(x - moved) <= obs.shape.radius)
    return bool(np.all(moved[0] <= x) and np.all(x <= moved[1]))


# -----------------------------
# Output space
# -----------------------------
def space_residual_and_grad(c, r, space: Ball | Box):
    """
    Containment residual of B(c, r) in the output space and its gradient w.r.t. c.

    Ball: ||c - c_Y|| + r - r_Y. Box: max_i(|c_i - m_i| - h_i) + r.
    Both are 1-Lipschitz in c.
    """
    c = np.asarray(c, dtype=float)
    r = np.asarray(r, dtype=float)

    if isinstance(space, Ball):
        rel = c - space.c
        norm = np.linalg.norm(rel, axis=-1)
        return norm + r - space.radius, _safe_unit(rel, norm)

    rel = c - space.mid
    q = np.abs(rel) - space.half
    axis = np.argmax(q, axis=-1)
    worst = np.take_along_axis(q, axis[..., None], axis=-1)[..., 0]
    grad = np.zeros_like(c)
    np.put_along_axis(grad, axis[..., None], np.sign(np.take_along_axis(rel, axis[..., None], axis=-1)), axis=-1)
    return worst + r, grad


# -----------------------------
# Residual records
# -----------------------------
@dataclass(frozen=True)
class RasResiduals:
    """Containment residuals at one time; all <= eta means the conditions hold with margin -eta"""

    space: float
    radius: float
    obstacles: tuple

    @property
    def obstacle(self) -> float:
        """Residual w.r.t. the union of obstacles"""
        return max(self.obstacles) if self.obstacles else -np.inf

    def worst(self) -> float:
        return max(self.space, self.radius, self.obstacle)


@dataclass(frozen=True)
class BoundaryGaps:
    start_center: float
    start_radius: float
    target_center: float
    target_radius: float

    def worst(self) -> float:
        return max(self.start_center, self.start_radius, self.target_center, self.target_radius)


def obstacle_residuals(c, r, scen: TrasScenario, t) -> np.ndarray:
    """-d(c, U_j(t)) + r per obstacle, stacked on the last axis"""
    c = np.asarray(c, dtype=float)
    r = np.asarray(r, dtype=float)
    if not scen.obstacles:
        return np.empty(np.broadcast_shapes(c.shape[:-1], r.shape) + (0,))
    return np.stack([-point_to_set_distance(c, obs, t) + r for obs in scen.obstacles], axis=-1)


def ras_residuals(slice_: TubeSlice, scen: TrasScenario, t: float) -> RasResiduals:
    c = np.asarray(slice_.center, dtype=float)
    r = float(slice_.radius)
    space, _ = space_residual_and_grad(c, r, scen.space)
    obstacles = tuple(float(v) for v in obstacle_residuals(c, r, scen, t))
    return RasResiduals(space=float(space), radius=-r + scen.r_d, obstacles=obstacles)


def obstacle_union_residual(c, r, scen: TrasScenario, t) -> np.ndarray | float:
    """-d(c, U(t)) + r with U(t) the union of all obstacles; accepts batches of (c, r, t)"""
    per_obstacle = obstacle_residuals(c, r, scen, t)
    if per_obstacle.shape[-1] == 0:
        union = np.full(per_obstacle.shape[:-1], -np.inf)
    else:
        union = per_obstacle.max(axis=-1)
    return float(union) if np.ndim(union) == 0 else union


def residual_table(centers, radii, scen: TrasScenario, times) -> np.ndarray:
    """(len(times), 3): space, radius and obstacle-union residuals of a sampled tube"""
    centers = np.asarray(centers, dtype=float)
    radii = np.asarray(radii, dtype=float)
    times = np.asarray(times, dtype=float)
    space, _ = space_residual_and_grad(centers, radii, scen.space)
    obstacle = obstacle_union_residual(centers, radii, scen, times)
    return np.column_stack([space, -radii + scen.r_d, np.broadcast_to(obstacle, radii.shape)])


def boundary_residuals(c0, r0: float, c_end, r_end: float, scen: TrasScenario) -> BoundaryGaps:
    """Gaps of the tube ends against the start and target balls"""
    return BoundaryGaps(
        start_center=float(np.linalg.norm(np.asarray(c0, dtype=float) - scen.start.c)),
        start_radius=abs(float(r0) - scen.start.radius),
        target_center=float(np.linalg.norm(np.asarray(c_end, dtype=float) - scen.target.c)),
        target_radius=abs(float(r_end) - scen.target.radius),
    )
