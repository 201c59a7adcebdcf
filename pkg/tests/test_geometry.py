"""
Tube Geometry Tests
"""

import math

import numpy as np
import pytest

from state.scenario import Ball, Box, Obstacle, SinusoidalMotion, TrasScenario, TubeSlice
from tools.geometry import (
    boundary_residuals,
    contains,
    obstacle_center_at,
    obstacle_union_residual,
    point_to_set_distance,
    ras_residuals,
    residual_table,
    signed_distance,
    space_residual_and_grad,
)


def _slice(center, radius):
    center = np.asarray(center, dtype=float)
    return TubeSlice(center=center, radius=radius, center_rate=np.zeros_like(center), radius_rate=0.0)


def _scenario(obstacles=()):
    return TrasScenario(
        dimension=2,
        space=Ball(center=(0.0, 0.0), radius=3.0),
        start=Ball(center=(-1.5, -1.5), radius=0.3),
        target=Ball(center=(-1.5, -1.5), radius=0.3),
        t_c=10.0,
        r_d=0.2,
        obstacles=obstacles,
    )


def test_static_obstacle_does_not_move():
    """Static obstacles are the identity motion"""
    obs = Obstacle(shape=Ball(center=(2.0, 2.0), radius=0.5))
    np.testing.assert_array_equal(obstacle_center_at(obs, 7.0), [2.0, 2.0])


def test_sinusoidal_obstacle_offsets_one_axis():
    """amplitude * sin(omega t + phase) is added on the chosen axis only"""
    obs = Obstacle(shape=Ball(center=(2.0, 2.0), radius=0.5),
                   motion=SinusoidalMotion(axis=0, amplitude=1.0, omega=math.pi))
    np.testing.assert_allclose(obstacle_center_at(obs, 0.5), [3.0, 2.0], atol=1e-15)
    np.testing.assert_allclose(obstacle_center_at(obs, 1.0), [2.0, 2.0], atol=1e-12)


def test_box_center_returns_moved_corners():
    """Box obstacles report both translated corners"""
    obs = Obstacle(shape=Box(lo=(1.0, 1.0), hi=(2.0, 2.0)),
                   motion=SinusoidalMotion(axis=1, amplitude=0.5, omega=math.pi))
    np.testing.assert_allclose(obstacle_center_at(obs, 0.5), [[1.0, 1.5], [2.0, 2.5]])


def test_ball_distance_examples():
    """Exterior and interior points of a ball"""
    obs = Obstacle(shape=Ball(center=(0.0, 0.0), radius=1.0))
    assert point_to_set_distance([3.0, 0.0], obs, 0.0) == pytest.approx(2.0)
    assert point_to_set_distance([0.5, 0.0], obs, 0.0) == 0.0


def test_box_distance_matches_boundary_grid():
    """Closed-form box distance agrees with a dense boundary sample"""
    obs = Obstacle(shape=Box(lo=(1.0, 1.0), hi=(2.0, 2.0)))
    side = np.linspace(0.0, 1.0, 2500)
    boundary = np.concatenate([
        np.column_stack([1.0 + side, np.full_like(side, 1.0)]),
        np.column_stack([1.0 + side, np.full_like(side, 2.0)]),
        np.column_stack([np.full_like(side, 1.0), 1.0 + side]),
        np.column_stack([np.full_like(side, 2.0), 1.0 + side]),
    ])
    oracle = np.min(np.linalg.norm(boundary - np.array([3.0, 3.0]), axis=1))
    assert abs(point_to_set_distance([3.0, 3.0], obs, 0.0) - oracle) <= 1e-3


def test_distance_is_one_lipschitz():
    """|d(y1, U) - d(y2, U)| <= ||y1 - y2|| for random points, obstacles and times"""
    rng = np.random.default_rng(0)
    obstacles = [
        Obstacle(shape=Ball(center=(0.5, -0.5), radius=0.7),
                 motion=SinusoidalMotion(axis=1, amplitude=0.4, omega=1.3, phase=0.2)),
        Obstacle(shape=Box(lo=(-1.0, 0.0), hi=(0.5, 0.8)),
                 motion=SinusoidalMotion(axis=0, amplitude=0.3, omega=0.7)),
        Obstacle(shape=Box(lo=(2.0, 2.0), hi=(3.0, 2.5))),
    ]
    for obs in obstacles:
        y1 = rng.uniform(-4.0, 4.0, size=(10_000, 2))
        y2 = y1 + rng.normal(scale=rng.uniform(0.01, 2.0), size=(10_000, 2))
        t = rng.uniform(0.0, 10.0, size=10_000)
        gap = np.abs(point_to_set_distance(y1, obs, t) - point_to_set_distance(y2, obs, t))
        assert np.all(gap <= np.linalg.norm(y1 - y2, axis=1) + 1e-9)


def test_distance_zero_exactly_on_membership():
    """d(x, U(t)) = 0 iff x is in U(t)"""
    rng = np.random.default_rng(1)
    obstacles = [
        Obstacle(shape=Ball(center=(0.0, 0.0), radius=1.0), motion=SinusoidalMotion(axis=0, amplitude=0.5, omega=1.0)),
        Obstacle(shape=Box(lo=(-1.0, -0.5), hi=(1.0, 0.5))),
    ]
    for obs in obstacles:
        for _ in range(500):
            x = rng.uniform(-2.0, 2.0, size=2)
            t = rng.uniform(0.0, 5.0)
            assert (point_to_set_distance(x, obs, t) == 0.0) == contains(x, obs, t)


def test_signed_distance_negative_inside():
    """Signed distance is the negative penetration depth inside and the distance outside"""
    ball = Obstacle(shape=Ball(center=(0.0, 0.0), radius=1.0))
    box = Obstacle(shape=Box(lo=(-1.0, -1.0), hi=(1.0, 1.0)))
    assert signed_distance([0.25, 0.0], ball, 0.0) == pytest.approx(-0.75)
    assert signed_distance([0.0, 0.8], box, 0.0) == pytest.approx(-0.2)
    assert signed_distance([3.0, 0.0], box, 0.0) == pytest.approx(point_to_set_distance([3.0, 0.0], box, 0.0))


def test_ras_residual_examples():
    """Space residual at the boundary-tight tube, radius at r_d, obstacle by hand"""
    obs = Obstacle(shape=Ball(center=(2.0, 0.0), radius=1.0))
    scen = _scenario(obstacles=(obs,))

    tight = ras_residuals(_slice([0.0, 0.0], 3.0), scen, 0.0)
    assert tight.space == pytest.approx(0.0)

    at_min = ras_residuals(_slice([0.0, 0.0], 0.2), scen, 0.0)
    assert at_min.radius == pytest.approx(0.0)

    res = ras_residuals(_slice([0.0, 0.0], 0.5), scen, 0.0)
    assert res.obstacle == pytest.approx(-0.5)
    assert obstacle_union_residual([0.0, 0.0], 0.5, scen, 0.0) == pytest.approx(-0.5)


def test_ras_residuals_translation_invariant():
    """Moving center, space and obstacles together leaves the residuals unchanged"""
    shift = np.array([1.3, -0.7])

    def build(offset):
        return TrasScenario(
            dimension=2,
            space=Ball(center=tuple(offset), radius=3.0),
            start=Ball(center=tuple(offset + [-1.5, -1.5]), radius=0.3),
            target=Ball(center=tuple(offset + [-1.5, -1.5]), radius=0.3),
            t_c=10.0,
            r_d=0.2,
            obstacles=(
                Obstacle(shape=Ball(center=tuple(offset + [1.0, 1.0]), radius=0.5),
                         motion=SinusoidalMotion(axis=0, amplitude=0.3, omega=1.0)),
                Obstacle(shape=Box(lo=tuple(offset + [-0.5, 1.0]), hi=tuple(offset + [0.0, 2.0]))),
            ),
        )

    base = ras_residuals(_slice([0.2, 0.4], 0.6), build(np.zeros(2)), 3.0)
    moved = ras_residuals(_slice(np.array([0.2, 0.4]) + shift, 0.6), build(shift), 3.0)
    assert moved.space == pytest.approx(base.space, abs=1e-12)
    assert moved.radius == pytest.approx(base.radius, abs=1e-12)
    np.testing.assert_allclose(moved.obstacles, base.obstacles, atol=1e-12)


def test_boundary_residual_gaps():
    """Exact boundary match gives zero gaps; a shifted end gives the shift"""
    scen = _scenario()
    gaps = boundary_residuals(scen.start.c, scen.start.radius, scen.target.c + [0.1, 0.0], scen.target.radius, scen)
    assert gaps.start_center == 0.0
    assert gaps.start_radius == 0.0
    assert gaps.target_center == pytest.approx(0.1)
    assert gaps.target_radius == 0.0


def test_box_space_residual():
    """Box space residual is the largest face excess plus the radius"""
    space = Box(lo=(0.0, 0.0), hi=(10.0, 4.0))
    value, grad = space_residual_and_grad(np.array([9.0, 2.0]), 0.5, space)
    assert value == pytest.approx(-0.5)
    np.testing.assert_array_equal(grad, [1.0, 0.0])


def test_scenario_rejects_start_outside_space():
    """Start ball must lie inside the output space"""
    with pytest.raises(ValueError, match="start"):
        TrasScenario(
            dimension=2,
            space=Ball(center=(0.0, 0.0), radius=1.0),
            start=Ball(center=(0.9, 0.0), radius=0.3),
            target=Ball(center=(0.0, 0.0), radius=0.3),
            t_c=1.0,
            r_d=0.1,
        )


def test_residual_table_matches_pointwise_residuals():
    """The batched table reproduces ras_residuals row by row, moving obstacles included"""
    scen = _scenario(obstacles=(
        Obstacle(shape=Ball(center=(1.0, 1.0), radius=0.5), motion=SinusoidalMotion(axis=1, amplitude=0.4, omega=2.0)),
        Obstacle(shape=Box(lo=(-0.5, 1.0), hi=(0.0, 2.0))),
    ))
    times = np.array([0.0, 0.7, 3.1, 10.0])
    centers = np.array([[0.1, 0.2], [0.5, -0.3], [-1.0, 0.4], [0.0, 0.0]])
    radii = np.array([0.3, 0.25, 0.6, 0.2])

    table = residual_table(centers, radii, scen, times)
    assert table.shape == (4, 3)
    for row, t, c, r in zip(table, times, centers, radii):
        point = ras_residuals(_slice(c, r), scen, t)
        assert row[0] == pytest.approx(point.space, abs=1e-12)
        assert row[1] == pytest.approx(point.radius, abs=1e-12)
        assert row[2] == pytest.approx(point.obstacle, abs=1e-12)


def test_residual_table_without_obstacles():
    """No obstacles leaves the union residual at -inf"""
    table = residual_table(np.zeros((2, 2)), np.array([0.5, 0.5]), _scenario(), np.array([0.0, 1.0]))
    assert np.all(np.isneginf(table[:, 2]))
