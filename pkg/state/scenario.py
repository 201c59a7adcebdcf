"""
Scenario schema - T-RAS problem description and run configuration

Shapes and configs are pydantic models (validated on load, unknown keys
rejected). Numeric runtime records live in state/records.py.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Annotated, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from config import settings


class _Frozen(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# -----------------------------
# 1. Shapes
# -----------------------------
class Ball(_Frozen):
    """Closed ball B(center, radius)"""

    kind: Literal["ball"] = "ball"
    center: tuple[float, ...]
    radius: float = Field(gt=0)

    @property
    def c(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)

    @property
    def dim(self) -> int:
        return len(self.center)

    def contains_ball(self, other: "Ball") -> bool:
        return float(np.linalg.norm(other.c - self.c)) + other.radius <= self.radius

    def inscribed_radius(self) -> float:
        return self.radius


class Box(_Frozen):
    """Axis-aligned box [lo, hi]"""

    kind: Literal["box"] = "box"
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @model_validator(mode="after")
    def _check_corners(self) -> "Box":
        if len(self.lo) != len(self.hi):
            raise ValueError("box corners must have the same length")
        if any(a >= b for a, b in zip(self.lo, self.hi)):
            raise ValueError("box requires lo < hi componentwise")
        return self

    @property
    def lo_arr(self) -> np.ndarray:
        return np.asarray(self.lo, dtype=float)

    @property
    def hi_arr(self) -> np.ndarray:
        return np.asarray(self.hi, dtype=float)

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.lo_arr + self.hi_arr)

    @property
    def half(self) -> np.ndarray:
        return 0.5 * (self.hi_arr - self.lo_arr)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def contains_ball(self, other: Ball) -> bool:
        return bool(np.all(np.abs(other.c - self.mid) + other.radius <= self.half))

    def inscribed_radius(self) -> float:
        return float(np.min(self.half))


Shape = Annotated[Union[Ball, Box], Field(discriminator="kind")]


# -----------------------------
# 2. Obstacle motion
# -----------------------------
class StaticMotion(_Frozen):
    kind: Literal["static"] = "static"


class SinusoidalMotion(_Frozen):
    """Offset amplitude * sin(omega * t + phase) on one axis"""

    kind: Literal["sinusoidal"] = "sinusoidal"
    axis: int = Field(ge=0)
    amplitude: float = Field(ge=0)
    omega: float
    phase: float = 0.0


Motion = Annotated[Union[StaticMotion, SinusoidalMotion], Field(discriminator="kind")]


class Obstacle(_Frozen):
    """Unsafe region U_j(t): a shape moved by a motion law"""

    shape: Shape
    motion: Motion = StaticMotion()

    @property
    def dim(self) -> int:
        return self.shape.dim

    @model_validator(mode="after")
    def _check_axis(self) -> "Obstacle":
        if isinstance(self.motion, SinusoidalMotion) and self.motion.axis >= self.shape.dim:
            raise ValueError(
                f"sinusoidal axis {self.motion.axis} out of range for dimension {self.shape.dim}"
            )
        return self


# -----------------------------
# 3. T-RAS scenario
# -----------------------------
class TrasScenario(_Frozen):
    """Output space, start/target balls, prescribed time, minimum radius, obstacles"""

    dimension: int = Field(gt=0)
    space: Shape
    start: Ball
    target: Ball
    t_c: float = Field(gt=0)
    r_d: float = Field(gt=0)
    obstacles: tuple[Obstacle, ...] = ()

    @model_validator(mode="after")
    def _check_invariants(self) -> "TrasScenario":
        n = self.dimension
        named = [("space", self.space), ("start", self.start), ("target", self.target)]
        named += [(f"obstacles[{j}]", obs) for j, obs in enumerate(self.obstacles)]
        for name, item in named:
            if item.dim != n:
                raise ValueError(f"{name}: dimension {item.dim} does not match scenario dimension {n}")

        if not self.space.contains_ball(self.start):
            raise ValueError("start: ball is not contained in space")
        if not self.space.contains_ball(self.target):
            raise ValueError("target: ball is not contained in space")

        if self.r_d > min(self.start.radius, self.target.radius):
            raise ValueError(
                f"r_d: {self.r_d} exceeds min(start.radius, target.radius) = "
                f"{min(self.start.radius, self.target.radius)}"
            )

        from tools.geometry import point_to_set_distance

        for j, obs in enumerate(self.obstacles):
            if point_to_set_distance(self.start.c, obs, 0.0) <= self.start.radius:
                raise ValueError(f"obstacles[{j}]: intersects start ball at t = 0")
            if point_to_set_distance(self.target.c, obs, self.t_c) <= self.target.radius:
                raise ValueError(f"obstacles[{j}]: intersects target ball at t = t_c")
        return self

    def space_radius(self) -> float:
        """r_Y used for default Lipschitz budgets (inscribed radius for a box)"""
        return self.space.inscribed_radius()


# -----------------------------
# 4. Run configuration
# -----------------------------
class TrainConfig(_Frozen):
    """Collocation radius, Lipschitz budgets, loss weights, Adam settings"""

    seed: int
    epsilon: Optional[float] = Field(default=None, gt=0)
    lipschitz_center: Optional[float] = Field(default=None, gt=0)
    lipschitz_radius: Optional[float] = Field(default=None, gt=0)
    phys_weights: tuple[float, float, float, float, float] = (settings.DEFAULT_PHYS_WEIGHT,) * 5
    boundary_weights: tuple[float, float, float, float] = (settings.DEFAULT_BOUNDARY_WEIGHT,) * 4
    batch_size: Optional[int] = Field(default=None, gt=0)
    learning_rate: float = Field(default=settings.DEFAULT_LEARNING_RATE, gt=0)
    max_epochs: int = Field(default=settings.DEFAULT_MAX_EPOCHS, gt=0)
    tolerance: float = Field(default=settings.DEFAULT_TOLERANCE, gt=0)
    hidden: tuple[int, ...] = settings.DEFAULT_HIDDEN
    hinge_margin: float = Field(default=settings.TRAIN_HINGE_MARGIN, ge=0)
    rate_margin: float = Field(default=settings.TRAIN_RATE_MARGIN, ge=0, lt=1)

    @field_validator("phys_weights", "boundary_weights")
    @classmethod
    def _non_negative(cls, value):
        if any(w < 0 for w in value):
            raise ValueError("loss weights must be >= 0")
        return value

    @field_validator("hidden")
    @classmethod
    def _positive_widths(cls, value):
        if not value or any(w < 1 for w in value):
            raise ValueError("hidden widths must be >= 1")
        return value

    def resolved(self, scen: TrasScenario) -> "TrainConfig":
        """Fill unset epsilon / Lipschitz budgets from the scenario"""
        eps = self.epsilon if self.epsilon is not None else scen.t_c * settings.EPSILON_FRACTION
        straight = float(np.linalg.norm(scen.target.c - scen.start.c))
        l_c = self.lipschitz_center
        if l_c is None:
            l_c = settings.LIPSCHITZ_BUDGET_FACTOR * straight / scen.t_c
            if l_c <= 0:
                l_c = settings.LIPSCHITZ_BUDGET_FACTOR * scen.space_radius() / scen.t_c
        l_r = self.lipschitz_radius
        if l_r is None:
            l_r = settings.LIPSCHITZ_BUDGET_FACTOR * scen.space_radius() / scen.t_c
        if eps >= scen.t_c:
            raise ValueError(f"epsilon {eps} must be smaller than t_c {scen.t_c}")
        return self.model_copy(update={"epsilon": eps, "lipschitz_center": l_c, "lipschitz_radius": l_r})

    @property
    def is_resolved(self) -> bool:
        return None not in (self.epsilon, self.lipschitz_center, self.lipschitz_radius)

    @property
    def eta_hat(self) -> float:
        """eta_hat = -(L_c + L_r) * eps"""
        if not self.is_resolved:
            raise ValueError("eta_hat needs a resolved TrainConfig")
        return -(self.lipschitz_center + self.lipschitz_radius) * self.epsilon

    def loss_config(self, scen: TrasScenario) -> "LossConfig":
        cfg = self if self.is_resolved else self.resolved(scen)
        return LossConfig(
            eta_hat=cfg.eta_hat,
            r_d=scen.r_d,
            lipschitz_center=cfg.lipschitz_center,
            lipschitz_radius=cfg.lipschitz_radius,
            phys_weights=cfg.phys_weights,
            boundary_weights=cfg.boundary_weights,
            hinge_margin=cfg.hinge_margin,
            rate_margin=cfg.rate_margin,
        )


@dataclass(frozen=True)
class LossConfig:
    """Hyper-parameters of the physics and boundary losses"""

    eta_hat: float
    r_d: float
    lipschitz_center: float
    lipschitz_radius: float
    phys_weights: tuple = (settings.DEFAULT_PHYS_WEIGHT,) * 5
    boundary_weights: tuple = (settings.DEFAULT_BOUNDARY_WEIGHT,) * 4
    hinge_margin: float = 0.0
    rate_margin: float = 0.0
    signed_obstacle_distance: bool = True


class StageFunnel(_Frozen):
    """Funnel half-widths for one stage k >= 2, one entry per axis"""

    p: tuple[float, ...]
    q: tuple[float, ...]
    mu: tuple[float, ...]

    @model_validator(mode="after")
    def _check_widths(self) -> "StageFunnel":
        if not len(self.p) == len(self.q) == len(self.mu):
            raise ValueError("p, q and mu must have the same length")
        if any(not pi > qi > 0 for pi, qi in zip(self.p, self.q)):
            raise ValueError("funnel widths must satisfy p > q > 0")
        if any(m < 0 for m in self.mu):
            raise ValueError("funnel rates mu must be >= 0")
        return self


class ControllerConfig(_Frozen):
    """Gains kappa_1..kappa_N and optional explicit funnels (auto-initialized when omitted)"""

    gains: Optional[tuple[float, ...]] = None
    funnels: Optional[tuple[StageFunnel, ...]] = None
    funnel_q: float = Field(default=settings.FUNNEL_Q, gt=0)
    funnel_mu: Optional[float] = Field(default=None, ge=0)

    @field_validator("gains")
    @classmethod
    def _positive_gains(cls, value):
        if value is not None and any(k <= 0 for k in value):
            raise ValueError("gains must be > 0")
        return value


class SimConfig(_Frozen):
    """Closed-loop rollout settings"""

    model: Literal["omnibot", "quadrotor"]
    seed: int
    step: Optional[float] = Field(default=None, gt=0)
    w_max: float = Field(default=settings.DEFAULT_W_MAX, ge=0)
    initial_output: Optional[tuple[float, ...]] = None
    initial_velocity: Optional[tuple[float, ...]] = None
    heading: float = 0.0
    zoh_control: bool = True

    def step_for(self, t_c: float) -> float:
        return self.step if self.step is not None else t_c * settings.DEFAULT_STEP_FRACTION


PLANT_DEPTH = {"omnibot": 1, "quadrotor": 2}


class ScenarioBundle(_Frozen):
    """Everything one scenario file carries"""

    scenario: TrasScenario
    training: TrainConfig
    controller: ControllerConfig = ControllerConfig()
    simulation: SimConfig

    @model_validator(mode="after")
    def _check_cross(self) -> "ScenarioBundle":
        n = self.scenario.dimension
        sim = self.simulation
        if sim.initial_output is not None and len(sim.initial_output) != n:
            raise ValueError(f"simulation.initial_output: expected length {n}")
        if sim.initial_velocity is not None and len(sim.initial_velocity) != n:
            raise ValueError(f"simulation.initial_velocity: expected length {n}")
        if sim.model == "omnibot" and (n != 2 or abs(sim.heading) >= math.pi / 2):
            raise ValueError("simulation: omnibot needs dimension 2 and |heading| < pi/2")
        if sim.model == "quadrotor" and n != 3:
            raise ValueError("simulation: quadrotor needs dimension 3")

        eps = self.training.epsilon
        if eps is not None and eps >= self.scenario.t_c:
            raise ValueError(f"training.epsilon: {eps} must be smaller than t_c {self.scenario.t_c}")

        depth = PLANT_DEPTH[sim.model]
        ctrl = self.controller
        if ctrl.gains is not None and len(ctrl.gains) != depth:
            raise ValueError(f"controller.gains: {sim.model} needs {depth} gain(s), got {len(ctrl.gains)}")
        if ctrl.funnels is not None:
            if len(ctrl.funnels) != depth - 1:
                raise ValueError(f"controller.funnels: {sim.model} needs {depth - 1} stage(s), "
                                 f"got {len(ctrl.funnels)}")
            for k, funnel in enumerate(ctrl.funnels):
                if len(funnel.p) != n:
                    raise ValueError(f"controller.funnels[{k}]: expected {n} entries per axis, got {len(funnel.p)}")
        return self


# -----------------------------
# 5. Tube slice
# -----------------------------
@dataclass(frozen=True)
class TubeSlice:
    """Gamma(t): center, radius and their time rates"""

    center: np.ndarray
    radius: float
    center_rate: np.ndarray
    radius_rate: float
