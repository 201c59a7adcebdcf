"""
Result records - loss breakdowns, training logs, certificates, trajectories
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field


# -----------------------------
# Training
# -----------------------------
@dataclass(frozen=True)
class LossBreakdown:
    """Unweighted sub-losses plus the weighted totals"""

    space: float            # L_p1
    radius: float           # L_p2
    obstacle: float         # L_p3
    center_rate: float      # L_p4
    radius_rate: float      # L_p5
    start_center: float     # MSE(c(0), c_S)
    start_radius: float     # MSE(r(0), r_S)
    target_center: float    # MSE(c(t_c), c_T)
    target_radius: float    # MSE(r(t_c), r_T)
    physics: float
    boundary: float
    total: float

    @property
    def physics_terms(self) -> tuple:
        return (self.space, self.radius, self.obstacle, self.center_rate, self.radius_rate)

    @property
    def boundary_terms(self) -> tuple:
        return (self.start_center, self.start_radius, self.target_center, self.target_radius)

    def as_row(self) -> dict:
        return asdict(self)


@dataclass
class TrainLog:
    """Per-epoch losses recorded verbatim"""

    entries: list = field(default_factory=list)
    best_losses: list = field(default_factory=list)
    wall_clock: float = 0.0
    final_epoch: int = 0
    best_epoch: int = 0
    converged: bool = False

    def record(self, epoch_loss: LossBreakdown):
        self.entries.append(epoch_loss)
        best = min(self.best_losses[-1], epoch_loss.total) if self.best_losses else epoch_loss.total
        self.best_losses.append(best)

    @property
    def best_loss(self) -> float:
        return self.best_losses[-1] if self.best_losses else float("inf")


# -----------------------------
# Verification
# -----------------------------
class Certificate(BaseModel):
    """Verdict of the sampled-condition-plus-Lipschitz validity check"""

    model_config = ConfigDict(frozen=True, populate_by_name=True, ser_json_inf_nan="constants")

    passed: bool = Field(serialization_alias="pass")
    eta_hat: float
    epsilon: float
    time_normalization: str
    collocation_points: int
    worst_space: float
    worst_radius: float
    worst_obstacle: float
    gap_start_center: float
    gap_start_radius: float
    gap_target_center: float
    gap_target_radius: float
    boundary_tolerance: float
    budget_center: float
    budget_radius: float
    net_center_norm_product: float
    net_radius_norm_product: float
    net_center_interval: float
    net_radius_interval: float
    derivative_losses_zero: bool
    budget_confirmed: bool
    eff_center: float
    eff_radius: float
    margin: float
    margin_max_interpretation: float
    obstacle_speed: float
    margin_moving_obstacles: float
    audit_resolution: float
    audit_worst_space: float
    audit_worst_radius: float
    audit_worst_obstacle: float
    audit_violation_time: Optional[float] = None
    residuals_ok: bool
    boundary_ok: bool
    margin_ok: bool
    audit_ok: bool

    def to_report(self) -> str:
        return self.model_dump_json(by_alias=True, indent=2)


@dataclass(frozen=True)
class AuditResult:
    """Dense scan of the containment residuals over [0, t_c]"""

    resolution: float
    worst_space: float
    worst_radius: float
    worst_obstacle: float
    argmax_space: float
    argmax_radius: float
    argmax_obstacle: float
    first_violation: Optional[float]

    @property
    def clean(self) -> bool:
        return self.first_violation is None

    def worst(self) -> float:
        return max(self.worst_space, self.worst_radius, self.worst_obstacle)


# -----------------------------
# Control / simulation
# -----------------------------
@dataclass(frozen=True)
class ControlDiagnostics:
    """Normalized errors and clamp events of one control evaluation"""

    e1: float
    stage_errors: tuple = ()      # e_k vectors, k = 2..N
    clamped: bool = False
    breached: bool = False        # a normalized error reached 1 before clamping


@dataclass
class Trajectory:
    """Uniformly sampled closed-loop rollout"""

    times: np.ndarray
    states: np.ndarray            # (steps+1, N*n)
    outputs: np.ndarray           # (steps+1, n)
    controls: np.ndarray          # (steps+1, n)
    disturbances: np.ndarray      # (steps+1, N*n); last row repeats the final hold
    e1: np.ndarray                # (steps+1,)
    stage_errors: np.ndarray      # (steps+1, N-1, n)
    clamps: np.ndarray            # (steps+1,) bool

    def __len__(self) -> int:
        return len(self.times)


class MetricsReport(BaseModel):
    """Summary of one rollout"""

    model_config = ConfigDict(frozen=True, ser_json_inf_nan="constants")

    max_e1: float
    max_stage_error: float
    reach_error: float
    reach_success: bool
    min_clearance: float
    control_effort: float
    clamp_count: int
    steps: int
    wall_clock: float
    # online control synthesis cost, seconds per evaluation of the law
    control_evaluations: int = 0
    control_time_mean: float = 0.0
    control_time_max: float = 0.0

    @property
    def success(self) -> bool:
        return self.reach_success and self.clamp_count == 0 and self.max_e1 < 1.0

    def to_report(self) -> str:
        return self.model_dump_json(indent=2)
