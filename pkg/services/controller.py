"""
Tube Controller - closed-form, model-free feedback keeping the output inside the tube

Stage 1 drives y toward the tube center through a log barrier on the normalized
distance e1 = ||x1 - c|| / r. Stages k = 2..N track the previous stage's reference
inside exponentially shrinking funnels; the last stage output is the input u.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from config import settings
from state.records import ControlDiagnostics
from state.scenario import ControllerConfig, TubeSlice
from utils.errors import InvalidTubeError


# -----------------------------
# 1. Parameters
# -----------------------------
@dataclass(frozen=True)
class FunnelParams:
    """Row k-2 holds the per-axis funnel of stage k (k = 2..N)"""

    p: np.ndarray
    q: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        if not (self.p.shape == self.q.shape == self.mu.shape) or self.p.ndim != 2:
            raise ValueError("funnel p, q, mu must share a (N-1, n) shape")
        if np.any(self.q <= 0) or np.any(self.p <= self.q):
            raise ValueError("funnels require p > q > 0")
        if np.any(self.mu < 0):
            raise ValueError("funnel decay rates must be >= 0")

    @classmethod
    def empty(cls, n: int) -> "FunnelParams":
        return cls(p=np.zeros((0, n)), q=np.zeros((0, n)), mu=np.zeros((0, n)))

    @property
    def stages(self) -> int:
        return self.p.shape[0]

    def gamma(self, k: int, t: float) -> np.ndarray:
        """gamma_k(t) for every axis"""
        row = k - 2
        return (self.p[row] - self.q[row]) * np.exp(-self.mu[row] * t) + self.q[row]


@dataclass(frozen=True)
class GainSet:
    kappa: tuple

    def __post_init__(self):
        if not self.kappa or any(k <= 0 for k in self.kappa):
            raise ValueError("gains kappa_1..kappa_N must be > 0")

    @property
    def depth(self) -> int:
        return len(self.kappa)


def funnel_gamma(fp: FunnelParams, k: int, i: int, t: float) -> float:
    """(p - q) e^(-mu t) + q for stage k, axis i (0-based)"""
    return float(fp.gamma(k, t)[i])


# -----------------------------
# 2. Stage laws
# -----------------------------
class StageOutput(NamedTuple):
    value: np.ndarray
    error: np.ndarray | float
    clamped: bool
    breached: bool


def _barrier(e: np.ndarray, delta: float):
    """ln((1+e)/(1-e)) with e clamped to +-(1 - delta)"""
    limit = 1.0 - delta
    clipped = np.clip(e, -limit, limit)
    return np.log((1.0 + clipped) / (1.0 - clipped)), clipped, bool(np.any(np.abs(e) > limit))


def stage1_control(x1, slice_: TubeSlice, kappa1: float, delta: float = settings.CLAMP_DELTA) -> StageOutput:
    """r2 = -kappa1 ln((1+e1)/(1-e1)) (x1 - c)"""
    radius = slice_.radius
    if not radius > 0:
        raise InvalidTubeError(f"tube radius {radius} is not positive")
    diff = np.asarray(x1, dtype=float) - slice_.center
    e1 = float(np.linalg.norm(diff)) / radius
    eps1, _, clamped = _barrier(np.float64(e1), delta)
    return StageOutput(value=-kappa1 * float(eps1) * diff, error=e1, clamped=clamped, breached=e1 >= 1.0)


def _stage_from_gamma(diff: np.ndarray, gamma: np.ndarray, kappa: float, delta: float) -> StageOutput:
    e = diff / gamma
    eps, clipped, clamped = _barrier(e, delta)
    xi = 4.0 / (gamma * (1.0 - clipped * clipped))
    return StageOutput(value=-kappa * xi * eps, error=e, clamped=clamped, breached=bool(np.any(np.abs(e) >= 1.0)))


def stagek_control(x_k, r_k, fp: FunnelParams, k: int, t: float, kappa: float,
                   delta: float = settings.CLAMP_DELTA) -> StageOutput:
    """-kappa_k xi_k eps_k with e_k = (x_k - r_k) / gamma_k(t) componentwise"""
    diff = np.asarray(x_k, dtype=float) - np.asarray(r_k, dtype=float)
    return _stage_from_gamma(diff, fp.gamma(k, t), kappa, delta)


def full_control(z, slice_: TubeSlice, fp: FunnelParams, gains: GainSet, t: float,
                 delta: float = settings.CLAMP_DELTA) -> tuple[np.ndarray, ControlDiagnostics]:
    """Chain stage 1 through stage N on the stacked state z = (x_1, ..., x_N)"""
    z = np.asarray(z, dtype=float)
    n = len(slice_.center)
    depth = gains.depth
    if z.size != depth * n or fp.stages != depth - 1:
        raise ValueError(f"state of size {z.size} and {fp.stages} funnels do not fit depth {depth}, n={n}")

    out = stage1_control(z[:n], slice_, gains.kappa[0], delta)
    clamped, breached = out.clamped, out.breached
    e1 = out.error
    stage_errors = []
    for k in range(2, depth + 1):
        out = stagek_control(z[(k - 1) * n:k * n], out.value, fp, k, t, gains.kappa[k - 1], delta)
        stage_errors.append(out.error)
        clamped |= out.clamped
        breached |= out.breached

    return out.value, ControlDiagnostics(e1=e1, stage_errors=tuple(stage_errors), clamped=clamped, breached=breached)


# -----------------------------
# 3. Funnel initialization
# -----------------------------
def auto_funnel(z0, slice0: TubeSlice, gains: GainSet, t_c: float, q: float = settings.FUNNEL_Q,
                mu: float | None = None) -> FunnelParams:
    """p = 1.25 max(|x_k(0) - r_k(0)|, 2q) per axis, mu = 2/t_c unless given"""
    z0 = np.asarray(z0, dtype=float)
    n = len(slice0.center)
    depth = gains.depth
    if depth == 1:
        return FunnelParams.empty(n)
    mu = 2.0 / t_c if mu is None else mu

    p_rows = []
    reference = stage1_control(z0[:n], slice0, gains.kappa[0]).value
    for k in range(2, depth + 1):
        diff = z0[(k - 1) * n:k * n] - reference
        p_row = settings.FUNNEL_P_SCALE * np.maximum(np.abs(diff), 2.0 * q)
        p_rows.append(p_row)
        reference = _stage_from_gamma(diff, p_row, gains.kappa[k - 1], settings.CLAMP_DELTA).value

    p = np.array(p_rows)
    return FunnelParams(p=p, q=np.full_like(p, q), mu=np.full_like(p, mu))


def controller_from_config(cfg: ControllerConfig, depth: int, z0, slice0: TubeSlice,
                           t_c: float) -> tuple[FunnelParams, GainSet]:
    """Gains default to 1; funnels are taken from the config or auto-initialized"""
    kappa = cfg.gains if cfg.gains is not None else (settings.DEFAULT_GAIN,) * depth
    if len(kappa) != depth:
        raise ValueError(f"controller.gains: expected {depth} gains, got {len(kappa)}")
    gains = GainSet(kappa=tuple(kappa))

    if cfg.funnels is None:
        return auto_funnel(z0, slice0, gains, t_c, q=cfg.funnel_q, mu=cfg.funnel_mu), gains

    if depth == 1 and not cfg.funnels:
        return FunnelParams.empty(len(slice0.center)), gains
    if len(cfg.funnels) != depth - 1:
        raise ValueError(f"controller.funnels: expected {depth - 1} stages, got {len(cfg.funnels)}")
    fp = FunnelParams(
        p=np.array([f.p for f in cfg.funnels], dtype=float).reshape(depth - 1, -1),
        q=np.array([f.q for f in cfg.funnels], dtype=float).reshape(depth - 1, -1),
        mu=np.array([f.mu for f in cfg.funnels], dtype=float).reshape(depth - 1, -1),
    )
    return fp, gains
