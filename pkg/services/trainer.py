"""
Tube Trainer - collocation grid, Adam and the physics-informed training loop
"""

import math
from dataclasses import dataclass, replace

import numpy as np

from config import settings
from config.environments import current_config
from state.records import TrainLog
from state.scenario import TrainConfig, TrasScenario
from tools.neural_tube import TubeNet, init_network, loss_gradient, parameters, with_parameters
from utils.errors import DivergenceError, NonFiniteError
from utils.logger import logger
from utils.timing import TimerContext


# -----------------------------
# 1. Collocation grid
# -----------------------------
@dataclass(frozen=True)
class CollocationGrid:
    """Sample times t_r whose eps-balls cover [0, t_c], plus the boundary times"""

    t_c: float
    epsilon: float
    points: np.ndarray

    @property
    def boundary(self) -> np.ndarray:
        return np.array([0.0, self.t_c])

    def __len__(self) -> int:
        return len(self.points)

    def nearest(self, times) -> np.ndarray:
        """Index of the nearest collocation point for each time"""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        right = np.clip(np.searchsorted(self.points, times), 0, len(self.points) - 1)
        left = np.clip(right - 1, 0, None)
        use_left = np.abs(times - self.points[left]) <= np.abs(self.points[right] - times)
        return np.where(use_left, left, right)

    def covering_radius(self, resolution: float = 1e-4) -> float:
        """max over a dense scan of [0, t_c] of the distance to the nearest t_r"""
        scan = np.linspace(0.0, self.t_c, int(math.ceil(self.t_c / resolution)) + 1)
        return float(np.max(np.abs(scan - self.points[self.nearest(scan)])))


def collocation_grid(t_c: float, epsilon: float) -> CollocationGrid:
    """t_r = min((2r - 1) eps, t_c), r = 1..M with M = ceil(t_c / (2 eps))"""
    if not 0 < epsilon < t_c:
        raise ValueError(f"collocation radius must satisfy 0 < eps < t_c, got eps={epsilon}, t_c={t_c}")
    m = int(math.ceil(t_c / (2.0 * epsilon)))
    points = np.minimum((2.0 * np.arange(1, m + 1) - 1.0) * epsilon, t_c)
    if points[-1] + epsilon < t_c:
        points = np.append(points, t_c)
    return CollocationGrid(t_c=float(t_c), epsilon=float(epsilon), points=points)


# -----------------------------
# 2. Adam
# -----------------------------
@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = settings.ADAM_BETA1
    beta2: float = settings.ADAM_BETA2
    eps: float = settings.ADAM_EPS

    @classmethod
    def zeros(cls, size: int) -> "AdamState":
        return cls(m=np.zeros(size), v=np.zeros(size))


def adam_step(theta: np.ndarray, state: AdamState, grad: np.ndarray, lr: float) -> tuple[np.ndarray, AdamState]:
    """Bias-corrected Adam update"""
    grad = np.asarray(grad, dtype=float)
    if grad.shape != state.m.shape or theta.shape != state.m.shape:
        raise ValueError(f"Adam state has shape {state.m.shape}, got theta {theta.shape}, grad {grad.shape}")
    if not np.all(np.isfinite(grad)):
        raise NonFiniteError("gradient passed to Adam is not finite", term="gradient")

    step = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grad
    v = state.beta2 * state.v + (1.0 - state.beta2) * grad * grad
    m_hat = m / (1.0 - state.beta1 ** step)
    v_hat = v / (1.0 - state.beta2 ** step)
    theta = theta - lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return theta, replace(state, m=m, v=v, step=step)


# -----------------------------
# 3. Training loop
# -----------------------------
def train(scen: TrasScenario, cfg: TrainConfig, workers: int | None = None,
          log_every: int | None = None) -> tuple[TubeNet, TrainLog]:
    """
    Minimize L_phys + L_bc with Adam until the total loss drops to the tolerance.

    Returns the best-loss parameters seen and the verbatim per-epoch log.
    Non-convergence is reported through log.converged, never raised.
    """
    cfg = cfg if cfg.is_resolved else cfg.resolved(scen)
    workers = workers or current_config.GRADIENT_WORKERS
    log_every = log_every or current_config.LOG_EVERY

    hyper = cfg.loss_config(scen)
    if hyper.eta_hat + (cfg.lipschitz_center + cfg.lipschitz_radius) * cfg.epsilon > 0:
        raise ValueError("eta_hat does not satisfy eta_hat + (L_c + L_r) eps <= 0")

    grid = collocation_grid(scen.t_c, cfg.epsilon)
    net = init_network(scen.dimension, scen.t_c, cfg.hidden, cfg.seed)
    theta = parameters(net)
    adam = AdamState.zeros(theta.size)
    shuffle_rng = np.random.default_rng((cfg.seed, 1))
    batch_size = min(cfg.batch_size or len(grid), len(grid))
    full_batch = batch_size == len(grid)

    logger.info(
        "training started",
        dimension=scen.dimension,
        parameters=theta.size,
        collocation_points=len(grid),
        epsilon=cfg.epsilon,
        eta_hat=hyper.eta_hat,
        lipschitz_center=cfg.lipschitz_center,
        lipschitz_radius=cfg.lipschitz_radius,
        batch_size=batch_size,
    )

    log = TrainLog()
    best_theta = theta.copy()
    epoch = 0

    with TimerContext("train") as clock:
        try:
            for epoch in range(1, cfg.max_epochs + 1):
                if full_batch:
                    evaluated = theta
                    breakdown, grad = loss_gradient(with_parameters(net, theta), grid.points, scen, hyper, workers)
                    if breakdown.total > cfg.tolerance:
                        theta, adam = adam_step(theta, adam, grad, cfg.learning_rate)
                else:
                    order = shuffle_rng.permutation(grid.points)
                    for start in range(0, len(order), batch_size):
                        _, grad = loss_gradient(with_parameters(net, theta), order[start:start + batch_size],
                                                scen, hyper, workers)
                        theta, adam = adam_step(theta, adam, grad, cfg.learning_rate)
                    evaluated = theta
                    breakdown, _ = loss_gradient(with_parameters(net, theta), grid.points, scen, hyper, workers)

                if breakdown.total < log.best_loss:
                    best_theta = evaluated.copy()
                    log.best_epoch = epoch
                log.record(breakdown)

                if epoch % log_every == 0:
                    logger.info(
                        "training progress",
                        epoch=epoch,
                        loss=breakdown.total,
                        best_loss=log.best_loss,
                        physics=breakdown.physics,
                        boundary=breakdown.boundary,
                    )

                if breakdown.total <= cfg.tolerance:
                    log.converged = True
                    break
        except NonFiniteError as exc:
            log.final_epoch = epoch
            logger.error("training diverged", epoch=epoch, term=exc.term, last_loss=log.best_loss)
            raise DivergenceError(f"training diverged at epoch {epoch}: {exc}", last_log=log) from exc

    log.final_epoch = epoch
    log.wall_clock = clock.elapsed
    logger.info(
        "training finished",
        converged=log.converged,
        epochs=log.final_epoch,
        best_epoch=log.best_epoch,
        best_loss=log.best_loss,
        seconds=round(log.wall_clock, 3),
    )
    return with_parameters(net, best_theta), log
