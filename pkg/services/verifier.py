"""
Tube Verifier - executable validity certificate for a trained tube

A tube passes when every sampled residual sits below eta_hat, the boundary
gaps are within tolerance, eta_hat + (L_c + L_r) eps <= 0 holds with sound
network Lipschitz bounds, and a dense scan finds no violation.
"""

import math

import numpy as np

from config import settings
from state.records import AuditResult, Certificate
from state.scenario import SinusoidalMotion, TrainConfig, TrasScenario
from services.trainer import CollocationGrid, collocation_grid
from tools.geometry import boundary_residuals, residual_table
from tools.neural_tube import TubeNet, evaluate
from utils.errors import GridMismatchError
from utils.logger import logger
from utils.timing import timer

TIME_NORMALIZATION = "s = 2t/t_c - 1"


# -----------------------------
# 1. Lipschitz bounds
# -----------------------------
def spectral_norm(weight: np.ndarray, iterations: int = settings.POWER_ITERATIONS) -> float:
    """Largest singular value by power iteration on W^T W"""
    v = np.ones(weight.shape[1]) / math.sqrt(weight.shape[1])
    sigma = 0.0
    for _ in range(iterations):
        u = weight @ v
        u_norm = np.linalg.norm(u)
        if u_norm == 0.0:
            return 0.0
        v = weight.T @ (u / u_norm)
        sigma = np.linalg.norm(v)
        if sigma == 0.0:
            return 0.0
        v = v / sigma
    return float(sigma)


def global_lipschitz_bound(net: TubeNet, iterations: int = settings.POWER_ITERATIONS,
                           safety: float = settings.POWER_SAFETY_FACTOR) -> tuple[float, float]:
    """(L_c, L_r) <= (2/t_c) * prod ||W_l||_2, output layer split into center rows and radius row"""
    net.check_finite()
    hidden = 1.0
    for weight in net.weights[:-1]:
        hidden *= safety * spectral_norm(weight, iterations)
    out = net.weights[-1]
    center = safety * spectral_norm(out[:net.n], iterations)
    radius = float(np.linalg.norm(out[net.n]))
    return net.time_scale * hidden * center, net.time_scale * hidden * radius


def _interval_product(a_lo, a_hi, b_lo, b_hi):
    candidates = np.stack([a_lo * b_lo, a_lo * b_hi, a_hi * b_lo, a_hi * b_hi])
    return candidates.min(axis=0), candidates.max(axis=0)


def interval_lipschitz_bound(net: TubeNet, grid: CollocationGrid) -> tuple[float, float, np.ndarray, np.ndarray]:
    """
    Sound bounds on ||c'(t)|| and |r'(t)| over every cell [t_r - eps, t_r + eps] of the grid.

    The (value, tangent) pair is pushed through the network as intervals; tanh is
    monotone and its slope 1 - tanh^2 is bounded per cell. Returns the maxima over
    all cells followed by the per-cell bounds.
    """
    net.check_finite()
    lo_t = np.clip(grid.points - grid.epsilon, 0.0, net.t_c)
    hi_t = np.clip(grid.points + grid.epsilon, 0.0, net.t_c)
    h_lo = net.normalize(lo_t)[:, None]
    h_hi = net.normalize(hi_t)[:, None]
    d_lo = np.ones_like(h_lo)
    d_hi = np.ones_like(h_hi)

    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        abs_w = np.abs(w)
        mid, rad = 0.5 * (h_lo + h_hi), 0.5 * (h_hi - h_lo)
        a_lo = mid @ w.T + b - rad @ abs_w.T
        a_hi = mid @ w.T + b + rad @ abs_w.T
        mid, rad = 0.5 * (d_lo + d_hi), 0.5 * (d_hi - d_lo)
        ad_lo = mid @ w.T - rad @ abs_w.T
        ad_hi = mid @ w.T + rad @ abs_w.T
        if i == last:
            d_lo, d_hi = ad_lo, ad_hi
            break

        h_lo, h_hi = np.tanh(a_lo), np.tanh(a_hi)
        straddles = (a_lo <= 0.0) & (a_hi >= 0.0)
        nearest = np.where(straddles, 0.0, np.minimum(np.abs(a_lo), np.abs(a_hi)))
        farthest = np.maximum(np.abs(a_lo), np.abs(a_hi))
        slope_hi = 1.0 - np.tanh(nearest) ** 2
        slope_lo = 1.0 - np.tanh(farthest) ** 2
        d_lo, d_hi = _interval_product(slope_lo, slope_hi, ad_lo, ad_hi)

    magnitude = np.maximum(np.abs(d_lo), np.abs(d_hi)) * net.time_scale
    center_cells = np.linalg.norm(magnitude[:, :net.n], axis=1)
    radius_cells = magnitude[:, net.n]
    return float(center_cells.max()), float(radius_cells.max()), center_cells, radius_cells


def obstacle_speed(scen: TrasScenario) -> float:
    """Largest obstacle translation speed (amplitude * |omega| for sinusoidal motion)"""
    speeds = [abs(o.motion.amplitude * o.motion.omega) for o in scen.obstacles
              if isinstance(o.motion, SinusoidalMotion)]
    return max(speeds, default=0.0)


# -----------------------------
# 2. Residual evaluation
# -----------------------------
def _residual_table(net: TubeNet, scen: TrasScenario, times: np.ndarray) -> np.ndarray:
    """(len(times), 3): space, radius and obstacle-union residuals of the network tube"""
    y, _ = evaluate(net, times)
    return residual_table(y[:, :net.n], y[:, net.n], scen, times)


@timer("dense_audit")
def dense_audit(net: TubeNet, scen: TrasScenario, resolution: float) -> AuditResult:
    """Scan [0, t_c] at the given step and report worst residuals and the first violation"""
    if resolution <= 0:
        raise ValueError("audit resolution must be > 0")
    times = np.linspace(0.0, scen.t_c, int(math.ceil(scen.t_c / resolution)) + 1)
    table = _residual_table(net, scen, times)
    worst = table.max(axis=0)
    argmax = times[table.argmax(axis=0)]
    violating = np.flatnonzero(table.max(axis=1) > 0.0)
    return AuditResult(
        resolution=float(times[1] - times[0]),
        worst_space=float(worst[0]),
        worst_radius=float(worst[1]),
        worst_obstacle=float(worst[2]),
        argmax_space=float(argmax[0]),
        argmax_radius=float(argmax[1]),
        argmax_obstacle=float(argmax[2]),
        first_violation=float(times[violating[0]]) if violating.size else None,
    )


# -----------------------------
# 3. Certificate
# -----------------------------
def certify(net: TubeNet, scen: TrasScenario, cfg: TrainConfig, grid: CollocationGrid | None = None) -> Certificate:
    """Check the sampled conditions with margin eta_hat and the Lipschitz covering argument"""
    if net.n != scen.dimension or not math.isclose(net.t_c, scen.t_c, rel_tol=0.0, abs_tol=1e-12):
        raise GridMismatchError(
            f"model (n={net.n}, t_c={net.t_c}) does not match scenario (n={scen.dimension}, t_c={scen.t_c})"
        )
    cfg = cfg if cfg.is_resolved else cfg.resolved(scen)
    expected = collocation_grid(scen.t_c, cfg.epsilon)
    if grid is not None and (grid.points.shape != expected.points.shape
                             or not np.array_equal(grid.points, expected.points)):
        raise GridMismatchError(f"collocation grid is not reproducible from epsilon={cfg.epsilon}")
    grid = expected
    eta_hat = cfg.eta_hat
    eps = cfg.epsilon

    table = _residual_table(net, scen, grid.points)
    worst = table.max(axis=0)
    residuals_ok = bool(np.all(table <= eta_hat))

    y_ends, _ = evaluate(net, grid.boundary)
    gaps = boundary_residuals(y_ends[0, :net.n], y_ends[0, net.n], y_ends[1, :net.n], y_ends[1, net.n], scen)
    boundary_ok = gaps.worst() <= settings.BOUNDARY_TOLERANCE

    _, ydot = evaluate(net, grid.points)
    derivative_losses_zero = bool(
        np.all(np.linalg.norm(ydot[:, :net.n], axis=1) <= cfg.lipschitz_center)
        and np.all(np.abs(ydot[:, net.n]) <= cfg.lipschitz_radius)
    )

    norm_c, norm_r = global_lipschitz_bound(net)
    iv_c, iv_r, _, _ = interval_lipschitz_bound(net, grid)
    net_c, net_r = min(norm_c, iv_c), min(norm_r, iv_r)
    budget_confirmed = net_c <= cfg.lipschitz_center and net_r <= cfg.lipschitz_radius
    if derivative_losses_zero and budget_confirmed:
        eff_c, eff_r = min(cfg.lipschitz_center, net_c), min(cfg.lipschitz_radius, net_r)
    else:
        eff_c, eff_r = net_c, net_r

    margin = eta_hat + (eff_c + eff_r) * eps
    margin_ok = margin <= 0.0
    speed = obstacle_speed(scen)

    audit = dense_audit(net, scen, eps / settings.AUDIT_REFINEMENT)

    cert = Certificate(
        passed=residuals_ok and boundary_ok and margin_ok and audit.clean,
        eta_hat=eta_hat,
        epsilon=eps,
        time_normalization=TIME_NORMALIZATION,
        collocation_points=len(grid),
        worst_space=float(worst[0]),
        worst_radius=float(worst[1]),
        worst_obstacle=float(worst[2]),
        gap_start_center=gaps.start_center,
        gap_start_radius=gaps.start_radius,
        gap_target_center=gaps.target_center,
        gap_target_radius=gaps.target_radius,
        boundary_tolerance=settings.BOUNDARY_TOLERANCE,
        budget_center=cfg.lipschitz_center,
        budget_radius=cfg.lipschitz_radius,
        net_center_norm_product=norm_c,
        net_radius_norm_product=norm_r,
        net_center_interval=iv_c,
        net_radius_interval=iv_r,
        derivative_losses_zero=derivative_losses_zero,
        budget_confirmed=budget_confirmed,
        eff_center=eff_c,
        eff_radius=eff_r,
        margin=margin,
        margin_max_interpretation=eta_hat + max(eff_c, eff_r) * eps,
        obstacle_speed=speed,
        margin_moving_obstacles=eta_hat + (eff_c + eff_r + speed) * eps,
        audit_resolution=audit.resolution,
        audit_worst_space=audit.worst_space,
        audit_worst_radius=audit.worst_radius,
        audit_worst_obstacle=audit.worst_obstacle,
        audit_violation_time=audit.first_violation,
        residuals_ok=residuals_ok,
        boundary_ok=boundary_ok,
        margin_ok=margin_ok,
        audit_ok=audit.clean,
    )

    log = logger.info if cert.passed else logger.warning
    log(
        "certificate issued",
        passed=cert.passed,
        margin=margin,
        eff_center=eff_c,
        eff_radius=eff_r,
        worst_residual=float(worst.max()),
        audit_violation_time=audit.first_violation,
    )
    return cert


def proof_inequalities(net: TubeNet, scen: TrasScenario, cert: Certificate, times) -> np.ndarray:
    """
    Per-time bounds residual(t_r) + (L_c + L_r) |t - t_r| for the three tube conditions.

    t_r is the nearest collocation point. For a passing certificate every entry is <= 0.
    """
    grid = collocation_grid(scen.t_c, cert.epsilon)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    nearest = grid.points[grid.nearest(times)]
    sampled = _residual_table(net, scen, nearest)
    drift = (cert.eff_center + cert.eff_radius) * np.abs(times - nearest)
    return sampled + drift[:, None]
