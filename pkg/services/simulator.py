"""
Closed-Loop Simulator - pure-feedback plants driven through the tube by the funnel controller

Fixed-step RK4. The disturbance is drawn once per step (uniform in [-w_max, w_max])
and held; the control input is held over the step as well unless zoh_control is
switched off, in which case the law is re-evaluated at every RK4 stage.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid

from state.records import MetricsReport, Trajectory
from state.scenario import ScenarioBundle, SimConfig, TrasScenario
from services.controller import FunnelParams, GainSet, controller_from_config, full_control
from tools.geometry import point_to_set_distance
from tools.integrators import rk4_step
from tools.neural_tube import TubeNet, tube_slice
from utils.errors import PreconditionError, SimulationBlowUpError
from utils.logger import logger
from utils.timing import TimerContext

# block(z_prefix, x_next, w_block, t) -> x_dot of that block
BlockDynamics = Callable[[np.ndarray, np.ndarray, np.ndarray, float], np.ndarray]


# -----------------------------
# 1. Plant models
# -----------------------------
@dataclass(frozen=True)
class PlantModel:
    """x_i' = f_i(z_i) + g_i(z_i) x_(i+1) + w_i for i = 1..N, with x_(N+1) = u"""

    name: str
    depth: int
    block: int
    blocks: tuple
    initial_state: np.ndarray

    def __post_init__(self):
        if len(self.blocks) != self.depth:
            raise ValueError(f"{self.name}: expected {self.depth} block maps, got {len(self.blocks)}")
        if self.initial_state.shape != (self.state_dim,):
            raise ValueError(f"{self.name}: initial state must have length {self.state_dim}")

    @property
    def state_dim(self) -> int:
        return self.depth * self.block

    def output(self, z: np.ndarray) -> np.ndarray:
        return z[:self.block]

    def derivative(self, t: float, z: np.ndarray, u: np.ndarray, w: np.ndarray) -> np.ndarray:
        n = self.block
        zdot = np.empty_like(z)
        for i, block in enumerate(self.blocks):
            nxt = z[(i + 1) * n:(i + 2) * n] if i + 1 < self.depth else u
            zdot[i * n:(i + 1) * n] = block(z[:(i + 1) * n], nxt, w[i * n:(i + 1) * n], t)
        return zdot


def omnibot_model(initial_pose) -> PlantModel:
    """Planar position loop of an omnidirectional robot with the heading frozen"""
    x1, x2, heading = (float(v) for v in initial_pose)
    if abs(heading) >= np.pi / 2:
        raise PreconditionError(f"omnibot heading {heading} violates |heading| < pi/2")
    cos, sin = np.cos(heading), np.sin(heading)
    rotation = np.array([[cos, -sin], [sin, cos]])

    def position(z, v, w, t):
        return rotation @ v + w

    return PlantModel(name="omnibot", depth=1, block=2, blocks=(position,), initial_state=np.array([x1, x2]))


def quadrotor_model(position, velocity=(0.0, 0.0, 0.0)) -> PlantModel:
    """Second-order translational quadrotor: x' = v + w1, v' = u + w2"""

    def translation(z, v, w, t):
        return v + w

    def acceleration(z, u, w, t):
        return u + w

    state = np.concatenate([np.asarray(position, dtype=float), np.asarray(velocity, dtype=float)])
    return PlantModel(name="quadrotor", depth=2, block=3, blocks=(translation, acceleration), initial_state=state)


def build_model(bundle: ScenarioBundle) -> PlantModel:
    """Plant named by the simulation section, started at the configured output (default c_S)"""
    sim = bundle.simulation
    start = sim.initial_output if sim.initial_output is not None else tuple(bundle.scenario.start.center)
    if sim.model == "omnibot":
        return omnibot_model((*start, sim.heading))
    velocity = sim.initial_velocity if sim.initial_velocity is not None else (0.0,) * bundle.scenario.dimension
    return quadrotor_model(start, velocity)


# -----------------------------
# 2. Rollout
# -----------------------------
def simulate(model: PlantModel, net: TubeNet, scen: TrasScenario, fp: FunnelParams, gains: GainSet,
             sim: SimConfig) -> tuple[Trajectory, MetricsReport]:
    """Integrate the closed loop over [0, t_c] and summarize tube containment and reach"""
    if gains.depth != model.depth or model.block != net.n:
        raise ValueError(f"controller depth {gains.depth} / tube dimension {net.n} do not fit plant {model.name}")

    steps = max(1, int(round(scen.t_c / sim.step_for(scen.t_c))))
    h = scen.t_c / steps
    n, dim = model.block, model.state_dim
    rng = np.random.default_rng(sim.seed)

    z = model.initial_state.astype(float).copy()
    start_slice = tube_slice(net, 0.0)
    distance = float(np.linalg.norm(model.output(z) - start_slice.center))
    if not distance < start_slice.radius:
        raise PreconditionError(
            f"initial output is outside the tube: ||y(0) - c(0)|| = {distance} >= r(0) = {start_slice.radius}"
        )

    times = np.linspace(0.0, scen.t_c, steps + 1)
    states = np.empty((steps + 1, dim))
    controls = np.empty((steps + 1, n))
    disturbances = np.empty((steps + 1, dim))
    e1 = np.empty(steps + 1)
    stage_errors = np.zeros((steps + 1, model.depth - 1, n))
    clamps = np.zeros(steps + 1, dtype=bool)
    stage_clamp = [False]
    control_times = []

    def control(t, state):
        with TimerContext("control") as evaluation:
            u, diag = full_control(state, tube_slice(net, t), fp, gains, t)
        control_times.append(evaluation.elapsed)
        stage_clamp[0] |= diag.clamped
        return u, diag

    def record(k, state, w):
        u, diag = control(times[k], state)
        states[k], controls[k], disturbances[k], e1[k] = state, u, w, diag.e1
        if diag.stage_errors:
            stage_errors[k] = np.array(diag.stage_errors)
        return u, diag

    with TimerContext("simulate") as clock:
        w = np.zeros(dim)
        for k in range(steps):
            w = rng.uniform(-sim.w_max, sim.w_max, size=dim)
            stage_clamp[0] = False
            u, diag = record(k, z, w)

            if sim.zoh_control:
                def dynamics(t, state, u=u, w=w):
                    return model.derivative(t, state, u, w)
            else:
                def dynamics(t, state, w=w):
                    return model.derivative(t, state, control(t, state)[0], w)

            z = rk4_step(dynamics, times[k], z, h)
            clamps[k] = stage_clamp[0]
            if clamps[k]:
                logger.warning("normalized error clamped", time=float(times[k]), e1=diag.e1)
            if not np.all(np.isfinite(z)):
                raise SimulationBlowUpError(f"plant state became non-finite at t = {times[k + 1]}",
                                            time=float(times[k + 1]))

        stage_clamp[0] = False
        record(steps, z, w)
        clamps[steps] = stage_clamp[0]

    outputs = states[:, :n]
    traj = Trajectory(times=times, states=states, outputs=outputs, controls=controls,
                      disturbances=disturbances, e1=e1, stage_errors=stage_errors, clamps=clamps)
    metrics = trajectory_metrics(traj, scen, clock.elapsed, control_times)
    logger.info("simulation finished", model=model.name, seed=sim.seed, **metrics.model_dump())
    return traj, metrics


def trajectory_metrics(traj: Trajectory, scen: TrasScenario, wall_clock: float = 0.0,
                       control_times=()) -> MetricsReport:
    """Containment, reach and effort of a rollout; control_times are seconds per control-law evaluation"""
    control_times = np.asarray(control_times, dtype=float)
    reach_error = float(np.linalg.norm(traj.outputs[-1] - scen.target.c))
    if scen.obstacles:
        clearance = min(float(np.min(point_to_set_distance(traj.outputs, obs, traj.times))) for obs in scen.obstacles)
    else:
        clearance = float("inf")
    return MetricsReport(
        max_e1=float(np.max(traj.e1)),
        max_stage_error=float(np.max(np.abs(traj.stage_errors))) if traj.stage_errors.size else 0.0,
        reach_error=reach_error,
        reach_success=reach_error <= scen.target.radius,
        min_clearance=clearance,
        control_effort=float(trapezoid(np.linalg.norm(traj.controls, axis=1), traj.times)),
        clamp_count=int(np.count_nonzero(traj.clamps)),
        steps=len(traj) - 1,
        wall_clock=wall_clock,
        control_evaluations=int(control_times.size),
        control_time_mean=float(control_times.mean()) if control_times.size else 0.0,
        control_time_max=float(control_times.max()) if control_times.size else 0.0,
    )


def rollout_many(model: PlantModel, net: TubeNet, scen: TrasScenario, fp: FunnelParams, gains: GainSet,
                 sim: SimConfig, seeds, workers: int = 1) -> list[MetricsReport]:
    """Independent rollouts that differ only in the disturbance seed"""

    def run(seed):
        return simulate(model, net, scen, fp, gains, sim.model_copy(update={"seed": int(seed)}))[1]

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, seeds))
    return [run(seed) for seed in seeds]


def run_bundle(bundle: ScenarioBundle, net: TubeNet) -> tuple[Trajectory, MetricsReport]:
    """Build the plant and controller from a scenario bundle and simulate"""
    model = build_model(bundle)
    fp, gains = controller_from_config(bundle.controller, model.depth, model.initial_state,
                                       tube_slice(net, 0.0), bundle.scenario.t_c)
    return simulate(model, net, bundle.scenario, fp, gains, bundle.simulation)
