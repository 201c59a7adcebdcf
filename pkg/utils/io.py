"""
Artifact I/O - scenario files, model files, CSV logs and text reports
"""

from pathlib import Path

import pandas as pd
from pydantic import ValidationError

from config import settings
from state.records import TrainLog, Trajectory
from state.scenario import ScenarioBundle
from tools.neural_tube import TubeNet, deserialize, serialize
from utils.errors import ScenarioError


# -----------------------------
# Scenario files
# -----------------------------
def _format_validation(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        location = ".".join(str(part) for part in err["loc"]) or "<root>"
        parts.append(f"{location}: {err['msg']}")
    return "; ".join(parts)


def parse_scenario_text(text: str, source: str = "<string>") -> ScenarioBundle:
    """Strict JSON parse; unknown keys, type errors and invariant breaches raise ScenarioError"""
    try:
        return ScenarioBundle.model_validate_json(text)
    except ValidationError as exc:
        raise ScenarioError(_format_validation(exc), path=source) from exc


def parse_scenario(path) -> ScenarioBundle:
    path = Path(path)
    return parse_scenario_text(path.read_text(encoding="utf-8"), source=str(path))


def dump_scenario(bundle: ScenarioBundle) -> str:
    return bundle.model_dump_json(indent=2)


# -----------------------------
# Model files
# -----------------------------
def save_model(net: TubeNet, path):
    Path(path).write_bytes(serialize(net))


def load_model(path) -> TubeNet:
    return deserialize(Path(path).read_bytes())


# -----------------------------
# CSV / reports
# -----------------------------
def train_log_frame(log: TrainLog) -> pd.DataFrame:
    frame = pd.DataFrame([entry.as_row() for entry in log.entries])
    frame.insert(0, "epoch", range(1, len(frame) + 1))
    frame["best"] = log.best_losses
    return frame


def write_train_log(log: TrainLog, path):
    train_log_frame(log).to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT)


def trajectory_columns(depth: int, n: int) -> list[str]:
    """t, x_i_j (block i, axis j), u_j, w_1..w_(N n), e1, clamp"""
    columns = ["t"]
    columns += [f"x_{i}_{j}" for i in range(1, depth + 1) for j in range(1, n + 1)]
    columns += [f"u_{j}" for j in range(1, n + 1)]
    columns += [f"w_{k}" for k in range(1, depth * n + 1)]
    return columns + ["e1", "clamp"]


def trajectory_frame(traj: Trajectory) -> pd.DataFrame:
    n = traj.outputs.shape[1]
    depth = traj.states.shape[1] // n
    data = [traj.times[:, None], traj.states, traj.controls, traj.disturbances, traj.e1[:, None]]
    frame = pd.DataFrame(
        dict(zip(trajectory_columns(depth, n), [col for block in data for col in block.T]))
    )
    frame["clamp"] = traj.clamps.astype(int)
    return frame


def write_trajectory(traj: Trajectory, path):
    trajectory_frame(traj).to_csv(path, index=False, float_format=settings.CSV_FLOAT_FORMAT)


def read_trajectory(path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def write_report(text: str, path):
    Path(path).write_text(text + "\n", encoding="utf-8")
