"""
Tube Plots - static SVG of obstacles, tube slices and the output trajectory

2D scenarios use one panel; 3D scenarios are projected onto the
(x1, x2), (x1, x3) and (x2, x3) planes.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Circle, Rectangle  # noqa: E402

from state.scenario import Ball, Box, TrasScenario  # noqa: E402
from tools.geometry import obstacle_center_at  # noqa: E402
from tools.neural_tube import TubeNet, forward_batch  # noqa: E402

TUBE_SLICES = 25
OBSTACLE_SNAPSHOTS = 4

plt.rcParams["svg.fonttype"] = "none"
plt.rcParams["font.size"] = 9


def _shape_patch(shape, center, axes, **style):
    """Projection of a ball or box onto the axis pair"""
    i, j = axes
    if isinstance(shape, Ball):
        return Circle((center[i], center[j]), shape.radius, **style)
    lo, hi = center
    return Rectangle((lo[i], lo[j]), hi[i] - lo[i], hi[j] - lo[j], **style)


def _draw_panel(ax, scen: TrasScenario, axes, outputs, tube, snapshot_times):
    i, j = axes
    space = scen.space
    space_center = space.c if isinstance(space, Ball) else np.stack([space.lo_arr, space.hi_arr])
    ax.add_patch(_shape_patch(space, space_center, axes, fill=False, edgecolor="black", linewidth=1.0))

    for t, alpha in zip(snapshot_times, np.linspace(0.25, 0.8, len(snapshot_times))):
        for obs in scen.obstacles:
            moved = obstacle_center_at(obs, t)
            ax.add_patch(_shape_patch(obs.shape, moved, axes, facecolor="tab:red", alpha=alpha * 0.5,
                                      edgecolor="tab:red"))

    if tube is not None:
        centers, radii = tube
        for c, r in zip(centers, radii):
            if r > 0:
                ax.add_patch(Circle((c[i], c[j]), r, fill=False, edgecolor="tab:blue", alpha=0.5, linewidth=0.6))
        ax.plot(centers[:, i], centers[:, j], color="tab:blue", linewidth=0.8, linestyle="--", label="tube center")

    for ball, color, label in ((scen.start, "tab:green", "start"), (scen.target, "tab:orange", "target")):
        ax.add_patch(Circle((ball.c[i], ball.c[j]), ball.radius, facecolor=color, alpha=0.4, edgecolor=color,
                            label=label))

    if outputs is not None:
        ax.plot(outputs[:, i], outputs[:, j], color="black", linewidth=1.0, label="output")

    if isinstance(space, Box):
        ax.set_xlim(space.lo[i], space.hi[i])
        ax.set_ylim(space.lo[j], space.hi[j])
    else:
        ax.set_xlim(space.center[i] - space.radius, space.center[i] + space.radius)
        ax.set_ylim(space.center[j] - space.radius, space.center[j] + space.radius)
    ax.set_aspect("equal")
    ax.set_xlabel(f"$y_{i + 1}$")
    ax.set_ylabel(f"$y_{j + 1}$")
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)


def plot_tube(scen: TrasScenario, path, outputs: np.ndarray | None = None, net: TubeNet | None = None,
              slices: int = TUBE_SLICES, snapshots: int = OBSTACLE_SNAPSHOTS):
    """Write an SVG with obstacle snapshots, tube circles (when a model is given) and the trajectory"""
    n = scen.dimension
    if n not in (2, 3):
        raise ValueError(f"plots support 2D and 3D scenarios, got dimension {n}")

    tube = forward_batch(net, np.linspace(0.0, scen.t_c, slices)) if net is not None else None
    snapshot_times = np.linspace(0.0, scen.t_c, snapshots)
    pairs = [(0, 1)] if n == 2 else [(0, 1), (0, 2), (1, 2)]

    fig, axes = plt.subplots(1, len(pairs), figsize=(4.0 * len(pairs), 4.0), squeeze=False)
    for ax, pair in zip(axes[0], pairs):
        _draw_panel(ax, scen, pair, outputs, tube, snapshot_times)
    axes[0][0].legend(loc="upper left", fontsize=7, frameon=False)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
