"""
Neural Tube - tanh MLP mapping time to tube center c(t) and radius r(t)

Time enters normalized, s = 2t/t_c - 1. Time derivatives are propagated in
forward mode (value, tangent) and the loss gradient is obtained by reverse
accumulation over that augmented graph, so the Lipschitz penalty terms on
c'(t) and r'(t) are differentiated exactly w.r.t. the parameters.
"""

from __future__ import annotations

import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from config import settings
from state.records import LossBreakdown
from state.scenario import LossConfig, TrasScenario, TubeSlice
from tools.dual import Dual
from tools.geometry import distance_and_grad, signed_distance_and_grad, space_residual_and_grad
from utils.errors import ModelFormatError, NonFiniteError

# Rows per gradient work unit; fixed so results do not depend on the worker count
_CHUNK_ROWS = 64

_HEADER = struct.Struct("<4sBIdI")


@dataclass(frozen=True, eq=False)
class TubeNet:
    """Fully connected tanh network 1 -> hidden... -> n+1 (center, radius)"""

    n: int
    t_c: float
    widths: tuple
    weights: tuple   # (out, in) per layer
    biases: tuple    # (out,) per layer

    def __post_init__(self):
        if len(self.widths) < 2 or self.widths[0] != 1 or self.widths[-1] != self.n + 1:
            raise ValueError(f"widths {self.widths} must start at 1 and end at n+1 = {self.n + 1}")
        if len(self.weights) != len(self.widths) - 1 or len(self.biases) != len(self.weights):
            raise ValueError("one weight matrix and bias vector per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (self.widths[i + 1], self.widths[i]) or b.shape != (self.widths[i + 1],):
                raise ValueError(f"layer {i}: shape mismatch with widths {self.widths}")
            w.setflags(write=False)
            b.setflags(write=False)

    @property
    def hidden(self) -> tuple:
        return tuple(self.widths[1:-1])

    @property
    def num_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    @property
    def time_scale(self) -> float:
        """ds/dt of the input normalization"""
        return 2.0 / self.t_c

    def normalize(self, t):
        return self.time_scale * np.asarray(t, dtype=float) - 1.0

    @cached_property
    def finite(self) -> bool:
        return all(np.all(np.isfinite(w)) and np.all(np.isfinite(b)) for w, b in zip(self.weights, self.biases))

    def check_finite(self):
        if not self.finite:
            raise NonFiniteError("network parameters contain NaN or infinity", term="parameters")


# -----------------------------
# Construction and parameter views
# -----------------------------
def init_network(n: int, t_c: float, hidden=settings.DEFAULT_HIDDEN, seed: int = 0) -> TubeNet:
    """Uniform fan-in scaled initialization, bit-reproducible for a fixed seed"""
    hidden = tuple(int(w) for w in hidden)
    if n < 1:
        raise ValueError("n must be >= 1")
    if not hidden or any(w < 1 for w in hidden):
        raise ValueError(f"hidden widths must be >= 1, got {hidden}")
    if t_c <= 0:
        raise ValueError("t_c must be > 0")

    rng = np.random.default_rng(seed)
    widths = (1, *hidden, n + 1)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return TubeNet(n=n, t_c=float(t_c), widths=widths, weights=tuple(weights), biases=tuple(biases))


def parameters(net: TubeNet) -> np.ndarray:
    """Flat theta: layer-major, weights row-major then biases"""
    return np.concatenate([x.ravel() for w, b in zip(net.weights, net.biases) for x in (w, b)])


def with_parameters(net: TubeNet, theta: np.ndarray) -> TubeNet:
    theta = np.asarray(theta, dtype=float)
    if theta.size != net.num_params:
        raise ValueError(f"expected {net.num_params} parameters, got {theta.size}")
    weights, biases, pos = [], [], 0
    for fan_in, fan_out in zip(net.widths[:-1], net.widths[1:]):
        weights.append(theta[pos:pos + fan_in * fan_out].reshape(fan_out, fan_in).copy())
        pos += fan_in * fan_out
        biases.append(theta[pos:pos + fan_out].copy())
        pos += fan_out
    return TubeNet(n=net.n, t_c=net.t_c, widths=net.widths, weights=tuple(weights), biases=tuple(biases))


# -----------------------------
# Forward evaluation
# -----------------------------
def _propagate(net: TubeNet, times: np.ndarray):
    """Dual forward pass; returns output Dual (tangent w.r.t. s) and per-layer cache"""
    s = net.normalize(times).reshape(-1, 1)
    h = Dual.variable(s)
    cache = []
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = h.affine(w, b)
        if i == last:
            cache.append((h, None, None))
            return a, cache
        out = a.tanh()
        cache.append((h, out.value, a.tangent))
        h = out


def evaluate(net: TubeNet, times) -> tuple[np.ndarray, np.ndarray]:
    """Outputs y (B, n+1) and their physical-time derivatives (B, n+1)"""
    net.check_finite()
    out, _ = _propagate(net, np.atleast_1d(np.asarray(times, dtype=float)))
    return out.value, out.tangent * net.time_scale


def forward(net: TubeNet, t: float) -> tuple[np.ndarray, float]:
    """(c(t), r(t)); extrapolation outside [0, t_c] is allowed but unverified"""
    y, _ = evaluate(net, [t])
    return y[0, :net.n].copy(), float(y[0, net.n])


def forward_batch(net: TubeNet, times) -> tuple[np.ndarray, np.ndarray]:
    y, _ = evaluate(net, times)
    return y[:, :net.n], y[:, net.n]


def time_derivative(net: TubeNet, t: float) -> tuple[np.ndarray, float]:
    """(c'(t), r'(t)) including the 2/t_c input scaling"""
    _, ydot = evaluate(net, [t])
    return ydot[0, :net.n].copy(), float(ydot[0, net.n])


def tube_slice(net: TubeNet, t: float) -> TubeSlice:
    y, ydot = evaluate(net, [t])
    n = net.n
    return TubeSlice(center=y[0, :n].copy(), radius=float(y[0, n]),
                     center_rate=ydot[0, :n].copy(), radius_rate=float(ydot[0, n]))


# -----------------------------
# Loss and exact gradient
# -----------------------------
def pairwise_sum(rows: np.ndarray) -> np.ndarray:
    """Sum over axis 0 as a pairwise tree in index order"""
    rows = np.asarray(rows, dtype=float)
    if rows.shape[0] == 0:
        return np.zeros(rows.shape[1:])
    while rows.shape[0] > 1:
        half = rows.shape[0] // 2
        paired = rows[0:2 * half:2] + rows[1:2 * half:2]
        rows = np.concatenate([paired, rows[2 * half:]], axis=0) if rows.shape[0] % 2 else paired
    return rows[0]


def _unit(v: np.ndarray, norm: np.ndarray) -> np.ndarray:
    norm = norm[:, None]
    return np.where(norm > 0, v / np.where(norm > 0, norm, 1.0), 0.0)


def _physics_upstream(net, y, ydot, times, scen: TrasScenario, hyper: LossConfig):
    """Per-row hinge terms (rows, 9) and upstream adjoints of y and raw tangent"""
    n = net.n
    rows = y.shape[0]
    c, r = y[:, :n], y[:, n]
    cdot, rdot = ydot[:, :n], ydot[:, n]
    w = hyper.phys_weights
    thr = hyper.eta_hat - hyper.hinge_margin

    terms = np.zeros((rows, 9))
    g_c = np.zeros((rows, n))
    g_r = np.zeros(rows)
    g_cdot = np.zeros((rows, n))
    g_rdot = np.zeros(rows)

    z, grad = space_residual_and_grad(c, r, scen.space)
    z = z - thr
    act = z > 0
    terms[:, 0] = np.where(act, z, 0.0)
    g_c += w[0] * act[:, None] * grad
    g_r += w[0] * act

    z = -r + hyper.r_d - thr
    act = z > 0
    terms[:, 1] = np.where(act, z, 0.0)
    g_r -= w[1] * act

    distance = signed_distance_and_grad if hyper.signed_obstacle_distance else distance_and_grad
    for obs in scen.obstacles:
        dist, grad = distance(c, obs, times)
        z = -dist + r - thr
        act = z > 0
        terms[:, 2] += np.where(act, z, 0.0)
        g_c -= w[2] * act[:, None] * grad
        g_r += w[2] * act

    speed = np.linalg.norm(cdot, axis=1)
    z = speed - hyper.lipschitz_center * (1.0 - hyper.rate_margin)
    act = z > 0
    terms[:, 3] = np.where(act, z, 0.0)
    g_cdot += w[3] * act[:, None] * _unit(cdot, speed)

    z = np.abs(rdot) - hyper.lipschitz_radius * (1.0 - hyper.rate_margin)
    act = z > 0
    terms[:, 4] = np.where(act, z, 0.0)
    g_rdot += w[4] * act * np.sign(rdot)

    upstream = np.concatenate([g_c, g_r[:, None]], axis=1)
    upstream_tangent = np.concatenate([g_cdot, g_rdot[:, None]], axis=1) * net.time_scale
    return terms, upstream, upstream_tangent


def _boundary_upstream(net, y, scen: TrasScenario, hyper: LossConfig):
    """Rows for t = 0 and t = t_c: squared-norm boundary terms and their adjoints"""
    n = net.n
    wb = hyper.boundary_weights
    terms = np.zeros((2, 9))
    upstream = np.zeros((2, n + 1))

    d_c0 = y[0, :n] - scen.start.c
    d_r0 = y[0, n] - scen.start.radius
    d_c1 = y[1, :n] - scen.target.c
    d_r1 = y[1, n] - scen.target.radius

    terms[0, 5] = d_c0 @ d_c0
    terms[0, 6] = d_r0 * d_r0
    terms[1, 7] = d_c1 @ d_c1
    terms[1, 8] = d_r1 * d_r1

    upstream[0, :n] = 2.0 * wb[0] * d_c0
    upstream[0, n] = 2.0 * wb[1] * d_r0
    upstream[1, :n] = 2.0 * wb[2] * d_c1
    upstream[1, n] = 2.0 * wb[3] * d_r1
    return terms, upstream, np.zeros_like(upstream)


def _row_gradients(net: TubeNet, cache, upstream: np.ndarray, upstream_tangent: np.ndarray) -> np.ndarray:
    """Reverse pass over the dual graph; returns per-row parameter gradients (rows, P)"""
    rows = upstream.shape[0]
    adj_h, adj_hd = upstream, upstream_tangent
    parts = []
    last = len(net.weights) - 1
    for i in range(last, -1, -1):
        h_in, h_out, a_tangent = cache[i]
        if i == last:
            adj_a, adj_ad = adj_h, adj_hd
        else:
            slope = 1.0 - h_out * h_out
            adj_ad = adj_hd * slope
            adj_a = (adj_h - 2.0 * adj_hd * a_tangent * h_out) * slope
        d_w = np.einsum("bo,bi->boi", adj_a, h_in.value) + np.einsum("bo,bi->boi", adj_ad, h_in.tangent)
        parts.append(adj_a)
        parts.append(d_w.reshape(rows, -1))
        if i > 0:
            w = net.weights[i]
            adj_h = adj_a @ w
            adj_hd = adj_ad @ w
    parts.reverse()
    return np.concatenate(parts, axis=1)


def _chunk(net, times, scen, hyper, boundary: bool):
    out, cache = _propagate(net, times)
    y = out.value
    if not np.all(np.isfinite(y)) or not np.all(np.isfinite(out.tangent)):
        raise NonFiniteError("network evaluation produced NaN or infinity", term="forward")
    if boundary:
        terms, up, up_t = _boundary_upstream(net, y, scen, hyper)
    else:
        terms, up, up_t = _physics_upstream(net, y, out.tangent * net.time_scale, times, scen, hyper)
    return terms, _row_gradients(net, cache, up, up_t)


_TERM_NAMES = ("L_p1 space", "L_p2 radius", "L_p3 obstacle", "L_p4 center rate", "L_p5 radius rate",
               "L_b1 start center", "L_b2 start radius", "L_b3 target center", "L_b4 target radius")


def loss_gradient(net: TubeNet, batch, scen: TrasScenario, hyper: LossConfig,
                  workers: int = 1) -> tuple[LossBreakdown, np.ndarray]:
    """
    Total loss L = L_phys + L_bc over the collocation batch and its exact gradient.

    Physics hinge terms are summed over the batch; boundary terms use t = 0 and
    t = t_c on every call. Rows are processed in fixed chunks and reduced by a
    pairwise tree, so the result is bit-identical for any worker count.
    """
    batch = np.asarray(batch, dtype=float).reshape(-1)
    if batch.size == 0:
        raise ValueError("collocation batch must be nonempty")
    net.check_finite()

    chunks = [(batch[i:i + _CHUNK_ROWS], False) for i in range(0, batch.size, _CHUNK_ROWS)]
    chunks.append((np.array([0.0, net.t_c]), True))

    def run(item):
        return _chunk(net, item[0], scen, hyper, item[1])

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, chunks))
    else:
        results = [run(item) for item in chunks]

    terms = pairwise_sum(np.concatenate([t for t, _ in results], axis=0))
    grad = pairwise_sum(np.concatenate([g for _, g in results], axis=0))

    for name, value in zip(_TERM_NAMES, terms):
        if not np.isfinite(value):
            raise NonFiniteError(f"loss term {name} is not finite", term=name)
    if not np.all(np.isfinite(grad)):
        raise NonFiniteError("loss gradient is not finite", term="gradient")

    wp = np.asarray(hyper.phys_weights, dtype=float)
    wb = np.asarray(hyper.boundary_weights, dtype=float)
    physics = float(wp @ terms[:5])
    boundary = float(wb @ terms[5:])
    breakdown = LossBreakdown(*(float(v) for v in terms), physics=physics, boundary=boundary,
                              total=physics + boundary)
    return breakdown, grad


# -----------------------------
# Model file
# -----------------------------
def serialize(net: TubeNet) -> bytes:
    """PNST v1: magic, version, n, t_c, layer count, widths, f64 parameters (little-endian)"""
    head = _HEADER.pack(settings.MODEL_MAGIC, settings.MODEL_VERSION, net.n, net.t_c, len(net.widths))
    head += struct.pack(f"<{len(net.widths)}I", *net.widths)
    return head + parameters(net).astype("<f8").tobytes()


def deserialize(data: bytes) -> TubeNet:
    if len(data) < 5:
        raise ModelFormatError(f"length error: file too short for header ({len(data)} bytes)")
    magic, version = struct.unpack_from("<4sB", data, 0)
    if magic != settings.MODEL_MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}, expected {settings.MODEL_MAGIC!r}")
    if version != settings.MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {version}, expected {settings.MODEL_VERSION}")
    if len(data) < _HEADER.size:
        raise ModelFormatError(f"length error: truncated header ({len(data)} bytes)")

    _, _, n, t_c, count = _HEADER.unpack_from(data, 0)
    widths_end = _HEADER.size + 4 * count
    if len(data) < widths_end:
        raise ModelFormatError(f"length error: truncated layer widths ({len(data)} bytes)")
    widths = struct.unpack_from(f"<{count}I", data, _HEADER.size)

    n_params = sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))
    expected = widths_end + 8 * n_params
    if len(data) != expected:
        raise ModelFormatError(f"length error: expected {expected} bytes, got {len(data)}")
    if count < 2 or widths[0] != 1 or widths[-1] != n + 1 or not t_c > 0:
        raise ModelFormatError(f"inconsistent header: n={n}, t_c={t_c}, widths={widths}")

    theta = np.frombuffer(data, dtype="<f8", offset=widths_end).astype(float)
    skeleton = TubeNet(
        n=n, t_c=t_c, widths=tuple(widths),
        weights=tuple(np.zeros((b, a)) for a, b in zip(widths[:-1], widths[1:])),
        biases=tuple(np.zeros(b) for b in widths[1:]),
    )
    return with_parameters(skeleton, theta)
