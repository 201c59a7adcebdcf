"""
Tube Verifier Tests
"""

import json

import numpy as np
import pytest
from scipy.linalg import svdvals

from services.trainer import collocation_grid
from services.verifier import (
    certify,
    dense_audit,
    global_lipschitz_bound,
    interval_lipschitz_bound,
    proof_inequalities,
    spectral_norm,
)
from state.scenario import TrainConfig
from tools.neural_tube import TubeNet, forward_batch, init_network, parameters, time_derivative, with_parameters
from utils.errors import GridMismatchError
from tests.conftest import constant_net, dip_net


# -----------------------------
# Lipschitz bounds
# -----------------------------
def test_zero_weights_have_zero_bounds():
    """Constant tube: both bounds vanish"""
    net = constant_net([0.0, 0.0], 0.5, t_c=1.0)
    assert global_lipschitz_bound(net) == (0.0, 0.0)
    iv_c, iv_r, _, _ = interval_lipschitz_bound(net, collocation_grid(1.0, 0.1))
    assert (iv_c, iv_r) == (0.0, 0.0)


def test_spectral_norm_against_svd():
    """Power iteration reaches the largest singular value of well-separated spectra"""
    rng = np.random.default_rng(0)
    u, _ = np.linalg.qr(rng.normal(size=(6, 6)))
    v, _ = np.linalg.qr(rng.normal(size=(4, 4)))
    weight = u[:, :4] @ np.diag([5.0, 2.0, 1.0, 0.5]) @ v.T
    assert spectral_norm(weight) == pytest.approx(svdvals(weight)[0], rel=1e-9)
    column = rng.normal(size=(64, 1))
    assert spectral_norm(column) == pytest.approx(svdvals(column)[0], rel=1e-12)


def test_single_neuron_bound_dominates_derivative():
    """Bound >= |v w| 2/t_c >= sup |r'|"""
    w, v, t_c = 1.7, 0.8, 4.0
    net = TubeNet(
        n=1, t_c=t_c, widths=(1, 1, 2),
        weights=(np.array([[w]]), np.array([[0.0], [v]])),
        biases=(np.array([-0.3]), np.array([0.0, 0.0])),
    )
    _, l_r = global_lipschitz_bound(net)
    assert l_r >= abs(v * w) * 2 / t_c
    sup = max(abs(time_derivative(net, t)[1]) for t in np.linspace(0.0, t_c, 2001))
    assert l_r >= sup


def test_bounds_dominate_random_secants():
    """No secant slope over [0, t_c] exceeds either bound"""
    rng = np.random.default_rng(4)
    t_c = 3.0
    net = init_network(2, t_c, hidden=(16, 16), seed=9)
    norm_c, norm_r = global_lipschitz_bound(net)
    iv_c, iv_r, _, _ = interval_lipschitz_bound(net, collocation_grid(t_c, 0.05))

    t1 = rng.uniform(0.0, t_c, size=10_000)
    t2 = rng.uniform(0.0, t_c, size=10_000)
    keep = np.abs(t1 - t2) > 1e-9
    t1, t2 = t1[keep], t2[keep]
    c1, r1 = forward_batch(net, t1)
    c2, r2 = forward_batch(net, t2)
    gap = np.abs(t1 - t2)
    slope_c = np.linalg.norm(c1 - c2, axis=1) / gap
    slope_r = np.abs(r1 - r2) / gap
    assert slope_c.max() <= min(norm_c, iv_c) + 1e-9
    assert slope_r.max() <= min(norm_r, iv_r) + 1e-9


# -----------------------------
# Dense audit
# -----------------------------
def test_constant_tube_audit_matches_collocation(trivial_scenario):
    """Constant valid tube: audit residuals equal the sampled ones and stay negative"""
    net = constant_net([0.0, 0.0], 0.5, t_c=1.0)
    audit = dense_audit(net, trivial_scenario, 0.01)
    assert audit.clean
    assert audit.worst_space == pytest.approx(0.5 - 3.0)
    assert audit.worst_radius == pytest.approx(-0.4)


def test_audit_locates_radius_dip(line_scenario):
    """Violation time within one resolution step of the true first crossing"""
    net = dip_net(base_radius=1.0, depth=0.5, t_mid=0.5, half_width=0.01, t_c=1.0)
    resolution = 1e-3
    audit = dense_audit(net, line_scenario, resolution)

    fine = np.linspace(0.4, 0.6, 200_001)
    _, radius = forward_batch(net, fine)
    truth = fine[np.argmax(-radius + line_scenario.r_d > 0)]
    assert audit.first_violation is not None
    assert abs(audit.first_violation - truth) <= resolution
    assert audit.worst_radius > 0


def test_audit_refinement_is_monotone(line_scenario):
    """Halving the step samples a superset, so worst residuals cannot drop"""
    net = dip_net(base_radius=1.0, depth=0.3, t_mid=0.37, half_width=0.02, t_c=1.0, steepness=40.0)
    coarse = dense_audit(net, line_scenario, 0.01)
    fine = dense_audit(net, line_scenario, 0.005)
    assert fine.worst_space >= coarse.worst_space - 1e-12
    assert fine.worst_radius >= coarse.worst_radius - 1e-12


# -----------------------------
# Certificate
# -----------------------------
def test_constant_tube_passes(trivial_scenario, trivial_config):
    """Strictly valid constant tube is certified"""
    net = constant_net([0.0, 0.0], 0.5, t_c=1.0)
    cert = certify(net, trivial_scenario, trivial_config)
    assert cert.passed
    assert cert.margin <= 0
    assert cert.margin == pytest.approx(cert.eta_hat + (cert.eff_center + cert.eff_radius) * cert.epsilon)
    assert cert.residuals_ok and cert.boundary_ok and cert.margin_ok and cert.audit_ok


def test_adversarial_dip_between_samples_rejected(line_scenario):
    """Dip hidden between collocation points is caught by the margin or the audit"""
    cfg = TrainConfig(seed=0, epsilon=0.05, lipschitz_center=1.0, lipschitz_radius=1.0)
    net = dip_net(base_radius=1.0, depth=0.5, t_mid=0.5, half_width=0.01, t_c=1.0)
    cert = certify(net, line_scenario, cfg)
    assert cert.residuals_ok
    assert not cert.passed
    assert cert.margin > 0 or not cert.audit_ok


def test_margin_arithmetic():
    """eta_hat = -0.05, L sum 4, eps = 0.01 gives margin -0.01"""
    eta_hat, l_sum, eps = -0.05, 4.0, 0.01
    assert eta_hat + l_sum * eps == pytest.approx(-0.01)


def test_proof_inequalities_hold_for_passing_certificate(trivial_scenario, trivial_config):
    """Sampled residual plus Lipschitz drift stays <= 0 at random times"""
    base = init_network(2, 1.0, hidden=(4,), seed=5)
    theta = 1e-3 * parameters(base)
    theta[-3:] = [0.0, 0.0, 0.5]
    net = with_parameters(base, theta)
    scen = trivial_scenario
    cert = certify(net, scen, trivial_config)
    assert cert.passed
    times = np.random.default_rng(8).uniform(0.0, 1.0, size=1000)
    assert np.all(proof_inequalities(net, scen, cert, times) <= 0.0)


def test_refined_grid_worst_residual_non_decreasing(line_scenario):
    """With a fixed net, a finer grid never lowers the sampled worst residual"""
    net = dip_net(base_radius=1.0, depth=0.2, t_mid=0.31, half_width=0.03, t_c=1.0, steepness=30.0)
    base = TrainConfig(seed=0, lipschitz_center=1.0, lipschitz_radius=1.0)
    coarse = certify(net, line_scenario, base.model_copy(update={"epsilon": 0.03}))
    fine = certify(net, line_scenario, base.model_copy(update={"epsilon": 0.01}))
    assert fine.worst_radius >= coarse.worst_radius - 1e-12
    assert fine.worst_space >= coarse.worst_space - 1e-12


def test_model_scenario_mismatch(trivial_scenario, trivial_config):
    """A model trained for another horizon cannot be certified"""
    with pytest.raises(GridMismatchError):
        certify(constant_net([0.0, 0.0], 0.5, t_c=2.0), trivial_scenario, trivial_config)


def test_explicit_grid_must_match(trivial_scenario, trivial_config):
    """A supplied grid must equal the one rebuilt from the config"""
    with pytest.raises(GridMismatchError):
        certify(constant_net([0.0, 0.0], 0.5, t_c=1.0), trivial_scenario, trivial_config,
                grid=collocation_grid(1.0, 0.02))


def test_report_is_flat_json(trivial_scenario, trivial_config):
    """Report uses the 'pass' key and stable field order"""
    cert = certify(constant_net([0.0, 0.0], 0.5, t_c=1.0), trivial_scenario, trivial_config)
    report = json.loads(cert.to_report())
    keys = list(report)
    assert keys[0] == "pass" and report["pass"] is True
    assert keys == list(json.loads(cert.to_report()))
    assert report["time_normalization"] == "s = 2t/t_c - 1"
