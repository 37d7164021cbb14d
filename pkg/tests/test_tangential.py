import numpy as np
import pytest

from alphapatch.curve import ClosedCurve, derivative, reparametrize_uniform, sample_curve, spectral_derivative
from alphapatch.tangential import lambda_qg, speed_report, tangential_derivative_integrand
from alphapatch.velocity import PatchConfig, self_velocity

from conftest import circle, ellipse, perturbed_circle

QG = PatchConfig(1.0, prefactor=1.0)


@pytest.mark.parametrize("N", [64, 256])
def test_lambda_vanishes_on_circle(N):
    field = lambda_qg(circle(N))
    assert np.max(np.abs(field.lambda_values)) < 1e-10
    assert abs(field.mu) < 1e-12
    assert field.uniform_form


def test_lambda_starts_at_zero_and_is_periodic():
    c = reparametrize_uniform(perturbed_circle(128, 0.1, 3))
    lam = lambda_qg(c).lambda_values
    assert lam[0] == 0.0
    # derivative of the periodic interpolant reproduces the defining integrand
    g = tangential_derivative_integrand(c)
    A = speed_report(c).A
    f = g / A
    assert np.max(np.abs(spectral_derivative(lam) - (f.mean() - f))) < 1e-10


def test_mean_drift_is_log_rate_of_speed():
    # mean_drift = (1/2A) dA/dt along the lambda-corrected flow; central difference oracle
    def f(g):
        r = 1 + 0.1 * np.cos(3 * g) + 0.08 * np.sin(2 * g)
        return np.stack([r * np.cos(g), r * np.sin(g)], axis=1)

    c = reparametrize_uniform(sample_curve(f, 128))
    v = self_velocity(c, QG)
    field = lambda_qg(c, v)
    assert field.mu == 2 * field.mean_drift
    total = v + field.lambda_values[:, None] * derivative(c, 1)
    dt = 1e-4
    A = speed_report(c).A
    Ap = speed_report(ClosedCurve(c.nodes + dt * total)).A
    Am = speed_report(ClosedCurve(c.nodes - dt * total)).A
    fd = (Ap - Am) / (2 * dt) / (2 * A)
    assert abs(field.mean_drift) > 1e-5
    assert abs(fd - field.mean_drift) < 1e-9


def test_speed_growth_becomes_uniform():
    # with v + lam x', d/dt |x'|^2 = 2 (g + A lam') must be constant along the curve
    c = reparametrize_uniform(perturbed_circle(128, 0.1, 3))
    v = self_velocity(c, QG)
    lam = lambda_qg(c, v).lambda_values
    dx = derivative(c, 1)
    total = v + lam[:, None] * dx
    growth = 2 * np.sum(dx * spectral_derivative(total), axis=1)
    assert np.ptp(growth) < 1e-9 * (1 + np.max(np.abs(growth)))


def test_nonuniform_curve_uses_pointwise_speed():
    c = ellipse(64, 1.0, 0.5)
    field = lambda_qg(c)
    assert not field.uniform_form
    v = self_velocity(c, QG)
    dx = derivative(c, 1)
    speed2 = np.sum(dx * dx, axis=1)
    g = np.sum(dx * spectral_derivative(v), axis=1)
    f = g / speed2
    assert np.max(np.abs(spectral_derivative(field.lambda_values) - (f.mean() - f))) < 1e-10


def test_switch_threshold_controls_form():
    c = ellipse(64, 1.0, 0.999)
    assert not lambda_qg(c, switch_threshold=1e-6).uniform_form
    assert lambda_qg(c, switch_threshold=1e-2).uniform_form


def test_speed_report_circle_and_ellipse():
    rep = speed_report(circle(64, 2.0))
    assert abs(rep.A - 4.0) < 1e-12
    assert rep.uniformity_defect < 1e-13 and rep.tangency_defect < 1e-12
    rep = speed_report(ellipse(64, 1.0, 0.5))
    # |x'|^2 = sin^2 + 0.25 cos^2 has mean 0.625 and extremes 0.25, 1
    assert abs(rep.A - 0.625) < 1e-13
    assert abs(rep.uniformity_defect - 0.375 / 0.625) < 1e-12
