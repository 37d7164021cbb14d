import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from alphapatch.curve import ClosedCurve, derivative, enclosed_area
from alphapatch.velocity import (
    NearSingularError,
    PatchConfig,
    RegularizationSpec,
    SingularKernelError,
    _weight_moments,
    coupling_constant,
    external_velocity,
    mollify,
    normal_velocity,
    perp,
    regularized_self_velocity,
    self_velocity,
    shift_weights,
)

from conftest import circle, ellipse, perturbed_circle, reverse

ALPHAS = [0.3, 0.5, 0.7, 1.0]


# ------------------------------------------------------------------ coupling constant


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 0.7, 0.99, 1.0])
def test_coupling_constant_matches_mpmath(alpha):
    mp.mp.dps = 30
    a = mp.mpf(alpha)
    expect = 1.7 * mp.gamma(a / 2) / (mp.power(2, 1 - a) * mp.gamma(2 - a / 2))
    assert abs(coupling_constant(2.0, 0.3, alpha) - float(expect)) < 1e-13 * abs(float(expect))


def test_coupling_constant_qg_value():
    # Gamma(1/2) / Gamma(3/2) = 2
    assert abs(coupling_constant(1.0, 0.0, 1.0) - 2.0) < 1e-15


@pytest.mark.parametrize("alpha", [0.0, -0.1, 1.5])
def test_coupling_constant_rejects_alpha(alpha):
    with pytest.raises(ValueError, match="alpha"):
        coupling_constant(1.0, 0.0, alpha)
    with pytest.raises(ValueError, match="alpha"):
        PatchConfig(alpha)


def test_prefactor_override_and_default():
    assert PatchConfig(1.0, prefactor=1.0).velocity_prefactor == 1.0
    assert abs(PatchConfig(1.0).velocity_prefactor - 1.0 / math.pi) < 1e-15


# ------------------------------------------------------------------ quadrature weights


@pytest.mark.parametrize("alpha", [0.3, 0.5, 0.9, 1.0])
def test_weight_moments_match_adaptive_quadrature(alpha):
    mp.mp.dps = 20
    d = _weight_moments(16, alpha)
    for m in (1, 2, 5, 8):
        f = lambda e: (mp.cos(m * e) - 1) / abs(2 * mp.sin(e / 2)) ** alpha  # noqa: E731
        expect = 2 * mp.quad(f, [0, mp.pi / 4, mp.pi / 2, mp.pi])
        assert abs(d[m] - float(expect)) < 1e-12 * max(1.0, abs(float(expect)))
    assert d[0] == 0.0


@pytest.mark.parametrize("alpha", ALPHAS)
def test_shift_weights_are_even_and_vanish_at_zero(alpha):
    q = shift_weights(32, alpha)
    assert q[0] == 0.0
    assert np.allclose(q[1:], q[1:][::-1], atol=1e-15)


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_trapezoid_weights_are_uniform(alpha):
    q = shift_weights(16, alpha, "trapezoid")
    assert np.all(q[1:] == 2 * math.pi / 16)


# ------------------------------------------------------------------ circle


def _circle_speed_oracle(alpha):
    # tangential speed on the unit circle, prefactor 1
    f = lambda e: (1 - math.cos(e)) / (2 * math.sin(e / 2)) ** alpha  # noqa: E731
    return 2 * quad(f, 0.0, math.pi, epsabs=1e-14, epsrel=1e-14)[0]


@pytest.mark.parametrize("alpha", ALPHAS)
@pytest.mark.parametrize("N", [64, 256])
def test_circle_velocity_is_tangential_with_closed_form_speed(alpha, N):
    c = circle(N)
    cfg = PatchConfig(alpha, prefactor=1.0)
    v = self_velocity(c, cfg)
    dx = derivative(c, 1)
    assert np.max(np.abs(normal_velocity(c, cfg))) < 1e-12
    tangential = np.sum(v * dx, axis=1)
    assert np.max(np.abs(tangential - _circle_speed_oracle(alpha))) < 1e-11


def test_circle_qg_speed_is_four():
    v = self_velocity(circle(64), PatchConfig(1.0, prefactor=1.0))
    assert np.max(np.abs(np.linalg.norm(v, axis=1) - 4.0)) < 1e-12


def test_trapezoid_rule_misses_circle_speed_at_order_h2():
    # the plain rule drops the eta = 0 cell; error ~ h^2 / 12 at alpha = 1
    errs = []
    for N in (32, 64, 128):
        v = self_velocity(circle(N), PatchConfig(1.0, prefactor=1.0), quadrature="trapezoid")
        errs.append(abs(np.linalg.norm(v[0]) - 4.0))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(orders - 2.0) < 0.05)


# ------------------------------------------------------------------ non-circular oracle


def _self_velocity_oracle(a, b, alpha, g):
    """Direct adaptive quadrature of the subtracted integral for an ellipse."""

    def x(s):
        return np.array([a * math.cos(s), b * math.sin(s)])

    def dx(s):
        return np.array([-a * math.sin(s), b * math.cos(s)])

    out = []
    for comp in range(2):

        def f(eta):
            if eta == 0.0:
                return 0.0
            num = dx(g)[comp] - dx(g - eta)[comp]
            return num / np.linalg.norm(x(g) - x(g - eta)) ** alpha

        out.append(quad(f, -math.pi, math.pi, points=[0.0], limit=400, epsabs=1e-13, epsrel=1e-13)[0])
    return np.array(out)


@pytest.mark.parametrize("alpha", [0.4, 1.0])
def test_ellipse_velocity_matches_adaptive_quadrature(alpha):
    a, b, N = 1.0, 0.6, 128
    c = ellipse(N, a, b)
    v = self_velocity(c, PatchConfig(alpha, prefactor=1.0))
    for j in (0, 17, 40, 64, 101):
        expect = _self_velocity_oracle(a, b, alpha, c.gamma[j])
        assert np.max(np.abs(v[j] - expect)) < 1e-9


@pytest.mark.parametrize("alpha,order", [(0.5, 2.5), (1.0, 2.0)])
def test_trapezoid_self_convergence_order(alpha, order):
    # subtracted integrand behaves like |eta|^(2 - alpha) at the diagonal
    cfg = PatchConfig(alpha, prefactor=1.0)
    ref = self_velocity(ellipse(64, 1.0, 0.6), cfg)
    errs = []
    for N in (16, 32, 64):
        v = self_velocity(ellipse(N, 1.0, 0.6), cfg, quadrature="trapezoid")
        errs.append(np.max(np.abs(v - ref[:: 64 // N])))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert rates[-1] > order - 0.3


def test_spectral_rule_converges_spectrally():
    cfg = PatchConfig(0.5, prefactor=1.0)
    ref = self_velocity(ellipse(128, 1.0, 0.6), cfg)
    e16 = np.max(np.abs(self_velocity(ellipse(16, 1.0, 0.6), cfg) - ref[::8]))
    e32 = np.max(np.abs(self_velocity(ellipse(32, 1.0, 0.6), cfg) - ref[::4]))
    e64 = np.max(np.abs(self_velocity(ellipse(64, 1.0, 0.6), cfg) - ref[::2]))
    assert e32 < e16 / 10 and e64 < max(e32 / 10, 1e-12)


# ------------------------------------------------------------------ symmetries


@settings(max_examples=25, deadline=None)
@given(
    st.sampled_from(ALPHAS),
    st.floats(-math.pi, math.pi),
    st.floats(-3, 3),
    st.floats(-3, 3),
    st.floats(0.3, 3.0),
)
def test_velocity_equivariance(alpha, angle, dx, dy, scale):
    c = perturbed_circle(32, 0.15, 3)
    cfg = PatchConfig(alpha)
    v = self_velocity(c, cfg)
    R = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    moved = ClosedCurve(scale * c.nodes @ R.T + np.array([dx, dy]))
    # rotation rotates, translation drops out, scaling multiplies by scale^(1 - alpha)
    expect = scale ** (1 - alpha) * v @ R.T
    assert np.max(np.abs(self_velocity(moved, cfg) - expect)) < 1e-10 * (1 + np.max(np.abs(expect)))


@pytest.mark.parametrize("alpha", ALPHAS)
def test_reversed_orientation_flips_velocity(alpha):
    c = perturbed_circle(32)
    r = reverse(c)
    cfg = PatchConfig(alpha)
    v, w = self_velocity(c, cfg), self_velocity(r, cfg)
    idx = (-np.arange(32)) % 32
    assert np.max(np.abs(w + v[idx])) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.sampled_from(ALPHAS), st.lists(st.floats(-0.05, 0.05), min_size=4, max_size=4))
def test_discrete_area_rate_vanishes(alpha, amps):
    # symmetric pair weights make the summed normal flux cancel exactly
    def f(g):
        r = 1 + sum(a * np.cos((k + 2) * g + k) for k, a in enumerate(amps))
        return np.stack([r * np.cos(g), r * np.sin(g)], axis=1)

    from alphapatch.curve import sample_curve

    c = sample_curve(f, 32)
    assert abs(np.sum(normal_velocity(c, PatchConfig(alpha)))) < 1e-12


@pytest.mark.parametrize("alpha", ALPHAS)
def test_normal_velocity_is_projection_of_full_velocity(alpha):
    c = ellipse(32, 1.0, 0.7)
    cfg = PatchConfig(alpha)
    v = self_velocity(c, cfg)
    proj = np.sum(v * perp(derivative(c, 1)), axis=1)
    assert np.max(np.abs(proj - normal_velocity(c, cfg))) < 1e-13


# ------------------------------------------------------------------ singular input


def test_coincident_nodes_raise():
    nodes = circle(16).nodes.copy()
    nodes[3] = nodes[11]
    with pytest.raises(SingularKernelError) as info:
        self_velocity(ClosedCurve(nodes), PatchConfig(0.5))
    assert set(info.value.pair) == {3, 11}


def test_delta_removes_the_singularity():
    nodes = circle(16).nodes.copy()
    nodes[3] = nodes[11]
    v = regularized_self_velocity(ClosedCurve(nodes), PatchConfig(0.5), RegularizationSpec(delta=0.1))
    assert np.isfinite(v).all()


# ------------------------------------------------------------------ external velocity


def test_external_velocity_matches_quadrature_oracle():
    a, b, alpha = 1.0, 0.5, 0.7
    src = ellipse(128, a, b)
    cfg = PatchConfig(alpha, prefactor=1.0)
    pts = np.array([[2.5, 0.3], [0.0, -1.7], [-1.2, 1.4]])
    got = external_velocity(pts, src, cfg)
    for p, u in zip(pts, got):
        for comp, (fx, ) in enumerate([(lambda s: -a * math.sin(s),), (lambda s: b * math.cos(s),)]):
            f = lambda s, fx=fx: -fx(s) / math.hypot(p[0] - a * math.cos(s), p[1] - b * math.sin(s)) ** alpha  # noqa: E731
            expect = quad(f, -math.pi, math.pi, epsabs=1e-14, epsrel=1e-14, limit=200)[0]
            assert abs(u[comp] - expect) < 1e-12


def test_external_velocity_mirror_symmetry():
    # unit circle at (2, 0) seen from the unit circle at (-2, 0): u = perp(grad psi)
    # with psi even in y, so u(x, -y) = (-u1, u2)(x, y)
    src = circle(64, center=(2.0, 0.0))
    tgt = circle(64, center=(-2.0, 0.0)).nodes
    u = external_velocity(tgt, src, PatchConfig(1.0))
    mirror = (-np.arange(64)) % 64
    assert np.isfinite(u).all()
    assert np.max(np.abs(u[:, 0] + u[mirror, 0])) < 1e-13
    assert np.max(np.abs(u[:, 1] - u[mirror, 1])) < 1e-13
    assert np.max(np.abs(u)) > 1e-3


def test_external_field_of_circle_is_azimuthal():
    src = circle(128)
    pts = np.array([[3.0, 0.0], [0.0, 2.0], [-1.5, -1.5]])
    u = external_velocity(pts, src, PatchConfig(0.5))
    assert np.max(np.abs(np.sum(u * pts, axis=1))) < 1e-12


def test_external_velocity_on_source_node_raises():
    src = circle(16)
    with pytest.raises(NearSingularError):
        external_velocity(src.nodes[:2], src, PatchConfig(1.0))


# ------------------------------------------------------------------ regularization


def test_trivial_regularization_is_identity():
    c = perturbed_circle(32)
    cfg = PatchConfig(0.6)
    assert np.array_equal(regularized_self_velocity(c, cfg, RegularizationSpec()), self_velocity(c, cfg))


@pytest.mark.parametrize("alpha", [0.5, 1.0])
def test_delta_regularization_converges_linearly(alpha):
    c = perturbed_circle(64)
    cfg = PatchConfig(alpha)
    v0 = self_velocity(c, cfg)
    errs = [np.max(np.abs(regularized_self_velocity(c, cfg, RegularizationSpec(delta=d)) - v0)) for d in (1e-2, 1e-3, 1e-4)]
    assert errs[0] > errs[1] > errs[2]
    assert 0.7 < math.log10(errs[1] / errs[2]) < 1.3


def test_mollify_cutoff_and_gaussian():
    from alphapatch.curve import parameter_grid

    g = parameter_grid(64)
    f = np.cos(2 * g) + np.cos(10 * g)
    assert np.allclose(mollify(f, 0.2, "fourier_cutoff"), np.cos(2 * g), atol=1e-14)
    assert np.allclose(
        mollify(f, 0.1, "periodic_gaussian"),
        math.exp(-0.5 * 0.04) * np.cos(2 * g) + math.exp(-0.5) * np.cos(10 * g),
        atol=1e-14,
    )
    assert mollify(f, 0.0) is not None and np.array_equal(mollify(f, 0.0), f)


def test_mollify_rejects_unknown_kind():
    with pytest.raises(ValueError):
        mollify(np.zeros(8), 0.1, "boxcar")
    with pytest.raises(ValueError):
        RegularizationSpec(epsilon=-1.0)


def test_epsilon_regularization_keeps_circle_exact():
    c = circle(64)
    cfg = PatchConfig(0.5)
    v = regularized_self_velocity(c, cfg, RegularizationSpec(epsilon=0.05))
    assert np.max(np.abs(v - self_velocity(c, cfg))) < 1e-12
    assert abs(enclosed_area(c) - math.pi) < 1e-13
