"""Contour velocities for the alpha-patch family, 0 < alpha <= 1.

The eta-integrals of the on-curve velocities are sums over the node grid
eta_k = 2*pi*k/N, so at node j they run over every other node m != j, with
the eta = 0 term taken as zero.  Two rules are available:

``"spectral"`` (default)
    Product integration.  The integrand is split as
    |2 sin(eta/2)|^(-alpha) * F(eta) with F smooth and periodic, F(0) = 0;
    the weight is integrated exactly against the trigonometric interpolant
    of F.  Spectrally accurate for smooth curves, for every 0 < alpha <= 1.
``"trapezoid"``
    Plain periodic trapezoid.  Error O(h^(3 - alpha)) from the |eta|^(2-alpha)
    behaviour of the symmetrised integrand at eta = 0.

Both rules produce a symmetric pair-weight matrix.  Everything is O(N^2)
direct summation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np

from .curve import ClosedCurve, FloatArray, derivative, pairwise_chords, spectral_derivative

MollifierKind = Literal["fourier_cutoff", "periodic_gaussian"]
QuadratureRule = Literal["spectral", "trapezoid"]


class SingularKernelError(ArithmeticError):
    """Two distinct nodes coincide, so the kernel 1/|chord|^alpha blows up."""

    def __init__(self, pair: tuple[int, int]) -> None:
        super().__init__(f"coincident nodes {pair[0]} and {pair[1]}: singular kernel")
        self.pair = pair


class NearSingularError(ArithmeticError):
    """External evaluation point lies on a source node."""


def coupling_constant(theta_in: float, theta_out: float, alpha: float) -> float:
    """Theta_alpha = (theta_in - theta_out) Gamma(alpha/2) / (2^(1-alpha) Gamma(2 - alpha/2))."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    jump = theta_in - theta_out
    return jump * math.gamma(alpha / 2) / (2.0 ** (1.0 - alpha) * math.gamma(2.0 - alpha / 2))


@dataclass(frozen=True)
class PatchConfig:
    """Material data of one patch.

    ``prefactor`` replaces Theta_alpha / (2 pi) in front of the contour
    integrals when given (e.g. 1.0 for the normalisation Theta_alpha = 2 pi).
    """

    alpha: float
    theta_in: float = 1.0
    theta_out: float = 0.0
    prefactor: float | None = None

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")

    @property
    def coupling(self) -> float:
        return coupling_constant(self.theta_in, self.theta_out, self.alpha)

    @property
    def velocity_prefactor(self) -> float:
        if self.prefactor is not None:
            return float(self.prefactor)
        return self.coupling / (2.0 * np.pi)


@dataclass(frozen=True)
class RegularizationSpec:
    epsilon: float = 0.0
    delta: float = 0.0
    mollifier_kind: MollifierKind = "fourier_cutoff"

    def __post_init__(self) -> None:
        if self.epsilon < 0 or self.delta < 0:
            raise ValueError("epsilon and delta must be non-negative")
        if self.mollifier_kind not in ("fourier_cutoff", "periodic_gaussian"):
            raise ValueError(f"unknown mollifier kind {self.mollifier_kind!r}")

    @property
    def is_trivial(self) -> bool:
        return self.epsilon == 0.0 and self.delta == 0.0


def mollify(values: FloatArray, epsilon: float, kind: MollifierKind = "fourier_cutoff") -> FloatArray:
    """Periodic convolution with an approximate identity of width ``epsilon``.

    ``fourier_cutoff`` drops every mode with wavenumber above 1/epsilon;
    ``periodic_gaussian`` multiplies mode k by exp(-(epsilon k)^2 / 2).
    """
    values = np.asarray(values, dtype=np.float64)
    if epsilon == 0.0:
        return values
    N = values.shape[0]
    k = np.arange(N // 2 + 1, dtype=np.float64)
    if kind == "fourier_cutoff":
        mult = (k <= 1.0 / epsilon).astype(np.float64)
    elif kind == "periodic_gaussian":
        mult = np.exp(-0.5 * (epsilon * k) ** 2)
    else:
        raise ValueError(f"unknown mollifier kind {kind!r}")
    shape = (-1,) + (1,) * (values.ndim - 1)
    return np.fft.irfft(np.fft.rfft(values, axis=0) * mult.reshape(shape), n=N, axis=0)


def _weight_moments(N: int, alpha: float) -> FloatArray:
    """d_m = integral over T of |2 sin(eta/2)|^(-alpha) (cos(m eta) - 1), m = 0..N/2.

    Closed form 2 sin(pi a/2) G(a/2)/G(1-a/2) G(1-a) (r_m/r_0 - 1) with
    r_m = G(a/2+m)/G(1-a/2+m), arranged to stay finite as alpha -> 1.
    """
    eps = 1.0 - alpha
    if eps == 0.0:
        steps = 1.0 / (np.arange(N // 2) + 0.5)
        return -2.0 * np.concatenate([[0.0], np.cumsum(steps)])
    steps = np.log1p(-eps / (1.0 - alpha / 2 + np.arange(N // 2)))
    log_ratio = np.concatenate([[0.0], np.cumsum(steps)])
    scale = 2.0 * math.sin(math.pi * alpha / 2) * math.gamma(alpha / 2) / math.gamma(1.0 - alpha / 2)
    return scale * math.gamma(1.0 + eps) * np.expm1(log_ratio) / eps


@lru_cache(maxsize=64)
def shift_weights(N: int, alpha: float, rule: QuadratureRule = "spectral") -> FloatArray:
    """Per-shift quadrature factors q_k, k = 0..N-1, with q_0 = 0.

    The pair weight between nodes j and m = j - k is q_k / |x_j - x_m|^alpha.
    """
    h = 2.0 * np.pi / N
    if rule == "trapezoid":
        q = np.full(N, h)
    elif rule == "spectral":
        d = _weight_moments(N, alpha)
        k = np.arange(N)
        eta = h * k
        modes = np.arange(1, N // 2)
        omega = 2.0 * np.cos(np.outer(eta, modes)) @ d[1 : N // 2]
        omega += d[N // 2] * np.where(k % 2, -1.0, 1.0)
        omega /= N
        q = omega * np.abs(2.0 * np.sin(eta / 2)) ** alpha
    else:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    q[0] = 0.0
    q.setflags(write=False)
    return q


@lru_cache(maxsize=16)
def _shift_matrix(N: int, alpha: float, rule: QuadratureRule) -> FloatArray:
    q = shift_weights(N, alpha, rule)
    m = q[np.subtract.outer(np.arange(N), np.arange(N)) % N]
    m.setflags(write=False)
    return m


def _kernel_weights(
    chord: FloatArray, alpha: float, delta: float = 0.0, rule: QuadratureRule = "spectral"
) -> FloatArray:
    """Symmetric pair weights q_{j-m} (|chord_jm| + delta)^(-alpha), zero diagonal."""
    r = chord + delta if delta else chord.copy()
    np.fill_diagonal(r, 1.0)
    if delta == 0.0 and not r.all():
        j, m = np.argwhere(r == 0.0)[0]
        raise SingularKernelError((int(j), int(m)))
    if alpha == 1.0:
        inv = 1.0 / r
    elif alpha == 0.5:
        inv = 1.0 / np.sqrt(r)
    else:
        inv = r ** (-alpha)
    # the diagonal of the shift matrix is zero
    return _shift_matrix(chord.shape[0], float(alpha), rule) * inv


def _subtracted_sum(dx: FloatArray, weights: FloatArray) -> FloatArray:
    # sum_m w_jm (dx_j - dx_m), written as a matrix product
    return dx * weights.sum(axis=1)[:, None] - weights @ dx


def self_velocity(
    curve: ClosedCurve,
    cfg: PatchConfig,
    prefactor_override: float | None = None,
    *,
    quadrature: QuadratureRule = "spectral",
) -> FloatArray:
    """Subtracted self-induced velocity of a patch boundary, shape (N, 2).

    prefactor * integral of (x'(g) - x'(g - eta)) / |x(g) - x(g - eta)|^alpha.
    """
    pref = cfg.velocity_prefactor if prefactor_override is None else prefactor_override
    dx = derivative(curve, 1)
    w = _kernel_weights(pairwise_chords(curve), cfg.alpha, rule=quadrature)
    return pref * _subtracted_sum(dx, w)


def stiffness_rate(curve: ClosedCurve, cfg: PatchConfig, prefactor_override: float | None = None) -> float:
    """Largest linearised mode frequency of the self term, for step-size limits.

    On a curve of speed s a Fourier mode k of the node displacement rotates
    at rate |pref| * k * |d_k| / s^alpha (d_k from the kernel moments).  The
    slowest node speed is used, so the estimate leans conservative.
    """
    pref = cfg.velocity_prefactor if prefactor_override is None else prefactor_override
    N = curve.N
    d = _weight_moments(N, cfg.alpha)
    speed = float(np.min(np.linalg.norm(derivative(curve, 1), axis=1)))
    if speed <= 0.0:
        return math.inf
    k = np.arange(N // 2 + 1)
    return abs(pref) * float(np.max(k * np.abs(d))) / speed**cfg.alpha


def perp(v: FloatArray) -> FloatArray:
    """Counterclockwise rotation by 90 degrees: (a, b) -> (-b, a)."""
    return np.stack([-v[..., 1], v[..., 0]], axis=-1)


def normal_velocity(
    curve: ClosedCurve,
    cfg: PatchConfig,
    prefactor_override: float | None = None,
    *,
    quadrature: QuadratureRule = "spectral",
) -> FloatArray:
    """Unnormalised normal flux u . perp(x') at each node."""
    pref = cfg.velocity_prefactor if prefactor_override is None else prefactor_override
    dx = derivative(curve, 1)
    w = _kernel_weights(pairwise_chords(curve), cfg.alpha, rule=quadrature)
    # cross[j, m] = dx_m . perp(dx_j)
    cross = perp(dx) @ dx.T
    return -pref * np.sum(w * cross, axis=1)


def external_velocity(
    targets: FloatArray,
    source: ClosedCurve,
    cfg: PatchConfig,
    prefactor_override: float | None = None,
) -> FloatArray:
    """Velocity induced by ``source`` at points off the curve, shape (M, 2).

    u(p) = -prefactor * integral of x'(s) / |p - x(s)|^alpha ds, evaluated by
    the plain trapezoid rule.  Raises NearSingularError when a target sits on
    a source node.
    """
    pref = cfg.velocity_prefactor if prefactor_override is None else prefactor_override
    pts = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    diff = pts[:, None, :] - source.nodes[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    scale = np.maximum(1.0, np.linalg.norm(pts, axis=1))
    too_close = dist <= 10.0 * np.finfo(float).eps * scale[:, None]
    if np.any(too_close):
        i, m = np.argwhere(too_close)[0]
        raise NearSingularError(f"target {int(i)} coincides with source node {int(m)}")
    dx = derivative(source, 1)
    return -pref * source.h * (dist ** (-cfg.alpha)) @ dx


def regularized_self_velocity(
    curve: ClosedCurve,
    cfg: PatchConfig,
    reg: RegularizationSpec,
    prefactor_override: float | None = None,
    *,
    quadrature: QuadratureRule = "spectral",
) -> FloatArray:
    """Self velocity with mollified numerator and delta-inflated chord.

    phi_eps * integral of d/dg(phi_eps*x(g) - phi_eps*x(g - eta)) / (|x(g) - x(g - eta)| + delta)^alpha.
    The chord in the denominator is taken from the unmollified curve.
    """
    if reg.is_trivial:
        return self_velocity(curve, cfg, prefactor_override, quadrature=quadrature)
    pref = cfg.velocity_prefactor if prefactor_override is None else prefactor_override
    smooth = mollify(curve.nodes, reg.epsilon, reg.mollifier_kind)
    dy = spectral_derivative(smooth, 1)
    w = _kernel_weights(pairwise_chords(curve), cfg.alpha, reg.delta, rule=quadrature)
    v = pref * _subtracted_sum(dy, w)
    return mollify(v, reg.epsilon, reg.mollifier_kind)
