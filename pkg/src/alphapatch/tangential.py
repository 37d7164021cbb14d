"""Tangential velocity keeping the QG front at constant parametrization speed.

For x_t = v + lam * x' the speed satisfies d/dt |x'|^2 = 2 g + 2 |x'|^2 lam' +
lam d|x'|^2/dg, where g = x' . d/dg v.  Choosing

    lam' = mean(g / |x'|^2) - g / |x'|^2,    lam(-pi) = 0,

makes the growth of |x'|^2 uniform along the curve, so a curve that starts at
constant speed keeps |x'|^2 = A(t) and x' . x'' = 0.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curve import ClosedCurve, FloatArray, derivative, periodic_antiderivative, spectral_derivative
from .velocity import PatchConfig, self_velocity

UNIFORM_SWITCH = 1e-3

_QG = PatchConfig(alpha=1.0, prefactor=1.0)


@dataclass(frozen=True)
class TangentialField:
    lambda_values: FloatArray
    mu: float
    mean_drift: float
    uniform_form: bool = True


@dataclass(frozen=True)
class SpeedReport:
    A: float
    uniformity_defect: float
    tangency_defect: float


def tangential_derivative_integrand(curve: ClosedCurve, velocity: FloatArray | None = None) -> FloatArray:
    """g = x' . d/dgamma(v) at the nodes.

    ``velocity`` defaults to the alpha = 1 self velocity with prefactor 1.
    """
    if velocity is None:
        velocity = self_velocity(curve, _QG)
    dx = derivative(curve, 1)
    return np.sum(dx * spectral_derivative(velocity, 1), axis=1)


def speed_report(curve: ClosedCurve) -> SpeedReport:
    dx = derivative(curve, 1)
    speed2 = np.sum(dx * dx, axis=1)
    A = float(speed2.mean())
    udef = float(np.max(np.abs(speed2 - A)) / A)
    tdef = float(np.max(np.abs(np.sum(dx * derivative(curve, 2), axis=1))) / A)
    return SpeedReport(A, udef, tdef)


def lambda_qg(
    curve: ClosedCurve,
    velocity: FloatArray | None = None,
    *,
    switch_threshold: float = UNIFORM_SWITCH,
) -> TangentialField:
    """Tangential coefficient lambda at the nodes, with lambda(-pi) = 0.

    When the speed is uniform to ``switch_threshold`` the constant A(t)
    normalises g; otherwise the pointwise |x'|^2 is used.  The cumulative
    integral is the spectral antiderivative of the zero-mean part, so the
    linear term cancels exactly and lambda is periodic by construction.
    """
    g = tangential_derivative_integrand(curve, velocity)
    dx = derivative(curve, 1)
    speed2 = np.sum(dx * dx, axis=1)
    A = float(speed2.mean())
    uniform = float(np.max(np.abs(speed2 - A))) / A <= switch_threshold
    f = g / A if uniform else g / speed2
    mean_f = float(f.mean())
    anti = periodic_antiderivative(f)
    lam = -(anti - anti[0])
    return TangentialField(lambda_values=lam, mu=2.0 * mean_f, mean_drift=mean_f, uniform_form=uniform)
