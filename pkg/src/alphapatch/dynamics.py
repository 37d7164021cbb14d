"""Multi-patch state and the right-hand side of the contour equations."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .curve import ClosedCurve, FloatArray, curve_length, derivative
from .tangential import UNIFORM_SWITCH, lambda_qg
from .velocity import (
    PatchConfig,
    QuadratureRule,
    RegularizationSpec,
    external_velocity,
    regularized_self_velocity,
)

Scheme = Literal["alpha_lt1", "qg_with_lambda"]
SCHEMES = ("alpha_lt1", "qg_with_lambda")


@dataclass(frozen=True)
class SimState:
    """Patches at time ``t`` plus the numerical model they evolve under.

    ``alpha_lt1`` evolves the plain subtracted contour equation (any alpha);
    ``qg_with_lambda`` adds the tangential term lambda * x' and needs
    alpha = 1 on every patch.
    """

    t: float
    patches: tuple[tuple[ClosedCurve, PatchConfig], ...]
    scheme: Scheme = "alpha_lt1"
    reg: RegularizationSpec = field(default_factory=RegularizationSpec)
    quadrature: QuadratureRule = "spectral"
    lambda_switch: float = UNIFORM_SWITCH

    def __post_init__(self) -> None:
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "patches", tuple((c, p) for c, p in self.patches))
        if not self.patches:
            raise ValueError("state needs at least one patch")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "qg_with_lambda" and any(p.alpha != 1.0 for _, p in self.patches):
            raise ValueError("scheme qg_with_lambda requires alpha = 1 on all patches")

    @property
    def curves(self) -> list[ClosedCurve]:
        return [c for c, _ in self.patches]

    def with_curves(self, curves, t: float | None = None) -> SimState:
        patches = tuple((c, p) for c, (_, p) in zip(curves, self.patches))
        return replace(self, patches=patches, t=self.t if t is None else t)


def rhs(state: SimState) -> list[FloatArray]:
    """Node velocities of every patch.

    Self term (regularised per ``state.reg``) plus the unsubtracted field of
    every other patch; under ``qg_with_lambda`` the tangential term built from
    that total velocity is added.
    """
    out = []
    for i, (curve, cfg) in enumerate(state.patches):
        v = regularized_self_velocity(curve, cfg, state.reg, quadrature=state.quadrature)
        for j, (other, other_cfg) in enumerate(state.patches):
            if j != i:
                v = v + external_velocity(curve.nodes, other, other_cfg)
        if state.scheme == "qg_with_lambda":
            lam = lambda_qg(curve, v, switch_threshold=state.lambda_switch).lambda_values
            v = v + lam[:, None] * derivative(curve, 1)
        out.append(v)
    return out


def min_interpatch_distance(state: SimState) -> float | None:
    """Smallest node-to-node distance between distinct patches (None for one patch)."""
    curves = state.curves
    if len(curves) < 2:
        return None
    best = np.inf
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            d = curves[i].nodes[:, None, :] - curves[j].nodes[None, :, :]
            best = min(best, float(np.min(np.hypot(d[..., 0], d[..., 1]))))
    return best


def mean_node_spacing(curve: ClosedCurve) -> float:
    return curve_length(curve) / curve.N
